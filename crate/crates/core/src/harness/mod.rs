//! Experiment configuration, instance generation, runs and reports.

pub mod config;
pub mod corrupt;
pub mod generate;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{gen_instance, DomainSpec, ExperimentConfig, FamilySpec, Instance, Params, Pipeline};
pub use report::{Check, Relation, RunReport};
pub use run::{run_experiment, verify_report};
pub use verify::verify_all;
