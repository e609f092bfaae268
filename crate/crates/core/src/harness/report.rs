//! Run reports, numeric checks and their JSON form.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::config::{ExperimentConfig, Instance, Pipeline};
use crate::dmt::{DmtPp, DmtRecovery};
use crate::domain::ComplexityLedger;
use crate::error::Result;
use crate::ihcl::{GluedHardcore, GoodPieceFilter, HardcorePiece, HardcoreSet, IhclRecovery};
use crate::mc::{McReport, Predictor};
use crate::pame::{PamePp, PameRecovery};
use crate::partition::Partition;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

/// One asserted inequality with both sides recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// What the check is about, e.g. a piece or member index.
    pub subject: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Non-finite sides fail and are stored as `f64::MAX` so the report stays valid JSON.
    pub fn new(id: &str, subject: impl Into<String>, lhs: f64, relation: Relation, rhs: f64, tolerance: f64) -> Self {
        let finite = lhs.is_finite() && rhs.is_finite();
        let pass = finite
            && match relation {
                Relation::Le => lhs <= rhs + tolerance,
                Relation::Ge => lhs >= rhs - tolerance,
                Relation::Eq => (lhs - rhs).abs() <= tolerance,
            };
        let clean = |v: f64| if v.is_finite() { v } else { f64::MAX };
        Check { id: id.into(), subject: subject.into(), lhs: clean(lhs), relation, rhs: clean(rhs), tolerance, pass }
    }
}

/// The hardcore pieces of one partition, optionally glued.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardcoreArtifact {
    pub partition: Partition,
    pub report: McReport,
    pub pieces: Vec<HardcorePiece>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<GoodPieceFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glued: Option<GluedHardcore>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McArtifact {
    pub partition: Partition,
    pub report: McReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ma: Option<Predictor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardcore: Option<HardcoreArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ihcl: Option<IhclRecovery>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sets: Vec<HardcoreSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pame: Option<PamePp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pame_recovery: Option<PameRecovery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmt: Option<DmtPp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmt_recovery: Option<DmtRecovery>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<Instance>,
    #[serde(default)]
    pub artifacts: Artifacts,
    pub checks: Vec<Check>,
    pub ledger: ComplexityLedger,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Sets `pass` from the error slot and the checks.
    pub fn settle(&mut self) {
        self.pass = self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Pretty printing with every float written to 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}
