//! Documented artifact corruptions, each paired with the check that must catch it.

use super::report::{Artifacts, RunReport};
use crate::domain::Dist;
use crate::partition::{Partition, PieceStats};

pub struct Corruption {
    pub name: &'static str,
    pub description: &'static str,
    /// Id of the check `verify_all` must fail.
    pub expected_check: &'static str,
    /// Applies the corruption; `false` when the report lacks the artifact.
    pub apply: fn(&mut RunReport) -> bool,
}

pub const CORRUPTIONS: [Corruption; 10] = [
    Corruption {
        name: "hardcore_mass_off_piece",
        description: "moves the mass of one point of a hardcore distribution to a point outside its piece",
        expected_check: "hardcore.support",
        apply: hardcore_mass_off_piece,
    },
    Corruption {
        name: "model_scaled",
        description: "multiplies the dense model by 1.01",
        expected_check: "dmt.model.normalization",
        apply: model_scaled,
    },
    Corruption {
        name: "wrong_piece_value",
        description: "shifts a stored piece mean v_P by 0.05",
        expected_check: "partition.stats.v",
        apply: wrong_piece_value,
    },
    Corruption {
        name: "planted_violation",
        description: "collapses the partition to one piece with consistent statistics",
        expected_check: "mc.violation",
        apply: planted_violation,
    },
    Corruption {
        name: "glued_scaled",
        description: "multiplies the glued hardcore distribution by 1.05",
        expected_check: "glued.normalization",
        apply: glued_scaled,
    },
    Corruption {
        name: "non_stochastic_row",
        description: "adds 0.1 to one entry of a witness row",
        expected_check: "pame.rows",
        apply: non_stochastic_row,
    },
    Corruption {
        name: "tampered_entropy",
        description: "adds 0.01 bits to a witness's reported average min-entropy",
        expected_check: "pame.ame",
        apply: tampered_entropy,
    },
    Corruption {
        name: "wrong_piece_mass",
        description: "scales a stored piece mass eta_P by 1.1",
        expected_check: "partition.stats.eta",
        apply: wrong_piece_mass,
    },
    Corruption {
        name: "piece_id_out_of_range",
        description: "assigns a point to piece k",
        expected_check: "partition.assign",
        apply: piece_id_out_of_range,
    },
    Corruption {
        name: "wrong_side_mass",
        description: "adds 0.01 to a dense-model piece's V mass delta_P",
        expected_check: "dmt.piece.delta",
        apply: wrong_side_mass,
    },
];

pub fn by_name(name: &str) -> Option<&'static Corruption> {
    CORRUPTIONS.iter().find(|c| c.name == name)
}

fn first_partition(a: &mut Artifacts) -> Option<&mut Partition> {
    if let Some(m) = &mut a.mc {
        return Some(&mut m.partition);
    }
    if let Some(h) = &mut a.hardcore {
        return Some(&mut h.partition);
    }
    if let Some(r) = &mut a.ihcl {
        return Some(&mut r.partition);
    }
    if let Some(p) = &mut a.pame {
        return Some(&mut p.partition);
    }
    if let Some(r) = &mut a.pame_recovery {
        return Some(&mut r.pp.partition);
    }
    if let Some(p) = &mut a.dmt {
        return Some(&mut p.partition);
    }
    a.dmt_recovery.as_mut().map(|r| &mut r.pp.partition)
}

fn scaled(d: &Dist, c: f64) -> Dist {
    Dist::from_raw(d.masses().iter().map(|m| m * c).collect())
}

fn hardcore_mass_off_piece(r: &mut RunReport) -> bool {
    let (p, pieces) = match (&mut r.artifacts.hardcore, &mut r.artifacts.ihcl) {
        (Some(h), _) => (&h.partition, &mut h.pieces),
        (None, Some(rec)) => (&rec.partition, &mut rec.pieces),
        _ => return false,
    };
    for hp in pieces.iter_mut() {
        let Some(h) = &hp.h else { continue };
        let from = (0..h.len()).find(|&x| h.prob(x) > 0.0);
        let to = (0..p.assign.len()).find(|&x| p.assign[x] != hp.piece_id);
        if let (Some(from), Some(to)) = (from, to) {
            let mut m = h.masses().to_vec();
            m[to] += m[from];
            m[from] = 0.0;
            hp.h = Some(Dist::from_raw(m));
            return true;
        }
    }
    false
}

fn model_scaled(r: &mut RunReport) -> bool {
    let Some(rec) = &mut r.artifacts.dmt_recovery else { return false };
    rec.model = scaled(&rec.model, 1.01);
    true
}

fn wrong_piece_value(r: &mut RunReport) -> bool {
    let Some(p) = first_partition(&mut r.artifacts) else { return false };
    let Some(s) = p.stats.iter_mut().find(|s| s.eta > 0.0) else { return false };
    s.v = if s.v > 0.5 { s.v - 0.05 } else { s.v + 0.05 };
    true
}

fn planted_violation(r: &mut RunReport) -> bool {
    let Some(g) = r.instance.as_ref().and_then(|i| i.target.as_ref().map(|g| (g.clone(), i.dist.clone()))) else {
        return false;
    };
    let Some(p) = first_partition(&mut r.artifacts) else { return false };
    let (g, d) = g;
    let v = d.expect(&g).unwrap_or(0.5);
    p.assign.iter_mut().for_each(|q| *q = 0);
    p.k = 1;
    p.stats = vec![PieceStats::from_mean(v, 1.0)];
    true
}

fn glued_scaled(r: &mut RunReport) -> bool {
    let glued = match (&mut r.artifacts.hardcore, &mut r.artifacts.ihcl) {
        (Some(h), _) => h.glued.as_mut(),
        (None, Some(rec)) => Some(&mut rec.glued),
        _ => None,
    };
    let Some(glued) = glued else { return false };
    glued.h = scaled(&glued.h, 1.05);
    true
}

fn first_witness(a: &mut Artifacts) -> Option<&mut crate::pame::PameWitness> {
    if let Some(pp) = &mut a.pame {
        return pp.witnesses.first_mut();
    }
    a.pame_recovery.as_mut().map(|r| &mut r.witness)
}

fn non_stochastic_row(r: &mut RunReport) -> bool {
    let Some(w) = first_witness(&mut r.artifacts) else { return false };
    let Some(row) = w.cond_c.first_mut() else { return false };
    row[0] += 0.1;
    true
}

fn tampered_entropy(r: &mut RunReport) -> bool {
    let Some(w) = first_witness(&mut r.artifacts) else { return false };
    w.measured_ame += 0.01;
    true
}

fn wrong_piece_mass(r: &mut RunReport) -> bool {
    let Some(p) = first_partition(&mut r.artifacts) else { return false };
    let Some(s) = p.stats.iter_mut().find(|s| s.eta > 0.0) else { return false };
    s.eta *= 1.1;
    true
}

fn piece_id_out_of_range(r: &mut RunReport) -> bool {
    let Some(p) = first_partition(&mut r.artifacts) else { return false };
    match p.assign.first_mut() {
        Some(q) => {
            *q = p.k;
            true
        }
        None => false,
    }
}

fn wrong_side_mass(r: &mut RunReport) -> bool {
    let pieces = match (&mut r.artifacts.dmt, &mut r.artifacts.dmt_recovery) {
        (Some(pp), _) => &mut pp.pieces,
        (None, Some(rec)) => &mut rec.pp.pieces,
        _ => return false,
    };
    match pieces.first_mut() {
        Some(dp) => {
            dp.delta_p += 0.01;
            true
        }
        None => false,
    }
}
