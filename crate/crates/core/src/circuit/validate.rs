//! Static checks on a parsed circuit.

use std::fmt;

use serde::Serialize;

use crate::elements::{apply_photon, Photon, PhotonOp};
use crate::gates::Gate;
use crate::state::{AmplitudeMap, PhotonState};

use super::{Circuit, StageOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Note,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    /// 1-based stage number, if the issue belongs to one stage.
    pub stage: Option<usize>,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
    /// Largest |ℓ| reached by each photon's input domain, if propagation finished.
    pub max_oam_a: Option<i32>,
    pub max_oam_b: Option<i32>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            let sev = match i.severity {
                Severity::Note => "note",
                Severity::Warning => "warning",
                Severity::Error => "error",
            };
            match i.stage {
                Some(n) => writeln!(f, "{sev}: stage {n}: {}", i.message)?,
                None => writeln!(f, "{sev}: {}", i.message)?,
            }
        }
        for (p, m) in [("A", self.max_oam_a), ("B", self.max_oam_b)] {
            if let Some(m) = m {
                writeln!(f, "photon {p}: max |l| reached = {m}")?;
            }
        }
        Ok(())
    }
}

/// Never fails; every problem becomes an [`Issue`].
pub fn validate(circuit: &Circuit) -> ValidationReport {
    let mut issues = Vec::new();
    let space = match circuit.space() {
        Ok(s) => s,
        Err(e) => {
            return ValidationReport {
                issues: vec![Issue {
                    stage: None,
                    severity: Severity::Error,
                    message: e.to_string(),
                }],
                max_oam_a: None,
                max_oam_b: None,
            }
        }
    };
    let mut push = |stage: Option<usize>, severity, message: String| {
        issues.push(Issue {
            stage,
            severity,
            message,
        })
    };

    let mut compiled = Vec::new();
    let mut broken = false;
    for (i, stage) in circuit.stages.iter().enumerate() {
        let n = i + 1;
        if let StageOp::Gate(g) = &stage.op {
            if g.restricted_to_unit_oam() {
                push(
                    Some(n),
                    Severity::Note,
                    format!("{} is only defined for OAM l = +1 and l = -1", stage.label()),
                );
            }
        }
        match stage.compile() {
            Ok(ops) => {
                if let Some(e) = ops.iter().find_map(|op| op.check(&space).err()) {
                    push(Some(n), Severity::Error, e.to_string());
                    broken = true;
                } else {
                    compiled.push((n, stage.site.photon, ops));
                }
            }
            Err(e) => {
                push(Some(n), Severity::Error, e.to_string());
                broken = true;
            }
        }
    }

    for p in &circuit.paths {
        let used = circuit.stages.iter().any(|s| {
            s.site.paths.contains(p)
                || matches!(&s.op, StageOp::Gate(Gate::Oh { aux: Some(a) }) if a == p)
        });
        if !used {
            push(None, Severity::Warning, format!("path `{p}` is declared but never used"));
        }
    }

    let mut reach = |photon: Photon| -> Option<i32> {
        if broken {
            return None;
        }
        let mut states: Vec<PhotonState> = circuit
            .input_domain(photon)
            .into_iter()
            .filter_map(|m| PhotonState::basis(&space, m).ok())
            .collect();
        let mut worst = 0;
        for (n, ph, ops) in &compiled {
            if *ph != photon {
                continue;
            }
            for op in ops {
                for s in states.iter_mut() {
                    match apply_photon(op, s) {
                        Ok(next) => *s = next,
                        Err(e) => {
                            push(Some(*n), Severity::Error, format!("photon {photon}: {e}"));
                            return None;
                        }
                    }
                    for m in s.amplitudes().keys() {
                        worst = worst.max(m.oam.abs());
                    }
                }
            }
        }
        Some(worst)
    };
    let max_oam_a = reach(Photon::A);
    let max_oam_b = reach(Photon::B);
    ValidationReport {
        issues,
        max_oam_a,
        max_oam_b,
    }
}
