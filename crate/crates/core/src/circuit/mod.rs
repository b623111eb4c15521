//! Circuit model, text format, propagation engines and validation.
//!
//! A circuit declares a truncation bound, a path set and the photons it
//! uses, followed by an ordered list of stages. Each stage is either a
//! primitive element or a named composite gate, placed on one photon and a
//! set of its paths. See `docs/circuit-format.md` for the grammar.

pub mod dense;
pub mod engine;
pub mod parse;
pub mod validate;

use std::fmt;
use std::sync::Arc;

use crate::elements::{Element, Photon, PhotonOp, PlacedElement, Site};
use crate::error::{Error, Result};
use crate::gates::{decompose, CanonicalGate, Gate, Implementation};
use crate::state::{BasisMode, ModeSpace, PathLabel, Polarization, C64};

pub use dense::{assemble_unitary, assemble_unitary_with_cap, AssembledUnitary, DEFAULT_DIMENSION_CAP};
pub use engine::{propagate, propagate_stages};
pub use parse::{parse_circuit, ParseError};
pub use validate::{validate, ValidationReport};

/// The analyzer layout, embedded so it is available without any files.
pub const FIG2_SOURCE: &str = include_str!("../../circuits/fig2.circ");

pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "fig2" => Some(FIG2_SOURCE),
        _ => None,
    }
}

pub fn fig2() -> Circuit {
    parse_circuit(FIG2_SOURCE).expect("embedded circuit parses")
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageOp {
    Element(Element),
    Gate(Gate),
}

impl StageOp {
    pub fn name(&self) -> &'static str {
        match self {
            StageOp::Element(e) => e.name(),
            StageOp::Gate(g) => g.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub op: StageOp,
    pub site: Site,
    /// Explicit `impl=` choice; `None` means canonical.
    pub implementation: Option<Implementation>,
}

impl Stage {
    pub fn label(&self) -> String {
        format!("{}({})", self.op.name(), self.site.photon)
    }

    pub fn effective_impl(&self) -> Implementation {
        self.implementation.unwrap_or(Implementation::Canonical)
    }

    /// Lowers the stage to the single-photon operations it applies, in order.
    pub fn compile(&self) -> Result<Vec<Op>> {
        match &self.op {
            StageOp::Element(e) => Ok(vec![Op::Element(PlacedElement {
                element: e.clone(),
                site: self.site.clone(),
            })]),
            StageOp::Gate(g) => match self.effective_impl() {
                Implementation::Decomposed if g.has_decomposition() => Ok(decompose(g, &self.site)?
                    .elements()
                    .into_iter()
                    .map(Op::Element)
                    .collect()),
                _ => Ok(vec![Op::Canonical(CanonicalGate::new(g.clone(), self.site.clone()))]),
            },
        }
    }
}

/// One compiled single-photon operation.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Element(PlacedElement),
    Canonical(CanonicalGate),
}

impl PhotonOp for Op {
    fn check(&self, space: &ModeSpace) -> Result<()> {
        match self {
            Op::Element(e) => e.check(space),
            Op::Canonical(g) => g.check(space),
        }
    }

    fn image(&self, mode: &BasisMode, space: &ModeSpace) -> Result<Option<Vec<(BasisMode, C64)>>> {
        match self {
            Op::Element(e) => e.image(mode, space),
            Op::Canonical(g) => g.image(mode, space),
        }
    }
}

/// A stage lowered to operations, with its 1-based position.
#[derive(Debug, Clone)]
pub struct CompiledStage {
    pub number: usize,
    pub label: String,
    pub photon: Photon,
    pub ops: Vec<Op>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub description: Option<String>,
    pub lmax: i32,
    pub paths: Vec<PathLabel>,
    pub photons: Vec<Photon>,
    pub stages: Vec<Stage>,
}

impl Circuit {
    pub fn space(&self) -> Result<Arc<ModeSpace>> {
        Ok(Arc::new(ModeSpace::new(self.lmax, self.paths.iter().cloned())?))
    }

    /// Compiles every stage, tagging errors with the stage that raised them.
    pub fn compile(&self) -> Result<Vec<CompiledStage>> {
        self.stages
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let ops = s.compile().map_err(|e| Error::Stage {
                    index: i + 1,
                    kind: s.label(),
                    source: Box::new(e),
                })?;
                Ok(CompiledStage {
                    number: i + 1,
                    label: s.label(),
                    photon: s.site.photon,
                    ops,
                })
            })
            .collect()
    }

    /// Forces every composite stage that has a decomposition to `mode`.
    pub fn with_impl(&self, mode: Implementation) -> Circuit {
        let mut c = self.clone();
        for s in &mut c.stages {
            if let StageOp::Gate(g) = &s.op {
                if g.has_decomposition() {
                    s.implementation = Some(mode);
                }
            }
        }
        c
    }

    pub fn with_lmax(&self, lmax: i32) -> Circuit {
        Circuit {
            lmax,
            ..self.clone()
        }
    }

    /// The circuit cut after its first `n` stages.
    pub fn truncated(&self, n: usize) -> Circuit {
        Circuit {
            stages: self.stages[..n.min(self.stages.len())].to_vec(),
            ..self.clone()
        }
    }

    /// Detector origins per photon, in stage order, taken from `sppm` stages.
    pub fn detector_origins(&self) -> (Vec<PathLabel>, Vec<PathLabel>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for s in &self.stages {
            if let StageOp::Gate(Gate::Sppm) = s.op {
                let list = match s.site.photon {
                    Photon::A => &mut a,
                    Photon::B => &mut b,
                };
                for p in &s.site.paths {
                    if !list.contains(p) {
                        list.push(p.clone());
                    }
                }
            }
        }
        (a, b)
    }

    /// Basis inputs a photon is expected to enter with: ℓ = 0, either
    /// polarization, on the paths of that photon's first stage (all declared
    /// paths when it has none).
    pub fn input_domain(&self, photon: Photon) -> Vec<BasisMode> {
        let paths = self
            .stages
            .iter()
            .find(|s| s.site.photon == photon)
            .map(|s| s.site.paths.clone())
            .unwrap_or_else(|| self.paths.clone());
        paths
            .iter()
            .flat_map(|p| Polarization::BOTH.map(|pol| BasisMode::new(pol, 0, p.clone())))
            .collect()
    }
}

fn write_stage(f: &mut fmt::Formatter<'_>, s: &Stage) -> fmt::Result {
    let paths: Vec<&str> = s.site.paths.iter().map(|p| p.as_str()).collect();
    write!(
        f,
        "stage {} photon={} paths={}",
        s.op.name(),
        s.site.photon,
        paths.join(",")
    )?;
    match &s.op {
        StageOp::Element(e) => match e {
            Element::Hwp { theta } => write!(f, " theta={theta}")?,
            Element::Qp { q } => write!(f, " q={q}")?,
            Element::Spp { l } => write!(f, " l={l}")?,
            Element::Dp { alpha } => write!(f, " alpha={alpha}")?,
            Element::Pp { phi, pol } => {
                write!(f, " phi={phi}")?;
                if let Some(p) = pol {
                    write!(f, " pol={p}")?;
                }
            }
            _ => {}
        },
        StageOp::Gate(g) => match g {
            Gate::PCos { q } => write!(f, " q={q}")?,
            Gate::Oh { aux: Some(a) } => write!(f, " aux={a}")?,
            _ => {}
        },
    }
    if let Some(i) = s.implementation {
        write!(f, " impl={i}")?;
    }
    Ok(())
}

/// Canonical serialization: fixed directive order and fixed key order.
impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = &self.description {
            writeln!(f, "description {d}")?;
        }
        writeln!(f, "lmax {}", self.lmax)?;
        let paths: Vec<&str> = self.paths.iter().map(|p| p.as_str()).collect();
        writeln!(f, "paths {}", paths.join(" "))?;
        for p in &self.photons {
            writeln!(f, "photon {p}")?;
        }
        for s in &self.stages {
            write_stage(f, s)?;
            writeln!(f)?;
        }
        Ok(())
    }
}
