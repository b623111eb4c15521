//! The complete polarization Bell-state analyzer.
//!
//! Inputs are the four polarization Bell states carried at ℓ = 0 on the
//! path superposition `(|a1⟩|a2⟩ + |b1⟩|b2⟩)/√2`. The analyzer maps each of
//! them onto 16 equiprobable detector coincidences, and the four sets of 16
//! are disjoint, so a single coincidence names the input state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circuit::{
    assemble_unitary, fig2, propagate, propagate_stages, AssembledUnitary, Circuit, StageOp,
};
use crate::elements::Photon;
use crate::error::{Error, Result};
use crate::gates::Implementation;
use crate::measurement::{enumerate_patterns, sppm_project, CoincidencePattern, OutcomeDistribution};
use crate::state::{
    fidelity, max_abs_diff, AmplitudeMap, BasisMode, ModeSpace, PathLabel, Polarization,
    TwoPhotonState, C64,
};

/// Probabilities at or below this are treated as zero when reading supports.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Tolerance for every numerical check in a [`VerificationReport`].
pub const CHECK_TOL: f64 = 1e-10;
/// Seed of the random-vector oracle comparison.
pub const ORACLE_SEED: u64 = 0xB5A;
pub const ORACLE_VECTORS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
            BellLabel::PsiPlus => "psi+",
            BellLabel::PsiMinus => "psi-",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "Φ+",
            BellLabel::PhiMinus => "Φ-",
            BellLabel::PsiPlus => "Ψ+",
            BellLabel::PsiMinus => "Ψ-",
        }
    }

    fn is_phi(self) -> bool {
        matches!(self, BellLabel::PhiPlus | BellLabel::PhiMinus)
    }

    fn sign(self) -> f64 {
        match self {
            BellLabel::PhiPlus | BellLabel::PsiPlus => 1.0,
            _ => -1.0,
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BellLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phiplus" => Ok(BellLabel::PhiPlus),
            "phi-" | "phiminus" => Ok(BellLabel::PhiMinus),
            "psi+" | "psiplus" => Ok(BellLabel::PsiPlus),
            "psi-" | "psiminus" => Ok(BellLabel::PsiMinus),
            _ => Err(format!("unknown Bell state `{s}` (expected phi+, phi-, psi+ or psi-)")),
        }
    }
}

impl Serialize for BellLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for BellLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Detector outcomes per input state, as published.
const PUBLISHED_OUTCOMES: [(BellLabel, [&str; 16]); 4] = [
    (
        BellLabel::PhiPlus,
        [
            "D[+1,H,a1] & D[+1,H,a2]", "D[+1,V,a1] & D[+1,V,a2]", "D[+1,H,a1] & D[-1,V,a2]", "D[+1,V,a1] & D[-1,H,a2]",
            "D[-1,H,a1] & D[+1,V,a2]", "D[-1,V,a1] & D[+1,H,a2]", "D[-1,H,a1] & D[-1,H,a2]", "D[-1,V,a1] & D[-1,V,a2]",
            "D[+1,H,b1] & D[+1,H,b2]", "D[+1,V,b1] & D[+1,V,b2]", "D[+1,H,b1] & D[-1,V,b2]", "D[+1,V,b1] & D[-1,H,b2]",
            "D[-1,H,b1] & D[+1,V,b2]", "D[-1,V,b1] & D[+1,H,b2]", "D[-1,H,b1] & D[-1,H,b2]", "D[-1,V,b1] & D[-1,V,b2]",
        ],
    ),
    (
        BellLabel::PhiMinus,
        [
            "D[+1,H,a1] & D[+1,V,a2]", "D[+1,V,a1] & D[+1,H,a2]", "D[+1,H,a1] & D[-1,H,a2]", "D[+1,V,a1] & D[-1,V,a2]",
            "D[-1,H,a1] & D[+1,H,a2]", "D[-1,V,a1] & D[+1,V,a2]", "D[-1,H,a1] & D[-1,V,a2]", "D[-1,V,a1] & D[-1,H,a2]",
            "D[+1,H,b1] & D[+1,V,b2]", "D[+1,V,b1] & D[+1,H,b2]", "D[+1,H,b1] & D[-1,H,b2]", "D[+1,V,b1] & D[-1,V,b2]",
            "D[-1,H,b1] & D[+1,H,b2]", "D[-1,V,b1] & D[+1,V,b2]", "D[-1,H,b1] & D[-1,V,b2]", "D[-1,V,b1] & D[-1,H,b2]",
        ],
    ),
    (
        BellLabel::PsiPlus,
        [
            "D[+1,H,a1] & D[+1,H,b2]", "D[+1,V,a1] & D[+1,V,b2]", "D[+1,H,a1] & D[-1,V,b2]", "D[+1,V,a1] & D[-1,H,b2]",
            "D[-1,H,a1] & D[+1,V,b2]", "D[-1,V,a1] & D[+1,H,b2]", "D[-1,H,a1] & D[-1,H,b2]", "D[-1,V,a1] & D[-1,V,b2]",
            "D[+1,H,b1] & D[+1,H,a2]", "D[+1,V,b1] & D[+1,V,a2]", "D[+1,H,b1] & D[-1,V,a2]", "D[+1,V,b1] & D[-1,H,a2]",
            "D[-1,H,b1] & D[+1,V,a2]", "D[-1,V,b1] & D[+1,H,a2]", "D[-1,H,b1] & D[-1,H,a2]", "D[-1,V,b1] & D[-1,V,a2]",
        ],
    ),
    (
        BellLabel::PsiMinus,
        [
            "D[+1,H,a1] & D[+1,V,b2]", "D[+1,V,a1] & D[+1,H,b2]", "D[+1,H,a1] & D[-1,H,b2]", "D[+1,V,a1] & D[-1,V,b2]",
            "D[-1,H,a1] & D[+1,H,b2]", "D[-1,V,a1] & D[+1,V,b2]", "D[-1,H,a1] & D[-1,V,b2]", "D[-1,V,a1] & D[-1,H,b2]",
            "D[+1,H,b1] & D[+1,V,a2]", "D[+1,V,b1] & D[+1,H,a2]", "D[+1,H,b1] & D[-1,H,a2]", "D[+1,V,b1] & D[-1,V,a2]",
            "D[-1,H,b1] & D[+1,H,a2]", "D[-1,V,b1] & D[+1,V,a2]", "D[-1,H,b1] & D[-1,V,a2]", "D[-1,V,b1] & D[-1,H,a2]",
        ],
    ),
];

/// Origins on the A side and the B side of the analyzer.
pub fn fig2_origins() -> (Vec<PathLabel>, Vec<PathLabel>) {
    (
        vec![PathLabel::new("a1"), PathLabel::new("b1")],
        vec![PathLabel::new("a2"), PathLabel::new("b2")],
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct TableDocument {
    rows: Vec<TableRow>,
}

/// Total map from coincidence pattern to Bell state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationTable {
    origins_a: Vec<PathLabel>,
    origins_b: Vec<PathLabel>,
    entries: BTreeMap<CoincidencePattern, BellLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub pattern: CoincidencePattern,
    pub label: BellLabel,
}

impl ClassificationTable {
    /// The published table, structurally validated.
    pub fn published() -> Result<Self> {
        let (oa, ob) = fig2_origins();
        let mut rows = Vec::new();
        for (label, patterns) in PUBLISHED_OUTCOMES {
            for p in patterns {
                rows.push(TableRow {
                    pattern: p.parse()?,
                    label,
                });
            }
        }
        let t = Self::from_rows(oa, ob, rows)?;
        for label in BellLabel::ALL {
            let n = t.preimage(label).len();
            if n != 16 {
                return Err(Error::MalformedPattern(format!(
                    "table lists {n} patterns for {label}, expected 16"
                )));
            }
        }
        Ok(t)
    }

    /// Builds a table that must be total over the origin sets with no repeated pattern.
    pub fn from_rows(origins_a: Vec<PathLabel>, origins_b: Vec<PathLabel>, rows: Vec<TableRow>) -> Result<Self> {
        let all: BTreeSet<CoincidencePattern> = enumerate_patterns(&origins_a, &origins_b).into_iter().collect();
        let mut entries = BTreeMap::new();
        for r in rows {
            if !all.contains(&r.pattern) {
                return Err(Error::MalformedPattern(format!(
                    "{} is not a pattern of this analyzer",
                    r.pattern
                )));
            }
            if entries.insert(r.pattern.clone(), r.label).is_some() {
                return Err(Error::MalformedPattern(format!("{} listed twice", r.pattern)));
            }
        }
        if entries.len() != all.len() {
            let missing = all.iter().find(|p| !entries.contains_key(*p)).unwrap();
            return Err(Error::MalformedPattern(format!("{missing} has no entry")));
        }
        Ok(ClassificationTable {
            origins_a,
            origins_b,
            entries,
        })
    }

    pub fn origins(&self) -> (&[PathLabel], &[PathLabel]) {
        (&self.origins_a, &self.origins_b)
    }

    /// Rows in pattern-enumeration order.
    pub fn rows(&self) -> Vec<TableRow> {
        enumerate_patterns(&self.origins_a, &self.origins_b)
            .into_iter()
            .map(|p| {
                let label = self.entries[&p];
                TableRow { pattern: p, label }
            })
            .collect()
    }

    pub fn preimage(&self, label: BellLabel) -> BTreeSet<CoincidencePattern> {
        self.entries
            .iter()
            .filter(|(_, l)| **l == label)
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn classify(&self, pattern: &CoincidencePattern) -> Result<BellLabel> {
        if !self.origins_a.contains(&pattern.det_a.origin) {
            return Err(Error::MalformedPattern(format!(
                "photon A detector {} is not on an A-side origin",
                pattern.det_a
            )));
        }
        if !self.origins_b.contains(&pattern.det_b.origin) {
            return Err(Error::MalformedPattern(format!(
                "photon B detector {} is not on a B-side origin",
                pattern.det_b
            )));
        }
        self.entries
            .get(pattern)
            .copied()
            .ok_or_else(|| Error::MalformedPattern(pattern.to_string()))
    }

    /// A copy with the `index`-th row (enumeration order) relabelled to the
    /// next Bell state. Used for fault injection.
    pub fn tampered(&self, index: usize) -> (Self, CoincidencePattern) {
        let rows = self.rows();
        let victim = rows[index % rows.len()].pattern.clone();
        let mut t = self.clone();
        let l = t.entries[&victim];
        let pos = BellLabel::ALL.iter().position(|x| *x == l).unwrap();
        t.entries.insert(victim.clone(), BellLabel::ALL[(pos + 1) % 4]);
        (t, victim)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TableDocument { rows: self.rows() }).expect("table serializes")
    }

    /// Reads a table written by [`ClassificationTable::to_json`] for the analyzer origins.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TableDocument = serde_json::from_str(text)
            .map_err(|e| Error::MalformedPattern(format!("table document: {e}")))?;
        let (oa, ob) = fig2_origins();
        Self::from_rows(oa, ob, doc.rows)
    }

    /// `(pairwise disjoint, union covers every pattern)`.
    pub fn partition_flags(&self) -> (bool, bool) {
        let sets: Vec<_> = BellLabel::ALL.iter().map(|l| self.preimage(*l)).collect();
        let disjoint = (0..4).all(|i| (i + 1..4).all(|j| sets[i].is_disjoint(&sets[j])));
        let union: BTreeSet<_> = sets.iter().flatten().cloned().collect();
        let all: BTreeSet<_> = enumerate_patterns(&self.origins_a, &self.origins_b).into_iter().collect();
        (disjoint, union == all)
    }
}

/// Named checkpoints of the analyzer, in circuit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Checkpoint {
    PCos,
    OCps,
    DpStage,
    Oh,
    Hwp,
}

impl Checkpoint {
    pub const ALL: [Checkpoint; 5] = [
        Checkpoint::PCos,
        Checkpoint::OCps,
        Checkpoint::DpStage,
        Checkpoint::Oh,
        Checkpoint::Hwp,
    ];

    /// Stage kind whose last occurrence the checkpoint follows.
    pub fn stage_kind(self) -> &'static str {
        match self {
            Checkpoint::PCos => "p_cos",
            Checkpoint::OCps => "o_cps",
            Checkpoint::DpStage => "dp_stage",
            Checkpoint::Oh => "oh",
            Checkpoint::Hwp => "hwp",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Checkpoint::PCos => "after P-COS",
            Checkpoint::OCps => "after O-CPS",
            Checkpoint::DpStage => "after DP stage",
            Checkpoint::Oh => "after OH",
            Checkpoint::Hwp => "after HWP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PathFactor {
    /// a1a2 + b1b2
    Parallel,
    /// a1b2 + b1a2
    Crossed,
}

/// Published intermediate states: `±` terms over (pol, ℓ) of A then B, written
/// `+H+1:V-1`, and the path factor.
fn reference_terms(label: BellLabel, at: Checkpoint) -> (Vec<&'static str>, PathFactor) {
    use BellLabel::*;
    use Checkpoint::*;
    use PathFactor::*;
    let path = match (label.is_phi(), at) {
        (true, _) | (false, PCos) => Parallel,
        (false, _) => Crossed,
    };
    let terms: Vec<&str> = match (at, label) {
        (PCos | OCps, PhiPlus) => vec!["+H+1:H+1", "+V-1:V-1"],
        (PCos | OCps, PhiMinus) => vec!["+H+1:H+1", "-V-1:V-1"],
        (PCos | OCps, PsiPlus) => vec!["+H+1:V-1", "+V-1:H+1"],
        (PCos | OCps, PsiMinus) => vec!["+H+1:V-1", "-V-1:H+1"],
        (DpStage, PhiPlus) => vec!["+H+1:H-1", "+V-1:V+1"],
        (DpStage, PhiMinus) => vec!["+H+1:H-1", "-V-1:V+1"],
        (DpStage, PsiPlus) => vec!["+H+1:V+1", "+V-1:H-1"],
        (DpStage, PsiMinus) => vec!["+H+1:V+1", "-V-1:H-1"],
        (Oh, PhiPlus) => vec![
            "+H+1:H+1", "-H+1:H-1", "+H-1:H+1", "-H-1:H-1",
            "+V+1:V+1", "+V+1:V-1", "-V-1:V+1", "-V-1:V-1",
        ],
        (Oh, PhiMinus) => vec![
            "+H+1:H+1", "-H+1:H-1", "+H-1:H+1", "-H-1:H-1",
            "-V+1:V+1", "-V+1:V-1", "+V-1:V+1", "+V-1:V-1",
        ],
        (Oh, PsiPlus) => vec![
            "+H+1:V+1", "+H+1:V-1", "+H-1:V+1", "+H-1:V-1",
            "+V+1:H+1", "-V+1:H-1", "-V-1:H+1", "+V-1:H-1",
        ],
        (Oh, PsiMinus) => vec![
            "+H+1:V+1", "+H+1:V-1", "+H-1:V+1", "+H-1:V-1",
            "-V+1:H+1", "+V+1:H-1", "+V-1:H+1", "-V-1:H-1",
        ],
        (Hwp, PhiPlus) => vec![
            "+H+1:H+1", "+V+1:V+1", "-H+1:V-1", "-V+1:H-1",
            "+H-1:V+1", "+V-1:H+1", "-H-1:H-1", "-V-1:V-1",
        ],
        (Hwp, PhiMinus) => vec![
            "+H+1:V+1", "+V+1:H+1", "-H+1:H-1", "-V+1:V-1",
            "+H-1:H+1", "+V-1:V+1", "-H-1:V-1", "-V-1:H-1",
        ],
        (Hwp, PsiPlus) => vec![
            "+H+1:H+1", "-V+1:V+1", "-H+1:V-1", "+V+1:H-1",
            "-H-1:V+1", "+V-1:H+1", "+H-1:H-1", "-V-1:V-1",
        ],
        (Hwp, PsiMinus) => vec![
            "+H+1:V+1", "-V+1:H+1", "-H+1:H-1", "+V+1:V-1",
            "-H-1:H+1", "+V-1:V+1", "+H-1:V-1", "-V-1:H-1",
        ],
    };
    (terms, path)
}

fn parse_half(s: &str) -> (Polarization, i32) {
    let pol = match &s[..1] {
        "H" => Polarization::H,
        "V" => Polarization::V,
        other => panic!("bad polarization `{other}` in reference data"),
    };
    let oam: i32 = s[1..].parse().expect("reference OAM");
    (pol, oam)
}

/// The published state at `at` for input `label`, normalized.
pub fn reference_state(label: BellLabel, at: Checkpoint, space: &Arc<ModeSpace>) -> Result<TwoPhotonState> {
    let (terms, factor) = reference_terms(label, at);
    let pairs: [(&str, &str); 2] = match factor {
        PathFactor::Parallel => [("a1", "a2"), ("b1", "b2")],
        PathFactor::Crossed => [("a1", "b2"), ("b1", "a2")],
    };
    let mut amps = Vec::new();
    for t in terms {
        let sign = if t.starts_with('-') { -1.0 } else { 1.0 };
        let (a, b) = t[1..].split_once(':').expect("reference term");
        let (pa, la) = parse_half(a);
        let (pb, lb) = parse_half(b);
        for (xa, xb) in pairs {
            amps.push((
                (
                    BasisMode::new(pa, la, space.path(xa)?),
                    BasisMode::new(pb, lb, space.path(xb)?),
                ),
                C64::new(sign, 0.0),
            ));
        }
    }
    TwoPhotonState::from_amplitudes(space, amps)?.normalized()
}

/// Bell polarization state at ℓ = 0 times `(|a1⟩|a2⟩ + |b1⟩|b2⟩)/√2`.
pub fn prepare_input_on(label: BellLabel, space: &Arc<ModeSpace>) -> Result<TwoPhotonState> {
    use Polarization::{H, V};
    let (first, second) = if label.is_phi() { ((H, H), (V, V)) } else { ((H, V), (V, H)) };
    let mut amps = Vec::new();
    for (xa, xb) in [("a1", "a2"), ("b1", "b2")] {
        let (pa, pb) = (space.path(xa)?, space.path(xb)?);
        for ((qa, qb), c) in [(first, 1.0), (second, label.sign())] {
            amps.push((
                (BasisMode::new(qa, 0, pa.clone()), BasisMode::new(qb, 0, pb.clone())),
                C64::new(0.5 * c, 0.0),
            ));
        }
    }
    TwoPhotonState::from_amplitudes(space, amps)?.normalized()
}

pub fn prepare_input(label: BellLabel) -> Result<TwoPhotonState> {
    prepare_input_on(label, &fig2().space()?)
}

/// Propagated state at one checkpoint.
#[derive(Debug, Clone)]
pub struct StageSnapshot {
    pub checkpoint: Checkpoint,
    pub stage_number: usize,
    pub state: TwoPhotonState,
}

/// The analyzer: a circuit plus the table that reads its detectors.
#[derive(Debug, Clone)]
pub struct Analyzer {
    pub circuit: Circuit,
    pub table: ClassificationTable,
}

impl Analyzer {
    pub fn fig2(implementation: Implementation) -> Result<Self> {
        Ok(Analyzer {
            circuit: fig2().with_impl(implementation),
            table: ClassificationTable::published()?,
        })
    }

    pub fn new(circuit: Circuit, table: ClassificationTable) -> Self {
        Analyzer { circuit, table }
    }

    /// Detector origins from the circuit's `sppm` stages, or the table's own.
    pub fn origins(&self) -> (Vec<PathLabel>, Vec<PathLabel>) {
        let (a, b) = self.circuit.detector_origins();
        if a.is_empty() && b.is_empty() {
            let (ta, tb) = self.table.origins();
            (ta.to_vec(), tb.to_vec())
        } else {
            (a, b)
        }
    }

    pub fn space(&self) -> Result<Arc<ModeSpace>> {
        self.circuit.space()
    }

    pub fn prepare_input(&self, label: BellLabel) -> Result<TwoPhotonState> {
        prepare_input_on(label, &self.space()?)
    }

    pub fn stage_states(&self, label: BellLabel) -> Result<Vec<StageSnapshot>> {
        let states = propagate_stages(&self.circuit, &self.prepare_input(label)?)?;
        let mut out = Vec::new();
        for cp in Checkpoint::ALL {
            let last = self.circuit.stages.iter().rposition(|s| match &s.op {
                StageOp::Element(e) => e.name() == cp.stage_kind(),
                StageOp::Gate(g) => g.name() == cp.stage_kind(),
            });
            if let Some(i) = last {
                out.push(StageSnapshot {
                    checkpoint: cp,
                    stage_number: i + 1,
                    state: states[i].1.clone(),
                });
            }
        }
        Ok(out)
    }

    pub fn analyze(&self, label: BellLabel) -> Result<OutcomeDistribution> {
        self.analyze_state(&self.prepare_input(label)?)
    }

    pub fn analyze_state(&self, input: &TwoPhotonState) -> Result<OutcomeDistribution> {
        let out = propagate(&self.circuit, input)?;
        let (oa, ob) = self.origins();
        sppm_project(&out, &oa, &ob)
    }

    /// Same as [`Analyzer::analyze`] but through the dense matrix.
    pub fn analyze_dense(&self, label: BellLabel, u: &AssembledUnitary) -> Result<OutcomeDistribution> {
        let out = u.apply(&self.prepare_input(label)?)?;
        let (oa, ob) = self.origins();
        sppm_project(&out, &oa, &ob)
    }

    pub fn classify(&self, pattern: &CoincidencePattern) -> Result<BellLabel> {
        self.table.classify(pattern)
    }

    /// Largest total-variation distance between sparse and dense routes over the four inputs.
    pub fn oracle_check(&self) -> Result<f64> {
        let u = assemble_unitary(&self.circuit)?;
        let mut worst: f64 = 0.0;
        for label in BellLabel::ALL {
            let sparse = self.analyze(label)?;
            let dense = self.analyze_dense(label, &u)?;
            worst = worst.max(sparse.total_variation(&dense)?);
        }
        Ok(worst)
    }

    /// `max |U·v − propagate(v)|` over `count` random unit vectors spanning the
    /// circuit's input domain.
    pub fn random_vector_check(&self, u: &AssembledUnitary, seed: u64, count: usize) -> Result<f64> {
        let space = self.space()?;
        let da = self.circuit.input_domain(Photon::A);
        let db = self.circuit.input_domain(Photon::B);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let mut amps = Vec::new();
            for ma in &da {
                for mb in &db {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    amps.push(((ma.clone(), mb.clone()), C64::new(re, im)));
                }
            }
            let v = TwoPhotonState::from_amplitudes(&space, amps)?.normalized()?;
            worst = worst.max(max_abs_diff(&u.apply(&v)?, &propagate(&self.circuit, &v)?)?);
        }
        Ok(worst)
    }

    pub fn verify(&self) -> Result<VerificationReport> {
        verify_with(self, ORACLE_SEED)
    }

    /// [`Analyzer::verify`] with a different seed for the random-vector oracle.
    pub fn verify_seeded(&self, seed: u64) -> Result<VerificationReport> {
        verify_with(self, seed)
    }
}

/// Per-input part of a [`VerificationReport`].
#[derive(Debug, Clone, Serialize)]
pub struct LabelReport {
    pub label: BellLabel,
    pub support: Vec<String>,
    pub min_probability: f64,
    pub max_probability: f64,
    /// Probability falling outside the table's row for this label.
    pub mass_outside_row: f64,
    pub total_probability: f64,
    /// Fidelity with the published state at each checkpoint.
    pub stage_fidelities: Vec<(Checkpoint, f64)>,
    /// Φ± only on (a1,a2)/(b1,b2), Ψ± only on (a1,b2)/(b1,a2).
    pub path_sectors_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub pattern: String,
    pub table: BellLabel,
    pub observed: BellLabel,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub implementation: Implementation,
    pub lmax: i32,
    pub labels: Vec<LabelReport>,
    pub disjoint: bool,
    pub coverage: bool,
    pub success_probability: f64,
    pub correct_patterns: usize,
    pub total_patterns: usize,
    pub mismatches: Vec<Mismatch>,
    pub oracle_residual: f64,
    pub random_vector_residual: f64,
    pub unitarity_residual: f64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("implementation: {}\n", self.implementation));
        s.push_str(&format!("lmax: {}\n", self.lmax));
        for l in &self.labels {
            s.push_str(&format!("input {}:\n", l.label));
            s.push_str(&format!("  support: {} patterns\n", l.support.len()));
            s.push_str(&format!("  min_probability: {:.12}\n", l.min_probability));
            s.push_str(&format!("  max_probability: {:.12}\n", l.max_probability));
            s.push_str(&format!("  mass_outside_row: {:.12}\n", l.mass_outside_row));
            for (cp, f) in &l.stage_fidelities {
                s.push_str(&format!("  fidelity {}: {:.12}\n", cp.title(), f));
            }
            s.push_str(&format!("  path_sectors_ok: {}\n", l.path_sectors_ok));
        }
        s.push_str(&format!("disjoint: {}\n", self.disjoint));
        s.push_str(&format!("coverage: {}\n", self.coverage));
        s.push_str(&format!(
            "classification_accuracy: {}/{}\n",
            self.correct_patterns, self.total_patterns
        ));
        for m in &self.mismatches {
            s.push_str(&format!(
                "mismatch: {} table={} observed={}\n",
                m.pattern, m.table, m.observed
            ));
        }
        s.push_str(&format!("success_probability: {:.12}\n", self.success_probability));
        s.push_str(&format!("oracle_residual: {:.3e}\n", self.oracle_residual));
        s.push_str(&format!("random_vector_residual: {:.3e}\n", self.random_vector_residual));
        s.push_str(&format!("unitarity_residual: {:.3e}\n", self.unitarity_residual));
        for c in &self.checks {
            s.push_str(&format!(
                "[{}] {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        s.push_str(&format!("result: {}\n", if self.passed() { "PASS" } else { "FAIL" }));
        s
    }
}

fn origin_pair_ok(label: BellLabel, p: &CoincidencePattern) -> bool {
    let pair = (p.det_a.origin.as_str(), p.det_b.origin.as_str());
    if label.is_phi() {
        matches!(pair, ("a1", "a2") | ("b1", "b2"))
    } else {
        matches!(pair, ("a1", "b2") | ("b1", "a2"))
    }
}

fn verify_with(an: &Analyzer, seed: u64) -> Result<VerificationReport> {
    let space = an.space()?;
    let u = assemble_unitary(&an.circuit)?;
    let mut labels = Vec::new();
    let mut checks = Vec::new();
    let mut success = 0.0;
    let mut oracle_residual: f64 = 0.0;
    let mut observed: BTreeMap<CoincidencePattern, BellLabel> = BTreeMap::new();
    let mut stage_ok = true;
    let mut equiprobable = true;

    for label in BellLabel::ALL {
        let dist = an.analyze(label)?;
        let dense = an.analyze_dense(label, &u)?;
        oracle_residual = oracle_residual.max(dist.total_variation(&dense)?);
        let row = an.table.preimage(label);
        let support: Vec<&CoincidencePattern> = dist.support(SUPPORT_TOL);
        let probs: Vec<f64> = support.iter().map(|p| dist.probability(p)).collect();
        // Each supported pattern is compared with the dense route's own 1/|support|.
        let expected = 1.0 / dense.support(SUPPORT_TOL).len().max(1) as f64;
        if probs.iter().any(|x| (x - expected).abs() > CHECK_TOL) {
            equiprobable = false;
        }
        let mut outside = 0.0;
        for (p, x) in dist.entries() {
            if an.table.classify(p)? == label {
                success += x / 4.0;
            }
            if !row.contains(p) {
                outside += x;
            }
            if *x > SUPPORT_TOL {
                observed.insert(p.clone(), label);
            }
        }
        let mut stage_fidelities = Vec::new();
        for snap in an.stage_states(label)? {
            let reference = reference_state(label, snap.checkpoint, &space)?;
            let f = fidelity(&snap.state, &reference)?;
            if f < 1.0 - CHECK_TOL {
                stage_ok = false;
            }
            stage_fidelities.push((snap.checkpoint, f));
        }
        labels.push(LabelReport {
            label,
            path_sectors_ok: support.iter().all(|p| origin_pair_ok(label, p)),
            support: support.iter().map(|p| p.to_string()).collect(),
            min_probability: probs.iter().copied().fold(f64::INFINITY, f64::min),
            max_probability: probs.iter().copied().fold(0.0, f64::max),
            mass_outside_row: outside,
            total_probability: dist.total(),
            stage_fidelities,
        });
    }

    let (disjoint, coverage) = an.table.partition_flags();
    let rows = an.table.rows();
    let mut mismatches = Vec::new();
    let mut correct = 0;
    for r in &rows {
        match observed.get(&r.pattern) {
            Some(o) if *o == r.label => correct += 1,
            Some(o) => mismatches.push(Mismatch {
                pattern: r.pattern.to_string(),
                table: r.label,
                observed: *o,
            }),
            None => {}
        }
    }
    let random_vector_residual = an.random_vector_check(&u, seed, ORACLE_VECTORS)?;
    let unitarity_residual = u.max_stage_residual();

    let mut check = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        })
    };
    check("table-partition", disjoint && coverage, format!("disjoint={disjoint} coverage={coverage}"));
    let support_ok = labels
        .iter()
        .all(|l| l.support.len() == 16 && l.mass_outside_row <= CHECK_TOL);
    check(
        "table-support",
        support_ok,
        labels
            .iter()
            .map(|l| format!("{}: {} patterns, outside {:.3e}", l.label, l.support.len(), l.mass_outside_row))
            .collect::<Vec<_>>()
            .join("; "),
    );
    check("equiprobable", equiprobable, "every supported pattern at 1/16".into());
    check("normalization", labels.iter().all(|l| (l.total_probability - 1.0).abs() <= CHECK_TOL), String::new());
    check(
        "path-sectors",
        labels.iter().all(|l| l.path_sectors_ok),
        "phi on (a1,a2)/(b1,b2), psi on (a1,b2)/(b1,a2)".into(),
    );
    check("stage-contracts", stage_ok, "fidelity >= 1 - 1e-10 at every checkpoint".into());
    check(
        "classification",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{correct}/{} patterns", rows.len())
        } else {
            mismatches
                .iter()
                .map(|m| format!("{} listed as {} but produced by {}", m.pattern, m.table, m.observed))
                .collect::<Vec<_>>()
                .join("; ")
        },
    );
    check(
        "success-probability",
        (success - 1.0).abs() <= CHECK_TOL,
        format!("{success:.12}"),
    );
    check(
        "oracle-agreement",
        oracle_residual <= CHECK_TOL && random_vector_residual <= CHECK_TOL,
        format!("tv={oracle_residual:.3e} random={random_vector_residual:.3e}"),
    );
    check("unitarity", unitarity_residual <= CHECK_TOL, format!("{unitarity_residual:.3e}"));

    Ok(VerificationReport {
        implementation: an
            .circuit
            .stages
            .iter()
            .find_map(|s| s.implementation)
            .unwrap_or(Implementation::Canonical),
        lmax: an.circuit.lmax,
        labels,
        disjoint,
        coverage,
        success_probability: success,
        correct_patterns: correct,
        total_patterns: rows.len(),
        mismatches,
        oracle_residual,
        random_vector_residual,
        unitarity_residual,
        checks,
    })
}

pub fn analyze(label: BellLabel) -> Result<OutcomeDistribution> {
    Analyzer::fig2(Implementation::Canonical)?.analyze(label)
}

pub fn classify(pattern: &CoincidencePattern) -> Result<BellLabel> {
    ClassificationTable::published()?.classify(pattern)
}

pub fn verify(implementation: Implementation) -> Result<VerificationReport> {
    Analyzer::fig2(implementation)?.verify()
}

pub fn oracle_check() -> Result<f64> {
    Analyzer::fig2(Implementation::Canonical)?.oracle_check()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::DetectorId;
    use crate::state::inner;

    fn pat(s: &str) -> CoincidencePattern {
        s.parse().unwrap()
    }

    #[test]
    fn published_table_is_a_partition() {
        let t = ClassificationTable::published().unwrap();
        assert_eq!(t.rows().len(), 64);
        assert_eq!(t.partition_flags(), (true, true));
        for l in BellLabel::ALL {
            assert_eq!(t.preimage(l).len(), 16);
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&pat("D[+1,H,a1] & D[+1,H,a2]")).unwrap(), BellLabel::PhiPlus);
        assert_eq!(classify(&pat("D[+1,H,a1] & D[+1,V,a2]")).unwrap(), BellLabel::PhiMinus);
        assert_eq!(classify(&pat("D[-1,V,b1] & D[-1,H,a2]")).unwrap(), BellLabel::PsiMinus);
        assert_eq!(classify(&pat("D[+1,H,b1] & D[-1,V,a2]")).unwrap(), BellLabel::PsiPlus);
    }

    #[test]
    fn classify_rejects_wrong_sides() {
        let p = CoincidencePattern::new(DetectorId::new(1, Polarization::H, "a2"), DetectorId::new(1, Polarization::H, "a1"));
        assert!(matches!(classify(&p), Err(Error::MalformedPattern(_))));
        let dup = CoincidencePattern::new(DetectorId::new(1, Polarization::H, "a1"), DetectorId::new(1, Polarization::H, "a1"));
        assert!(matches!(classify(&dup), Err(Error::MalformedPattern(_))));
    }

    #[test]
    fn prepared_inputs_are_normalized_and_orthogonal() {
        let states: Vec<_> = BellLabel::ALL.iter().map(|l| prepare_input(*l).unwrap()).collect();
        for (i, a) in states.iter().enumerate() {
            assert!((a.norm_sqr() - 1.0).abs() < 1e-15);
            assert_eq!(a.amplitudes().len(), 4);
            for b in &states[i + 1..] {
                assert!(inner(a, b).unwrap().norm() < 1e-15);
            }
        }
    }

    #[test]
    fn from_rows_rejects_duplicates_and_gaps() {
        let t = ClassificationTable::published().unwrap();
        let (oa, ob) = fig2_origins();
        let mut rows = t.rows();
        rows.pop();
        assert!(ClassificationTable::from_rows(oa.clone(), ob.clone(), rows.clone()).is_err());
        rows.push(rows[0].clone());
        assert!(ClassificationTable::from_rows(oa, ob, rows).is_err());
    }

    #[test]
    fn label_parsing() {
        for l in BellLabel::ALL {
            assert_eq!(l.as_str().parse::<BellLabel>().unwrap(), l);
        }
        assert!("phi".parse::<BellLabel>().is_err());
    }

    #[test]
    fn tampering_moves_one_entry() {
        let t = ClassificationTable::published().unwrap();
        let (bad, victim) = t.tampered(5);
        assert_ne!(bad.classify(&victim).unwrap(), t.classify(&victim).unwrap());
        assert_eq!(bad.partition_flags(), (true, true));
    }
}
