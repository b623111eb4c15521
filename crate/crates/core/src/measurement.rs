//! Detectors, coincidence patterns and Born-rule outcome distributions.
//!
//! Each analyzer output path ("origin") feeds an SPPM block: a PBS sends V
//! into a second arm, an OAM sorter in each arm separates ℓ = +1 from
//! ℓ = −1, and four ideal detectors sit on the resulting ports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elements::{apply_pair, Element, Photon, PlacedElement, Site};
use crate::error::{Error, Result};
use crate::state::{AmplitudeMap, BasisMode, ModeSpace, PathLabel, Polarization, TwoPhotonState};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetectorId {
    /// +1 or −1.
    pub oam_sign: i32,
    pub pol: Polarization,
    pub origin: PathLabel,
}

impl DetectorId {
    pub fn new(oam_sign: i32, pol: Polarization, origin: impl Into<PathLabel>) -> Self {
        DetectorId {
            oam_sign,
            pol,
            origin: origin.into(),
        }
    }

    /// The detector that clicks for a photon in `mode`, if it is detectable.
    pub fn for_mode(mode: &BasisMode) -> Result<Self> {
        match mode.oam {
            1 | -1 => Ok(DetectorId::new(mode.oam, mode.pol, mode.path.clone())),
            oam => Err(Error::UnsortableOam {
                oam,
                path: mode.path.to_string(),
            }),
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D[{:+},{},{}]", self.oam_sign, self.pol, self.origin)
    }
}

impl FromStr for DetectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedPattern(format!("cannot read detector `{s}`"));
        let inner = s
            .trim()
            .strip_prefix("D[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let [sign, pol, origin] = parts.as_slice() else {
            return Err(bad());
        };
        let oam_sign = match *sign {
            "+1" => 1,
            "-1" => -1,
            _ => return Err(bad()),
        };
        let pol = match *pol {
            "H" => Polarization::H,
            "V" => Polarization::V,
            _ => return Err(bad()),
        };
        if origin.is_empty() {
            return Err(bad());
        }
        Ok(DetectorId::new(oam_sign, pol, *origin))
    }
}

impl Serialize for DetectorId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DetectorId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One click per photon.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoincidencePattern {
    pub det_a: DetectorId,
    pub det_b: DetectorId,
}

impl CoincidencePattern {
    pub fn new(det_a: DetectorId, det_b: DetectorId) -> Self {
        CoincidencePattern { det_a, det_b }
    }
}

impl fmt::Display for CoincidencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} & {}", self.det_a, self.det_b)
    }
}

impl FromStr for CoincidencePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('&')
            .ok_or_else(|| Error::MalformedPattern(format!("expected `D[..] & D[..]`, got `{s}`")))?;
        Ok(CoincidencePattern::new(a.parse()?, b.parse()?))
    }
}

/// All patterns for the given origins: photon A's detector varies slowest;
/// within a photon, origin (as given), then H before V, then +1 before −1.
pub fn enumerate_patterns(origins_a: &[PathLabel], origins_b: &[PathLabel]) -> Vec<CoincidencePattern> {
    let dets = |origins: &[PathLabel]| -> Vec<DetectorId> {
        origins
            .iter()
            .flat_map(|o| {
                Polarization::BOTH
                    .into_iter()
                    .flat_map(move |pol| [1, -1].map(|s| DetectorId::new(s, pol, o.clone())))
            })
            .collect()
    };
    let da = dets(origins_a);
    let db = dets(origins_b);
    da.iter()
        .flat_map(|a| db.iter().map(move |b| CoincidencePattern::new(a.clone(), b.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub det_a: DetectorId,
    pub det_b: DetectorId,
    pub probability: f64,
}

/// Probabilities over every pattern of the origin sets, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    entries: Vec<(CoincidencePattern, f64)>,
}

impl OutcomeDistribution {
    pub fn entries(&self) -> &[(CoincidencePattern, f64)] {
        &self.entries
    }

    pub fn probability(&self, pattern: &CoincidencePattern) -> f64 {
        self.entries
            .iter()
            .find(|(p, _)| p == pattern)
            .map(|(_, x)| *x)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, x)| x).sum()
    }

    /// Patterns with probability above `tol`, in enumeration order.
    pub fn support(&self, tol: f64) -> Vec<&CoincidencePattern> {
        self.entries
            .iter()
            .filter(|(_, x)| *x > tol)
            .map(|(p, _)| p)
            .collect()
    }

    /// `½ Σ |p − q|`; the two distributions must cover the same patterns.
    pub fn total_variation(&self, other: &OutcomeDistribution) -> Result<f64> {
        if self.entries.len() != other.entries.len()
            || self.entries.iter().zip(&other.entries).any(|(a, b)| a.0 != b.0)
        {
            return Err(Error::MalformedPattern(
                "distributions are over different pattern sets".into(),
            ));
        }
        Ok(0.5
            * self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (a.1 - b.1).abs())
                .sum::<f64>())
    }

    pub fn records(&self) -> Vec<OutcomeRecord> {
        self.entries
            .iter()
            .map(|(p, x)| OutcomeRecord {
                det_a: p.det_a.clone(),
                det_b: p.det_b.clone(),
                probability: *x,
            })
            .collect()
    }

    /// One line per pattern above `tol`: `D[..] & D[..]  0.062500000000`.
    pub fn to_text(&self, tol: f64) -> String {
        let mut out = String::new();
        for (p, x) in &self.entries {
            if *x > tol {
                out.push_str(&format!("{p}  {x:.12}\n"));
            }
        }
        out
    }
}

fn check_origins(state: &TwoPhotonState, origins_a: &[PathLabel], origins_b: &[PathLabel]) -> Result<()> {
    for (a, b) in state.amplitudes().keys() {
        if !origins_a.contains(&a.path) {
            return Err(Error::LeakedAmplitude(a.path.to_string()));
        }
        if !origins_b.contains(&b.path) {
            return Err(Error::LeakedAmplitude(b.path.to_string()));
        }
    }
    Ok(())
}

fn collect(
    origins_a: &[PathLabel],
    origins_b: &[PathLabel],
    probs: BTreeMap<CoincidencePattern, f64>,
) -> OutcomeDistribution {
    OutcomeDistribution {
        entries: enumerate_patterns(origins_a, origins_b)
            .into_iter()
            .map(|p| {
                let x = probs.get(&p).copied().unwrap_or(0.0);
                (p, x)
            })
            .collect(),
    }
}

/// Direct projective measurement in the (OAM sign, polarization, origin) basis.
pub fn sppm_project(
    state: &TwoPhotonState,
    origins_a: &[PathLabel],
    origins_b: &[PathLabel],
) -> Result<OutcomeDistribution> {
    check_origins(state, origins_a, origins_b)?;
    let mut probs = BTreeMap::new();
    for ((a, b), amp) in state.amplitudes() {
        let p = CoincidencePattern::new(DetectorId::for_mode(a)?, DetectorId::for_mode(b)?);
        *probs.entry(p).or_insert(0.0) += amp.norm_sqr();
    }
    Ok(collect(origins_a, origins_b, probs))
}

/// Port names of the block attached to `origin`.
fn ports(origin: &PathLabel) -> [(PathLabel, i32, Polarization); 4] {
    let p = |suffix: &str| PathLabel::new(&format!("{origin}.{suffix}"));
    [
        (origin.clone(), 1, Polarization::H),
        (p("c-"), -1, Polarization::H),
        (p("d"), 1, Polarization::V),
        (p("d-"), -1, Polarization::V),
    ]
}

/// The same measurement carried out element by element: for every origin `o`,
/// PBS(o, o.d) then OAM sorters on (o, o.c-) and (o.d, o.d-). Each detector is
/// identified only by the port it sits on.
pub fn sppm_project_decomposed(
    state: &TwoPhotonState,
    origins_a: &[PathLabel],
    origins_b: &[PathLabel],
) -> Result<OutcomeDistribution> {
    check_origins(state, origins_a, origins_b)?;
    let mut extra = Vec::new();
    let mut port_map: BTreeMap<PathLabel, DetectorId> = BTreeMap::new();
    for o in origins_a.iter().chain(origins_b) {
        for (port, sign, pol) in ports(o) {
            if port != *o {
                extra.push(port.clone());
            }
            port_map.insert(port, DetectorId::new(sign, pol, o.clone()));
        }
    }
    let space = Arc::new(state.space().extended(extra)?);
    let mut st = state.rehome(&space)?;
    for (photon, origins) in [(Photon::A, origins_a), (Photon::B, origins_b)] {
        for o in origins {
            let [_, (c_minus, ..), (d, ..), (d_minus, ..)] = ports(o);
            let place = |element: Element, x: &PathLabel, y: &PathLabel| PlacedElement {
                element,
                site: Site {
                    photon,
                    paths: vec![x.clone(), y.clone()],
                },
            };
            st = apply_pair(&place(Element::Pbs, o, &d), photon, &st)?;
            st = apply_pair(&place(Element::OamSorter, o, &c_minus), photon, &st)?;
            st = apply_pair(&place(Element::OamSorter, &d, &d_minus), photon, &st)?;
        }
    }
    let mut probs = BTreeMap::new();
    for ((a, b), amp) in st.amplitudes() {
        let da = port_map[&a.path].clone();
        let db = port_map[&b.path].clone();
        *probs.entry(CoincidencePattern::new(da, db)).or_insert(0.0) += amp.norm_sqr();
    }
    Ok(collect(origins_a, origins_b, probs))
}

/// Mode space spanned by the given origin paths alone.
pub fn origin_space(lmax: i32, origins: &[&str]) -> Result<Arc<ModeSpace>> {
    Ok(Arc::new(ModeSpace::new(lmax, origins.iter().copied())?))
}
