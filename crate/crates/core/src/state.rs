//! Basis modes and sparse amplitude maps for one and two photons.
//!
//! A photon mode is the triple (polarization, OAM index, path). States store
//! only the occupied modes in ordered maps, so iteration order and printed
//! output are deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Amplitudes with modulus below this are removed after every update.
pub const DROP_THRESHOLD: f64 = 1e-15;

/// Truncation used when a circuit does not declare its own.
pub const DEFAULT_LMAX: i32 = 4;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    pub fn symbol(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Name of a spatial path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathLabel(Arc<str>);

impl PathLabel {
    pub fn new(name: &str) -> Self {
        PathLabel(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for PathLabel {
    fn from(name: &str) -> Self {
        PathLabel::new(name)
    }
}

impl fmt::Display for PathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for PathLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// One single-photon basis mode `|pol, oam⟩|path⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisMode {
    pub pol: Polarization,
    pub oam: i32,
    pub path: PathLabel,
}

impl BasisMode {
    pub fn new(pol: Polarization, oam: i32, path: impl Into<PathLabel>) -> Self {
        BasisMode {
            pol,
            oam,
            path: path.into(),
        }
    }

    pub fn with_pol(&self, pol: Polarization) -> Self {
        BasisMode { pol, ..self.clone() }
    }

    pub fn with_oam(&self, oam: i32) -> Self {
        BasisMode { oam, ..self.clone() }
    }

    pub fn with_path(&self, path: &PathLabel) -> Self {
        BasisMode {
            path: path.clone(),
            ..self.clone()
        }
    }
}

impl fmt::Display for BasisMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{:+}⟩|{}⟩", self.pol, self.oam, self.path)
    }
}

/// Truncated single-photon mode space: |ℓ| ≤ lmax over a declared path set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSpace {
    lmax: i32,
    paths: Vec<PathLabel>,
}

impl ModeSpace {
    pub fn new<P: Into<PathLabel>>(lmax: i32, paths: impl IntoIterator<Item = P>) -> Result<Self> {
        if lmax < 1 {
            return Err(Error::InvalidSpace(format!("lmax must be at least 1, got {lmax}")));
        }
        let paths: Vec<PathLabel> = paths.into_iter().map(Into::into).collect();
        for (i, p) in paths.iter().enumerate() {
            if paths[..i].contains(p) {
                return Err(Error::InvalidSpace(format!("path `{p}` declared twice")));
            }
        }
        Ok(ModeSpace { lmax, paths })
    }

    pub fn lmax(&self) -> i32 {
        self.lmax
    }

    pub fn paths(&self) -> &[PathLabel] {
        &self.paths
    }

    pub fn path(&self, name: &str) -> Result<PathLabel> {
        self.paths
            .iter()
            .find(|p| p.as_str() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownPath(name.to_string()))
    }

    pub fn has_path(&self, path: &PathLabel) -> bool {
        self.paths.contains(path)
    }

    pub fn check_oam(&self, oam: i32) -> Result<()> {
        if oam.abs() > self.lmax {
            Err(Error::OamOverflow {
                oam,
                lmax: self.lmax,
            })
        } else {
            Ok(())
        }
    }

    pub fn check_mode(&self, mode: &BasisMode) -> Result<()> {
        if !self.has_path(&mode.path) {
            return Err(Error::UnknownPath(mode.path.to_string()));
        }
        self.check_oam(mode.oam)
    }

    /// Single-photon dimension `2 × (2·lmax+1) × |paths|`.
    pub fn dimension(&self) -> usize {
        2 * (2 * self.lmax as usize + 1) * self.paths.len()
    }

    /// All basis modes, ordered by path, then OAM, then polarization.
    pub fn modes(&self) -> impl Iterator<Item = BasisMode> + '_ {
        self.paths.iter().flat_map(move |path| {
            (-self.lmax..=self.lmax).flat_map(move |oam| {
                Polarization::BOTH
                    .into_iter()
                    .map(move |pol| BasisMode::new(pol, oam, path.clone()))
            })
        })
    }

    /// Same paths, different truncation.
    pub fn with_lmax(&self, lmax: i32) -> Result<Self> {
        ModeSpace::new(lmax, self.paths.iter().cloned())
    }

    /// Space extended with extra paths (used for detector-internal ports).
    pub fn extended(&self, extra: impl IntoIterator<Item = PathLabel>) -> Result<Self> {
        ModeSpace::new(self.lmax, self.paths.iter().cloned().chain(extra))
    }
}

/// Shared behaviour of one- and two-photon amplitude maps.
pub trait AmplitudeMap: Sized + Clone {
    type Key: Ord + Clone + fmt::Debug;

    fn space(&self) -> &Arc<ModeSpace>;
    fn amplitudes(&self) -> &BTreeMap<Self::Key, C64>;
    fn from_parts(space: Arc<ModeSpace>, amps: BTreeMap<Self::Key, C64>) -> Self;

    fn norm_sqr(&self) -> f64 {
        self.amplitudes().values().map(|a| a.norm_sqr()).sum()
    }

    fn amplitude(&self, key: &Self::Key) -> C64 {
        self.amplitudes().get(key).copied().unwrap_or_default()
    }

    fn scaled(&self, c: C64) -> Self {
        let amps = self
            .amplitudes()
            .iter()
            .map(|(k, a)| (k.clone(), a * c))
            .collect();
        Self::from_parts(self.space().clone(), prune(amps))
    }

    fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n < DROP_THRESHOLD {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }
}

pub(crate) fn prune<K: Ord>(mut amps: BTreeMap<K, C64>) -> BTreeMap<K, C64> {
    amps.retain(|_, a| a.norm() >= DROP_THRESHOLD);
    amps
}

pub(crate) fn accumulate<K: Ord>(map: &mut BTreeMap<K, C64>, key: K, amp: C64) {
    *map.entry(key).or_default() += amp;
}

/// Single-photon state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonState {
    space: Arc<ModeSpace>,
    amps: BTreeMap<BasisMode, C64>,
}

impl AmplitudeMap for PhotonState {
    type Key = BasisMode;

    fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }
    fn amplitudes(&self) -> &BTreeMap<BasisMode, C64> {
        &self.amps
    }
    fn from_parts(space: Arc<ModeSpace>, amps: BTreeMap<BasisMode, C64>) -> Self {
        PhotonState { space, amps }
    }
}

impl PhotonState {
    pub fn basis(space: &Arc<ModeSpace>, mode: BasisMode) -> Result<Self> {
        space.check_mode(&mode)?;
        Ok(PhotonState {
            space: space.clone(),
            amps: BTreeMap::from([(mode, ONE)]),
        })
    }

    /// Builds an unnormalized state from explicit amplitudes, checking every mode.
    pub fn from_amplitudes(
        space: &Arc<ModeSpace>,
        amps: impl IntoIterator<Item = (BasisMode, C64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (mode, a) in amps {
            space.check_mode(&mode)?;
            accumulate(&mut map, mode, a);
        }
        Ok(PhotonState {
            space: space.clone(),
            amps: prune(map),
        })
    }

    /// Left circular polarization `(|H⟩ + i|V⟩)/√2` in the given OAM/path mode.
    pub fn circular_l(space: &Arc<ModeSpace>, oam: i32, path: &str) -> Result<Self> {
        Self::circular(space, oam, path, I)
    }

    /// Right circular polarization `(|H⟩ − i|V⟩)/√2`.
    pub fn circular_r(space: &Arc<ModeSpace>, oam: i32, path: &str) -> Result<Self> {
        Self::circular(space, oam, path, -I)
    }

    fn circular(space: &Arc<ModeSpace>, oam: i32, path: &str, v_coeff: C64) -> Result<Self> {
        let path = space.path(path)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_amplitudes(
            space,
            [
                (BasisMode::new(Polarization::H, oam, path.clone()), C64::new(s, 0.0)),
                (BasisMode::new(Polarization::V, oam, path), v_coeff * s),
            ],
        )
    }
}

/// `|pol, oam⟩|path⟩` as a unit-amplitude state.
pub fn basis_state(
    space: &Arc<ModeSpace>,
    pol: Polarization,
    oam: i32,
    path: &str,
) -> Result<PhotonState> {
    let path = space.path(path)?;
    PhotonState::basis(space, BasisMode::new(pol, oam, path))
}

/// Two distinguishable photons A and B sharing one mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    space: Arc<ModeSpace>,
    amps: BTreeMap<(BasisMode, BasisMode), C64>,
}

impl AmplitudeMap for TwoPhotonState {
    type Key = (BasisMode, BasisMode);

    fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }
    fn amplitudes(&self) -> &BTreeMap<(BasisMode, BasisMode), C64> {
        &self.amps
    }
    fn from_parts(space: Arc<ModeSpace>, amps: BTreeMap<(BasisMode, BasisMode), C64>) -> Self {
        TwoPhotonState { space, amps }
    }
}

impl TwoPhotonState {
    pub fn from_amplitudes(
        space: &Arc<ModeSpace>,
        amps: impl IntoIterator<Item = ((BasisMode, BasisMode), C64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for ((a, b), amp) in amps {
            space.check_mode(&a)?;
            space.check_mode(&b)?;
            accumulate(&mut map, (a, b), amp);
        }
        Ok(TwoPhotonState {
            space: space.clone(),
            amps: prune(map),
        })
    }

    /// Born probabilities of photon A's modes with B traced out.
    pub fn marginal_a(&self) -> BTreeMap<BasisMode, f64> {
        let mut out = BTreeMap::new();
        for ((a, _), amp) in &self.amps {
            *out.entry(a.clone()).or_insert(0.0) += amp.norm_sqr();
        }
        out
    }

    pub fn marginal_b(&self) -> BTreeMap<BasisMode, f64> {
        let mut out = BTreeMap::new();
        for ((_, b), amp) in &self.amps {
            *out.entry(b.clone()).or_insert(0.0) += amp.norm_sqr();
        }
        out
    }

    /// The same amplitudes re-homed onto another mode space.
    pub fn rehome(&self, space: &Arc<ModeSpace>) -> Result<Self> {
        Self::from_amplitudes(space, self.amps.iter().map(|(k, a)| (k.clone(), *a)))
    }
}

/// Product state `a ⊗ b`.
pub fn tensor(a: &PhotonState, b: &PhotonState) -> Result<TwoPhotonState> {
    if a.space() != b.space() {
        return Err(Error::DimensionMismatch);
    }
    let mut amps = BTreeMap::new();
    for (ma, xa) in a.amplitudes() {
        for (mb, xb) in b.amplitudes() {
            amps.insert((ma.clone(), mb.clone()), xa * xb);
        }
    }
    Ok(TwoPhotonState {
        space: a.space().clone(),
        amps: prune(amps),
    })
}

/// Normalized linear combination `Σ cᵢ sᵢ`.
pub fn superpose<S: AmplitudeMap>(terms: &[(C64, &S)]) -> Result<S> {
    let first = terms.first().ok_or(Error::ZeroNorm)?.1;
    let space = first.space().clone();
    let mut amps = BTreeMap::new();
    for (c, s) in terms {
        if s.space() != &space {
            return Err(Error::DimensionMismatch);
        }
        for (k, a) in s.amplitudes() {
            accumulate(&mut amps, k.clone(), c * a);
        }
    }
    S::from_parts(space, prune(amps)).normalized()
}

/// `⟨x|y⟩`.
pub fn inner<S: AmplitudeMap>(x: &S, y: &S) -> Result<C64> {
    if x.space() != y.space() {
        return Err(Error::DimensionMismatch);
    }
    Ok(x.amplitudes()
        .iter()
        .filter_map(|(k, a)| y.amplitudes().get(k).map(|b| a.conj() * b))
        .sum())
}

/// `|⟨x|y⟩|²` for normalized inputs; unnormalized inputs are normalized first.
pub fn fidelity<S: AmplitudeMap>(x: &S, y: &S) -> Result<f64> {
    let ov = inner(x, y)?;
    let nx = x.norm_sqr();
    let ny = y.norm_sqr();
    if nx < DROP_THRESHOLD || ny < DROP_THRESHOLD {
        return Ok(0.0);
    }
    Ok((ov.norm_sqr() / (nx * ny)).min(1.0))
}

pub fn equal_up_to_global_phase<S: AmplitudeMap>(x: &S, y: &S, tol: f64) -> Result<bool> {
    Ok(fidelity(x, y)? >= 1.0 - tol)
}

/// Largest componentwise difference `max |x_k − y_k|`; the strict, phase-sensitive comparison.
pub fn max_abs_diff<S: AmplitudeMap>(x: &S, y: &S) -> Result<f64> {
    if x.space() != y.space() {
        return Err(Error::DimensionMismatch);
    }
    let mut worst: f64 = 0.0;
    for (k, a) in x.amplitudes() {
        worst = worst.max((a - y.amplitude(k)).norm());
    }
    for (k, b) in y.amplitudes() {
        if !x.amplitudes().contains_key(k) {
            worst = worst.max(b.norm());
        }
    }
    Ok(worst)
}

/// The unit scalar `c` with `y ≈ c·x`, taken from the largest component of `x`.
pub fn relative_phase<S: AmplitudeMap>(x: &S, y: &S) -> Option<C64> {
    let (key, a) = x
        .amplitudes()
        .iter()
        .max_by(|p, q| p.1.norm().total_cmp(&q.1.norm()))?;
    let b = y.amplitude(key);
    if b.norm() < DROP_THRESHOLD {
        return None;
    }
    let c = b / a;
    Some(c / c.norm())
}
