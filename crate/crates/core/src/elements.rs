//! Primitive optical elements acting on a single photon.
//!
//! Every element is described by its action on one basis mode (a column of
//! its matrix); states are updated by linearity. Conventions:
//!
//! * QWP(−π/4): `(1/√2)[[1, i], [i, 1]]` in the {H, V} basis.
//! * HWP(θ): `[[cos2θ, sin2θ], [sin2θ, −cos2θ]]`.
//! * QP(q): `|L,ℓ⟩ → |R,ℓ+2q⟩`, `|R,ℓ⟩ → |L,ℓ−2q⟩` with unit phases.
//! * DP(α): `|ℓ⟩ → i·e^{i2αℓ}|−ℓ⟩`; mirror: `|ℓ⟩ → i|−ℓ⟩`.
//! * BS: `|x⟩ → (|x⟩ + i|y⟩)/√2`, `|y⟩ → (i|x⟩ + |y⟩)/√2`.
//! * PBS: H keeps its path, V swaps; OAM sorter: ℓ=+1 keeps, ℓ=−1 swaps.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{
    accumulate, prune, AmplitudeMap, BasisMode, ModeSpace, PathLabel, PhotonState, Polarization,
    TwoPhotonState, C64, I, ONE,
};

/// Rotation angle or phase, kept as an exact multiple of π when written that way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    PiFraction { num: i64, den: i64 },
    Radians(f64),
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Angle {
    pub const ZERO: Angle = Angle::PiFraction { num: 0, den: 1 };

    /// `num·π/den`, reduced.
    pub fn pi_frac(num: i64, den: i64) -> Angle {
        assert!(den != 0, "zero denominator");
        if num == 0 {
            return Angle::ZERO;
        }
        let g = gcd(num, den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        Angle::PiFraction { num: n, den: d }
    }

    pub fn radians(self) -> f64 {
        match self {
            Angle::PiFraction { num, den } => PI * num as f64 / den as f64,
            Angle::Radians(r) => r,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Angle::PiFraction { num: 0, .. } => f.write_str("0"),
            Angle::PiFraction { num, den } => {
                if num < 0 {
                    f.write_str("-")?;
                }
                if num.abs() != 1 {
                    write!(f, "{}*", num.abs())?;
                }
                f.write_str("pi")?;
                if den != 1 {
                    write!(f, "/{den}")?;
                }
                Ok(())
            }
            Angle::Radians(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for Angle {
    type Err = String;

    /// Accepts `0`, `1.25`, `pi`, `-pi/4`, `3*pi/8`, `3pi/8`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(pos) = t.find("pi") {
            let (head, tail) = (&t[..pos], &t[pos + 2..]);
            let (neg, head) = match head.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, head),
            };
            let head = head.strip_suffix('*').unwrap_or(head);
            let num: i64 = if head.is_empty() {
                1
            } else {
                head.parse().map_err(|_| format!("bad multiplier `{head}`"))?
            };
            let den: i64 = if tail.is_empty() {
                1
            } else {
                let d = tail
                    .strip_prefix('/')
                    .ok_or_else(|| format!("unexpected `{tail}` after pi"))?;
                d.parse().map_err(|_| format!("bad denominator `{d}`"))?
            };
            if den == 0 {
                return Err("zero denominator".into());
            }
            Ok(Angle::pi_frac(if neg { -num } else { num }, den))
        } else {
            let r: f64 = t.parse().map_err(|_| format!("not an angle: `{t}`"))?;
            if !r.is_finite() {
                return Err(format!("not a finite angle: `{t}`"));
            }
            if r == 0.0 {
                Ok(Angle::ZERO)
            } else {
                Ok(Angle::Radians(r))
            }
        }
    }
}

/// Half-integer stored as twice its value (q-plate topological charge).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const HALF: HalfInt = HalfInt { twice: 1 };

    pub fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    /// `2q`, the OAM shift magnitude.
    pub fn twice(self) -> i32 {
        self.twice
    }

    pub fn neg(self) -> Self {
        HalfInt { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::NonPhysicalQ(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: i32 = n.trim().parse().map_err(|_| bad())?;
            let d: i32 = d.trim().parse().map_err(|_| bad())?;
            match d {
                1 => Ok(HalfInt { twice: 2 * n }),
                2 => Ok(HalfInt { twice: n }),
                -2 => Ok(HalfInt { twice: -n }),
                _ if d != 0 && (2 * n) % d == 0 => Ok(HalfInt { twice: 2 * n / d }),
                _ => Err(bad()),
            }
        } else {
            let x: f64 = t.parse().map_err(|_| bad())?;
            let tw = 2.0 * x;
            if tw.fract() != 0.0 || !tw.is_finite() {
                return Err(bad());
            }
            Ok(HalfInt { twice: tw as i32 })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Photon {
    A,
    B,
}

impl fmt::Display for Photon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Photon::A => "A",
            Photon::B => "B",
        })
    }
}

impl FromStr for Photon {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "A" => Ok(Photon::A),
            "B" => Ok(Photon::B),
            _ => Err(format!("unknown photon `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Quarter-wave plate at the fixed angle −π/4.
    Qwp,
    Hwp { theta: Angle },
    Qp { q: HalfInt },
    Spp { l: i32 },
    Dp { alpha: Angle },
    /// Phase plate; `pol` restricts the phase to one polarization.
    Pp { phi: Angle, pol: Option<Polarization> },
    Mirror,
    Bs,
    Pbs,
    OamSorter,
    /// Delay line; no temporal modes are modeled so it acts as identity.
    DelayLine,
}

impl Element {
    pub fn name(&self) -> &'static str {
        match self {
            Element::Qwp => "qwp",
            Element::Hwp { .. } => "hwp",
            Element::Qp { .. } => "qp",
            Element::Spp { .. } => "spp",
            Element::Dp { .. } => "dp",
            Element::Pp { .. } => "pp",
            Element::Mirror => "mirror",
            Element::Bs => "bs",
            Element::Pbs => "pbs",
            Element::OamSorter => "oam_sorter",
            Element::DelayLine => "dl",
        }
    }

    /// Elements that couple exactly two paths.
    pub fn is_two_path(&self) -> bool {
        matches!(self, Element::Bs | Element::Pbs | Element::OamSorter)
    }

    pub fn at(self, photon: Photon, paths: &[&str]) -> PlacedElement {
        PlacedElement {
            element: self,
            site: Site::new(photon, paths),
        }
    }

    /// Image of a mode that sits on one of `paths`.
    fn image(&self, m: &BasisMode, paths: &[PathLabel], space: &ModeSpace) -> Result<Vec<(BasisMode, C64)>> {
        use Polarization::{H, V};
        let s = FRAC_1_SQRT_2;
        let other = || -> &PathLabel {
            if m.path == paths[0] {
                &paths[1]
            } else {
                &paths[0]
            }
        };
        Ok(match self {
            Element::Qwp => match m.pol {
                H => vec![(m.with_pol(H), C64::new(s, 0.0)), (m.with_pol(V), I * s)],
                V => vec![(m.with_pol(H), I * s), (m.with_pol(V), C64::new(s, 0.0))],
            },
            Element::Hwp { theta } => {
                let (sn, cs) = (2.0 * theta.radians()).sin_cos();
                match m.pol {
                    H => vec![(m.with_pol(H), C64::new(cs, 0.0)), (m.with_pol(V), C64::new(sn, 0.0))],
                    V => vec![(m.with_pol(H), C64::new(sn, 0.0)), (m.with_pol(V), C64::new(-cs, 0.0))],
                }
            }
            Element::Qp { q } => {
                // Circular components: |H⟩ = (|L⟩+|R⟩)/√2, |V⟩ = −i(|L⟩−|R⟩)/√2.
                let (c_l, c_r) = match m.pol {
                    H => (C64::new(s, 0.0), C64::new(s, 0.0)),
                    V => (-I * s, I * s),
                };
                let up = m.oam + q.twice();
                let down = m.oam - q.twice();
                space.check_oam(up)?;
                space.check_oam(down)?;
                // L → R at ℓ+2q; R → L at ℓ−2q; R = (H − iV)/√2, L = (H + iV)/√2.
                vec![
                    (BasisMode::new(H, up, m.path.clone()), c_l * s),
                    (BasisMode::new(V, up, m.path.clone()), -I * c_l * s),
                    (BasisMode::new(H, down, m.path.clone()), c_r * s),
                    (BasisMode::new(V, down, m.path.clone()), I * c_r * s),
                ]
            }
            Element::Spp { l } => {
                space.check_oam(m.oam + l)?;
                vec![(m.with_oam(m.oam + l), ONE)]
            }
            Element::Dp { alpha } => {
                let phase = I * C64::from_polar(1.0, 2.0 * alpha.radians() * m.oam as f64);
                vec![(m.with_oam(-m.oam), phase)]
            }
            Element::Pp { phi, pol } => {
                let c = match pol {
                    Some(p) if *p != m.pol => ONE,
                    _ => C64::from_polar(1.0, phi.radians()),
                };
                vec![(m.clone(), c)]
            }
            Element::Mirror => vec![(m.with_oam(-m.oam), I)],
            Element::Bs => {
                if m.path == paths[0] {
                    vec![(m.clone(), C64::new(s, 0.0)), (m.with_path(&paths[1]), I * s)]
                } else {
                    vec![(m.with_path(&paths[0]), I * s), (m.clone(), C64::new(s, 0.0))]
                }
            }
            Element::Pbs => match m.pol {
                H => vec![(m.clone(), ONE)],
                V => vec![(m.with_path(other()), ONE)],
            },
            Element::OamSorter => match m.oam {
                1 => vec![(m.clone(), ONE)],
                -1 => vec![(m.with_path(other()), ONE)],
                oam => {
                    return Err(Error::UnsortableOam {
                        oam,
                        path: m.path.to_string(),
                    })
                }
            },
            Element::DelayLine => vec![(m.clone(), ONE)],
        })
    }
}

/// Photon plus the paths an operation acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub photon: Photon,
    pub paths: Vec<PathLabel>,
}

impl Site {
    pub fn new(photon: Photon, paths: &[&str]) -> Self {
        Site {
            photon,
            paths: paths.iter().map(|p| PathLabel::new(p)).collect(),
        }
    }

    pub fn check_declared(&self, space: &ModeSpace) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::BadPlacement("no paths given".into()));
        }
        for p in &self.paths {
            if !space.has_path(p) {
                return Err(Error::UnknownPath(p.to_string()));
            }
        }
        Ok(())
    }

    pub fn check_pair(&self) -> Result<()> {
        match self.paths.as_slice() {
            [x, y] if x == y => Err(Error::SamePath(x.to_string())),
            [_, _] => Ok(()),
            other => Err(Error::BadPlacement(format!(
                "expected exactly two paths, got {}",
                other.len()
            ))),
        }
    }
}

/// Anything that acts on one photon mode-by-mode.
pub trait PhotonOp {
    /// Checks that the operation's placement is valid in `space`.
    fn check(&self, space: &ModeSpace) -> Result<()>;

    /// Image of `mode`, or `None` when the operation leaves it untouched.
    fn image(&self, mode: &BasisMode, space: &ModeSpace) -> Result<Option<Vec<(BasisMode, C64)>>>;
}

/// An element together with where it is placed.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedElement {
    pub element: Element,
    pub site: Site,
}

impl PhotonOp for PlacedElement {
    fn check(&self, space: &ModeSpace) -> Result<()> {
        self.site.check_declared(space)?;
        if self.element.is_two_path() {
            self.site.check_pair()?;
        }
        Ok(())
    }

    fn image(&self, mode: &BasisMode, space: &ModeSpace) -> Result<Option<Vec<(BasisMode, C64)>>> {
        if !self.site.paths.contains(&mode.path) {
            return Ok(None);
        }
        self.element.image(mode, &self.site.paths, space).map(Some)
    }
}

impl fmt::Display for PlacedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.element.name())?;
        match &self.element {
            Element::Hwp { theta } => write!(f, "({theta})")?,
            Element::Qp { q } => write!(f, "({q})")?,
            Element::Spp { l } => write!(f, "({l:+})")?,
            Element::Dp { alpha } => write!(f, "({alpha})")?,
            Element::Pp { phi, pol } => match pol {
                Some(p) => write!(f, "({phi}, {p}-only)")?,
                None => write!(f, "({phi})")?,
            },
            _ => {}
        }
        let paths: Vec<&str> = self.site.paths.iter().map(|p| p.as_str()).collect();
        write!(f, " @{}[{}]", self.site.photon, paths.join(","))
    }
}

fn map_modes<K: Ord + Clone>(
    amps: &BTreeMap<K, C64>,
    space: &ModeSpace,
    op: &dyn PhotonOp,
    get: impl Fn(&K) -> &BasisMode,
    put: impl Fn(&K, BasisMode) -> K,
) -> Result<BTreeMap<K, C64>> {
    let mut out = BTreeMap::new();
    for (key, amp) in amps {
        match op.image(get(key), space)? {
            None => accumulate(&mut out, key.clone(), *amp),
            Some(img) => {
                for (m, c) in img {
                    accumulate(&mut out, put(key, m), amp * c);
                }
            }
        }
    }
    Ok(prune(out))
}

/// Applies a single-photon operation to a one-photon state.
pub fn apply_photon(op: &dyn PhotonOp, state: &PhotonState) -> Result<PhotonState> {
    op.check(state.space())?;
    let amps = map_modes(state.amplitudes(), state.space(), op, |k| k, |_, m| m)?;
    Ok(PhotonState::from_parts(state.space().clone(), amps))
}

/// Applies a single-photon operation to photon A or B of a pair.
pub fn apply_pair(op: &dyn PhotonOp, photon: Photon, state: &TwoPhotonState) -> Result<TwoPhotonState> {
    op.check(state.space())?;
    let amps = match photon {
        Photon::A => map_modes(state.amplitudes(), state.space(), op, |k| &k.0, |k, m| (m, k.1.clone()))?,
        Photon::B => map_modes(state.amplitudes(), state.space(), op, |k| &k.1, |k, m| (k.0.clone(), m))?,
    };
    Ok(TwoPhotonState::from_parts(state.space().clone(), amps))
}

/// Applies a sequence of placed elements in order to one photon.
pub fn apply_sequence(seq: &[PlacedElement], state: &PhotonState) -> Result<PhotonState> {
    seq.iter().try_fold(state.clone(), |s, e| apply_photon(e, &s))
}
