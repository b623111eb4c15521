//! Dense-matrix assembly of a circuit, used as an independent oracle for
//! the sparse engine.
//!
//! Every stage acts on one photon, so the two-photon unitary factors as
//! `U_A ⊗ U_B`. Each factor is built here from explicit matrix formulas and
//! multiplied stage by stage; a two-photon state stored as the coefficient
//! matrix `Ψ[i][j]` evolves as `U_A · Ψ · U_Bᵀ`.
//!
//! Restricted operations (OAM sorter, O-CPS, OH, SPPM) are assembled as
//! identity outside ℓ = ±1, and columns whose image would leave the
//! truncated space are zero. Unitarity is therefore checked only on the
//! subspace actually reachable from the circuit's input domain.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use ndarray::{s, Array2};
use serde::Serialize;

use crate::elements::{Element, Photon};
use crate::error::{Error, Result};
use crate::gates::{CanonicalGate, Gate};
use crate::state::{AmplitudeMap, BasisMode, ModeSpace, PathLabel, Polarization, TwoPhotonState, C64, I, ONE};

use super::{Circuit, Op};

/// Largest two-photon dimension accepted by [`assemble_unitary`].
pub const DEFAULT_DIMENSION_CAP: usize = 16_384;

/// Largest two-photon dimension [`AssembledUnitary::to_dense`] will expand.
pub const KRONECKER_EXPORT_CAP: usize = 4_096;

type Mat = Array2<C64>;

/// Per-stage unitarity residual `max |S_Rᴴ S_R − 1|`, where `S_R` are the
/// columns of the stage matrix on the subspace reachable before the stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageResidual {
    pub number: usize,
    pub label: String,
    pub photon: Photon,
    pub reachable_dim: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct AssembledUnitary {
    space: Arc<ModeSpace>,
    basis: Vec<BasisMode>,
    pub u_a: Mat,
    pub u_b: Mat,
    pub stage_residuals: Vec<StageResidual>,
}

struct Indexer<'a> {
    space: &'a ModeSpace,
    per_path: usize,
}

impl<'a> Indexer<'a> {
    fn new(space: &'a ModeSpace) -> Self {
        Indexer {
            space,
            per_path: 2 * (2 * space.lmax() as usize + 1),
        }
    }

    fn path_index(&self, p: &PathLabel) -> usize {
        self.space
            .paths()
            .iter()
            .position(|q| q == p)
            .expect("placement was checked")
    }

    fn idx(&self, pol: usize, oam: i32, path: usize) -> Option<usize> {
        let l = self.space.lmax();
        if oam.abs() > l {
            return None;
        }
        Some(path * self.per_path + ((oam + l) as usize) * 2 + pol)
    }
}

fn identity(n: usize) -> Mat {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { ONE } else { C64::new(0.0, 0.0) })
}

/// Writes `jones` on the polarization factor of every OAM level of `paths`.
fn put_jones(m: &mut Mat, ix: &Indexer, paths: &[usize], jones: [[C64; 2]; 2]) {
    let l = ix.space.lmax();
    for &p in paths {
        for oam in -l..=l {
            for col in 0..2 {
                let j = ix.idx(col, oam, p).unwrap();
                for row in 0..2 {
                    m[[ix.idx(row, oam, p).unwrap(), j]] = jones[row][col];
                }
            }
        }
    }
}

/// Clears the columns of `paths` so they can be rewritten.
fn clear_columns(m: &mut Mat, ix: &Indexer, paths: &[usize]) {
    let l = ix.space.lmax();
    for &p in paths {
        for oam in -l..=l {
            for pol in 0..2 {
                let j = ix.idx(pol, oam, p).unwrap();
                m.column_mut(j).fill(C64::new(0.0, 0.0));
            }
        }
    }
}

/// Column-by-column writer for ops that move OAM or path.
fn put_map(
    m: &mut Mat,
    ix: &Indexer,
    paths: &[usize],
    f: impl Fn(usize, i32, usize) -> Vec<(usize, i32, usize, C64)>,
) {
    clear_columns(m, ix, paths);
    let l = ix.space.lmax();
    for &p in paths {
        for oam in -l..=l {
            for pol in 0..2 {
                let j = ix.idx(pol, oam, p).unwrap();
                for (rp, ro, rpath, c) in f(pol, oam, p) {
                    if let Some(i) = ix.idx(rp, ro, rpath) {
                        m[[i, j]] += c;
                    }
                }
            }
        }
    }
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn element_matrix(e: &Element, paths: &[usize], ix: &Indexer, n: usize) -> Mat {
    let mut m = identity(n);
    let s = FRAC_1_SQRT_2;
    let other = |p: usize| if p == paths[0] { paths[1] } else { paths[0] };
    match e {
        Element::Qwp => put_jones(&mut m, ix, paths, [[r(s), I * s], [I * s, r(s)]]),
        Element::Hwp { theta } => {
            let (sn, cs) = (2.0 * theta.radians()).sin_cos();
            put_jones(&mut m, ix, paths, [[r(cs), r(sn)], [r(sn), r(-cs)]]);
        }
        Element::Pp { phi, pol } => {
            let ph = C64::from_polar(1.0, phi.radians());
            let (dh, dv) = match pol {
                None => (ph, ph),
                Some(Polarization::H) => (ph, ONE),
                Some(Polarization::V) => (ONE, ph),
            };
            put_jones(&mut m, ix, paths, [[dh, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), dv]]);
        }
        Element::Qp { q } => {
            // |R,ℓ+2q⟩⟨L,ℓ| + |L,ℓ−2q⟩⟨R,ℓ| with L = (1, i)/√2, R = (1, −i)/√2.
            let lv = [r(s), I * s];
            let rv = [r(s), -I * s];
            let t = q.twice();
            put_map(&mut m, ix, paths, |pol, oam, p| {
                let mut out = Vec::new();
                let bra_l = lv[pol].conj();
                let bra_r = rv[pol].conj();
                for row in 0..2 {
                    out.push((row, oam + t, p, rv[row] * bra_l));
                    out.push((row, oam - t, p, lv[row] * bra_r));
                }
                out
            });
        }
        Element::Spp { l } => put_map(&mut m, ix, paths, |pol, oam, p| vec![(pol, oam + l, p, ONE)]),
        Element::Dp { alpha } => put_map(&mut m, ix, paths, |pol, oam, p| {
            vec![(pol, -oam, p, I * C64::from_polar(1.0, 2.0 * alpha.radians() * oam as f64))]
        }),
        Element::Mirror => put_map(&mut m, ix, paths, |pol, oam, p| vec![(pol, -oam, p, I)]),
        Element::Bs => put_map(&mut m, ix, paths, |pol, oam, p| {
            vec![(pol, oam, p, r(s)), (pol, oam, other(p), I * s)]
        }),
        Element::Pbs => put_map(&mut m, ix, paths, |pol, oam, p| {
            vec![(pol, oam, if pol == 0 { p } else { other(p) }, ONE)]
        }),
        Element::OamSorter => put_map(&mut m, ix, paths, |pol, oam, p| match oam {
            -1 => vec![(pol, oam, other(p), ONE)],
            _ => vec![(pol, oam, p, ONE)],
        }),
        Element::DelayLine => {}
    }
    m
}

fn gate_matrix(g: &CanonicalGate, paths: &[usize], ix: &Indexer, n: usize) -> Mat {
    let mut m = identity(n);
    let other = |p: usize| if p == paths[0] { paths[1] } else { paths[0] };
    match &g.gate {
        Gate::PCos { q } => {
            let t = q.twice();
            put_map(&mut m, ix, paths, |pol, oam, p| {
                vec![(pol, if pol == 0 { oam + t } else { oam - t }, p, ONE)]
            });
        }
        Gate::OCps => put_map(&mut m, ix, paths, |pol, oam, p| match oam {
            -1 => vec![(pol, oam, other(p), ONE)],
            _ => vec![(pol, oam, p, ONE)],
        }),
        Gate::Oh { .. } => {
            let h = r(FRAC_1_SQRT_2);
            put_map(&mut m, ix, paths, |pol, oam, p| match oam {
                1 => vec![(pol, 1, p, h), (pol, -1, p, h)],
                -1 => vec![(pol, 1, p, h), (pol, -1, p, -h)],
                _ => vec![(pol, oam, p, ONE)],
            });
        }
        Gate::DpStage => put_map(&mut m, ix, paths, |pol, oam, p| vec![(pol, -oam, p, ONE)]),
        Gate::Sppm => {}
    }
    m
}

fn op_matrix(op: &Op, ix: &Indexer, n: usize) -> Mat {
    match op {
        Op::Element(e) => {
            let paths: Vec<usize> = e.site.paths.iter().map(|p| ix.path_index(p)).collect();
            element_matrix(&e.element, &paths, ix, n)
        }
        Op::Canonical(g) => {
            let paths: Vec<usize> = g.site.paths.iter().map(|p| ix.path_index(p)).collect();
            gate_matrix(g, &paths, ix, n)
        }
    }
}

/// `a · b` for an `a` with few nonzeros per column.
fn sparse_left_mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = Array2::<C64>::zeros((a.nrows(), b.ncols()));
    for ((i, j), x) in a.indexed_iter() {
        if x.norm() != 0.0 {
            out.row_mut(i).scaled_add(*x, &b.row(j));
        }
    }
    out
}

/// Row indices where any of `cols` has a nonzero entry.
fn support(m: &Mat, cols: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &j in cols {
        for (i, v) in m.column(j).iter().enumerate() {
            if v.norm() > 1e-14 {
                out.insert(i);
            }
        }
    }
    out
}

fn residual_on(m: &Mat, cols: &BTreeSet<usize>) -> f64 {
    let idx: Vec<usize> = cols.iter().copied().collect();
    let mut worst: f64 = 0.0;
    for (a, &ja) in idx.iter().enumerate() {
        for &jb in &idx[a..] {
            let g: C64 = m
                .column(ja)
                .iter()
                .zip(m.column(jb).iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            let target = if ja == jb { ONE } else { C64::new(0.0, 0.0) };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

/// Assembles the circuit with the default dimension cap.
pub fn assemble_unitary(circuit: &Circuit) -> Result<AssembledUnitary> {
    assemble_unitary_with_cap(circuit, DEFAULT_DIMENSION_CAP)
}

pub fn assemble_unitary_with_cap(circuit: &Circuit, cap: usize) -> Result<AssembledUnitary> {
    let space = circuit.space()?;
    let n = space.dimension();
    if n * n > cap {
        return Err(Error::DimensionCap { dim: n * n, cap });
    }
    let ix = Indexer::new(&space);
    let basis: Vec<BasisMode> = space.modes().collect();
    let domain_cols = |photon: Photon| -> BTreeSet<usize> {
        circuit
            .input_domain(photon)
            .iter()
            .map(|m| basis.iter().position(|b| b == m).expect("domain mode in space"))
            .collect()
    };
    let mut u_a = identity(n);
    let mut u_b = identity(n);
    let mut reach_a = domain_cols(Photon::A);
    let mut reach_b = domain_cols(Photon::B);
    let mut stage_residuals = Vec::new();
    for stage in circuit.compile()? {
        let (u, reach) = match stage.photon {
            Photon::A => (&mut u_a, &mut reach_a),
            Photon::B => (&mut u_b, &mut reach_b),
        };
        let mut sm = identity(n);
        for op in &stage.ops {
            op.check_on(&space).map_err(|e| Error::Stage {
                index: stage.number,
                kind: stage.label.clone(),
                source: Box::new(e),
            })?;
            sm = sparse_left_mul(&op_matrix(op, &ix, n), &sm);
        }
        stage_residuals.push(StageResidual {
            number: stage.number,
            label: stage.label.clone(),
            photon: stage.photon,
            reachable_dim: reach.len(),
            residual: residual_on(&sm, reach),
        });
        *reach = support(&sm, reach);
        *u = sparse_left_mul(&sm, u);
    }
    Ok(AssembledUnitary {
        space,
        basis,
        u_a,
        u_b,
        stage_residuals,
    })
}

impl Op {
    fn check_on(&self, space: &ModeSpace) -> Result<()> {
        use crate::elements::PhotonOp;
        self.check(space)
    }
}

impl AssembledUnitary {
    pub fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }

    /// Basis index map shared by both photon factors.
    pub fn basis(&self) -> &[BasisMode] {
        &self.basis
    }

    pub fn photon_dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn max_stage_residual(&self) -> f64 {
        self.stage_residuals
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    /// `(U_A ⊗ U_B)|ψ⟩`.
    pub fn apply(&self, state: &TwoPhotonState) -> Result<TwoPhotonState> {
        if **state.space() != *self.space {
            return Err(Error::DimensionMismatch);
        }
        let n = self.basis.len();
        let pos = |m: &BasisMode| self.basis.binary_search_by(|b| cmp_index(b, m, &self.space));
        let mut psi = Array2::<C64>::zeros((n, n));
        for ((a, b), amp) in state.amplitudes() {
            let i = pos(a).map_err(|_| Error::DimensionMismatch)?;
            let j = pos(b).map_err(|_| Error::DimensionMismatch)?;
            psi[[i, j]] = *amp;
        }
        let out = self.u_a.dot(&psi).dot(&self.u_b.t());
        let mut amps = Vec::new();
        for ((i, j), v) in out.indexed_iter() {
            if v.norm() > 0.0 {
                amps.push(((self.basis[i].clone(), self.basis[j].clone()), *v));
            }
        }
        TwoPhotonState::from_amplitudes(&self.space, amps)
    }

    /// The full Kronecker product `U_A ⊗ U_B`, indexed `i·n + j` for the pair
    /// `(basis[i], basis[j])`. Only available for small spaces.
    pub fn to_dense(&self) -> Result<Mat> {
        let n = self.basis.len();
        if n * n > KRONECKER_EXPORT_CAP {
            return Err(Error::DimensionCap {
                dim: n * n,
                cap: KRONECKER_EXPORT_CAP,
            });
        }
        let mut out = Array2::<C64>::zeros((n * n, n * n));
        for ((ia, ja), a) in self.u_a.indexed_iter() {
            if a.norm() == 0.0 {
                continue;
            }
            let mut block = out.slice_mut(s![ia * n..(ia + 1) * n, ja * n..(ja + 1) * n]);
            block.zip_mut_with(&self.u_b, |o, b| *o = a * b);
        }
        Ok(out)
    }
}

/// Orders modes the way `ModeSpace::modes` lists them: path, OAM, polarization.
fn cmp_index(a: &BasisMode, b: &BasisMode, space: &ModeSpace) -> std::cmp::Ordering {
    let key = |m: &BasisMode| {
        (
            space.paths().iter().position(|p| *p == m.path).unwrap_or(usize::MAX),
            m.oam,
            m.pol as u8,
        )
    };
    key(a).cmp(&key(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{fig2, parse_circuit, propagate};
    use crate::state::{basis_state, max_abs_diff, tensor};

    fn small(stages: &str) -> Circuit {
        parse_circuit(&format!("lmax 1\npaths a\nphoton A\nphoton B\n{stages}")).unwrap()
    }

    #[test]
    fn identity_circuit_gives_identity() {
        let u = assemble_unitary(&small("")).unwrap();
        let d = u.to_dense().unwrap();
        let n = d.nrows();
        assert_eq!(n, 36);
        let id = identity(n);
        assert!(d.iter().zip(id.iter()).all(|(x, y)| (x - y).norm() < 1e-15));
    }

    #[test]
    fn single_hwp_is_jones_tensor_identity() {
        let u = assemble_unitary(&small("stage hwp photon=A paths=a theta=pi/8\n")).unwrap();
        let d = u.to_dense().unwrap();
        let (sn, cs) = (std::f64::consts::FRAC_PI_4).sin_cos();
        let jones = [[cs, sn], [sn, -cs]];
        // basis index within photon A: (oam + 1)·2 + pol; photon B untouched.
        for ia in 0..6 {
            for ja in 0..6 {
                let expect_a = if ia / 2 == ja / 2 { jones[ia % 2][ja % 2] } else { 0.0 };
                for ib in 0..6 {
                    for jb in 0..6 {
                        let expect = if ib == jb { expect_a } else { 0.0 };
                        let got = d[[ia * 6 + ib, ja * 6 + jb]];
                        assert!((got - C64::new(expect, 0.0)).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = assemble_unitary_with_cap(&fig2(), 1000).unwrap_err();
        assert_eq!(err, Error::DimensionCap { dim: 8100, cap: 1000 });
    }

    #[test]
    fn fig2_basis_inputs_agree_with_sparse_engine() {
        let c = fig2().truncated(9);
        let u = assemble_unitary(&c).unwrap();
        assert!(u.max_stage_residual() < 1e-12);
        let sp = c.space().unwrap();
        for ma in c.input_domain(Photon::A) {
            for mb in c.input_domain(Photon::B) {
                let s = tensor(
                    &crate::state::PhotonState::basis(&sp, ma.clone()).unwrap(),
                    &crate::state::PhotonState::basis(&sp, mb.clone()).unwrap(),
                )
                .unwrap();
                let d = max_abs_diff(&u.apply(&s).unwrap(), &propagate(&c, &s).unwrap()).unwrap();
                assert!(d < 1e-12, "{ma} {mb}: {d}");
            }
        }
    }

    #[test]
    fn qp_matrix_matches_circular_rule() {
        let c = small("stage qp photon=A paths=a q=1/2\n");
        let u = assemble_unitary(&c.with_lmax(2)).unwrap();
        let sp = u.space().clone();
        let h = basis_state(&sp, Polarization::H, 0, "a").unwrap();
        let out = u.apply(&tensor(&h, &h).unwrap()).unwrap();
        let sparse = propagate(&c.with_lmax(2), &tensor(&h, &h).unwrap()).unwrap();
        assert!(max_abs_diff(&out, &sparse).unwrap() < 1e-15);
    }
}
