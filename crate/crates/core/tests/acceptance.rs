//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use hyperbsa::bsa::{Analyzer, Checkpoint};
use hyperbsa::circuit::{assemble_unitary, parse_circuit, propagate, FIG2_SOURCE};
use hyperbsa::elements::{apply_photon, apply_sequence, Angle, Element, HalfInt, Photon, PlacedElement, Site};
use hyperbsa::gates::{
    decompose, gate_equiv, o_cps_walkthrough, oh_element_rows, CanonicalGate, Gate, Implementation, PhotonMap,
};
use hyperbsa::measurement::{sppm_project, CoincidencePattern, DetectorId};
use hyperbsa::state::{AmplitudeMap, BasisMode, ModeSpace, PathLabel, PhotonState, Polarization, TwoPhotonState, C64};
use hyperbsa::BellLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

const LABELS: [BellLabel; 4] = [BellLabel::PhiPlus, BellLabel::PhiMinus, BellLabel::PsiPlus, BellLabel::PsiMinus];

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn pol(ch: char) -> Polarization {
    match ch {
        'H' => Polarization::H,
        'V' => Polarization::V,
        _ => panic!("bad polarization {ch}"),
    }
}

/// `+1Ha1` style detector tokens.
fn detector(tok: &str) -> DetectorId {
    let sign = match &tok[..2] {
        "+1" => 1,
        "-1" => -1,
        other => panic!("bad OAM sign {other}"),
    };
    DetectorId::new(sign, pol(tok.as_bytes()[2] as char), PathLabel::new(&tok[3..]))
}

fn published_rows() -> BTreeMap<BellLabel, BTreeSet<CoincidencePattern>> {
    let mut rows: BTreeMap<BellLabel, BTreeSet<CoincidencePattern>> = BTreeMap::new();
    for line in read_fixture("outcomes.txt").lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let label: BellLabel = f[0].parse().unwrap();
        rows.entry(label)
            .or_default()
            .insert(CoincidencePattern::new(detector(f[1]), detector(f[2])));
    }
    rows
}

/// `max |x − c·y|` with the unit scalar `c` chosen to align `y` with `x`.
fn phase_distance<S: AmplitudeMap>(x: &S, y: &S) -> f64 {
    let mut ip = c(0.0, 0.0);
    for (k, a) in y.amplitudes() {
        ip += a.conj() * x.amplitude(k);
    }
    let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { c(1.0, 0.0) };
    let mut keys: BTreeSet<S::Key> = x.amplitudes().keys().cloned().collect();
    keys.extend(y.amplitudes().keys().cloned());
    keys.iter()
        .map(|k| (x.amplitude(k) - y.amplitude(k) * phase).norm())
        .fold(0.0, f64::max)
}

fn fidelity<S: AmplitudeMap>(x: &S, y: &S) -> f64 {
    let mut ip = c(0.0, 0.0);
    for (k, a) in y.amplitudes() {
        ip += a.conj() * x.amplitude(k);
    }
    ip.norm_sqr() / (x.norm_sqr() * y.norm_sqr())
}

fn total_variation(p: &BTreeMap<CoincidencePattern, f64>, q: &BTreeMap<CoincidencePattern, f64>) -> f64 {
    let keys: BTreeSet<&CoincidencePattern> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

fn as_map(d: &hyperbsa::OutcomeDistribution) -> BTreeMap<CoincidencePattern, f64> {
    d.entries().iter().cloned().collect()
}

// 1. Outcome distributions.
fn outcome_table() -> Outcome {
    let rows = published_rows();
    let start = Instant::now();
    let an = Analyzer::fig2(Implementation::Canonical).map_err(e2s)?;
    let dists: Vec<_> = LABELS.iter().map(|&l| an.analyze(l)).collect::<Result<_, _>>().map_err(e2s)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst_in: f64 = 0.0;
    let mut worst_out: f64 = 0.0;
    for (label, dist) in LABELS.iter().zip(&dists) {
        let row = &rows[label];
        if row.len() != 16 {
            return Err(format!("{label}: transcription has {} patterns", row.len()));
        }
        let support: BTreeSet<CoincidencePattern> = dist.support(1e-10).into_iter().cloned().collect();
        if &support != row {
            return Err(format!("{label}: support differs from the published row"));
        }
        for (p, prob) in dist.entries() {
            if row.contains(p) {
                worst_in = worst_in.max((prob - 1.0 / 16.0).abs());
            } else {
                worst_out = worst_out.max(*prob);
            }
        }
    }
    if worst_in > 1e-10 || worst_out > 1e-10 {
        return Err(format!("|p - 1/16| = {worst_in:.2e}, outside = {worst_out:.2e}"));
    }
    if elapsed >= 1.0 {
        return Err(format!("took {elapsed:.3} s"));
    }
    Ok(format!(
        "4 inputs x 16 patterns at 1/16 (max dev {worst_in:.1e}, outside {worst_out:.1e}) in {:.1} ms",
        elapsed * 1e3
    ))
}

// 2. Deterministic discrimination.
fn discrimination() -> Outcome {
    let rows = published_rows();
    let all: BTreeSet<CoincidencePattern> = rows.values().flatten().cloned().collect();
    let sum: usize = rows.values().map(|r| r.len()).sum();
    if sum != 64 || all.len() != 64 {
        return Err(format!("published rows: {sum} entries, {} distinct", all.len()));
    }
    let mut success = 0.0;
    for imp in [Implementation::Canonical, Implementation::Decomposed] {
        let an = Analyzer::fig2(imp).map_err(e2s)?;
        let (oa, ob) = an.origins();
        let universe: BTreeSet<CoincidencePattern> = hyperbsa::measurement::enumerate_patterns(&oa, &ob)
            .into_iter()
            .collect();
        if universe != all {
            return Err("published rows do not cover every detector pair".into());
        }
        for label in LABELS {
            if an.table.preimage(label) != rows[&label] {
                return Err(format!("classifier preimage of {label} differs from the published row"));
            }
        }
        let mut p_ok = 0.0;
        for label in LABELS {
            for (p, prob) in an.analyze(label).map_err(e2s)?.entries() {
                if an.classify(p).map_err(e2s)? == label {
                    p_ok += prob / 4.0;
                }
            }
        }
        if (p_ok - 1.0).abs() > 1e-10 {
            return Err(format!("{imp}: success probability {p_ok:.12}"));
        }
        success = p_ok;
    }
    Ok(format!("success probability {success:.12} (both implementations); 4x16 rows disjoint, cover 64"))
}

fn reference(line: &str, space: &Arc<ModeSpace>) -> TwoPhotonState {
    let f: Vec<&str> = line.split_whitespace().collect();
    let pairs = match f[2] {
        "parallel" => [("a1", "a2"), ("b1", "b2")],
        "crossed" => [("a1", "b2"), ("b1", "a2")],
        other => panic!("bad path factor {other}"),
    };
    let mode = |s: &str, path: &str| {
        let p = pol(s.as_bytes()[0] as char);
        let l: i32 = s[1..].parse().unwrap();
        BasisMode::new(p, l, space.path(path).unwrap())
    };
    let mut amps = Vec::new();
    for t in &f[3..] {
        let sign = if t.starts_with('-') { -1.0 } else { 1.0 };
        let (a, b) = t[1..].split_once(':').unwrap();
        for (pa, pb) in pairs {
            amps.push(((mode(a, pa), mode(b, pb)), c(sign, 0.0)));
        }
    }
    TwoPhotonState::from_amplitudes(space, amps).unwrap()
}

// 3. Stage contracts.
fn stage_contracts() -> Outcome {
    let text = read_fixture("stages.txt");
    let mut worst: f64 = 1.0;
    let mut checked = 0;
    for imp in [Implementation::Canonical, Implementation::Decomposed] {
        let an = Analyzer::fig2(imp).map_err(e2s)?;
        let space = an.space().map_err(e2s)?;
        for label in LABELS {
            let snaps = an.stage_states(label).map_err(e2s)?;
            for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f[1].parse::<BellLabel>().unwrap() != label {
                    continue;
                }
                let cp = Checkpoint::ALL
                    .into_iter()
                    .find(|cp| cp.stage_kind() == f[0])
                    .ok_or_else(|| format!("unknown checkpoint {}", f[0]))?;
                let snap = snaps
                    .iter()
                    .find(|s| s.checkpoint == cp)
                    .ok_or_else(|| format!("no {} stage", f[0]))?;
                let fid = fidelity(&snap.state, &reference(line, &space));
                worst = worst.min(fid);
                checked += 1;
                if fid < 1.0 - 1e-10 {
                    return Err(format!("{imp} {label} after {}: fidelity {fid:.12}", f[0]));
                }
            }
        }
    }
    if checked != 40 {
        return Err(format!("checked {checked} states, expected 40"));
    }
    Ok(format!("5 checkpoints x 4 inputs x 2 implementations, min fidelity {worst:.12}"))
}

fn single_space(lmax: i32, paths: &[&str]) -> Arc<ModeSpace> {
    Arc::new(ModeSpace::new(lmax, paths.iter().copied()).unwrap())
}

fn ket(space: &Arc<ModeSpace>, terms: &[(C64, char, i32, &str)]) -> PhotonState {
    PhotonState::from_amplitudes(
        space,
        terms
            .iter()
            .map(|&(a, p, l, path)| (BasisMode::new(pol(p), l, space.path(path).unwrap()), a)),
    )
    .unwrap()
}

fn circ(space: &Arc<ModeSpace>, left: bool, l: i32, path: &str) -> PhotonState {
    let s = FRAC_1_SQRT_2;
    let v = if left { c(0.0, s) } else { c(0.0, -s) };
    ket(space, &[(c(s, 0.0), 'H', l, path), (v, 'V', l, path)])
}

/// Checks `rows` (input, expected) against `map`. With `joint`, one global
/// phase must fit every row; otherwise each row may carry its own.
fn truth_table(
    name: &str,
    map: &dyn Fn(&PhotonState) -> PhotonState,
    rows: &[(PhotonState, PhotonState)],
    joint: bool,
) -> Result<f64, String> {
    let mut phase: Option<C64> = None;
    let mut worst: f64 = 0.0;
    for (i, (input, expect)) in rows.iter().enumerate() {
        let got = map(input);
        let d = if joint {
            let mut ip = c(0.0, 0.0);
            for (k, a) in expect.amplitudes() {
                ip += a.conj() * got.amplitude(k);
            }
            let ph = *phase.get_or_insert(ip / ip.norm().max(1e-300));
            let scaled = expect.scaled(ph);
            let mut keys: BTreeSet<BasisMode> = got.amplitudes().keys().cloned().collect();
            keys.extend(scaled.amplitudes().keys().cloned());
            keys.iter()
                .map(|k| (got.amplitude(k) - scaled.amplitude(k)).norm())
                .fold(0.0, f64::max)
        } else {
            phase_distance(&got, expect)
        };
        if d > 1e-12 {
            return Err(format!("{name}: row {} off by {d:.2e}", i + 1));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

fn element(e: Element, paths: &[&str]) -> impl Fn(&PhotonState) -> PhotonState {
    let placed = e.at(Photon::A, paths);
    move |s: &PhotonState| apply_photon(&placed, s).unwrap()
}

fn canonical(g: Gate, paths: &[&str]) -> impl Fn(&PhotonState) -> PhotonState {
    let gate = CanonicalGate::new(g, Site::new(Photon::A, paths));
    move |s: &PhotonState| gate.run(s).unwrap()
}

// 4. Gate truth tables.
fn truth_tables() -> Outcome {
    let sp = single_space(4, &["a", "b"]);
    let one = c(1.0, 0.0);
    let s = FRAC_1_SQRT_2;
    let mut rows_checked = 0;
    let mut run = |name: &str, map: &dyn Fn(&PhotonState) -> PhotonState, rows: Vec<(PhotonState, PhotonState)>, joint: bool| {
        rows_checked += rows.len();
        truth_table(name, map, &rows, joint)
    };

    // QWP: H→L, L→V, V→R, R→H, each up to its own phase.
    let mut rows = Vec::new();
    for l in -2..=2 {
        let h = ket(&sp, &[(one, 'H', l, "a")]);
        let v = ket(&sp, &[(one, 'V', l, "a")]);
        rows.push((h.clone(), circ(&sp, true, l, "a")));
        rows.push((circ(&sp, true, l, "a"), v.clone()));
        rows.push((v, circ(&sp, false, l, "a")));
        rows.push((circ(&sp, false, l, "a"), h));
    }
    run("qwp", &element(Element::Qwp, &["a"]), rows, false)?;

    // QP(q): L,ℓ → R,ℓ+2q and R,ℓ → L,ℓ−2q.
    for twice in [1, 2] {
        let mut rows = Vec::new();
        for l in -1..=1 {
            rows.push((circ(&sp, true, l, "a"), circ(&sp, false, l + twice, "a")));
            rows.push((circ(&sp, false, l, "a"), circ(&sp, true, l - twice, "a")));
        }
        run("qp", &element(Element::Qp { q: HalfInt::from_twice(twice) }, &["a"]), rows, true)?;
    }

    // P-COS(q): H,ℓ → H,ℓ+2q and V,ℓ → V,ℓ−2q.
    for twice in [1, 2] {
        let mut rows = Vec::new();
        for path in ["a", "b"] {
            for l in -1..=1 {
                rows.push((ket(&sp, &[(one, 'H', l, path)]), ket(&sp, &[(one, 'H', l + twice, path)])));
                rows.push((ket(&sp, &[(one, 'V', l, path)]), ket(&sp, &[(one, 'V', l - twice, path)])));
            }
        }
        run(
            "p_cos",
            &canonical(Gate::PCos { q: HalfInt::from_twice(twice) }, &["a", "b"]),
            rows,
            true,
        )?;
    }

    // O-CPS: +1 keeps its path, −1 switches.
    let mut rows = Vec::new();
    for p in ['H', 'V'] {
        for (from, other) in [("a", "b"), ("b", "a")] {
            rows.push((ket(&sp, &[(one, p, 1, from)]), ket(&sp, &[(one, p, 1, from)])));
            rows.push((ket(&sp, &[(one, p, -1, from)]), ket(&sp, &[(one, p, -1, other)])));
        }
    }
    run("o_cps", &canonical(Gate::OCps, &["a", "b"]), rows, true)?;

    // HWP(π/8) and HWP(π/4).
    let mut rows = Vec::new();
    let mut swap = Vec::new();
    for l in -2..=2 {
        rows.push((
            ket(&sp, &[(one, 'H', l, "a")]),
            ket(&sp, &[(c(s, 0.0), 'H', l, "a"), (c(s, 0.0), 'V', l, "a")]),
        ));
        rows.push((
            ket(&sp, &[(one, 'V', l, "a")]),
            ket(&sp, &[(c(s, 0.0), 'H', l, "a"), (c(-s, 0.0), 'V', l, "a")]),
        ));
        swap.push((ket(&sp, &[(one, 'H', l, "a")]), ket(&sp, &[(one, 'V', l, "a")])));
        swap.push((ket(&sp, &[(one, 'V', l, "a")]), ket(&sp, &[(one, 'H', l, "a")])));
    }
    run("hwp(pi/8)", &element(Element::Hwp { theta: Angle::pi_frac(1, 8) }, &["a"]), rows, true)?;
    run("hwp(pi/4)", &element(Element::Hwp { theta: Angle::pi_frac(1, 4) }, &["a"]), swap, true)?;

    // OH: +1 → (+1 + −1)/√2, −1 → (+1 − −1)/√2.
    let mut rows = Vec::new();
    for p in ['H', 'V'] {
        for path in ["a", "b"] {
            rows.push((
                ket(&sp, &[(one, p, 1, path)]),
                ket(&sp, &[(c(s, 0.0), p, 1, path), (c(s, 0.0), p, -1, path)]),
            ));
            rows.push((
                ket(&sp, &[(one, p, -1, path)]),
                ket(&sp, &[(c(s, 0.0), p, 1, path), (c(-s, 0.0), p, -1, path)]),
            ));
        }
    }
    run("oh", &canonical(Gate::Oh { aux: None }, &["a", "b"]), rows, true)?;

    // DP(−π/4): H,+1 → H,−1 and V,−1 → V,+1 row by row; the DP stage
    // flips ℓ with one common phase.
    let rows = vec![
        (ket(&sp, &[(one, 'H', 1, "a")]), ket(&sp, &[(one, 'H', -1, "a")])),
        (ket(&sp, &[(one, 'V', -1, "a")]), ket(&sp, &[(one, 'V', 1, "a")])),
    ];
    run("dp(-pi/4)", &element(Element::Dp { alpha: Angle::pi_frac(-1, 4) }, &["a"]), rows, false)?;
    let mut rows = Vec::new();
    for p in ['H', 'V'] {
        for l in [1, -1] {
            rows.push((ket(&sp, &[(one, p, l, "a")]), ket(&sp, &[(one, p, -l, "a")])));
        }
    }
    run("dp_stage", &canonical(Gate::DpStage, &["a"]), rows, true)?;

    // OH element rows with the documented V-only phase plate.
    let report = oh_element_rows().map_err(e2s)?;
    let literal = report.rows.iter().map(|r| r.literal_fidelity).fold(1.0, f64::min);
    for r in &report.rows {
        if r.calibrated_fidelity < 1.0 - 1e-12 || r.canonical_fidelity < 1.0 - 1e-12 {
            return Err(format!("OH row {}: fidelity {:.12}", r.input, r.calibrated_fidelity));
        }
    }
    Ok(format!(
        "{rows_checked} basis rows exact to 1e-12; 4 OH element rows pass with {} (literal fidelity {literal:.3})",
        report.calibration
    ))
}

// 5. Decomposition equivalence and the O-CPS walkthrough.
fn decompositions() -> Outcome {
    let mut done = Vec::new();
    let sp = single_space(4, &["a", "b", "x"]);
    let site = Site::new(Photon::A, &["a", "b"]);
    let gates = [
        Gate::PCos { q: HalfInt::HALF },
        Gate::PCos { q: HalfInt::from_twice(2) },
        Gate::OCps,
        Gate::Oh { aux: Some(PathLabel::new("x")) },
        Gate::DpStage,
    ];
    for g in gates {
        let d = decompose(&g, &site).map_err(e2s)?;
        let canon = CanonicalGate::new(g.clone(), site.clone());
        if !gate_equiv(&d, &canon, &canon.domain(&sp), &sp, 1e-12).map_err(e2s)? {
            return Err(format!("{} decomposition differs from its truth table", g.name()));
        }
        done.push(format!("{}[{} cal]", g.name(), d.calibration().len()));
    }
    let s = FRAC_1_SQRT_2;
    for p in [Polarization::H, Polarization::V] {
        for (from, other) in [("a", "b"), ("b", "a")] {
            let steps = o_cps_walkthrough(p, from).map_err(e2s)?;
            let space = steps[0].state.space().clone();
            let pc = if p == Polarization::H { 'H' } else { 'V' };
            let expect = [
                ket(&space, &[(c(s, 0.0), pc, 1, from), (c(s, 0.0), pc, -1, from)]),
                ket(&space, &[(c(s, 0.0), pc, 2, from), (c(s, 0.0), pc, 0, from)]),
                ket(&space, &[(c(s, 0.0), pc, 2, from), (c(s, 0.0), pc, 0, other)]),
                ket(&space, &[(c(s, 0.0), pc, 1, from), (c(s, 0.0), pc, -1, other)]),
            ];
            for (w, e) in steps.iter().zip(&expect) {
                let f = fidelity(&w.state, e);
                if f < 1.0 - 1e-12 {
                    return Err(format!("walkthrough {p} from {from}, {}: fidelity {f:.12}", w.label));
                }
            }
        }
    }
    Ok(format!("{} equivalent at 1e-12; walkthrough matches at all 4 points", done.join(", ")))
}

fn random_pair_state(rng: &mut ChaCha8Rng, space: &Arc<ModeSpace>, da: &[BasisMode], db: &[BasisMode]) -> TwoPhotonState {
    let mut amps = Vec::new();
    for a in da {
        for b in db {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            amps.push(((a.clone(), b.clone()), c(re, im)));
        }
    }
    TwoPhotonState::from_amplitudes(space, amps).unwrap().normalized().unwrap()
}

// 6. Dense oracle.
fn oracle() -> Outcome {
    let mut worst_tv: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    for imp in [Implementation::Canonical, Implementation::Decomposed] {
        let an = Analyzer::fig2(imp).map_err(e2s)?;
        let u = assemble_unitary(&an.circuit).map_err(e2s)?;
        let (oa, ob) = an.origins();
        for label in LABELS {
            let tv = total_variation(
                &as_map(&an.analyze(label).map_err(e2s)?),
                &as_map(&an.analyze_dense(label, &u).map_err(e2s)?),
            );
            worst_tv = worst_tv.max(tv);
        }
        let space = an.space().map_err(e2s)?;
        let da = an.circuit.input_domain(Photon::A);
        let db = an.circuit.input_domain(Photon::B);
        for _ in 0..50 {
            let v = random_pair_state(&mut rng, &space, &da, &db);
            let sparse = sppm_project(&propagate(&an.circuit, &v).map_err(e2s)?, &oa, &ob).map_err(e2s)?;
            let dense = sppm_project(&u.apply(&v).map_err(e2s)?, &oa, &ob).map_err(e2s)?;
            worst_tv = worst_tv.max(total_variation(&as_map(&sparse), &as_map(&dense)));
        }
        worst_res = worst_res.max(u.max_stage_residual());
    }
    if worst_tv > 1e-10 || worst_res > 1e-10 {
        return Err(format!("TV {worst_tv:.2e}, unitarity residual {worst_res:.2e}"));
    }
    Ok(format!(
        "TV <= {worst_tv:.1e} on 4 inputs + 50 random vectors per implementation; stage residual <= {worst_res:.1e}"
    ))
}

fn random_photon(rng: &mut ChaCha8Rng, space: &Arc<ModeSpace>, paths: &[&str], oams: &[i32]) -> PhotonState {
    let mut amps = Vec::new();
    for path in paths.iter().map(|p| space.path(p).unwrap()) {
        for p in Polarization::BOTH {
            for &l in oams {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                amps.push((BasisMode::new(p, l, path.clone()), c(re, im)));
            }
        }
    }
    PhotonState::from_amplitudes(space, amps).unwrap().normalized().unwrap()
}

fn max_diff(x: &PhotonState, y: &PhotonState) -> f64 {
    let mut keys: BTreeSet<BasisMode> = x.amplitudes().keys().cloned().collect();
    keys.extend(y.amplitudes().keys().cloned());
    keys.iter()
        .map(|k| (x.amplitude(k) - y.amplitude(k)).norm())
        .fold(0.0, f64::max)
}

// 7. Element algebra.
fn element_algebra() -> Outcome {
    let sp = single_space(8, &["x", "y"]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let on = |e: Element| -> PlacedElement {
        if e.is_two_path() {
            e.at(Photon::A, &["x", "y"])
        } else {
            e.at(Photon::A, &["x"])
        }
    };
    let apply = |seq: &[PlacedElement], s: &PhotonState| apply_sequence(seq, s).map_err(e2s);
    let mut drift: f64 = 0.0;
    let mut algebra: f64 = 0.0;
    for _ in 0..1000 {
        let theta = rng.random_range(-PI..PI);
        let pol_sel = match rng.random_range(0..3) {
            0 => None,
            1 => Some(Polarization::H),
            _ => Some(Polarization::V),
        };
        let elements = [
            Element::Qwp,
            Element::Hwp { theta: Angle::Radians(theta) },
            Element::Qp { q: HalfInt::from_twice(rng.random_range(-3..=3)) },
            Element::Spp { l: rng.random_range(-3..=3) },
            Element::Dp { alpha: Angle::Radians(theta) },
            Element::Pp { phi: Angle::Radians(theta), pol: pol_sel },
            Element::Mirror,
            Element::Bs,
            Element::Pbs,
            Element::DelayLine,
        ];
        let psi = random_photon(&mut rng, &sp, &["x", "y"], &[-2, -1, 0, 1, 2]);
        for e in elements {
            let out = apply(&[on(e)], &psi)?;
            drift = drift.max((out.norm_sqr().sqrt() - 1.0).abs());
        }
        let sorted = random_photon(&mut rng, &sp, &["x", "y"], &[-1, 1]);
        let out = apply(&[on(Element::OamSorter)], &sorted)?;
        drift = drift.max((out.norm_sqr().sqrt() - 1.0).abs());

        // Single-path identities act on path x only.
        let psi = random_photon(&mut rng, &sp, &["x"], &[-2, -1, 0, 1, 2]);
        let (a, b) = (rng.random_range(-3..=3), rng.random_range(-3..=3));
        let two = apply(&[on(Element::Spp { l: a }), on(Element::Spp { l: b })], &psi)?;
        let one = apply(&[on(Element::Spp { l: a + b })], &psi)?;
        algebra = algebra.max(max_diff(&two, &one));

        let qwp4 = apply(&vec![on(Element::Qwp); 4], &psi)?;
        algebra = algebra.max(phase_distance(&qwp4, &psi));

        let hwp = on(Element::Hwp { theta: Angle::Radians(theta) });
        algebra = algebra.max(max_diff(&apply(&[hwp.clone(), hwp], &psi)?, &psi));

        let dp = on(Element::Dp { alpha: Angle::Radians(theta) });
        let dp2 = apply(&[dp.clone(), dp], &psi)?;
        algebra = algebra.max(max_diff(&dp2, &psi.scaled(c(-1.0, 0.0))));
    }
    let x = ket(&sp, &[(c(1.0, 0.0), 'H', 1, "x")]);
    let iy = ket(&sp, &[(c(0.0, 1.0), 'H', 1, "y")]);
    let bs = on(Element::Bs);
    algebra = algebra.max(max_diff(&apply(&[bs.clone(), bs], &x)?, &iy));
    if drift > 1e-12 || algebra > 1e-12 {
        return Err(format!("norm drift {drift:.2e}, algebra residual {algebra:.2e}"));
    }
    Ok(format!(
        "1000 random states: norm drift {drift:.1e}; SPP additivity, QWP^4, HWP^2, DP^2 = -1, BS^2 within {algebra:.1e}"
    ))
}

// 8. Parser robustness.
fn parser() -> Outcome {
    let first = parse_circuit(FIG2_SOURCE).map_err(e2s)?;
    let printed = first.to_string();
    let second = parse_circuit(&printed).map_err(|e| format!("reparse: {e}"))?;
    if first != second {
        return Err("canonical print does not round-trip".into());
    }
    let dir = fixture("malformed");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(e2s)?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "circ"))
        .collect();
    files.sort();
    if files.len() != 10 {
        return Err(format!("expected 10 malformed fixtures, found {}", files.len()));
    }
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(e2s)?;
        let lines = text.lines().count();
        let result = std::panic::catch_unwind(|| parse_circuit(&text));
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        match result {
            Err(_) => return Err(format!("{name}: parser panicked")),
            Ok(Ok(_)) => return Err(format!("{name}: accepted")),
            Ok(Err(e)) => {
                if e.line == 0 || e.line > lines + 1 || e.column == 0 {
                    return Err(format!("{name}: bad position {}:{}", e.line, e.column));
                }
            }
        }
    }
    Ok(format!("round trip exact; {} malformed documents give positioned diagnostics", files.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("outcome-table", outcome_table),
        ("deterministic-discrimination", discrimination),
        ("stage-contracts", stage_contracts),
        ("gate-truth-tables", truth_tables),
        ("decomposition-equivalence", decompositions),
        ("oracle-equivalence", oracle),
        ("element-algebra", element_algebra),
        ("parser-robustness", parser),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
