//! Browser bindings for the analyzer demo page.
//!
//! Every export returns a JSON string; errors come back as `{"error": "..."}`.

use std::f64::consts::PI;

use hyperbsa::circuit::{fig2, StageOp};
use hyperbsa::elements::{apply_photon, Angle, Element, Photon};
use hyperbsa::measurement::DetectorId;
use hyperbsa::state::{AmplitudeMap, BasisMode, ModeSpace, PhotonState, Polarization, C64};
use hyperbsa::{Analyzer, BellLabel, Implementation};
use serde_json::{json, Value};
use std::sync::Arc;
use wasm_bindgen::prelude::*;

fn wrap(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn parse_impl(s: &str) -> Result<Implementation, String> {
    s.parse()
}

/// Detector order used for the grid axes: origin, then OAM sign, then polarization.
fn axis(origins: &[hyperbsa::PathLabel]) -> Vec<DetectorId> {
    let mut out = Vec::new();
    for o in origins {
        for sign in [1, -1] {
            for pol in Polarization::BOTH {
                out.push(DetectorId::new(sign, pol, o.clone()));
            }
        }
    }
    out
}

/// Coincidence grid (A detectors × B detectors) for one Bell input.
pub fn analyze_json(label: &str, implementation: &str) -> Result<Value, String> {
    let label: BellLabel = label.parse()?;
    let an = Analyzer::fig2(parse_impl(implementation)?).map_err(|e| e.to_string())?;
    let dist = an.analyze(label).map_err(|e| e.to_string())?;
    let (oa, ob) = an.origins();
    let (rows, cols) = (axis(&oa), axis(&ob));
    let mut cells = Vec::new();
    let mut labels = Vec::new();
    let mut success = 0.0;
    for a in &rows {
        let mut prow = Vec::new();
        let mut lrow = Vec::new();
        for b in &cols {
            let pattern = hyperbsa::CoincidencePattern::new(a.clone(), b.clone());
            let p = dist.probability(&pattern);
            let guess = an.classify(&pattern).map_err(|e| e.to_string())?;
            if guess == label {
                success += p;
            }
            prow.push(p);
            lrow.push(guess.as_str());
        }
        cells.push(prow);
        labels.push(lrow);
    }
    Ok(json!({
        "input": label.as_str(),
        "implementation": implementation,
        "rows": rows.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "cols": cols.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "probabilities": cells,
        "labels": labels,
        "success_probability": success,
    }))
}

/// Success probability, averaged over the four inputs, when both final
/// half-wave plates sit at `theta` instead of π/8.
pub fn success_at(theta: f64) -> Result<f64, String> {
    let mut circuit = fig2();
    for s in &mut circuit.stages {
        if let StageOp::Element(Element::Hwp { theta: t }) = &mut s.op {
            *t = Angle::Radians(theta);
        }
    }
    let an = Analyzer::new(circuit, hyperbsa::ClassificationTable::published().map_err(|e| e.to_string())?);
    let mut total = 0.0;
    for label in BellLabel::ALL {
        for (pattern, p) in an.analyze(label).map_err(|e| e.to_string())?.entries() {
            if an.classify(pattern).map_err(|e| e.to_string())? == label {
                total += p / 4.0;
            }
        }
    }
    Ok(total)
}

/// `steps + 1` samples of [`success_at`] over θ ∈ [0, π/2].
pub fn hwp_sweep_json(steps: u32) -> Result<Value, String> {
    let steps = steps.clamp(1, 720);
    let mut points = Vec::new();
    for k in 0..=steps {
        let theta = PI / 2.0 * k as f64 / steps as f64;
        points.push(json!({ "theta": theta, "success": success_at(theta)? }));
    }
    Ok(json!({ "points": points }))
}

fn input_polarization(name: &str) -> Result<(C64, C64), String> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match name {
        "H" => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        "V" => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        "D" => (C64::new(s, 0.0), C64::new(s, 0.0)),
        "A" => (C64::new(s, 0.0), C64::new(-s, 0.0)),
        "L" => (C64::new(s, 0.0), C64::new(0.0, s)),
        "R" => (C64::new(s, 0.0), C64::new(0.0, -s)),
        other => return Err(format!("unknown polarization `{other}` (H, V, D, A, L or R)")),
    })
}

/// Sends a polarization state with OAM `l` through one element and reports
/// the output amplitudes by (polarization, OAM).
pub fn explore_json(element: &str, angle_deg: f64, input: &str, l: i32) -> Result<Value, String> {
    let a = Angle::Radians(angle_deg.to_radians());
    let e = match element {
        "qwp" => Element::Qwp,
        "hwp" => Element::Hwp { theta: a },
        "qp" => Element::Qp { q: hyperbsa::HalfInt::HALF },
        "dp" => Element::Dp { alpha: a },
        "pp" => Element::Pp { phi: a, pol: Some(Polarization::V) },
        "mirror" => Element::Mirror,
        other => return Err(format!("unknown element `{other}`")),
    };
    let space = Arc::new(ModeSpace::new(4, ["x"]).map_err(|e| e.to_string())?);
    let x = space.path("x").map_err(|e| e.to_string())?;
    let (h, v) = input_polarization(input)?;
    let psi = PhotonState::from_amplitudes(
        &space,
        [
            (BasisMode::new(Polarization::H, l, x.clone()), h),
            (BasisMode::new(Polarization::V, l, x), v),
        ],
    )
    .map_err(|e| e.to_string())?;
    let out = apply_photon(&e.at(Photon::A, &["x"]), &psi).map_err(|e| e.to_string())?;
    let terms: Vec<Value> = out
        .amplitudes()
        .iter()
        .map(|(m, c)| {
            json!({
                "pol": m.pol.to_string(),
                "oam": m.oam,
                "re": c.re,
                "im": c.im,
                "probability": c.norm_sqr(),
            })
        })
        .collect();
    Ok(json!({ "element": element, "input": input, "oam": l, "output": terms }))
}

#[wasm_bindgen]
pub fn analyze(label: &str, implementation: &str) -> String {
    wrap(analyze_json(label, implementation))
}

#[wasm_bindgen]
pub fn hwp_sweep(steps: u32) -> String {
    wrap(hwp_sweep_json(steps))
}

#[wasm_bindgen]
pub fn explore(element: &str, angle_deg: f64, input: &str, l: i32) -> String {
    wrap(explore_json(element, angle_deg, input, l))
}
