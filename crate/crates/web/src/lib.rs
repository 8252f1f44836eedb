//! Browser bindings: phase curves, Levinson verdicts and wavefunctions for a
//! potential given as a JSON spec. Every function returns a JSON string.

use levinson_core::levinson::{self, VerdictConfig};
use levinson_core::potentials::PotentialSpec;
use levinson_core::{solver, spectral, suite, Potential, SolverOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse(spec: &str) -> Result<Potential, JsError> {
    PotentialSpec::from_json(spec).and_then(|s| s.build()).map_err(js_err)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(js_err)
}

/// Spec JSON of a built-in fixture.
#[wasm_bindgen]
pub fn fixture_spec(name: &str, l: u32, g: f64) -> Result<String, JsError> {
    let p = suite::fixture(name, Some(l), Some(g)).map_err(js_err)?;
    to_json(&PotentialSpec::from(&p))
}

#[derive(Serialize)]
struct CurveView {
    k: Vec<f64>,
    phi_t: Vec<f64>,
    abs_b2: Vec<f64>,
    rho: Vec<f64>,
    b0: f64,
    sum_rule: f64,
    max_unitarity_residual: f64,
}

/// Forward phase, reflection probability and smooth density on a geometric grid.
#[wasm_bindgen]
pub fn phase_curve(spec: &str, k_min: f64, k_max: f64, n_k: usize) -> Result<String, JsError> {
    let p = parse(spec)?;
    let cfg = VerdictConfig {
        k_min,
        k_max,
        n_k,
        ..VerdictConfig::default()
    };
    let (curve, _, density) = levinson::spectral_density(&p, &cfg).map_err(js_err)?;
    to_json(&CurveView {
        abs_b2: curve.b.iter().map(|b| b.norm_sqr()).collect(),
        max_unitarity_residual: curve.max_unitarity_residual(),
        sum_rule: levinson::sum_rule_integral(&density),
        b0: density.b0,
        rho: density.rho_smooth,
        k: curve.k,
        phi_t: curve.phi_t,
    })
}

/// Full Levinson report on the default grid.
#[wasm_bindgen]
pub fn levinson_report(spec: &str) -> Result<String, JsError> {
    let p = parse(spec)?;
    let r = levinson::levinson_verdict(&p, &VerdictConfig::default()).map_err(js_err)?;
    to_json(&r)
}

#[derive(Serialize)]
struct WaveView {
    x: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    u: Vec<f64>,
    t: [f64; 2],
    b: [f64; 2],
    box_density: Option<f64>,
}

/// Direct-channel wavefunction on `|x| ≤ half_width`, thinned to at most
/// `max_points` samples, with the box density at that half-width.
#[wasm_bindgen]
pub fn wavefunction(spec: &str, k: f64, half_width: f64, max_points: usize) -> Result<String, JsError> {
    let p = parse(spec)?;
    let opts = SolverOptions {
        fine_extent: half_width,
        ..SolverOptions::default()
    };
    let s = solver::solve(&p, k, &opts).map_err(js_err)?;
    let wf = &s.wavefunction;
    let idx: Vec<usize> = (0..wf.len()).filter(|&i| wf.x[i].abs() <= half_width).collect();
    let stride = (idx.len() / max_points.max(2)).max(1);
    let picked: Vec<usize> = idx.iter().copied().step_by(stride).collect();
    let box_density = (half_width > p.support_radius())
        .then(|| spectral::box_density(&p, k, half_width, &SolverOptions::default()).ok())
        .flatten();
    to_json(&WaveView {
        x: picked.iter().map(|&i| wf.x[i]).collect(),
        re: picked.iter().map(|&i| wf.psi[i].re).collect(),
        im: picked.iter().map(|&i| wf.psi[i].im).collect(),
        u: picked.iter().map(|&i| p.evaluate(wf.x[i])).collect(),
        t: [s.t.re, s.t.im],
        b: [s.b.re, s.b.im],
        box_density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_round_trip() {
        let spec = fixture_spec("poschl-teller", 1, 0.0).unwrap();
        assert!(spec.contains("poschl-teller"));
        let v: serde_json::Value = serde_json::from_str(&phase_curve(&spec, 1e-2, 20.0, 64).unwrap()).unwrap();
        assert_eq!(v["k"].as_array().unwrap().len(), 64);
        assert_eq!(v["b0"], 0.0);
    }

    #[test]
    fn wavefunction_thinned() {
        let spec = fixture_spec("square-well", 1, 0.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&wavefunction(&spec, 1.0, 10.0, 200).unwrap()).unwrap();
        let n = v["x"].as_array().unwrap().len();
        assert!(n <= 400 && n > 50);
        assert!(v["box_density"].is_number());
    }
}
