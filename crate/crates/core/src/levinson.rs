//! Bound-state counting and the Levinson sum rule
//! `N = [φ_t(0) − φ_t(∞)]/π − b(0)/2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{Potential, DELTA_SURROGATE_WIDTH};
use crate::smatrix::{self, quadratic_extrapolate_to_zero, wrap, CurveOptions, PhaseCurve};
use crate::solver::{self, SolverOptions, MATCH_TOL, TIME_REVERSAL_TOL, UNITARITY_TOL};
use crate::spectral::{self, SpectralDensity};

/// Allowed distance of `n_levinson` from an integer.
pub const ROUND_TOL: f64 = 0.05;
/// Extrapolated `|b(0)|` inside this band is too close to call.
pub const AMBIGUOUS_BAND: (f64, f64) = (0.35, 0.65);
/// Generic potentials must also show `arg b → π` within this many radians.
const GENERIC_ARG_TOL: f64 = 0.25;
/// Eigenvalues closer to zero than this are flagged, never counted.
pub const THRESHOLD_EPS: f64 = 1e-8;

/// Oracle box padding beyond the support radius, and its base step.
const ORACLE_PAD: f64 = 300.0;
const ORACLE_STEP: f64 = 0.02;

pub fn default_probe_grid() -> Vec<f64> {
    // decreasing, 1e−2 → 1e−4
    let mut g = smatrix::geometric_grid(1e-4, 1e-2, 5);
    g.reverse();
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    /// `−1` (generic) or `0` (critical)
    pub b0: f64,
    /// zero-energy resonance present
    pub resonance: bool,
    pub extrapolated_abs_b: f64,
    pub probe_k: Vec<f64>,
    pub probe_abs_b: Vec<f64>,
}

/// Generic (`b(0) = −1`) or critical (`b(0) = 0`) from `|b(k)|` on a probe grid
/// shrinking toward `k = 0`.
pub fn classify_b0(p: &Potential, probe: &[f64], opts: &SolverOptions) -> Result<Classification> {
    if probe.len() < 3 {
        return Err(Error::InvalidArgument("probe grid needs at least 3 points".into()));
    }
    let mut amps = Vec::with_capacity(probe.len());
    for &k in probe {
        amps.push(solver::amplitudes(p, k, opts)?.1);
    }
    let abs_b: Vec<f64> = amps.iter().map(|b| b.norm()).collect();
    let extrapolated = quadratic_extrapolate_to_zero(probe, &abs_b);
    if extrapolated >= AMBIGUOUS_BAND.0 && extrapolated <= AMBIGUOUS_BAND.1 {
        return Err(Error::AmbiguousClassification {
            extrapolated,
            probe_abs_b: abs_b,
        });
    }
    let generic = extrapolated > 0.5;
    if generic {
        let smallest = probe
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        if wrap(amps[smallest].arg() - PI).abs() > GENERIC_ARG_TOL {
            return Err(Error::AmbiguousClassification {
                extrapolated,
                probe_abs_b: abs_b,
            });
        }
    }
    Ok(Classification {
        b0: if generic { -1.0 } else { 0.0 },
        resonance: !generic,
        extrapolated_abs_b: extrapolated,
        probe_k: probe.to_vec(),
        probe_abs_b: abs_b,
    })
}

/// Number of eigenvalues below `lambda` of the symmetric tridiagonal matrix
/// (`diag`, constant off-diagonal `off`), by counting negative LDLᵀ pivots.
fn sturm_count(diag: &[f64], off: f64, lambda: f64) -> usize {
    let off2 = off * off;
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - lambda } else { d - lambda - off2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d.abs() + off.abs() + lambda.abs()).max(1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Finite-difference Hamiltonian `−d²/dx² + u` on `[−half_width, half_width]`
/// with Dirichlet ends; returns (diagonal, off-diagonal).
fn fd_hamiltonian(p: &Potential, half_width: f64, step: f64) -> (Vec<f64>, f64) {
    let n_int = (2.0 * half_width / step).round() as usize - 1;
    let h = 2.0 * half_width / (n_int + 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    let diag = (1..=n_int)
        .map(|i| 2.0 * inv_h2 + p.evaluate(-half_width + i as f64 * h))
        .collect();
    (diag, -inv_h2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateCount {
    pub count: usize,
    /// eigenvalue within `THRESHOLD_EPS` of zero (half-bound state)
    pub near_threshold: bool,
    /// which routes produced the count
    pub method: String,
}

/// Number of bound states, independent of the scattering data.
///
/// A three-point finite-difference Hamiltonian in a Dirichlet box is counted
/// with Sturm sequences at two resolutions; zero-energy node counting must
/// agree. The delta potential uses `N = (1 − sign g)/2` and is cross-checked
/// by node counting on its narrow-well stand-in.
pub fn count_bound_states_oracle(p: &Potential) -> Result<BoundStateCount> {
    if let Some(g) = p.delta_coupling() {
        let closed = if g < 0.0 { 1 } else { 0 };
        let surrogate = p.delta_surrogate(DELTA_SURROGATE_WIDTH).expect("delta surrogate");
        let nodes = solver::zero_energy_nodes(&surrogate, 1e-2);
        if nodes != closed {
            return Err(Error::Resolution { coarse: closed, fine: nodes });
        }
        return Ok(BoundStateCount {
            count: closed,
            near_threshold: false,
            method: "closed form (1 − sign g)/2; surrogate node count".into(),
        });
    }
    if p.is_free() {
        return Ok(BoundStateCount {
            count: 0,
            near_threshold: true,
            method: "free potential".into(),
        });
    }
    let half_width = p.support_radius() + ORACLE_PAD;
    let (diag, off) = fd_hamiltonian(p, half_width, ORACLE_STEP);
    let coarse = sturm_count(&diag, off, -THRESHOLD_EPS);
    let (diag_f, off_f) = fd_hamiltonian(p, half_width, 0.5 * ORACLE_STEP);
    let fine = sturm_count(&diag_f, off_f, -THRESHOLD_EPS);
    if coarse != fine {
        return Err(Error::Resolution { coarse, fine });
    }
    let near_threshold = sturm_count(&diag_f, off_f, THRESHOLD_EPS) > fine;
    let nodes = solver::zero_energy_nodes(p, 0.5 * ORACLE_STEP);
    if nodes != fine {
        return Err(Error::Resolution { coarse: fine, fine: nodes });
    }
    Ok(BoundStateCount {
        count: fine,
        near_threshold,
        method: "finite-difference Sturm count (two resolutions); zero-energy node count".into(),
    })
}

/// Grid and tolerance settings for the verdict pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub n_k: usize,
    pub probe: Vec<f64>,
    pub round_tol: f64,
    pub l_box: Option<f64>,
    pub match_tol: f64,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        Self {
            k_min: 1e-3,
            k_max: 50.0,
            n_k: 400,
            probe: default_probe_grid(),
            round_tol: ROUND_TOL,
            l_box: None,
            match_tol: MATCH_TOL,
        }
    }
}

impl VerdictConfig {
    pub fn k_grid(&self) -> Vec<f64> {
        smatrix::geometric_grid(self.k_min, self.k_max, self.n_k)
    }

    pub fn curve_options(&self) -> CurveOptions {
        CurveOptions {
            solver: self.solver_options(),
            ..CurveOptions::default()
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            l_box: self.l_box,
            match_tol: self.match_tol,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Settings and residuals recorded alongside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub potential: String,
    pub k_min: f64,
    pub k_max: f64,
    pub n_k: usize,
    pub n_k_refined: usize,
    pub probe_k: Vec<f64>,
    pub round_tol: f64,
    pub unitarity_tol: f64,
    pub time_reversal_tol: f64,
    pub match_tol: f64,
    pub phase_floor: f64,
    pub max_unitarity_residual: f64,
    pub max_time_reversal_residual: f64,
    pub max_match_residual: f64,
    pub born_anchor_residual: f64,
    pub extrapolated_abs_b0: f64,
    pub oracle_method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevinsonReport {
    /// `φ_t(0) − φ_t(∞)`, radians
    pub delta_phi: f64,
    pub phi_t_0: f64,
    pub phi_t_inf: f64,
    pub b0: f64,
    /// `delta_phi/π − b0/2`
    pub n_levinson: f64,
    pub n_oracle: usize,
    pub resonance: bool,
    pub near_threshold_warning: bool,
    /// determinant route, equal to `N + b(0)/2`
    pub det_winding: f64,
    /// `|n_levinson − n_oracle|`
    pub deviation: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

/// Full pipeline: phase curve, `b(0)` classification, oracle count, sum rule.
pub fn levinson_verdict(p: &Potential, cfg: &VerdictConfig) -> Result<LevinsonReport> {
    let curve = smatrix::build_phase_curve(p, &cfg.k_grid(), &cfg.curve_options())?;
    let class = classify_b0(p, &cfg.probe, &cfg.solver_options())?;
    let oracle = count_bound_states_oracle(p)?;
    Ok(assemble_report(p, cfg, &curve, &class, &oracle))
}

pub fn assemble_report(
    p: &Potential,
    cfg: &VerdictConfig,
    curve: &PhaseCurve,
    class: &Classification,
    oracle: &BoundStateCount,
) -> LevinsonReport {
    let delta_phi = curve.delta_phi();
    let n_levinson = delta_phi / PI - class.b0 / 2.0;
    let rounded = n_levinson.round();
    let deviation = (n_levinson - oracle.count as f64).abs();
    let pass = (n_levinson - rounded).abs() < cfg.round_tol && rounded == oracle.count as f64;
    LevinsonReport {
        delta_phi,
        phi_t_0: curve.phi_t_0,
        phi_t_inf: curve.phi_t_inf,
        b0: class.b0,
        n_levinson,
        n_oracle: oracle.count,
        resonance: class.resonance,
        near_threshold_warning: oracle.near_threshold && !p.is_free(),
        det_winding: smatrix::det_winding(curve),
        deviation,
        tolerance: cfg.round_tol,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        provenance: Provenance {
            potential: p.label(),
            k_min: cfg.k_min,
            k_max: cfg.k_max,
            n_k: cfg.n_k,
            n_k_refined: curve.len(),
            probe_k: class.probe_k.clone(),
            round_tol: cfg.round_tol,
            unitarity_tol: UNITARITY_TOL,
            time_reversal_tol: TIME_REVERSAL_TOL,
            match_tol: cfg.match_tol,
            phase_floor: smatrix::PHASE_FLOOR,
            max_unitarity_residual: curve.max_unitarity_residual(),
            max_time_reversal_residual: curve.max_time_reversal_residual(),
            max_match_residual: curve.max_match_residual,
            born_anchor_residual: curve.born_anchor_residual(),
            extrapolated_abs_b0: class.extrapolated_abs_b,
            oracle_method: oracle.method.clone(),
        },
    }
}

/// `∫ρ_rel dk` over the whole line: twice the half-line smooth mass (with the
/// Born tail `⟨u⟩/(2k_max)` beyond the grid and the constant extension below
/// `k_min`) plus the full `δ(k)` weight.
pub fn sum_rule_integral(density: &SpectralDensity) -> f64 {
    let k = &density.k;
    let rho = &density.rho_smooth;
    let body = crate::quad::trapezoid(k, rho);
    let head = k[0] * rho[0];
    let tail = density.moment0 / (2.0 * density.k_max());
    2.0 * (head + body + tail) + density.delta_weight
}

/// Density on the verdict grid for a classified potential.
pub fn spectral_density(p: &Potential, cfg: &VerdictConfig) -> Result<(PhaseCurve, Classification, SpectralDensity)> {
    let curve = smatrix::build_phase_curve(p, &cfg.k_grid(), &cfg.curve_options())?;
    let class = classify_b0(p, &cfg.probe, &cfg.solver_options())?;
    let density = spectral::density_from_phase(&curve, class.b0);
    Ok((curve, class, density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_delta, make_poschl_teller, Shape};

    #[test]
    fn sturm_count_free_laplacian() {
        // eigenvalues of the 1D Dirichlet Laplacian are all positive
        let diag = vec![2.0; 50];
        assert_eq!(sturm_count(&diag, -1.0, 0.0), 0);
        assert_eq!(sturm_count(&diag, -1.0, 4.1), 50);
        // 2 − 2cos(jπ/51) < 0.9 for j ≤ 16
        assert_eq!(sturm_count(&diag, -1.0, 0.9), 16);
    }

    #[test]
    fn oracle_counts() {
        assert_eq!(count_bound_states_oracle(&make_poschl_teller(1).unwrap()).unwrap().count, 1);
        assert_eq!(count_bound_states_oracle(&make_poschl_teller(2).unwrap()).unwrap().count, 2);
        assert_eq!(count_bound_states_oracle(&Potential::free()).unwrap().count, 0);
        assert_eq!(count_bound_states_oracle(&make_delta(-2.0).unwrap()).unwrap().count, 1);
        assert_eq!(count_bound_states_oracle(&make_delta(1.0).unwrap()).unwrap().count, 0);
    }

    #[test]
    fn classification_fixtures() {
        let o = SolverOptions::default();
        let probe = default_probe_grid();
        let c = classify_b0(&make_delta(-2.0).unwrap(), &probe, &o).unwrap();
        assert_eq!((c.b0, c.resonance), (-1.0, false));
        let c = classify_b0(&make_poschl_teller(1).unwrap(), &probe, &o).unwrap();
        assert_eq!((c.b0, c.resonance), (0.0, true));
        let c = classify_b0(&Potential::free(), &probe, &o).unwrap();
        assert_eq!((c.b0, c.resonance), (0.0, true));
    }

    #[test]
    fn near_critical_is_ambiguous() {
        // ℓ = 1 + 1e−4: the crossover scale sits inside the probe window
        let p = Potential::analytic(Shape::Sech2 { lambda: 2.0003 }).unwrap();
        let r = classify_b0(&p, &default_probe_grid(), &SolverOptions::default());
        assert!(matches!(r, Err(Error::AmbiguousClassification { .. })), "{r:?}");
    }

    #[test]
    fn sum_rule_free_is_zero() {
        let d = SpectralDensity {
            k: vec![0.1, 0.2, 0.3],
            rho_smooth: vec![0.0; 3],
            delta_weight: 0.0,
            b0: 0.0,
            moment0: 0.0,
        };
        assert_eq!(sum_rule_integral(&d), 0.0);
    }
}
