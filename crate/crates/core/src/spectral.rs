//! Relative spectral density `ρ_rel(k) = ∫(|ψ_k|² − 1) dx`.
//!
//! Three routes are kept independent of each other:
//! - [`box_density`] integrates the sampled wavefunction over `[−L, L]`;
//! - [`finite_l_identity`] rebuilds the same box quantity from the asymptotic
//!   amplitudes and their k-derivatives;
//! - [`density_from_phase`] differentiates the unwrapped forward phase and
//!   carries the `δ(k)` piece symbolically as `π b(0)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{closed_form_amplitudes, Potential};
use crate::quad;
use crate::smatrix::{quadratic_extrapolate_to_zero, wrap, PhaseCurve, PHASE_FLOOR};
use crate::solver::{self, SolverOptions, DK_FD};
use crate::spline::CubicSpline;

/// Tolerance of the Born-tail check `ρ(k_max)·2k_max²/⟨u⟩ → 1`.
pub const BORN_TAIL_TOL: f64 = 0.2;

/// Absolute tolerance of the appendix integral, shared by all panels.
const APPENDIX_ABS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub k: Vec<f64>,
    /// `φ̇_t(k)`
    pub rho_smooth: Vec<f64>,
    /// coefficient of `δ(k)`: `π b(0)`
    pub delta_weight: f64,
    pub b0: f64,
    /// `⟨u⟩`, for the analytic tail beyond the grid
    pub moment0: f64,
}

impl SpectralDensity {
    pub fn k_max(&self) -> f64 {
        *self.k.last().expect("non-empty density")
    }

    /// `ρ(k_max)·2k_max²/⟨u⟩`; `None` when `⟨u⟩ = 0`.
    pub fn born_tail_ratio(&self) -> Option<f64> {
        (self.moment0 != 0.0).then(|| {
            let k = self.k_max();
            self.rho_smooth[self.k.len() - 1] * 2.0 * k * k / self.moment0
        })
    }
}

/// Derivative of tabulated `y(x)` on a non-uniform grid: three-point centered
/// formula inside, three-point one-sided at the ends.
pub fn nonuniform_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 3 && y.len() == n);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h1 = x[i] - x[i - 1];
        let h2 = x[i + 1] - x[i];
        d[i] = -h2 / (h1 * (h1 + h2)) * y[i - 1] + (h2 - h1) / (h1 * h2) * y[i] + h1 / (h2 * (h1 + h2)) * y[i + 1];
    }
    let one_sided = |i0: usize, i1: usize, i2: usize| {
        // derivative at x[i0] of the parabola through the three points
        let (a, b, c) = (x[i0], x[i1], x[i2]);
        let l0 = (2.0 * a - b - c) / ((a - b) * (a - c));
        let l1 = (a - c) / ((b - a) * (b - c));
        let l2 = (a - b) / ((c - a) * (c - b));
        l0 * y[i0] + l1 * y[i1] + l2 * y[i2]
    };
    d[0] = one_sided(0, 1, 2);
    d[n - 1] = one_sided(n - 1, n - 2, n - 3);
    d
}

/// Smooth density `φ̇_t` on the curve's grid plus the symbolic `π b(0) δ(k)`.
pub fn density_from_phase(curve: &PhaseCurve, b0: f64) -> SpectralDensity {
    SpectralDensity {
        k: curve.k.clone(),
        rho_smooth: nonuniform_derivative(&curve.k, &curve.phi_t),
        delta_weight: PI * b0,
        b0,
        moment0: curve.moment0,
    }
}

fn check_box(p: &Potential, k: f64, l: f64) -> Result<()> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    if !(l > p.support_radius()) {
        return Err(Error::Domain(format!(
            "box half-width {l} must exceed the support radius {}",
            p.support_radius()
        )));
    }
    Ok(())
}

fn box_options(base: &SolverOptions, ls: &[f64]) -> SolverOptions {
    let l_max = ls.iter().copied().fold(0.0, f64::max);
    let mut nodes = base.nodes.clone();
    nodes.extend(ls.iter().flat_map(|&l| [-l, l]));
    SolverOptions {
        fine_extent: base.fine_extent.max(l_max),
        nodes,
        ..base.clone()
    }
}

/// `∫_{−L}^{L} (|ψ_k|² − 1) dx` from the sampled direct-channel wavefunction.
///
/// Oscillates in `L` through the reflected wave; it has no pointwise limit.
pub fn box_density(p: &Potential, k: f64, l: f64, opts: &SolverOptions) -> Result<f64> {
    Ok(box_densities(p, k, &[l], opts)?[0])
}

/// [`box_density`] for several box sizes from a single solve.
pub fn box_densities(p: &Potential, k: f64, ls: &[f64], opts: &SolverOptions) -> Result<Vec<f64>> {
    for &l in ls {
        check_box(p, k, l)?;
    }
    let wf = solver::solve_wavefunction(p, k, &box_options(opts, ls))?;
    ls.iter()
        .map(|&l| {
            wf.box_integral(l)
                .ok_or_else(|| Error::Domain(format!("±{l} is not a grid node")))
        })
        .collect()
}

/// Direct-channel amplitude and phase derivatives at `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalPhases {
    pub k: f64,
    pub t: Complex64,
    pub b: Complex64,
    pub dphi_t: f64,
    /// `None` when `|b|` is below the phase floor
    pub dphi_r: Option<f64>,
}

/// Centered differences of `arg t`, `arg b` with step `DK_FD·k`.
pub fn local_phases(p: &Potential, k: f64, opts: &SolverOptions) -> Result<LocalPhases> {
    let dk = DK_FD * k;
    let plain = SolverOptions {
        nodes: Vec::new(),
        fine_extent: 0.0,
        ..opts.clone()
    };
    let (t, b) = solver::amplitudes(p, k, &plain)?;
    let (tp, bp) = solver::amplitudes(p, k + dk, &plain)?;
    let (tm, bm) = solver::amplitudes(p, k - dk, &plain)?;
    let dphi_t = wrap(tp.arg() - tm.arg()) / (2.0 * dk);
    let dphi_r = (b.norm() > PHASE_FLOOR && bp.norm() > PHASE_FLOOR && bm.norm() > PHASE_FLOOR)
        .then(|| wrap(bp.arg() - bm.arg()) / (2.0 * dk));
    Ok(LocalPhases { k, t, b, dphi_t, dphi_r })
}

/// Both sides of the finite-box identity
/// `2kρ_L = 4kL + 2kφ̇_t + 2k|b|²(φ̇_r − φ̇_t) + 2|b| sin(φ_r + 2kL)`,
/// with the common `4kL` removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub k: f64,
    pub l: f64,
    pub box_density: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentityCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Identity checks at one `k` for several box sizes.
pub fn finite_l_identity(p: &Potential, k: f64, ls: &[f64], opts: &SolverOptions) -> Result<Vec<IdentityCheck>> {
    let boxes = box_densities(p, k, ls, opts)?;
    let ph = local_phases(p, k, opts)?;
    let abs_b = ph.b.norm();
    let phi_r = ph.b.arg();
    Ok(ls
        .iter()
        .zip(boxes)
        .map(|(&l, rho)| {
            let mut rhs = 2.0 * k * ph.dphi_t;
            if let Some(dphi_r) = ph.dphi_r {
                rhs += 2.0 * k * abs_b * abs_b * (dphi_r - ph.dphi_t);
            }
            rhs += 2.0 * abs_b * (phi_r + 2.0 * k * l).sin();
            IdentityCheck {
                k,
                l,
                box_density: rho,
                lhs: 2.0 * k * rho,
                rhs,
            }
        })
        .collect())
}

/// `|LHS − RHS|` of the finite-box identity at one `(k, L)`.
pub fn finite_l_identity_residual(p: &Potential, k: f64, l: f64, opts: &SolverOptions) -> Result<f64> {
    Ok(finite_l_identity(p, k, &[l], opts)?[0].residual())
}

/// Reflection amplitudes of both channels as smooth functions of `k ≥ 0`.
enum ReflectionTable {
    Closed(Potential),
    Tabulated {
        re: CubicSpline,
        im: CubicSpline,
        re_z: CubicSpline,
        im_z: CubicSpline,
    },
}

impl ReflectionTable {
    fn build(p: &Potential, k_cut: f64, opts: &SolverOptions) -> Result<Self> {
        if p.is_delta() || closed_form_amplitudes(p, 1.0)?.is_some() {
            return Ok(ReflectionTable::Closed(p.clone()));
        }
        let mut ks: Vec<f64> = crate::smatrix::geometric_grid(1e-3, 1.0, 60);
        let n_lin = ((k_cut - 1.0) / 0.02).ceil().max(1.0) as usize;
        ks.extend((1..=n_lin).map(|i| 1.0 + (k_cut - 1.0) * i as f64 / n_lin as f64));
        let mut b = Vec::with_capacity(ks.len());
        let mut b_z = Vec::with_capacity(ks.len());
        for &k in &ks {
            let s = solver::solve(p, k, opts)?;
            b.push(s.b);
            b_z.push(s.b_z);
        }
        let m = 5;
        let extrap = |v: &[Complex64]| {
            let re: Vec<f64> = v[..m].iter().map(|z| z.re).collect();
            let im: Vec<f64> = v[..m].iter().map(|z| z.im).collect();
            Complex64::new(
                quadratic_extrapolate_to_zero(&ks[..m], &re),
                quadratic_extrapolate_to_zero(&ks[..m], &im),
            )
        };
        let (b_at_0, bz_at_0) = (extrap(&b), extrap(&b_z));
        let mut x = vec![0.0];
        x.extend(&ks);
        let column = |v: &[Complex64], z0: Complex64, f: fn(&Complex64) -> f64| {
            let mut out = vec![f(&z0)];
            out.extend(v.iter().map(f));
            CubicSpline::new(x.clone(), out).expect("sorted grid")
        };
        Ok(ReflectionTable::Tabulated {
            re: column(&b, b_at_0, |z| z.re),
            im: column(&b, b_at_0, |z| z.im),
            re_z: column(&b_z, bz_at_0, |z| z.re),
            im_z: column(&b_z, bz_at_0, |z| z.im),
        })
    }

    fn at(&self, k: f64) -> (Complex64, Complex64) {
        match self {
            ReflectionTable::Closed(p) => {
                let (_, b) = closed_form_amplitudes(p, k).expect("k > 0").expect("closed form");
                // even closed forms: b̃ = b
                (b, b)
            }
            ReflectionTable::Tabulated { re, im, re_z, im_z } => (
                Complex64::new(re.eval(k), im.eval(k)),
                Complex64::new(re_z.eval(k), im_z.eval(k)),
            ),
        }
    }
}

/// `∫ |b(k)| sin(φ_r + 2kL) dk / k` over the real line, the negative half
/// realized by the zurdo channel.
///
/// With `k' = 2kL` the integrand is `Im[(b + b̃)(k'/2L) e^{ik'}]/k'` on
/// `(0, 2L k_cut)`, integrated panel by panel (one panel per half period).
/// Tends to `π b(0)` as `L` grows.
pub fn appendix_integral(p: &Potential, l: f64, k_cut: f64, opts: &SolverOptions) -> Result<f64> {
    if !(l > p.support_radius()) || !(k_cut > 0.0) {
        return Err(Error::Domain(format!(
            "need L > support radius ({}) and k_cut > 0",
            p.support_radius()
        )));
    }
    let table = ReflectionTable::build(p, k_cut, opts)?;
    let upper = 2.0 * l * k_cut;
    let panels = (upper / PI).ceil() as usize;
    let pts: Vec<f64> = (0..=panels).map(|i| (i as f64 * PI).min(upper)).collect();
    let integrand = |kp: f64| {
        // deep bisection can land on the removable point k' = 0
        let kp = kp.max(f64::MIN_POSITIVE);
        let (b, b_z) = table.at(kp / (2.0 * l));
        ((b + b_z) * Complex64::from_polar(1.0, kp)).im / kp
    };
    quad::integrate_piecewise(integrand, &pts, APPENDIX_ABS_TOL, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_delta, make_poschl_teller, Shape};
    use crate::smatrix::{build_phase_curve, geometric_grid, CurveOptions};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn derivative_formula_exact_on_parabolas() {
        let x = geometric_grid(0.1, 3.0, 17);
        let y: Vec<f64> = x.iter().map(|v| 1.0 - 2.0 * v + 0.5 * v * v).collect();
        for (xi, d) in x.iter().zip(nonuniform_derivative(&x, &y)) {
            assert!((d - (-2.0 + xi)).abs() < 1e-10);
        }
    }

    #[test]
    fn poschl_teller_box_density() {
        // reflectionless: ρ = −2/(k²+1) for any L beyond the support
        let p = make_poschl_teller(1).unwrap();
        let rho = box_densities(&p, 1.0, &[20.0, 35.0], &opts()).unwrap();
        for r in rho {
            assert!((r + 1.0).abs() < 1e-3, "{r}");
        }
    }

    #[test]
    fn free_box_density_vanishes() {
        let rho = box_density(&Potential::free(), 0.9, 7.0, &opts()).unwrap();
        assert!(rho.abs() < 1e-10);
        assert!(finite_l_identity_residual(&Potential::free(), 0.9, 7.0, &opts()).unwrap() < 1e-9);
    }

    #[test]
    fn delta_box_oscillation() {
        // ρ_L = φ̇_t + |b| sin(φ_r + 2kL)/k for the delta, g = −2, k = 1
        let p = make_delta(-2.0).unwrap();
        let k = 1.0;
        let (l1, l2) = (10.0, 10.0 + PI / (2.0 * k));
        let rho = box_densities(&p, k, &[l1, l2], &opts()).unwrap();
        let b = Complex64::new(-0.5, 0.5);
        let osc = |l: f64| b.norm() * (b.arg() + 2.0 * k * l).sin() / k;
        assert!(((rho[0] - rho[1]) - (osc(l1) - osc(l2))).abs() < 1e-4);
        assert!((rho[0] - (-0.5 + osc(l1))).abs() < 1e-4);
    }

    #[test]
    fn box_density_domain() {
        let p = make_poschl_teller(1).unwrap();
        assert!(box_density(&p, 1.0, 3.0, &opts()).is_err());
        assert!(box_density(&p, -1.0, 30.0, &opts()).is_err());
    }

    #[test]
    fn identity_residuals() {
        let pt = make_poschl_teller(1).unwrap();
        assert!(finite_l_identity_residual(&pt, 1.0, 20.0, &opts()).unwrap() < 1e-3);
        let well = Potential::analytic(Shape::SquareWell { depth: -1.0, half_width: 1.0 }).unwrap();
        assert!(finite_l_identity_residual(&well, 0.7, 30.0, &opts()).unwrap() < 1e-2);
    }

    #[test]
    fn phase_density_fixtures() {
        let grid = geometric_grid(1e-3, 50.0, 400);
        let pt = build_phase_curve(&make_poschl_teller(1).unwrap(), &grid, &CurveOptions::default()).unwrap();
        let d = density_from_phase(&pt, 0.0);
        assert_eq!(d.delta_weight, 0.0);
        for (k, r) in d.k.iter().zip(&d.rho_smooth) {
            assert!((r + 2.0 / (k * k + 1.0)).abs() < 1e-3, "k = {k}");
        }
        let g = -2.0;
        let dc = build_phase_curve(&make_delta(g).unwrap(), &grid, &CurveOptions::default()).unwrap();
        let d = density_from_phase(&dc, -1.0);
        assert!((d.delta_weight + PI).abs() < 1e-15);
        for (k, r) in d.k.iter().zip(&d.rho_smooth) {
            assert!((r - 2.0 * g / (g * g + 4.0 * k * k)).abs() < 1e-3, "k = {k}");
        }
    }

    #[test]
    fn appendix_delta_closed_form() {
        // for g = −2 the integral is −π(1 − 2e^{−2L}) with an infinite cutoff
        let p = make_delta(-2.0).unwrap();
        let values: Vec<f64> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&l| appendix_integral(&p, l, 40.0, &opts()).unwrap())
            .collect();
        for v in &values {
            assert!((v + PI).abs() < 0.05 * PI, "{v}");
        }
        assert!(appendix_integral(&make_poschl_teller(1).unwrap(), 50.0, 10.0, &opts()).unwrap().abs() < 1e-9);
    }
}
