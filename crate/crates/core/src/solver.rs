//! Fixed-`k` scattering solutions of `ψ'' + k²ψ = uψ`.
//!
//! The direct channel is integrated from the transmitted side: at `x = +L_box`
//! the solution is seeded with the pure outgoing wave `exp(ikx)` and carried
//! leftward with a fourth-order Magnus propagator. On the left, a
//! least-squares fit to `α exp(ikx) + β exp(−ikx)` over the outer matching
//! window gives `t = 1/α` and `b = β/α`. The zurdo (right-incident) channel
//! is the same problem for the mirrored potential `u(−x)`.
//!
//! Each Magnus step exponentiates a traceless real 2×2 generator, so the
//! propagator is exact for constant `u` (free regions and square wells), and
//! the transfer matrix is unimodular to rounding error.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{closed_form_amplitudes, Potential};
use crate::quad;

pub const UNITARITY_TOL: f64 = 1e-6;
pub const TIME_REVERSAL_TOL: f64 = 1e-6;
pub const MATCH_TOL: f64 = 1e-5;
/// k-step for the centered derivative in the wronskian check.
pub const DK_FD: f64 = 1e-4;

/// Samples per wavelength on the coarse (free) part of the grid, and the
/// wavelength fraction bounding the fine step.
const STEPS_PER_WAVELENGTH: f64 = 40.0;
const MAX_FINE_STEP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    /// incident from the left
    Direct,
    /// incident from the right
    Zurdo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Half-width of the integration box. Defaults to the support radius plus
    /// `pad_wavelengths` wavelengths.
    pub l_box: Option<f64>,
    pub pad_wavelengths: f64,
    /// Length of the left matching window, in wavelengths.
    pub window_wavelengths: f64,
    /// Step override for the resolved region.
    pub step: Option<f64>,
    /// The region `|x| ≤ max(support_radius, fine_extent)` is sampled with the
    /// fine step; `±fine_extent` become grid nodes.
    pub fine_extent: f64,
    /// Extra positions that must be grid nodes (inside the box).
    pub nodes: Vec<f64>,
    pub match_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            l_box: None,
            pad_wavelengths: 5.0,
            window_wavelengths: 2.0,
            step: None,
            fine_extent: 0.0,
            nodes: Vec::new(),
            match_tol: MATCH_TOL,
        }
    }
}

impl SolverOptions {
    pub fn fine_step(&self, k: f64) -> f64 {
        self.step
            .unwrap_or_else(|| (2.0 * PI / (STEPS_PER_WAVELENGTH * k)).min(MAX_FINE_STEP))
    }

    pub fn box_half_width(&self, p: &Potential, k: f64) -> f64 {
        let wavelength = 2.0 * PI / k;
        let resolved = p.support_radius().max(self.fine_extent);
        self.l_box
            .unwrap_or(p.support_radius() + self.pad_wavelengths * wavelength)
            .max(resolved)
    }
}

/// Complex wavefunction and its derivative on a piecewise-uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub x: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub dpsi: Vec<Complex64>,
    /// Indices where a new uniform run begins (always includes 0 and the last index).
    pub(crate) knots: Vec<usize>,
}

impl Wavefunction {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Index of the grid node at `x0`, if there is one.
    pub fn node(&self, x0: f64) -> Option<usize> {
        let i = self.x.partition_point(|&v| v < x0 - 1e-9 * (1.0 + x0.abs()));
        (i < self.x.len() && (self.x[i] - x0).abs() <= 1e-9 * (1.0 + x0.abs())).then_some(i)
    }

    /// Simpson integral of `f(i)` over `[x[lo], x[hi]]`, run by uniform run.
    pub fn integrate_nodes<F: Fn(usize) -> f64>(&self, lo: usize, hi: usize, f: F) -> f64 {
        let mut total = 0.0;
        for w in self.knots.windows(2) {
            let (a, b) = (w[0].max(lo), w[1].min(hi));
            if b <= a {
                continue;
            }
            let h = (self.x[b] - self.x[a]) / (b - a) as f64;
            let values: Vec<f64> = (a..=b).map(&f).collect();
            total += quad::simpson_uniform(&values, h);
        }
        total
    }

    /// `∫_{−L}^{L} (|ψ|² − 1) dx`; `±L` must be grid nodes.
    pub fn box_integral(&self, l: f64) -> Option<f64> {
        let lo = self.node(-l)?;
        let hi = self.node(l)?;
        Some(self.integrate_nodes(lo, hi, |i| self.psi[i].norm_sqr() - 1.0))
    }

    fn mirrored(self) -> Wavefunction {
        let n = self.x.len();
        Wavefunction {
            x: self.x.iter().rev().map(|v| -v).collect(),
            psi: self.psi.into_iter().rev().collect(),
            dpsi: self.dpsi.into_iter().rev().map(|d| -d).collect(),
            knots: self.knots.iter().rev().map(|&i| n - 1 - i).collect(),
        }
    }
}

/// One channel at one `k`: amplitudes, normalized wavefunction (incident
/// amplitude 1) and the matching residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSolution {
    pub channel: Channel,
    pub k: f64,
    pub t: Complex64,
    pub b: Complex64,
    pub wavefunction: Wavefunction,
    pub match_residual: f64,
}

/// Both channels at one `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSolution {
    pub k: f64,
    pub t: Complex64,
    pub b: Complex64,
    pub t_z: Complex64,
    pub b_z: Complex64,
    /// direct-channel wavefunction
    pub wavefunction: Wavefunction,
    pub match_residual: f64,
}

impl ScatteringSolution {
    pub fn unitarity_residual(&self) -> f64 {
        (1.0 - (self.t.norm_sqr() + self.b.norm_sqr())).abs()
    }

    pub fn time_reversal_residual(&self) -> f64 {
        (self.t - self.t_z).norm()
    }
}

/// Grid nodes: uniform runs between the structural points of the problem.
fn build_grid(p: &Potential, k: f64, opts: &SolverOptions) -> Result<(Vec<f64>, Vec<usize>, f64, f64)> {
    let wavelength = 2.0 * PI / k;
    let l_box = opts.box_half_width(p, k);
    let window = opts.window_wavelengths * wavelength;
    let resolved = p.support_radius().max(opts.fine_extent);
    if l_box - window < p.support_radius() {
        return Err(Error::Domain(format!(
            "box half-width {l_box} leaves no matching window outside the support radius {}",
            p.support_radius()
        )));
    }
    let fine = opts.fine_step(k);
    let coarse = (wavelength / STEPS_PER_WAVELENGTH).max(fine);

    let mut marks = vec![-l_box, l_box, -l_box + window];
    if resolved > 0.0 {
        marks.extend([-resolved, 0.0, resolved]);
    }
    marks.extend(p.breakpoints().into_iter().filter(|x| x.abs() < l_box));
    marks.extend(opts.nodes.iter().copied().filter(|x| x.abs() < l_box));
    marks.sort_by(f64::total_cmp);
    marks.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (1.0 + b.abs()));

    let mut x = vec![marks[0]];
    let mut knots = vec![0];
    for w in marks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inside = a >= -resolved - 1e-12 && b <= resolved + 1e-12;
        let target = if inside { fine } else { coarse };
        let n = ((b - a) / target).ceil().max(1.0) as usize;
        x.extend((1..n).map(|j| a + (b - a) * j as f64 / n as f64));
        x.push(b);
        knots.push(x.len() - 1);
    }
    Ok((x, knots, l_box, window))
}

/// `exp(Ω)` for the traceless generator `Ω = [[c, h], [h q, −c]]`.
#[inline]
fn expm_traceless(c: f64, h: f64, hq: f64) -> [[f64; 2]; 2] {
    let s2 = c * c + h * hq;
    let (ch, sh_over_s) = if s2.abs() < 1e-8 {
        (1.0 + s2 / 2.0 + s2 * s2 / 24.0, 1.0 + s2 / 6.0 + s2 * s2 / 120.0)
    } else if s2 > 0.0 {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        let s = (-s2).sqrt();
        (s.cos(), s.sin() / s)
    };
    [[ch + sh_over_s * c, sh_over_s * h], [sh_over_s * hq, ch - sh_over_s * c]]
}

/// One fourth-order Magnus step of `y' = [[0, 1], [u − k², 0]] y` from `x` to `x + h`
/// (`h` may be negative).
#[inline]
fn magnus_step<U: Fn(f64) -> f64>(u: &U, k2: f64, x: f64, h: f64) -> [[f64; 2]; 2] {
    const C1: f64 = 0.5 - 0.288_675_134_594_812_9; // 1/2 − √3/6
    const C2: f64 = 0.5 + 0.288_675_134_594_812_9;
    const SQRT3_12: f64 = 0.144_337_567_297_406_43;
    let q1 = u(x + C1 * h) - k2;
    let q2 = u(x + C2 * h) - k2;
    let c = SQRT3_12 * h * h * (q1 - q2);
    expm_traceless(c, h, h * 0.5 * (q1 + q2))
}

/// Real transfer matrix of `ψ'' = (u − k²)ψ` from `x_from` to `x_to` over `n`
/// equal Magnus steps.
pub fn transfer_matrix<U: Fn(f64) -> f64>(u: &U, k: f64, x_from: f64, x_to: f64, n: usize) -> [[f64; 2]; 2] {
    let h = (x_to - x_from) / n as f64;
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for j in 0..n {
        let s = magnus_step(u, k * k, x_from + j as f64 * h, h);
        m = [
            [s[0][0] * m[0][0] + s[0][1] * m[1][0], s[0][0] * m[0][1] + s[0][1] * m[1][1]],
            [s[1][0] * m[0][0] + s[1][1] * m[1][0], s[1][0] * m[0][1] + s[1][1] * m[1][1]],
        ];
    }
    m
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("wavenumber must be positive, got {k}")))
    }
}

/// Least-squares `ψ ≈ α e^{ikx} + β e^{−ikx}` over the given nodes; returns
/// `(α, β, max |ψ − fit|)`.
fn fit_plane_waves(x: &[f64], psi: &[Complex64], k: f64) -> (Complex64, Complex64, f64) {
    let n = x.len() as f64;
    let mut s2 = Complex64::new(0.0, 0.0); // Σ e^{2ikx}
    let mut r1 = Complex64::new(0.0, 0.0); // Σ e^{−ikx} ψ
    let mut r2 = Complex64::new(0.0, 0.0); // Σ e^{ikx} ψ
    for (&xi, &p) in x.iter().zip(psi) {
        let e = Complex64::from_polar(1.0, k * xi);
        s2 += e * e;
        r1 += e.conj() * p;
        r2 += e * p;
    }
    // [[n, conj(s2)], [s2, n]] (α, β)ᵀ = (r1, r2)ᵀ
    let det = n * n - s2.norm_sqr();
    let alpha = (n * r1 - s2.conj() * r2) / det;
    let beta = (n * r2 - s2 * r1) / det;
    let residual = x
        .iter()
        .zip(psi)
        .map(|(&xi, &p)| {
            let e = Complex64::from_polar(1.0, k * xi);
            (p - alpha * e - beta * e.conj()).norm()
        })
        .fold(0.0, f64::max);
    (alpha, beta, residual)
}

fn integrate_direct(p: &Potential, k: f64, opts: &SolverOptions) -> Result<ChannelSolution> {
    let (x, knots, l_box, window) = build_grid(p, k, opts)?;
    let n = x.len();
    let k2 = k * k;
    let u = |s: f64| p.evaluate(s);

    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    let mut dpsi = vec![Complex64::new(0.0, 0.0); n];
    let seed = Complex64::from_polar(1.0, k * x[n - 1]);
    psi[n - 1] = seed;
    dpsi[n - 1] = Complex64::new(0.0, k) * seed;
    for i in (0..n - 1).rev() {
        let m = magnus_step(&u, k2, x[i + 1], x[i] - x[i + 1]);
        let (y0, y1) = (psi[i + 1], dpsi[i + 1]);
        psi[i] = m[0][0] * y0 + m[0][1] * y1;
        dpsi[i] = m[1][0] * y0 + m[1][1] * y1;
    }

    let w_end = x.partition_point(|&v| v <= -l_box + window + 1e-12 * l_box);
    let (alpha, beta, residual) = fit_plane_waves(&x[..w_end], &psi[..w_end], k);
    let scale = 1.0 / alpha;
    for (a, b) in psi.iter_mut().zip(dpsi.iter_mut()) {
        *a *= scale;
        *b *= scale;
    }
    let match_residual = residual / alpha.norm();
    if !(match_residual < opts.match_tol) {
        return Err(Error::MatchingFailure {
            k,
            residual: match_residual,
            tol: opts.match_tol,
        });
    }
    Ok(ChannelSolution {
        channel: Channel::Direct,
        k,
        t: scale,
        b: beta * scale,
        wavefunction: Wavefunction { x, psi, dpsi, knots },
        match_residual,
    })
}

/// Closed-form delta solution sampled on the standard grid.
fn delta_direct(p: &Potential, k: f64, opts: &SolverOptions) -> Result<ChannelSolution> {
    let (t, b) = closed_form_amplitudes(p, k)?.expect("delta has a closed form");
    let (x, knots, _, _) = build_grid(p, k, opts)?;
    let ik = Complex64::new(0.0, k);
    let (psi, dpsi): (Vec<Complex64>, Vec<Complex64>) = x
        .iter()
        .map(|&xi| {
            let e = Complex64::from_polar(1.0, k * xi);
            if xi < 0.0 {
                (e + b * e.conj(), ik * (e - b * e.conj()))
            } else {
                (t * e, ik * t * e)
            }
        })
        .unzip();
    Ok(ChannelSolution {
        channel: Channel::Direct,
        k,
        t,
        b,
        wavefunction: Wavefunction { x, psi, dpsi, knots },
        match_residual: 0.0,
    })
}

/// Left-incident solution: `exp(ikx) + b exp(−ikx)` on the left,
/// `t exp(ikx)` on the right.
pub fn solve_direct(p: &Potential, k: f64, opts: &SolverOptions) -> Result<ChannelSolution> {
    check_k(k)?;
    if p.is_delta() {
        delta_direct(p, k, opts)
    } else {
        integrate_direct(p, k, opts)
    }
}

/// Right-incident solution: `exp(−ikx) + b̃ exp(ikx)` on the right,
/// `t̃ exp(−ikx)` on the left.
pub fn solve_zurdo(p: &Potential, k: f64, opts: &SolverOptions) -> Result<ChannelSolution> {
    check_k(k)?;
    let mirrored = solve_direct(&p.mirrored(), k, opts)?;
    Ok(ChannelSolution {
        channel: Channel::Zurdo,
        wavefunction: mirrored.wavefunction.mirrored(),
        ..mirrored
    })
}

/// Both channels at one `k`.
pub fn solve(p: &Potential, k: f64, opts: &SolverOptions) -> Result<ScatteringSolution> {
    let direct = solve_direct(p, k, opts)?;
    let (t_z, b_z, zr) = if p.is_even() {
        (direct.t, direct.b, direct.match_residual)
    } else {
        let z = solve_zurdo(p, k, opts)?;
        (z.t, z.b, z.match_residual)
    };
    Ok(ScatteringSolution {
        k,
        t: direct.t,
        b: direct.b,
        t_z,
        b_z,
        match_residual: direct.match_residual.max(zr),
        wavefunction: direct.wavefunction,
    })
}

/// Direct-channel wavefunction with unit incident amplitude.
pub fn solve_wavefunction(p: &Potential, k: f64, opts: &SolverOptions) -> Result<Wavefunction> {
    Ok(solve_direct(p, k, opts)?.wavefunction)
}

/// Direct-channel `(t, b)` only.
pub fn amplitudes(p: &Potential, k: f64, opts: &SolverOptions) -> Result<(Complex64, Complex64)> {
    let s = solve_direct(p, k, opts)?;
    Ok((s.t, s.b))
}

/// Number of sign changes of the zero-energy solution that tends to 1 at
/// `x → −∞`, including the crossing of its linear tail beyond the support.
/// By the oscillation theorem this is the number of bound states.
pub fn zero_energy_nodes(p: &Potential, step: f64) -> usize {
    let r = p.support_radius();
    let mut marks = vec![-r, r];
    marks.extend(p.breakpoints().into_iter().filter(|x| x.abs() < r));
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    let u = |s: f64| p.evaluate(s);
    let (mut y, mut dy) = (1.0_f64, 0.0_f64);
    let mut nodes = 0;
    for w in marks.windows(2) {
        let n = ((w[1] - w[0]) / step).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / n as f64;
        for j in 0..n {
            let m = magnus_step(&u, 0.0, w[0] + j as f64 * h, h);
            let (ny, ndy) = (m[0][0] * y + m[0][1] * dy, m[1][0] * y + m[1][1] * dy);
            if ny == 0.0 || ny.signum() != y.signum() {
                nodes += 1;
            }
            // keep magnitudes bounded through deep wells
            let scale = ny.abs().max(ndy.abs()).max(1e-300);
            if scale > 1e100 {
                y = ny / scale;
                dy = ndy / scale;
            } else {
                y = ny;
                dy = ndy;
            }
        }
    }
    if y * dy < 0.0 {
        nodes += 1;
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_delta, make_poschl_teller, Shape};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn rejects_non_positive_k() {
        let p = make_poschl_teller(1).unwrap();
        assert!(matches!(solve_direct(&p, 0.0, &opts()), Err(Error::Domain(_))));
        assert!(matches!(solve_zurdo(&p, -1.0, &opts()), Err(Error::Domain(_))));
    }

    #[test]
    fn poschl_teller_k1() {
        let s = solve_direct(&make_poschl_teller(1).unwrap(), 1.0, &opts()).unwrap();
        assert!((s.t - Complex64::i()).norm() < 1e-6, "t = {}", s.t);
        assert!(s.b.norm() < 1e-6);
        let i0 = s.wavefunction.node(0.0).unwrap();
        assert!((s.wavefunction.psi[i0] - Complex64::new(0.5, 0.5)).norm() < 1e-6);
    }

    #[test]
    fn free_propagation_is_exact() {
        let p = Potential::free();
        for k in [0.01, 0.5, 3.0, 40.0] {
            let s = solve(&p, k, &opts()).unwrap();
            assert!((s.t - 1.0).norm() < 1e-12);
            assert!(s.b.norm() < 1e-12);
            assert!((s.t_z - 1.0).norm() < 1e-12 && s.b_z.norm() < 1e-12);
            let wf = &s.wavefunction;
            for i in (0..wf.len()).step_by(37) {
                assert!((wf.psi[i] - Complex64::from_polar(1.0, k * wf.x[i])).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn square_well_unitarity() {
        let p = Potential::analytic(Shape::SquareWell { depth: -1.0, half_width: 1.0 }).unwrap();
        let s = solve(&p, 2.0, &opts()).unwrap();
        assert!(s.unitarity_residual() < 1e-8);
    }

    #[test]
    fn square_well_matches_transfer_matrix_closed_form() {
        // t for a centered well of depth V0 and half-width a
        let (v0, a, k) = (1.0_f64, 1.0_f64, 2.0_f64);
        let q = (k * k + v0).sqrt();
        let i = Complex64::i();
        let t_exact = (-2.0 * i * k * a).exp() * 2.0 * k * q
            / (2.0 * k * q * (2.0 * q * a).cos() - i * (k * k + q * q) * (2.0 * q * a).sin());
        let p = Potential::analytic(Shape::SquareWell { depth: -v0, half_width: a }).unwrap();
        let s = solve_direct(&p, k, &opts()).unwrap();
        assert!((s.t - t_exact).norm() < 1e-10, "{} vs {}", s.t, t_exact);
    }

    #[test]
    fn zurdo_mirrors_direct() {
        let p = Potential::composite(vec![
            Shape::Gaussian { amplitude: -1.5, center: -1.0, width: 0.6 },
            Shape::Gaussian { amplitude: -0.7, center: 1.3, width: 0.9 },
        ])
        .unwrap();
        let d = solve_direct(&p, 1.0, &opts()).unwrap();
        let z = solve_zurdo(&p, 1.0, &opts()).unwrap();
        assert!((d.t - z.t).norm() < TIME_REVERSAL_TOL);
        assert!((d.b.norm() - z.b.norm()).abs() < UNITARITY_TOL);
        assert!((d.b.arg() - z.b.arg()).abs() > 1e-3);
        // ψ̃ → t̃ e^{−ikx} on the far left
        let wf = &z.wavefunction;
        let e = Complex64::from_polar(1.0, -wf.x[0]);
        assert!((wf.psi[0] - z.t * e).norm() < 1e-8);
    }

    #[test]
    fn even_potential_channels_agree() {
        let p = make_poschl_teller(2).unwrap();
        let d = solve_direct(&p, 0.8, &opts()).unwrap();
        let z = solve_zurdo(&p, 0.8, &opts()).unwrap();
        assert!((d.b - z.b).norm() < 1e-6);
    }

    #[test]
    fn delta_closed_form_wavefunction() {
        let p = make_delta(-2.0).unwrap();
        let s = solve(&p, 1.0, &opts()).unwrap();
        assert!((s.b - Complex64::new(-0.5, 0.5)).norm() < 1e-15);
        assert_eq!(s.t, s.t_z);
    }

    #[test]
    fn node_counting_poschl_teller() {
        assert_eq!(zero_energy_nodes(&make_poschl_teller(1).unwrap(), 1e-2), 1);
        assert_eq!(zero_energy_nodes(&make_poschl_teller(2).unwrap(), 1e-2), 2);
        assert_eq!(zero_energy_nodes(&Potential::free(), 1e-2), 0);
    }

    #[test]
    fn matching_window_must_clear_support() {
        let p = make_poschl_teller(1).unwrap();
        let o = SolverOptions { l_box: Some(5.0), ..opts() };
        assert!(matches!(solve_direct(&p, 1.0, &o), Err(Error::Domain(_))));
    }
}
