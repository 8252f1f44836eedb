//! S-matrix assembly, phase curves and the determinant winding.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::solver::{self, Channel, ChannelSolution, ScatteringSolution, SolverOptions, UNITARITY_TOL};

/// `|b|` below which reflection phases are treated as undefined.
pub const PHASE_FLOOR: f64 = 1e-4;

/// Adjacent wrapped phase differences above this trigger grid refinement.
const REFINE_JUMP: f64 = 0.5 * PI;
/// Jumps this close to π after refinement are ambiguous.
const AMBIGUOUS_JUMP: f64 = 0.9 * PI;
const MAX_REFINE_PASSES: usize = 12;
/// Number of smallest-k points used to extrapolate phases to k = 0⁺.
const EXTRAPOLATION_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SMatrix {
    pub k: f64,
    /// `[[t, b̃], [b, t̃]]`
    pub entries: [[Complex64; 2]; 2],
    /// max entry of `|S†S − 1|`
    pub unitarity_residual: f64,
    /// set when the unitarity residual exceeds ten times the tolerance
    pub degraded: bool,
}

impl SMatrix {
    pub fn from_amplitudes(k: f64, t: Complex64, b: Complex64, t_z: Complex64, b_z: Complex64) -> Self {
        let entries = [[t, b_z], [b, t_z]];
        let mut residual: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc: Complex64 = entries.iter().map(|row| row[i].conj() * row[j]).sum();
                if i == j {
                    acc -= 1.0;
                }
                residual = residual.max(acc.norm());
            }
        }
        SMatrix {
            k,
            entries,
            unitarity_residual: residual,
            degraded: residual > 10.0 * UNITARITY_TOL,
        }
    }

    pub fn from_solution(s: &ScatteringSolution) -> Self {
        Self::from_amplitudes(s.k, s.t, s.b, s.t_z, s.b_z)
    }

    pub fn t(&self) -> Complex64 {
        self.entries[0][0]
    }

    pub fn det(&self) -> Complex64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }
}

/// `S(k)` from the two channel solutions at the same `k`.
pub fn assemble(direct: &ChannelSolution, zurdo: &ChannelSolution) -> Result<SMatrix> {
    if direct.channel != Channel::Direct || zurdo.channel != Channel::Zurdo {
        return Err(Error::InvalidArgument("expected a direct and a zurdo solution".into()));
    }
    if direct.k != zurdo.k {
        return Err(Error::InvalidArgument(format!("k mismatch: {} vs {}", direct.k, zurdo.k)));
    }
    Ok(SMatrix::from_amplitudes(direct.k, direct.t, direct.b, zurdo.t, zurdo.b))
}

/// Geometrically spaced wavenumbers.
pub fn geometric_grid(k_min: f64, k_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && k_min > 0.0 && k_max > k_min);
    let ratio = (k_max / k_min).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { k_max } else { k_min * (ratio * i as f64).exp() })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveOptions {
    pub solver: SolverOptions,
    pub phase_floor: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            phase_floor: PHASE_FLOOR,
        }
    }
}

/// Amplitudes and unwrapped phases over a k-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCurve {
    pub k: Vec<f64>,
    pub t: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub t_z: Vec<Complex64>,
    pub b_z: Vec<Complex64>,
    /// continuous forward phase, branch fixed by the Born estimate at `k_max`
    pub phi_t: Vec<f64>,
    /// reflection phases; NaN where `|b|` is below the phase floor
    pub phi_r: Vec<f64>,
    pub phi_r_z: Vec<f64>,
    /// `φ_t(0⁺)` from a quadratic fit on the smallest grid points
    pub phi_t_0: f64,
    /// `φ_t(k_max) + ⟨u⟩/(2 k_max)`: the tail-corrected large-k limit
    pub phi_t_inf: f64,
    /// `⟨u⟩`
    pub moment0: f64,
    pub max_match_residual: f64,
}

impl PhaseCurve {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn k_max(&self) -> f64 {
        *self.k.last().expect("non-empty curve")
    }

    pub fn smatrix(&self, i: usize) -> SMatrix {
        SMatrix::from_amplitudes(self.k[i], self.t[i], self.b[i], self.t_z[i], self.b_z[i])
    }

    /// `|Det S − exp(2iφ_t)|` per grid point.
    pub fn det_residuals(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| (self.smatrix(i).det() - Complex64::from_polar(1.0, 2.0 * self.phi_t[i])).norm())
            .collect()
    }

    pub fn max_unitarity_residual(&self) -> f64 {
        self.t
            .iter()
            .zip(&self.b)
            .chain(self.t_z.iter().zip(&self.b_z))
            .map(|(t, b)| (1.0 - t.norm_sqr() - b.norm_sqr()).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_time_reversal_residual(&self) -> f64 {
        self.t.iter().zip(&self.t_z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Born-tail mismatch `|φ_t(k_max) + ⟨u⟩/(2 k_max)|`.
    pub fn born_anchor_residual(&self) -> f64 {
        let kmax = self.k_max();
        (self.phi_t[self.len() - 1] + self.moment0 / (2.0 * kmax)).abs()
    }

    /// `φ_t(0) − φ_t(∞)`
    pub fn delta_phi(&self) -> f64 {
        self.phi_t_0 - self.phi_t_inf
    }

    /// `|2φ_t − φ_r − φ̃_r − π|` reduced mod 2π, where both reflection phases
    /// are defined.
    pub fn reflection_phase_residuals(&self) -> Vec<(f64, f64)> {
        (0..self.len())
            .filter(|&i| self.phi_r[i].is_finite() && self.phi_r_z[i].is_finite())
            .map(|i| {
                let d = 2.0 * self.phi_t[i] - self.phi_r[i] - self.phi_r_z[i] - PI;
                (self.k[i], wrap(d).abs())
            })
            .collect()
    }
}

/// Reduce to (−π, π].
pub fn wrap(a: f64) -> f64 {
    let r = a - 2.0 * PI * (a / (2.0 * PI)).round();
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Branch of `raw` closest to `reference`.
fn nearest_branch(raw: f64, reference: f64) -> f64 {
    raw + 2.0 * PI * ((reference - raw) / (2.0 * PI)).round()
}

/// Value at 0 of the least-squares quadratic through `(x, y)`.
pub(crate) fn quadratic_extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(n, y.len());
    if n < 3 {
        return y[0];
    }
    // scale abscissae for conditioning
    let s = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let z = xi / s;
        let row = [1.0, z, z * z];
        for r in 0..3 {
            aty[r] += row[r] * yi;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    solve3(ata, aty)[0]
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, src) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in row + 1..3 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    x
}

#[derive(Debug, Clone, Copy)]
struct Point {
    k: f64,
    t: Complex64,
    b: Complex64,
    t_z: Complex64,
    b_z: Complex64,
    residual: f64,
}

fn solve_point(p: &Potential, k: f64, opts: &SolverOptions) -> Result<Point> {
    let s = solver::solve(p, k, opts)?;
    Ok(Point {
        k,
        t: s.t,
        b: s.b,
        t_z: s.t_z,
        b_z: s.b_z,
        residual: s.match_residual,
    })
}

#[cfg(feature = "parallel")]
fn solve_many(p: &Potential, ks: &[f64], opts: &SolverOptions) -> Result<Vec<Point>> {
    use rayon::prelude::*;
    ks.par_iter().map(|&k| solve_point(p, k, opts)).collect()
}

#[cfg(not(feature = "parallel"))]
fn solve_many(p: &Potential, ks: &[f64], opts: &SolverOptions) -> Result<Vec<Point>> {
    ks.iter().map(|&k| solve_point(p, k, opts)).collect()
}

/// Continuous version of `raw` (indexed by ascending k), walking downward from
/// the last entry whose branch is chosen closest to `anchor`.
fn unwrap_downward(raw: &[f64], anchor: f64) -> Vec<f64> {
    let n = raw.len();
    let mut out = vec![0.0; n];
    out[n - 1] = nearest_branch(raw[n - 1], anchor);
    for i in (0..n - 1).rev() {
        out[i] = nearest_branch(raw[i], out[i + 1]);
    }
    out
}

/// Reflection phase unwrapped within each run where `|b| > floor`.
fn unwrap_reflection(b: &[Complex64], floor: f64) -> Vec<f64> {
    let n = b.len();
    let mut out = vec![f64::NAN; n];
    for i in (0..n).rev() {
        if b[i].norm() <= floor {
            continue;
        }
        let raw = b[i].arg();
        out[i] = if i + 1 < n && out[i + 1].is_finite() {
            nearest_branch(raw, out[i + 1])
        } else {
            raw
        };
    }
    out
}

/// Solves both channels over `k_grid`, refines where the forward phase moves
/// too fast, and unwraps the phases from `k_max` downward.
pub fn build_phase_curve(p: &Potential, k_grid: &[f64], opts: &CurveOptions) -> Result<PhaseCurve> {
    if k_grid.len() < EXTRAPOLATION_POINTS || k_grid.windows(2).any(|w| !(w[1] > w[0])) || !(k_grid[0] > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "k-grid must hold ≥ {EXTRAPOLATION_POINTS} strictly increasing positive values"
        )));
    }
    let mut points = solve_many(p, k_grid, &opts.solver)?;

    for pass in 0..=MAX_REFINE_PASSES {
        let fast: Vec<usize> = points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| wrap(w[1].t.arg() - w[0].t.arg()).abs() > REFINE_JUMP)
            .map(|(i, _)| i)
            .collect();
        if fast.is_empty() {
            break;
        }
        if pass == MAX_REFINE_PASSES {
            let worst = fast
                .iter()
                .copied()
                .max_by(|&i, &j| {
                    let ji = wrap(points[i + 1].t.arg() - points[i].t.arg()).abs();
                    let jj = wrap(points[j + 1].t.arg() - points[j].t.arg()).abs();
                    ji.total_cmp(&jj)
                })
                .unwrap();
            let jump = wrap(points[worst + 1].t.arg() - points[worst].t.arg()).abs();
            if jump > AMBIGUOUS_JUMP {
                return Err(Error::UnwrapFailure {
                    k_lo: points[worst].k,
                    k_hi: points[worst + 1].k,
                    jump,
                });
            }
            break;
        }
        let mids: Vec<f64> = fast.iter().map(|&i| (points[i].k * points[i + 1].k).sqrt()).collect();
        let new = solve_many(p, &mids, &opts.solver)?;
        points.extend(new);
        points.sort_by(|a, b| a.k.total_cmp(&b.k));
    }

    let k: Vec<f64> = points.iter().map(|q| q.k).collect();
    let t: Vec<Complex64> = points.iter().map(|q| q.t).collect();
    let b: Vec<Complex64> = points.iter().map(|q| q.b).collect();
    let t_z: Vec<Complex64> = points.iter().map(|q| q.t_z).collect();
    let b_z: Vec<Complex64> = points.iter().map(|q| q.b_z).collect();
    let k_max = *k.last().unwrap();
    let moment0 = p.moment0();

    let raw: Vec<f64> = t.iter().map(|z| z.arg()).collect();
    let phi_t = unwrap_downward(&raw, -moment0 / (2.0 * k_max));
    let m = EXTRAPOLATION_POINTS;
    let phi_t_0 = quadratic_extrapolate_to_zero(&k[..m], &phi_t[..m]);
    let phi_t_inf = phi_t[phi_t.len() - 1] + moment0 / (2.0 * k_max);

    Ok(PhaseCurve {
        phi_r: unwrap_reflection(&b, opts.phase_floor),
        phi_r_z: unwrap_reflection(&b_z, opts.phase_floor),
        max_match_residual: points.iter().map(|q| q.residual).fold(0.0, f64::max),
        k,
        t,
        b,
        t_z,
        b_z,
        phi_t,
        phi_t_0,
        phi_t_inf,
        moment0,
    })
}

/// Winding of `s(k) = Det S(k)` over `0 < k < ∞`, `(−1/2πi) ∫ ṡ/s dk`.
///
/// Uses only the S-matrix entries stored on the curve: phase increments of
/// `s` between grid points, a quadratic extrapolation of `arg s` to `k = 0`,
/// and the Born tail `arg s → arg s(k_max) + ⟨u⟩/k_max` beyond the grid.
pub fn det_winding(curve: &PhaseCurve) -> f64 {
    let n = curve.len();
    let s: Vec<Complex64> = (0..n).map(|i| curve.smatrix(i).det()).collect();
    let mut arg = vec![0.0; n];
    arg[n - 1] = s[n - 1].arg();
    for i in (0..n - 1).rev() {
        arg[i] = arg[i + 1] + (s[i] / s[i + 1]).arg();
    }
    let m = EXTRAPOLATION_POINTS.min(n);
    let arg_zero = quadratic_extrapolate_to_zero(&curve.k[..m], &arg[..m]);
    let arg_inf = arg[n - 1] + curve.moment0 / curve.k_max();
    -(arg_inf - arg_zero) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_delta, make_poschl_teller, Shape};

    #[test]
    fn assemble_checks_inputs() {
        let p = make_poschl_teller(1).unwrap();
        let o = SolverOptions::default();
        let d = solver::solve_direct(&p, 1.0, &o).unwrap();
        let z = solver::solve_zurdo(&p, 1.0, &o).unwrap();
        let s = assemble(&d, &z).unwrap();
        assert!((s.entries[0][0] - Complex64::i()).norm() < 1e-6);
        assert!((s.entries[1][1] - Complex64::i()).norm() < 1e-6);
        assert!((s.det() + 1.0).norm() < 1e-6);
        assert!(!s.degraded);
        assert!(assemble(&z, &d).is_err());
        let z2 = solver::solve_zurdo(&p, 1.1, &o).unwrap();
        assert!(matches!(assemble(&d, &z2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn free_smatrix_is_identity() {
        let p = Potential::free();
        let s = SMatrix::from_solution(&solver::solve(&p, 0.7, &SolverOptions::default()).unwrap());
        assert!((s.entries[0][0] - 1.0).norm() < 1e-12 && (s.entries[1][1] - 1.0).norm() < 1e-12);
        assert!(s.entries[0][1].norm() < 1e-12 && s.entries[1][0].norm() < 1e-12);
    }

    #[test]
    fn delta_det_is_unimodular() {
        let p = make_delta(-2.0).unwrap();
        let s = SMatrix::from_solution(&solver::solve(&p, 1.0, &SolverOptions::default()).unwrap());
        assert!((s.det().norm() - 1.0).abs() < 1e-12);
        assert!(s.unitarity_residual < 1e-12);
    }

    #[test]
    fn degraded_flag() {
        let s = SMatrix::from_amplitudes(1.0, Complex64::new(1.1, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        assert!(s.degraded);
    }

    #[test]
    fn wrap_range() {
        for a in [-7.0, -PI, 0.0, PI, 3.0 * PI, 10.0] {
            let w = wrap(a);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            assert!(((a - w) / (2.0 * PI)).fract().abs() < 1e-12 || ((a - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn extrapolation_is_exact_for_quadratics() {
        let x = [1e-3, 1.1e-3, 1.2e-3, 1.35e-3, 1.5e-3];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v + 50.0 * v * v).collect();
        assert!((quadratic_extrapolate_to_zero(&x, &y) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn delta_curve_limits() {
        let p = make_delta(-2.0).unwrap();
        let c = build_phase_curve(&p, &geometric_grid(1e-3, 50.0, 200), &CurveOptions::default()).unwrap();
        assert!((c.phi_t_0 - PI / 2.0).abs() < 1e-6);
        assert!((det_winding(&c) - 0.5).abs() < 0.01);
    }

    #[test]
    fn free_curve_is_flat() {
        let c = build_phase_curve(&Potential::free(), &geometric_grid(1e-3, 50.0, 50), &CurveOptions::default()).unwrap();
        assert!(c.phi_t.iter().all(|v| v.abs() < 1e-12));
        assert!(det_winding(&c).abs() < 1e-12);
        assert!(c.phi_r.iter().all(|v| v.is_nan()));
    }

    #[test]
    fn rejects_bad_grid() {
        let p = Potential::free();
        assert!(build_phase_curve(&p, &[1.0, 0.5, 2.0, 3.0, 4.0], &CurveOptions::default()).is_err());
        assert!(build_phase_curve(&p, &[1.0, 2.0], &CurveOptions::default()).is_err());
    }

    #[test]
    fn square_well_reflection_identity() {
        let p = Potential::composite(vec![
            Shape::SquareWell { depth: -1.0, half_width: 1.0 },
            Shape::Gaussian { amplitude: 0.8, center: 1.5, width: 0.4 },
        ])
        .unwrap();
        let c = build_phase_curve(&p, &geometric_grid(1e-2, 20.0, 120), &CurveOptions::default()).unwrap();
        for (k, r) in c.reflection_phase_residuals() {
            assert!(r < 1e-4, "k = {k}: {r}");
        }
    }
}
