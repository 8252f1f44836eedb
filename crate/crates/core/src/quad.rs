//! Quadrature helpers: adaptive Gauss-Kronrod for smooth integrands and
//! composite Simpson for sampled data.

use crate::error::{Error, Result};

// 15-point Kronrod nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights on the odd nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive Gauss-Kronrod (7/15) on `[a, b]`, bisecting the worst segment until
/// the summed error estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_SEGMENTS: usize = 2000;
    let mut segments = vec![gk15(&f, a, b)];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(value);
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::Accuracy { residual: error });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(gk15(&f, s.a, mid));
        segments.push(gk15(&f, mid, s.b));
    }
}

/// Integrate over consecutive intervals `[pts[i], pts[i+1]]`, so that
/// integrand kinks at the given points never fall inside a panel.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: F, pts: &[f64], abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let panels = pts.len().saturating_sub(1).max(1) as f64;
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(&f, w[0], w[1], abs_tol / panels, rel_tol)?;
    }
    Ok(total)
}

/// Composite Simpson on uniformly spaced samples; closes the last panel with a
/// four-point cubic when the number of intervals is odd.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let intervals = n - 1;
            let even = intervals - intervals % 2;
            let mut s = values[0] + values[even];
            for (i, v) in values.iter().enumerate().take(even).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = s * h / 3.0;
            if even < intervals {
                // last panel: cubic through the final four samples
                let (a, b, c, d) = (values[n - 4], values[n - 3], values[n - 2], values[n - 1]);
                total += h * (a - 5.0 * b + 19.0 * c + 9.0 * d) / 24.0;
            }
            total
        }
    }
}

/// Trapezoid rule over arbitrary (sorted) abscissae.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_kronrod_polynomial_and_peaked() {
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1e-13, 0.0).unwrap();
        assert_relative_eq!(v, 3.75, epsilon = 1e-12);
        let g = integrate(|x| (-x * x / 0.02).exp(), -5.0, 5.0, 1e-12, 0.0).unwrap();
        assert_relative_eq!(g, (0.02 * std::f64::consts::PI).sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn simpson_handles_odd_interval_count() {
        let h = 0.01;
        let even: Vec<f64> = (0..=100).map(|i| (i as f64 * h).sin()).collect();
        let odd: Vec<f64> = (0..=101).map(|i| (i as f64 * h).sin()).collect();
        assert_relative_eq!(simpson_uniform(&even, h), 1.0 - 1.0f64.cos(), epsilon = 1e-10);
        assert_relative_eq!(simpson_uniform(&odd, h), 1.0 - 1.01f64.cos(), epsilon = 1e-9);
    }
}
