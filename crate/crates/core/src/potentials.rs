//! Local real potentials `u(x)` entering `ψ'' + k²ψ = uψ`.
//!
//! A [`Potential`] is immutable once built. Construction validates the
//! parameters, computes a support radius beyond which `|u| < SUPPORT_EPS`, and
//! stores the moments `∫u dx` and `∫(1 + x²)|u| dx`; the latter must be finite
//! for the scattering problem to make sense.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::spline::CubicSpline;

/// Potential magnitude below which a region counts as asymptotic.
pub const SUPPORT_EPS: f64 = 1e-10;

/// Default width of the square-well stand-in for `g δ(x)`.
pub const DELTA_SURROGATE_WIDTH: f64 = 1e-3;

const MOMENT_ABS_TOL: f64 = 1e-12;
const MOMENT_REL_TOL: f64 = 1e-12;

/// A smooth or piecewise-constant closed-form shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    /// `−ℓ(ℓ+1) sech² x`
    PoschlTeller { l: u32 },
    /// `−λ sech² x` for arbitrary real strength; the Pöschl–Teller family
    /// interpolated between integer `ℓ`.
    Sech2 { lambda: f64 },
    /// `depth` on `|x| < half_width`, zero elsewhere.
    SquareWell { depth: f64, half_width: f64 },
    /// `amplitude · exp(−(x − center)² / (2 width²))`
    Gaussian { amplitude: f64, center: f64, width: f64 },
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite")))
            }
        };
        match *self {
            Shape::PoschlTeller { l } if l < 1 => Err(Error::InvalidParameter("Pöschl–Teller ℓ must be ≥ 1".into())),
            Shape::PoschlTeller { .. } => Ok(()),
            Shape::Sech2 { lambda } => finite(lambda, "sech² strength"),
            Shape::SquareWell { depth, half_width } => {
                finite(depth, "depth")?;
                finite(half_width, "half-width")?;
                if half_width > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("square-well half-width must be > 0".into()))
                }
            }
            Shape::Gaussian { amplitude, center, width } => {
                finite(amplitude, "amplitude")?;
                finite(center, "center")?;
                finite(width, "width")?;
                if width > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("gaussian width must be > 0".into()))
                }
            }
        }
    }

    fn sech2_strength(&self) -> Option<f64> {
        match *self {
            Shape::PoschlTeller { l } => Some(f64::from(l) * f64::from(l + 1)),
            Shape::Sech2 { lambda } => Some(lambda),
            _ => None,
        }
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        if let Some(lambda) = self.sech2_strength() {
            let c = x.cosh();
            return -lambda / (c * c);
        }
        match *self {
            Shape::SquareWell { depth, half_width } => {
                if x.abs() < half_width {
                    depth
                } else {
                    0.0
                }
            }
            Shape::Gaussian { amplitude, center, width } => {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            _ => unreachable!(),
        }
    }

    /// Radius beyond which `|u| < eps`.
    fn support_radius(&self, eps: f64) -> f64 {
        if let Some(lambda) = self.sech2_strength() {
            let ratio = lambda.abs() / eps;
            return if ratio > 1.0 { ratio.sqrt().acosh() } else { 0.0 };
        }
        match *self {
            Shape::SquareWell { half_width, .. } => half_width,
            Shape::Gaussian { amplitude, center, width } => {
                let ratio = amplitude.abs() / eps;
                if ratio > 1.0 {
                    center.abs() + width * (2.0 * ratio.ln()).sqrt()
                } else {
                    center.abs()
                }
            }
            _ => unreachable!(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Shape::SquareWell { half_width, .. } => vec![-half_width, half_width],
            _ => Vec::new(),
        }
    }

    /// Closed-form `(∫u, ∫(1+x²)|u|)`.
    fn moments(&self) -> (f64, f64) {
        if let Some(lambda) = self.sech2_strength() {
            // ∫sech² = 2, ∫x² sech² = π²/6
            return (-2.0 * lambda, lambda.abs() * (2.0 + PI * PI / 6.0));
        }
        match *self {
            Shape::SquareWell { depth, half_width: a } => (2.0 * a * depth, depth.abs() * (2.0 * a + 2.0 * a.powi(3) / 3.0)),
            Shape::Gaussian { amplitude, center, width } => {
                let mass = width * (2.0 * PI).sqrt();
                (amplitude * mass, amplitude.abs() * mass * (1.0 + center * center + width * width))
            }
            _ => unreachable!(),
        }
    }

    fn mirrored(&self) -> Shape {
        match self.clone() {
            Shape::Gaussian { amplitude, center, width } => Shape::Gaussian { amplitude, center: -center, width },
            other => other,
        }
    }

    fn is_even(&self) -> bool {
        match *self {
            Shape::Gaussian { center, .. } => center == 0.0,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Analytic(Shape),
    /// `g δ(x)`; carried symbolically, never sampled.
    Delta { g: f64 },
    /// Sum of analytic shapes. An empty list is the free problem.
    Composite(Vec<Shape>),
    /// Natural cubic spline through samples, zero outside their range.
    Sampled(CubicSpline),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    support_radius: f64,
    moment0: f64,
    moment2: f64,
}

impl Potential {
    fn build(kind: PotentialKind) -> Result<Self> {
        let support_radius = match &kind {
            PotentialKind::Analytic(s) => s.support_radius(SUPPORT_EPS),
            PotentialKind::Delta { .. } => 0.0,
            PotentialKind::Composite(terms) => {
                let eps = SUPPORT_EPS / terms.len().max(1) as f64;
                terms.iter().map(|s| s.support_radius(eps)).fold(0.0, f64::max)
            }
            PotentialKind::Sampled(spline) => spline.x_min().abs().max(spline.x_max().abs()),
        };
        let mut p = Potential {
            kind,
            support_radius,
            moment0: 0.0,
            moment2: 0.0,
        };
        let (m0, m2) = match &p.kind {
            PotentialKind::Analytic(s) => s.moments(),
            PotentialKind::Delta { g } => (*g, g.abs()),
            PotentialKind::Composite(terms) if terms.is_empty() => (0.0, 0.0),
            PotentialKind::Composite(terms) => {
                let m0 = terms.iter().map(|s| s.moments().0).sum();
                let (_, m2) = moment_integrals(&p)?;
                (m0, m2)
            }
            PotentialKind::Sampled(_) => moment_integrals(&p)?,
        };
        if !m2.is_finite() || !m0.is_finite() {
            return Err(Error::InvalidParameter("∫(1 + x²)|u| dx is not finite".into()));
        }
        p.moment0 = m0;
        p.moment2 = m2;
        Ok(p)
    }

    pub fn analytic(shape: Shape) -> Result<Self> {
        shape.validate()?;
        Self::build(PotentialKind::Analytic(shape))
    }

    pub fn composite(terms: Vec<Shape>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        Self::build(PotentialKind::Composite(terms))
    }

    /// `u ≡ 0`
    pub fn free() -> Self {
        Self::build(PotentialKind::Composite(Vec::new())).expect("free potential")
    }

    /// Potential from `(x, u)` samples with strictly increasing `x`.
    pub fn sampled(samples: &[(f64, f64)]) -> Result<Self> {
        let (x, u): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
        let spline = CubicSpline::new(x, u).ok_or_else(|| {
            Error::InvalidParameter("samples need ≥ 2 finite points with strictly increasing x".into())
        })?;
        Self::build(PotentialKind::Sampled(spline))
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `⟨u⟩ = ∫u dx`
    pub fn moment0(&self) -> f64 {
        self.moment0
    }

    /// `∫(1 + x²)|u| dx`
    pub fn moment2(&self) -> f64 {
        self.moment2
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.kind, PotentialKind::Delta { .. })
    }

    pub fn delta_coupling(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Delta { g } => Some(g),
            _ => None,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(&self.kind, PotentialKind::Composite(t) if t.is_empty())
    }

    /// `u(x)`. The delta kind has no pointwise values and evaluates to zero;
    /// callers must branch on [`Potential::is_delta`].
    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Analytic(s) => s.evaluate(x),
            PotentialKind::Delta { .. } => 0.0,
            PotentialKind::Composite(terms) => terms.iter().map(|s| s.evaluate(x)).sum(),
            PotentialKind::Sampled(spline) => {
                if x > spline.x_min() && x < spline.x_max() {
                    spline.eval(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Points where `u` jumps; integrators and quadratures split there.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match &self.kind {
            PotentialKind::Analytic(s) => s.breakpoints(),
            PotentialKind::Delta { .. } => vec![0.0],
            PotentialKind::Composite(terms) => terms.iter().flat_map(Shape::breakpoints).collect(),
            PotentialKind::Sampled(spline) => vec![spline.x_min(), spline.x_max()],
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `u(−x)`
    pub fn mirrored(&self) -> Potential {
        let kind = match &self.kind {
            PotentialKind::Analytic(s) => PotentialKind::Analytic(s.mirrored()),
            PotentialKind::Delta { g } => PotentialKind::Delta { g: *g },
            PotentialKind::Composite(terms) => PotentialKind::Composite(terms.iter().map(Shape::mirrored).collect()),
            PotentialKind::Sampled(spline) => {
                let x: Vec<f64> = spline.knots().iter().rev().map(|v| -v).collect();
                let u: Vec<f64> = spline.values().iter().rev().copied().collect();
                PotentialKind::Sampled(CubicSpline::new(x, u).expect("mirror of valid samples"))
            }
        };
        Potential { kind, ..self.clone() }
    }

    /// True when `u(x) = u(−x)` holds by construction.
    pub fn is_even(&self) -> bool {
        match &self.kind {
            PotentialKind::Analytic(s) => s.is_even(),
            PotentialKind::Delta { .. } => true,
            PotentialKind::Composite(terms) => terms.iter().all(Shape::is_even),
            PotentialKind::Sampled(spline) => {
                let x = spline.knots();
                let u = spline.values();
                x.iter().zip(x.iter().rev()).all(|(a, b)| (a + b).abs() < 1e-12)
                    && u.iter().zip(u.iter().rev()).all(|(a, b)| (a - b).abs() < 1e-12)
            }
        }
    }

    /// Square well of width `width` and depth `g / width`, standing in for
    /// `g δ(x)` on the numerical path.
    pub fn delta_surrogate(&self, width: f64) -> Option<Potential> {
        let g = self.delta_coupling()?;
        Potential::analytic(Shape::SquareWell { depth: g / width, half_width: 0.5 * width }).ok()
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        fn shape_label(s: &Shape) -> String {
            match s {
                Shape::PoschlTeller { l } => format!("poschl-teller(l={l})"),
                Shape::Sech2 { lambda } => format!("sech2(lambda={lambda})"),
                Shape::SquareWell { depth, half_width } => format!("square-well(depth={depth}, half_width={half_width})"),
                Shape::Gaussian { amplitude, center, width } => {
                    format!("gaussian(amplitude={amplitude}, center={center}, width={width})")
                }
            }
        }
        match &self.kind {
            PotentialKind::Analytic(s) => shape_label(s),
            PotentialKind::Delta { g } => format!("delta(g={g})"),
            PotentialKind::Composite(t) if t.is_empty() => "free".into(),
            PotentialKind::Composite(t) => t.iter().map(shape_label).collect::<Vec<_>>().join(" + "),
            PotentialKind::Sampled(s) => format!("sampled({} points)", s.knots().len()),
        }
    }
}

/// `−ℓ(ℓ+1) sech² x`
pub fn make_poschl_teller(l: u32) -> Result<Potential> {
    Potential::analytic(Shape::PoschlTeller { l })
}

/// `g δ(x)`; `g = 0` is rejected (use [`Potential::free`]).
pub fn make_delta(g: f64) -> Result<Potential> {
    if !g.is_finite() || g == 0.0 {
        return Err(Error::InvalidParameter("delta coupling must be finite and non-zero".into()));
    }
    Potential::build(PotentialKind::Delta { g })
}

/// Exact `(t(k), b(k))` where a closed form is known: Pöschl–Teller with
/// `ℓ = 1` and the delta potential. `Ok(None)` for every other kind.
pub fn closed_form_amplitudes(p: &Potential, k: f64) -> Result<Option<(Complex64, Complex64)>> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    let ik = Complex64::new(0.0, k);
    Ok(match p.kind {
        PotentialKind::Analytic(Shape::PoschlTeller { l: 1 }) => Some(((ik - 1.0) / (ik + 1.0), Complex64::new(0.0, 0.0))),
        PotentialKind::Delta { g } => {
            let b = g / (2.0 * ik - g);
            Some((1.0 + b, b))
        }
        _ => None,
    })
}

/// Quadrature of `(∫u dx, ∫(1 + x²)|u| dx)` over the support, split at the
/// potential's breakpoints.
pub fn moment_integrals(p: &Potential) -> Result<(f64, f64)> {
    if let PotentialKind::Delta { g } = p.kind {
        return Ok((g, g.abs()));
    }
    if p.is_free() {
        return Ok((0.0, 0.0));
    }
    let r = p.support_radius;
    let mut pts = vec![-r];
    pts.extend(p.breakpoints().into_iter().filter(|&x| x > -r && x < r));
    pts.push(r);
    // sub-divide long spans so narrow features are seen by the first pass
    let mut refined = Vec::with_capacity(pts.len() * 4);
    for w in pts.windows(2) {
        let pieces = ((w[1] - w[0]) / 2.0).ceil().max(1.0) as usize;
        for j in 0..pieces {
            refined.push(w[0] + (w[1] - w[0]) * j as f64 / pieces as f64);
        }
    }
    refined.push(r);
    let m0 = quad::integrate_piecewise(|x| p.evaluate(x), &refined, MOMENT_ABS_TOL, MOMENT_REL_TOL)?;
    let m2 = quad::integrate_piecewise(|x| (1.0 + x * x) * p.evaluate(x).abs(), &refined, MOMENT_ABS_TOL, MOMENT_REL_TOL)?;
    Ok((m0, m2))
}

/// Serializable description of a potential (the CLI's `--spec` file format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Free,
    PoschlTeller { l: u32 },
    Sech2 { lambda: f64 },
    Delta { g: f64 },
    SquareWell { depth: f64, half_width: f64 },
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Composite { terms: Vec<Shape> },
    Sampled { samples: Vec<[f64; 2]> },
}

impl PotentialSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialSpec::Free => Ok(Potential::free()),
            PotentialSpec::PoschlTeller { l } => make_poschl_teller(*l),
            PotentialSpec::Sech2 { lambda } => Potential::analytic(Shape::Sech2 { lambda: *lambda }),
            PotentialSpec::Delta { g } => make_delta(*g),
            PotentialSpec::SquareWell { depth, half_width } => Potential::analytic(Shape::SquareWell {
                depth: *depth,
                half_width: *half_width,
            }),
            PotentialSpec::Gaussian { amplitude, center, width } => Potential::analytic(Shape::Gaussian {
                amplitude: *amplitude,
                center: *center,
                width: *width,
            }),
            PotentialSpec::Composite { terms } => Potential::composite(terms.clone()),
            PotentialSpec::Sampled { samples } => {
                let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s[0], s[1])).collect();
                Potential::sampled(&pts)
            }
        }
    }
}

impl From<&Potential> for PotentialSpec {
    fn from(p: &Potential) -> Self {
        match &p.kind {
            PotentialKind::Analytic(Shape::PoschlTeller { l }) => PotentialSpec::PoschlTeller { l: *l },
            PotentialKind::Analytic(Shape::Sech2 { lambda }) => PotentialSpec::Sech2 { lambda: *lambda },
            PotentialKind::Analytic(Shape::SquareWell { depth, half_width }) => PotentialSpec::SquareWell {
                depth: *depth,
                half_width: *half_width,
            },
            PotentialKind::Analytic(Shape::Gaussian { amplitude, center, width }) => PotentialSpec::Gaussian {
                amplitude: *amplitude,
                center: *center,
                width: *width,
            },
            PotentialKind::Delta { g } => PotentialSpec::Delta { g: *g },
            PotentialKind::Composite(t) if t.is_empty() => PotentialSpec::Free,
            PotentialKind::Composite(t) => PotentialSpec::Composite { terms: t.clone() },
            PotentialKind::Sampled(s) => PotentialSpec::Sampled {
                samples: s.knots().iter().zip(s.values()).map(|(x, u)| [*x, *u]).collect(),
            },
        }
    }
}
