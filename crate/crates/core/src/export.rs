//! CSV and JSON renderings. Numbers are written with 17 significant digits so
//! files round-trip bit for bit.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levinson::LevinsonReport;
use crate::potentials::Potential;
use crate::smatrix::PhaseCurve;
use crate::solver::SolverOptions;
use crate::spectral::{self, SpectralDensity};

/// `1.2345678901234567e-3` style, or `NaN`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

fn csv_text<H, R>(header: H, rows: R) -> Result<String>
where
    H: IntoIterator,
    H::Item: AsRef<[u8]>,
    R: IntoIterator<Item = Vec<f64>>,
{
    let io = |e: csv::Error| Error::Parse(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt_f64(v))).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub const PHASE_CURVE_HEADER: [&str; 11] = [
    "k", "re_t", "im_t", "re_b", "im_b", "abs_t2", "abs_b2", "phi_t", "phi_r", "phi_r_z", "det_residual",
];

pub fn phase_curve_csv(curve: &PhaseCurve) -> Result<String> {
    let det = curve.det_residuals();
    let rows = (0..curve.len()).map(|i| {
        let (t, b) = (curve.t[i], curve.b[i]);
        vec![
            curve.k[i],
            t.re,
            t.im,
            b.re,
            b.im,
            t.norm_sqr(),
            b.norm_sqr(),
            curve.phi_t[i],
            curve.phi_r[i],
            curve.phi_r_z[i],
            det[i],
        ]
    });
    csv_text(PHASE_CURVE_HEADER, rows)
}

/// Box densities `ρ_L(k)` and the finite-box identity residual at each `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxColumns {
    pub ls: Vec<f64>,
    /// `rho_box[j][i]` at `L = ls[j]`, `k = density.k[i]`
    pub rho_box: Vec<Vec<f64>>,
    /// max over `L` of the identity residual at each `k`
    pub identity_residual: Vec<f64>,
}

impl BoxColumns {
    /// Box densities and identity residuals on `ks` for each `L` in `ls`.
    pub fn compute(p: &Potential, ks: &[f64], ls: &[f64], opts: &SolverOptions) -> Result<Self> {
        let per_k = |&k: &f64| spectral::finite_l_identity(p, k, ls, opts);
        #[cfg(feature = "parallel")]
        let checks: Vec<_> = {
            use rayon::prelude::*;
            ks.par_iter().map(per_k).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let checks: Vec<_> = ks.iter().map(per_k).collect::<Result<_>>()?;
        Ok(BoxColumns {
            ls: ls.to_vec(),
            rho_box: (0..ls.len()).map(|j| checks.iter().map(|c| c[j].box_density).collect()).collect(),
            identity_residual: checks
                .iter()
                .map(|c| c.iter().map(|x| x.residual()).fold(0.0, f64::max))
                .collect(),
        })
    }
}

pub fn density_csv(density: &SpectralDensity, boxes: Option<&BoxColumns>) -> Result<String> {
    let mut header = vec!["k".to_string(), "rho_smooth".to_string()];
    if let Some(bx) = boxes {
        if bx.rho_box.len() != bx.ls.len()
            || bx.rho_box.iter().any(|c| c.len() != density.k.len())
            || bx.identity_residual.len() != density.k.len()
        {
            return Err(Error::InvalidArgument("box columns do not match the density grid".into()));
        }
        header.extend(bx.ls.iter().map(|l| format!("rho_box(L={l})")));
        header.push("identity_residual".into());
    }
    let rows = (0..density.k.len()).map(|i| {
        let mut row = vec![density.k[i], density.rho_smooth[i]];
        if let Some(bx) = boxes {
            row.extend(bx.rho_box.iter().map(|c| c[i]));
            row.push(bx.identity_residual[i]);
        }
        row
    });
    csv_text(header, rows)
}

/// Sidecar for the density CSV: the parts that are not functions of `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySidecar {
    pub potential: String,
    pub delta_weight: f64,
    pub b0: f64,
    pub moment0: f64,
    pub sum_rule_integral: f64,
    pub box_sizes: Vec<f64>,
}

pub fn density_sidecar_json(sidecar: &DensitySidecar) -> Result<String> {
    to_json(sidecar)
}

pub fn report_json(report: &LevinsonReport) -> Result<String> {
    to_json(report)
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))
}

/// Plain-text table of criterion outcomes.
pub fn outcome_table(outcomes: &[crate::suite::CriterionOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        let _ = writeln!(
            s,
            "{:<4} {:>2}  {:<34} {:>11.3e} < {:<9.1e} {:>7.2}s  {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.metric,
            o.threshold,
            o.seconds,
            o.detail
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::make_poschl_teller;
    use crate::smatrix::{build_phase_curve, geometric_grid};

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn phase_csv_shape_and_round_trip() {
        let p = make_poschl_teller(1).unwrap();
        let c = build_phase_curve(&p, &geometric_grid(0.01, 10.0, 40), &Default::default()).unwrap();
        let text = phase_curve_csv(&c).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rd.headers().unwrap(), &csv::StringRecord::from(PHASE_CURVE_HEADER.to_vec()));
        let rows: Vec<Vec<f64>> = rd
            .records()
            .map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), c.len());
        for (r, k) in rows.iter().zip(&c.k) {
            assert_eq!(r[0], *k);
            // reflectionless
            assert!(r[6] < 1e-12, "{}", r[6]);
        }
    }

    #[test]
    fn density_csv_checks_columns() {
        let d = SpectralDensity {
            k: vec![1.0, 2.0],
            rho_smooth: vec![-1.0, -0.4],
            delta_weight: 0.0,
            b0: 0.0,
            moment0: -4.0,
        };
        let bad = BoxColumns {
            ls: vec![30.0],
            rho_box: vec![vec![0.0]],
            identity_residual: vec![0.0, 0.0],
        };
        assert!(density_csv(&d, Some(&bad)).is_err());
        let ok = BoxColumns {
            ls: vec![30.0, 40.0],
            rho_box: vec![vec![0.0, 1.0], vec![2.0, 3.0]],
            identity_residual: vec![0.0, 0.0],
        };
        let text = density_csv(&d, Some(&ok)).unwrap();
        assert!(text.starts_with("k,rho_smooth,rho_box(L=30),rho_box(L=40),identity_residual\n"));
    }
}
