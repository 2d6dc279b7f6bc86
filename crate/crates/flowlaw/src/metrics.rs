//! Accuracy reporting: average absolute relative error of the flow stress
//! and its three derivatives against the oracle columns of a test set.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mlp::{MlpModel, NormalizationRanges};
use crate::train::loss_erms;

/// References with magnitude below this are excluded from the AARE averages
/// and counted in `excluded` instead.
pub const AARE_REFERENCE_FLOOR: f64 = 1e-12;

/// One row of a performance table: E_RMS on normalized stresses plus the
/// four AARE percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub erms: f64,
    /// AARE of sigma, percent.
    pub aare_sigma: f64,
    /// AARE of d sigma / d eps_p, percent.
    pub aare_deps: f64,
    /// AARE of d sigma / d rate, percent.
    pub aare_drate: f64,
    /// AARE of d sigma / dT, percent.
    pub aare_dtemp: f64,
    pub param_count: usize,
    /// Reference entries skipped by the division guard, per quantity in the
    /// order (sigma, deps, drate, dT).
    pub excluded: [usize; 4],
}

impl MetricsReport {
    /// Largest of the three derivative errors.
    pub fn max_derivative_aare(&self) -> f64 {
        self.aare_deps.max(self.aare_drate).max(self.aare_dtemp)
    }

    /// One table row: model label, N, E_RMS, and the four AARE columns.
    pub fn table_row(&self, label: &str) -> String {
        format!(
            "{label}  N={}  E_RMS={:.3e}  AARE%: sigma={:.4} deps={:.4} drate={:.4} dT={:.4}",
            self.param_count,
            self.erms,
            self.aare_sigma,
            self.aare_deps,
            self.aare_drate,
            self.aare_dtemp
        )
    }
}

struct AareAccumulator {
    sum: f64,
    used: usize,
    excluded: usize,
}

impl AareAccumulator {
    fn new() -> Self {
        AareAccumulator {
            sum: 0.0,
            used: 0,
            excluded: 0,
        }
    }

    fn add(&mut self, reference: f64, predicted: f64) {
        if reference.abs() < AARE_REFERENCE_FLOOR {
            self.excluded += 1;
        } else {
            self.sum += ((reference - predicted) / reference).abs();
            self.used += 1;
        }
    }

    fn percent(&self) -> f64 {
        if self.used == 0 {
            0.0
        } else {
            100.0 * self.sum / self.used as f64
        }
    }
}

/// Evaluate an arbitrary hardening predictor against a test set that carries
/// oracle derivative columns. The predictor returns
/// (sigma, d/d eps_p, d/d rate, d/dT) at a physical point.
pub fn evaluate_law<F>(
    predict: F,
    ranges: &NormalizationRanges,
    param_count: usize,
    test: &Dataset,
) -> Result<MetricsReport>
where
    F: Fn(f64, f64, f64) -> Result<(f64, f64, f64, f64)>,
{
    test.validate()?;
    let derivs = test
        .derivs
        .as_ref()
        .ok_or_else(|| Error::dataset("test set carries no derivative columns"))?;
    let mut acc = [
        AareAccumulator::new(),
        AareAccumulator::new(),
        AareAccumulator::new(),
        AareAccumulator::new(),
    ];
    let mut pred_norm = Vec::with_capacity(test.len());
    let mut ref_norm = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let (sigma, de, dr, dt) = predict(test.eps_p[i], test.rate[i], test.temperature[i])?;
        acc[0].add(test.sigma[i], sigma);
        acc[1].add(derivs[i][0], de);
        acc[2].add(derivs[i][1], dr);
        acc[3].add(derivs[i][2], dt);
        pred_norm.push(ranges.normalize_sigma(sigma));
        ref_norm.push(ranges.normalize_sigma(test.sigma[i]));
    }
    Ok(MetricsReport {
        erms: loss_erms(&pred_norm, &ref_norm)?,
        aare_sigma: acc[0].percent(),
        aare_deps: acc[1].percent(),
        aare_drate: acc[2].percent(),
        aare_dtemp: acc[3].percent(),
        param_count,
        excluded: [
            acc[0].excluded,
            acc[1].excluded,
            acc[2].excluded,
            acc[3].excluded,
        ],
    })
}

/// Evaluate a trained model against a test set.
pub fn evaluate(model: &MlpModel, test: &Dataset) -> Result<MetricsReport> {
    evaluate_law(
        |e, r, t| model.predict_physical(e, r, t),
        &model.ranges,
        model.param_count(),
        test,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{test_set, RateSampling};
    use crate::johnson_cook::{jc_derivatives, jc_flow_stress, JohnsonCookParams};

    fn ranges() -> NormalizationRanges {
        NormalizationRanges {
            eps_p_min: 0.0,
            eps_p_max: 1.0,
            log_rate_min: 0.0,
            log_rate_max: 50_000f64.ln(),
            t_min: 20.0,
            t_max: 500.0,
            sigma_min: 579.18464291541482,
            sigma_max: 1556.7403579583772,
            eps_dot_ref: 1.0,
        }
    }

    #[test]
    fn oracle_against_itself_is_exact() {
        let p = JohnsonCookParams::steel_42crmo4();
        let test = test_set(&p, 500, 3, RateSampling::LogUniform);
        let report = evaluate_law(
            |e, r, t| {
                let s = jc_flow_stress(&p, e, r, t)?;
                let (de, dr, dt) = jc_derivatives(&p, e, r, t)?;
                Ok((s, de, dr, dt))
            },
            &ranges(),
            0,
            &test,
        )
        .unwrap();
        assert_eq!(report.aare_sigma, 0.0);
        assert_eq!(report.aare_deps, 0.0);
        assert_eq!(report.aare_drate, 0.0);
        assert_eq!(report.aare_dtemp, 0.0);
        assert_eq!(report.erms, 0.0);
    }

    #[test]
    fn uniform_one_percent_offset() {
        let p = JohnsonCookParams::steel_42crmo4();
        let test = test_set(&p, 500, 3, RateSampling::LogUniform);
        let report = evaluate_law(
            |e, r, t| {
                let s = jc_flow_stress(&p, e, r, t)?;
                let (de, dr, dt) = jc_derivatives(&p, e, r, t)?;
                Ok((1.01 * s, 1.01 * de, 1.01 * dr, 1.01 * dt))
            },
            &ranges(),
            0,
            &test,
        )
        .unwrap();
        for aare in [
            report.aare_sigma,
            report.aare_deps,
            report.aare_drate,
            report.aare_dtemp,
        ] {
            assert!((aare - 1.0).abs() < 1e-9, "AARE {aare}");
        }
    }

    #[test]
    fn division_guard_counts_tiny_references() {
        let mut test = test_set(&JohnsonCookParams::steel_42crmo4(), 10, 3, RateSampling::LogUniform);
        // Force one near-zero temperature-derivative reference.
        test.derivs.as_mut().unwrap()[0][2] = 1e-15;
        let report = evaluate_law(|_, _, _| Ok((800.0, 1.0, 1.0, 1.0)), &ranges(), 0, &test).unwrap();
        assert_eq!(report.excluded, [0, 0, 0, 1]);
    }

    #[test]
    fn missing_derivatives_is_an_error() {
        let p = JohnsonCookParams::steel_42crmo4();
        let grid = crate::dataset::training_grid(&p);
        assert!(matches!(
            evaluate_law(|_, _, _| Ok((1.0, 1.0, 1.0, 1.0)), &ranges(), 0, &grid),
            Err(Error::Dataset(_))
        ));
    }
}
