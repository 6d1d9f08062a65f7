//! Uncertainty budget of the CHSH parameter.
//!
//! Dead time, interval jitter and clock drift all act the same way: they make
//! the effective exposure of each acquisition interval uncertain by a small
//! relative amount `f`. [`exposure_term`] propagates such an error through the
//! correlation and CHSH formulas; the three hardware terms only differ in `f`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::apparatus::ApparatusParams;
use crate::correlation::{ChshAngles, CorrelationModel};
use crate::error::{ensure_nonneg, Error, Result};
use crate::estimate::estimate_s;
use crate::records::MeasurementRecordSet;
use crate::sim::OUTCOME_SIGNS;

pub const MIN_ANGLE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetTerm {
    Counting,
    DeadTime,
    Timing,
    Clock,
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Poisson counting statistics.
    pub ds_p: f64,
    /// Live-time fluctuations from detector dead time.
    pub ds_d: f64,
    /// Interval boundary jitter of the acquisition clock.
    pub ds_t: f64,
    /// Reference clock frequency drift; reported, not part of `total`.
    pub ds_c: f64,
    /// Polarizer angle repeatability.
    pub ds_r: f64,
    /// Detector efficiency drift, taken as zero at these count rates.
    pub ds_efficiency: f64,
    /// `√(ds_p² + ds_d² + ds_t² + ds_r²)`.
    pub total: f64,
    pub dominant: BudgetTerm,
}

impl ErrorBudget {
    pub fn from_terms(ds_p: f64, ds_d: f64, ds_t: f64, ds_c: f64, ds_r: f64) -> Self {
        let included = [
            (BudgetTerm::Counting, ds_p),
            (BudgetTerm::DeadTime, ds_d),
            (BudgetTerm::Timing, ds_t),
            (BudgetTerm::Angle, ds_r),
        ];
        let total = included.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        let dominant = included
            .iter()
            .copied()
            .fold((BudgetTerm::Counting, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
            .0;
        ErrorBudget {
            ds_p,
            ds_d,
            ds_t,
            ds_c,
            ds_r,
            ds_efficiency: 0.0,
            total,
            dominant,
        }
    }
}

pub fn counting_term(records: &MeasurementRecordSet) -> Result<f64> {
    Ok(estimate_s(records)?.sigma)
}

/// Spread of `S` when every setting's interval carries its own independent
/// relative exposure error of size `f`, averaged over the repeated sets.
///
/// For channel `k` of a correlation with total `N`, `∂E/∂ln N_k = N_k(s_k − E)/N`.
pub fn exposure_term(records: &MeasurementRecordSet, f: f64) -> Result<f64> {
    ensure_nonneg("fractional exposure error", f)?;
    let counts = records.pooled_counts()?;
    let mut var = 0.0;
    for (pair, c) in counts.iter().enumerate() {
        let n = c.as_array().map(|x| x as f64);
        let total: f64 = n.iter().sum();
        if total == 0.0 {
            return Err(Error::UndefinedCorrelation {
                pair,
                first_setting: 4 * pair,
                last_setting: 4 * pair + 3,
            });
        }
        let e: f64 = n.iter().zip(OUTCOME_SIGNS).map(|(x, s)| s * x).sum::<f64>() / total;
        var += n
            .iter()
            .zip(OUTCOME_SIGNS)
            .map(|(x, s)| (x * (s - e) / total).powi(2))
            .sum::<f64>();
    }
    Ok(f * var.sqrt() / (records.set_count() as f64).sqrt())
}

/// Relative live-time error per interval: `√N_singles·τ/T`, both detectors in
/// quadrature.
pub fn dead_time_fraction(records: &MeasurementRecordSet, params: &ApparatusParams) -> f64 {
    let (na, nb) = records.mean_singles();
    let t = records.mean_duration();
    let fa = na.sqrt() * params.det_a.dead_time / t;
    let fb = nb.sqrt() * params.det_b.dead_time / t;
    fa.hypot(fb)
}

pub fn dead_time_term(records: &MeasurementRecordSet, params: &ApparatusParams) -> Result<f64> {
    exposure_term(records, dead_time_fraction(records, params))
}

pub fn timing_term(records: &MeasurementRecordSet, params: &ApparatusParams) -> Result<f64> {
    exposure_term(records, params.timing.jitter / records.mean_duration())
}

pub fn clock_term(records: &MeasurementRecordSet, params: &ApparatusParams) -> Result<f64> {
    exposure_term(records, params.timing.clock_drift)
}

/// Monte Carlo standard deviation of the model `S` when each of the four
/// angles is displaced by an independent uniform error in `±resolution`.
pub fn angle_term(
    model: &CorrelationModel,
    angles: &ChshAngles,
    resolution: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    ensure_nonneg("resolution", resolution)?;
    if n_samples < MIN_ANGLE_SAMPLES {
        return Err(Error::domain(
            "angle_samples",
            n_samples as f64,
            "at least 1000 samples are required",
        ));
    }
    if resolution == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centre = model.chsh(angles);
    let base = angles.as_array();
    let dev: Vec<f64> = (0..n_samples)
        .map(|_| {
            let shifted = base.map(|x| x + resolution * (2.0 * rng.random::<f64>() - 1.0));
            model.chsh(&ChshAngles::from_array(shifted)) - centre
        })
        .collect();
    let mean = dev.iter().sum::<f64>() / n_samples as f64;
    let var = dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n_samples - 1) as f64;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetOptions {
    pub angle_samples: usize,
    pub angle_seed: u64,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        BudgetOptions {
            angle_samples: 20_000,
            angle_seed: 0x5eed,
        }
    }
}

pub fn full_budget(
    records: &MeasurementRecordSet,
    params: &ApparatusParams,
    model: &CorrelationModel,
    angles: &ChshAngles,
    opts: &BudgetOptions,
) -> Result<ErrorBudget> {
    Ok(ErrorBudget::from_terms(
        counting_term(records)?,
        dead_time_term(records, params)?,
        timing_term(records, params)?,
        clock_term(records, params)?,
        angle_term(
            model,
            angles,
            params.actuator.resolution,
            opts.angle_samples,
            opts.angle_seed,
        )?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset;
    use crate::sim::expected_records;

    fn paper_records() -> MeasurementRecordSet {
        expected_records(&preset::paper(), &preset::paper_plan(312, 1)).unwrap()
    }

    #[test]
    fn counting_term_at_paper_scale() {
        let ds = counting_term(&paper_records()).unwrap();
        assert!((ds / 4.9e-4 - 1.0).abs() < 0.10, "{ds}");
    }

    #[test]
    fn counting_term_scales_with_counts() {
        let r = paper_records();
        let mut quad = r.clone();
        for rec in &mut quad.records {
            rec.coincidences *= 4;
        }
        let ratio = counting_term(&quad).unwrap() / counting_term(&r).unwrap();
        assert!((ratio - 0.5).abs() < 0.025, "{ratio}");
    }

    #[test]
    fn exposure_terms_at_paper_scale() {
        let r = paper_records();
        let p = preset::paper();
        assert_eq!(exposure_term(&r, 0.0).unwrap(), 0.0);
        let ds_t = timing_term(&r, &p).unwrap();
        let ds_c = clock_term(&r, &p).unwrap();
        assert!(ds_t > 4.7e-11 / 3.0 && ds_t < 4.7e-11 * 3.0, "{ds_t}");
        assert!(ds_c > 2.8e-9 / 3.0 && ds_c < 2.8e-9 * 3.0, "{ds_c}");
        assert!((ds_c / ds_t - 60.0).abs() < 1e-9);
        assert!(exposure_term(&r, -1.0).is_err());
    }

    #[test]
    fn dead_time_term_behaviour() {
        let r = paper_records();
        let mut p = preset::paper();
        let ds = dead_time_term(&r, &p).unwrap();
        assert!(ds > 5.4e-7 / 2.0 && ds < 5.4e-7 * 2.0, "{ds}");
        p.det_a.dead_time *= 2.0;
        p.det_b.dead_time *= 2.0;
        assert!((dead_time_term(&r, &p).unwrap() / ds - 2.0).abs() < 1e-12);
        p.det_a.dead_time = 0.0;
        p.det_b.dead_time = 0.0;
        assert_eq!(dead_time_term(&r, &p).unwrap(), 0.0);
    }

    #[test]
    fn angle_term_edge_cases() {
        let m = CorrelationModel::ideal();
        let c = ChshAngles::canonical();
        assert_eq!(angle_term(&m, &c, 0.0, 1000, 1).unwrap(), 0.0);
        assert!(angle_term(&m, &c, 0.1, 999, 1).is_err());
        let at_optimum = angle_term(&m, &c, 0.1, 20_000, 1).unwrap();
        assert!(at_optimum <= 2e-5, "{at_optimum}");
    }

    #[test]
    fn quadrature_arithmetic() {
        let b = ErrorBudget::from_terms(4.9e-4, 5.4e-7, 4.7e-11, 2.8e-9, 1.2e-4);
        assert!((b.total - 5.045e-4).abs() < 5e-8, "{}", b.total);
        assert_eq!(b.dominant, BudgetTerm::Counting);
        let b = ErrorBudget::from_terms(3e-4, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(b.total, 3e-4);
    }

    #[test]
    fn full_budget_at_paper_scale() {
        let r = paper_records();
        let p = preset::paper();
        let b = full_budget(&r, &p, &p.model, &preset::paper_angles(), &BudgetOptions::default()).unwrap();
        assert!((b.total / 5.1e-4 - 1.0).abs() < 0.15, "{}", b.total);
        assert_eq!(b.dominant, BudgetTerm::Counting);
        assert!(b.total >= b.ds_p && b.total <= b.ds_p + b.ds_d + b.ds_t + b.ds_r);

        let mut clean = p;
        clean.det_a.dead_time = 0.0;
        clean.det_b.dead_time = 0.0;
        clean.timing.jitter = 0.0;
        clean.timing.clock_drift = 0.0;
        clean.actuator.resolution = 0.0;
        let opts = BudgetOptions::default();
        let zero = full_budget(&r, &clean, &clean.model, &preset::paper_angles(), &opts).unwrap();
        assert_eq!(zero.total, zero.ds_p);
    }
}
