//! Estimators for correlations, the CHSH parameter and fringe visibility,
//! with Poisson error propagation.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bounds::{GRINBAUM_BOUND, TSIRELSON_BOUND};
use crate::correlation::chsh_combination;
use crate::error::{Error, Result};
use crate::records::{CoincidenceCounts, MeasurementRecordSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub e: f64,
    pub sigma: f64,
    pub n_total: u64,
}

/// `E = (N₊₊ − N₊₋ − N₋₊ + N₋₋)/N` with `σ² = 4·P·M/N³`, where `P = N₊₊ + N₋₋`
/// and `M = N₊₋ + N₋₊`. This equals `(1 − E²)/N`.
pub fn estimate_correlation(c: &CoincidenceCounts) -> Result<CorrelationEstimate> {
    let n = c.total();
    if n == 0 {
        return Err(Error::UndefinedCorrelation {
            pair: 0,
            first_setting: 0,
            last_setting: 3,
        });
    }
    let p = (c.n_pp + c.n_mm) as f64;
    let m = (c.n_pm + c.n_mp) as f64;
    let nf = n as f64;
    Ok(CorrelationEstimate {
        e: (p - m) / nf,
        sigma: (4.0 * p * m / (nf * nf * nf)).sqrt(),
        n_total: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SResult {
    /// Signed value; the singlet convention makes optimal settings negative.
    pub s: f64,
    pub abs_s: f64,
    /// Counting-statistics standard error.
    pub sigma: f64,
    pub correlations: [CorrelationEstimate; 4],
    /// `2√2 − |S|`.
    pub tsirelson_gap: f64,
    /// `(|S| − 2.82537)/σ`; absent when σ is zero.
    pub grinbaum_z: Option<f64>,
}

impl SResult {
    pub fn from_correlations(correlations: [CorrelationEstimate; 4]) -> Self {
        let s = chsh_combination(correlations.map(|c| c.e));
        let sigma = correlations.iter().map(|c| c.sigma * c.sigma).sum::<f64>().sqrt();
        let abs_s = s.abs();
        SResult {
            s,
            abs_s,
            sigma,
            correlations,
            tsirelson_gap: TSIRELSON_BOUND - abs_s,
            grinbaum_z: (sigma > 0.0).then(|| (abs_s - GRINBAUM_BOUND) / sigma),
        }
    }
}

/// Pool every setting over all sets, then combine the four correlations.
pub fn estimate_s(records: &MeasurementRecordSet) -> Result<SResult> {
    let counts = records.pooled_counts()?;
    let mut est = Vec::with_capacity(4);
    for (pair, c) in counts.iter().enumerate() {
        est.push(estimate_correlation(c).map_err(|_| Error::UndefinedCorrelation {
            pair,
            first_setting: 4 * pair,
            last_setting: 4 * pair + 3,
        })?);
    }
    Ok(SResult::from_correlations([est[0], est[1], est[2], est[3]]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub v: f64,
    pub sigma: f64,
    /// Angle of the fitted fringe maximum, degrees in `[0, 180)`.
    pub max_angle: f64,
}

/// Fit `C(θ) = c₀ + c₁·cos 2θ + c₂·sin 2θ` by least squares and report
/// `V = √(c₁² + c₂²)/c₀`, i.e. `(max − min)/(max + min)` of the fitted fringe.
/// The uncertainty propagates Poisson variances `Var(Cᵢ) = Cᵢ` through the fit.
pub fn estimate_visibility(scan: &[(f64, f64)]) -> Result<VisibilityEstimate> {
    if scan.len() < 3 {
        return Err(Error::FitFailure(format!("need at least 3 points, got {}", scan.len())));
    }
    let lo = scan.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = scan.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 90.0 - 1e-9 {
        return Err(Error::FitFailure(format!(
            "scan spans {:.3}°, less than half a fringe period",
            hi - lo
        )));
    }
    let cmin = scan.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let cmax = scan.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if cmin < 0.0 || !cmax.is_finite() {
        return Err(Error::FitFailure("counts must be finite and non-negative".into()));
    }
    if cmax == cmin {
        return Err(Error::FitFailure("flat scan has no fringe".into()));
    }

    let rows: Vec<Vector3<f64>> = scan
        .iter()
        .map(|&(deg, _)| {
            let t = 2.0 * deg.to_radians();
            Vector3::new(1.0, t.cos(), t.sin())
        })
        .collect();
    let xtx: Matrix3<f64> = rows.iter().map(|x| x * x.transpose()).sum();
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("angles do not determine the fringe".into()))?;
    let xty: Vector3<f64> = rows.iter().zip(scan).map(|(x, &(_, y))| x * y).sum();
    let c = inv * xty;
    if c[0] <= 0.0 {
        return Err(Error::FitFailure("fitted mean count is not positive".into()));
    }
    let amp = c[1].hypot(c[2]);
    let v = amp / c[0];

    // Cov(c) = A·diag(y)·Aᵀ with A = (XᵀX)⁻¹Xᵀ
    let xwx: Matrix3<f64> = rows.iter().zip(scan).map(|(x, &(_, y))| x * x.transpose() * y).sum();
    let cov = inv * xwx * inv;
    let grad = if amp > 0.0 {
        Vector3::new(-amp / (c[0] * c[0]), c[1] / (amp * c[0]), c[2] / (amp * c[0]))
    } else {
        Vector3::new(0.0, 1.0 / c[0], 0.0)
    };
    let var = (grad.transpose() * cov * grad)[(0, 0)].max(0.0);
    let max_angle = (0.5 * c[2].atan2(c[1]).to_degrees()).rem_euclid(180.0);
    Ok(VisibilityEstimate {
        v,
        sigma: var.sqrt(),
        max_angle,
    })
}
