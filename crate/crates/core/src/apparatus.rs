//! Parametric description of the photon-pair source, the detectors, the
//! coincidence unit, the acquisition clock and the polarizer rotation stages,
//! plus the closed-form rate arithmetic built on it.

use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationModel, PolarizerAngle, SettingPair};
use crate::error::{ensure_nonneg, ensure_positive, ensure_range, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// Rate of pairs whose two photons would both be detected with the
    /// polarizers removed (pairs/s).
    pub pair_rate: f64,
    /// Photon detection rate of arm A with the polarizer removed, dark counts
    /// excluded (counts/s). Includes photons whose partner is lost.
    pub singles_rate_a: f64,
    /// Same for arm B.
    pub singles_rate_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub efficiency: f64,
    /// counts/s
    pub dark_rate: f64,
    /// Non-paralyzable dead time in seconds.
    pub dead_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceWindow {
    /// Seconds; events closer than this are paired.
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingParams {
    /// Acquisition time per setting in seconds.
    pub interval: f64,
    /// Absolute uncertainty of an interval boundary in seconds.
    pub jitter: f64,
    /// Fractional frequency error of the reference clock.
    pub clock_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorParams {
    /// Rotation stage step and repeatability in degrees.
    pub resolution: f64,
}

impl ActuatorParams {
    /// Snap an angle to the nearest stage position.
    pub fn quantize(&self, degrees: f64) -> f64 {
        quantize(degrees, self.resolution)
    }
}

/// Round to the nearest multiple of `step`. When `1/step` is an integer the
/// division form keeps values like 1.9 exact instead of 19·0.1.
pub fn quantize(value: f64, step: f64) -> f64 {
    if step <= 0.0 {
        return value;
    }
    let k = (value / step).round();
    let inv = 1.0 / step;
    if (inv - inv.round()).abs() < 1e-9 {
        k / inv.round()
    } else {
        k * step
    }
}

/// How the coincidence window enters the accidental rate `ra·rb·τ_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccidentalConvention {
    /// `τ_eff = 2·half_width`: the window is `±half_width`.
    Full,
    /// `τ_eff = half_width`: the quoted width is the total window.
    #[default]
    Half,
}

impl AccidentalConvention {
    pub fn effective_window(self, window: CoincidenceWindow) -> f64 {
        match self {
            AccidentalConvention::Full => 2.0 * window.half_width,
            AccidentalConvention::Half => window.half_width,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AccidentalConvention::Full => "full",
            AccidentalConvention::Half => "half",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApparatusParams {
    pub source: SourceParams,
    pub det_a: DetectorParams,
    pub det_b: DetectorParams,
    pub window: CoincidenceWindow,
    #[serde(default)]
    pub convention: AccidentalConvention,
    pub timing: TimingParams,
    pub actuator: ActuatorParams,
    pub model: CorrelationModel,
    /// Setting-dependent transmission loss of the film polarizers. The
    /// efficiency multiplier at angle θ is `1 − wedge_loss·sin²θ`; 0 disables it.
    #[serde(default)]
    pub wedge_loss: f64,
}

impl ApparatusParams {
    pub fn validate(&self) -> Result<()> {
        let s = &self.source;
        ensure_nonneg("source.pair_rate", s.pair_rate)?;
        ensure_nonneg("source.singles_rate_a", s.singles_rate_a)?;
        ensure_nonneg("source.singles_rate_b", s.singles_rate_b)?;
        if s.pair_rate > s.singles_rate_a.min(s.singles_rate_b) {
            return Err(Error::domain(
                "source.pair_rate",
                s.pair_rate,
                "exceeds the smaller singles rate",
            ));
        }
        for (name, d) in [("det_a", &self.det_a), ("det_b", &self.det_b)] {
            ensure_range(name, d.efficiency, 0.0, 1.0)
                .map_err(|_| Error::domain("efficiency", d.efficiency, "must lie in [0, 1]"))?;
            ensure_nonneg("dark_rate", d.dark_rate)?;
            ensure_nonneg("dead_time", d.dead_time)?;
        }
        ensure_positive("window.half_width", self.window.half_width)?;
        ensure_positive("timing.interval", self.timing.interval)?;
        ensure_nonneg("timing.jitter", self.timing.jitter)?;
        ensure_nonneg("timing.clock_drift", self.timing.clock_drift)?;
        ensure_positive("actuator.resolution", self.actuator.resolution)?;
        ensure_range("wedge_loss", self.wedge_loss, 0.0, 1.0)?;
        self.model.validate()
    }

    pub fn wedge_factor(&self, angle: PolarizerAngle) -> f64 {
        1.0 - self.wedge_loss * angle.radians().sin().powi(2)
    }

    /// Tolerance `|t_A − t_B|` used by the event-level coincidence unit so
    /// that its accidental rate equals `ra·rb·τ_eff` for the configured
    /// convention.
    pub fn match_window(&self) -> CoincidenceWindow {
        CoincidenceWindow {
            half_width: self.convention.effective_window(self.window) / 2.0,
        }
    }

    /// Pre-dead-time detection rates at A and B for one analyzer setting.
    pub fn incident_rates(&self, s: SettingPair) -> (f64, f64) {
        let ra = 0.5 * self.source.singles_rate_a * self.wedge_factor(s.a) + self.det_a.dark_rate;
        let rb = 0.5 * self.source.singles_rate_b * self.wedge_factor(s.b) + self.det_b.dark_rate;
        (ra, rb)
    }
}

pub fn accidental_rate(
    ra: f64,
    rb: f64,
    window: CoincidenceWindow,
    convention: AccidentalConvention,
) -> f64 {
    ra * rb * convention.effective_window(window)
}

/// Non-paralyzable detector: `r / (1 + r·τ)`.
pub fn dead_time_throughput(rate_in: f64, dead_time: f64) -> f64 {
    rate_in / (1.0 + rate_in * dead_time)
}

/// Probability that a non-paralyzable detector is ready at a random instant.
pub fn live_fraction(rate_in: f64, dead_time: f64) -> f64 {
    1.0 / (1.0 + rate_in * dead_time)
}

/// Expected detection rates (counts/s) for a single analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingRates {
    pub singles_a: f64,
    pub singles_b: f64,
    pub true_coinc: f64,
    pub accidental_coinc: f64,
}

impl SettingRates {
    pub fn coincidences(&self) -> f64 {
        self.true_coinc + self.accidental_coinc
    }
}

/// Rates seen by the counters for analyzers at `s`. Both detectors lose a
/// fraction of events to dead time; a pair survives only if both are live.
pub fn expected_setting_rates(params: &ApparatusParams, s: SettingPair) -> SettingRates {
    let (ra, rb) = params.incident_rates(s);
    let la = live_fraction(ra, params.det_a.dead_time);
    let lb = live_fraction(rb, params.det_b.dead_time);
    let p_pp = params.model.outcome_probabilities(s).p_pp;
    let true_coinc = params.source.pair_rate
        * p_pp
        * params.wedge_factor(s.a)
        * params.wedge_factor(s.b)
        * la
        * lb;
    let singles_a = ra * la;
    let singles_b = rb * lb;
    SettingRates {
        singles_a,
        singles_b,
        true_coinc,
        accidental_coinc: accidental_rate(singles_a, singles_b, params.window, params.convention),
    }
}
