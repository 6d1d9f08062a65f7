//! The analysis report: one JSON document per run, derived purely from the
//! measurement records and the run configuration.

use serde::{Deserialize, Serialize};

use crate::apparatus::{accidental_rate, expected_setting_rates, AccidentalConvention};
use crate::bounds::{bound_report, BoundReport};
use crate::budget::{full_budget, ErrorBudget};
use crate::config::{RunConfig, SimulationMode};
use crate::correlation::{ChshAngles, SettingPair};
use crate::error::Result;
use crate::estimate::{estimate_s, estimate_visibility, SResult, VisibilityEstimate};
use crate::records::MeasurementRecordSet;
use crate::sim::expected_chsh;

pub const TOOL_NAME: &str = "bellbench";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SIGN_CONVENTION: &str =
    "S = E(a0,b0) - E(a0,b1) + E(a1,b0) + E(a1,b1) with singlet correlations E = -cos 2(a-b); \
     optimal settings give negative S, bounds are compared against |S|";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub preset: Option<String>,
    pub seed: u64,
    pub mode: SimulationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub sets: usize,
    pub total_coincidences: u64,
    pub mean_duration_s: f64,
    pub mean_singles_rate_a: f64,
    pub mean_singles_rate_b: f64,
    /// Base angles as recorded, degrees.
    pub angles: ChshAngles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSection {
    /// Distances computed with the total budget uncertainty.
    #[serde(flatten)]
    pub report: BoundReport,
    /// Grinbaum significance truncated to one decimal.
    pub grinbaum_sigmas_display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilitySection {
    pub model_v_hv: f64,
    pub model_v_45: f64,
    /// Fit of the noise-free fringe with Alice at 0°, accidentals included.
    pub fringe_hv: VisibilityEstimate,
    /// Same with Alice at 45°.
    pub fringe_45: VisibilityEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccidentalsSection {
    pub window_half_width_s: f64,
    /// `ra·rb·τ` from the measured mean singles.
    pub rate_half: f64,
    /// `ra·rb·2τ` from the measured mean singles.
    pub rate_full: f64,
    pub convention: AccidentalConvention,
    pub rate_selected: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    /// Noise-free `S` of the configured apparatus at the recorded angles.
    pub expected_s: f64,
    pub expected_abs_s: f64,
    /// Difference of the measured `S` from `expected_s` in counting sigmas.
    pub deviation_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub provenance: Provenance,
    pub data: DataSummary,
    pub chsh: SResult,
    pub sign_convention: String,
    pub budget: ErrorBudget,
    pub bounds: BoundsSection,
    pub visibility: VisibilitySection,
    pub accidentals: AccidentalsSection,
    pub model: ModelSection,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn fringe(config: &RunConfig, alice: f64) -> Result<VisibilityEstimate> {
    let p = &config.apparatus;
    let dwell = p.timing.interval;
    let scan: Vec<(f64, f64)> = (0..36)
        .map(|k| {
            let b = 5.0 * k as f64;
            (b, expected_setting_rates(p, SettingPair::new(alice, b)).coincidences() * dwell)
        })
        .collect();
    estimate_visibility(&scan)
}

pub fn build_report(records: &MeasurementRecordSet, config: &RunConfig) -> Result<ReportDocument> {
    records.validate()?;
    let p = &config.apparatus;
    let angles = records.base_angles()?;
    let chsh = estimate_s(records)?;
    let budget = full_budget(records, p, &p.model, &angles, &config.budget)?;
    let bounds = bound_report(chsh.s, budget.total);

    let t = records.mean_duration();
    let (na, nb) = records.mean_singles();
    let (ra, rb) = (na / t, nb / t);
    let rate_half = accidental_rate(ra, rb, p.window, AccidentalConvention::Half);
    let rate_full = accidental_rate(ra, rb, p.window, AccidentalConvention::Full);

    let expected_s = expected_chsh(p, &angles);

    Ok(ReportDocument {
        provenance: Provenance {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            config_hash: config.config_hash(),
            preset: config.preset.clone(),
            seed: config.plan.seed,
            mode: config.mode,
        },
        data: DataSummary {
            sets: records.set_count(),
            total_coincidences: records.total_coincidences(),
            mean_duration_s: t,
            mean_singles_rate_a: ra,
            mean_singles_rate_b: rb,
            angles,
        },
        sign_convention: SIGN_CONVENTION.into(),
        budget,
        bounds: BoundsSection {
            grinbaum_sigmas_display: bounds.grinbaum_sigma_display(),
            report: bounds,
        },
        visibility: VisibilitySection {
            model_v_hv: p.model.v_hv,
            model_v_45: p.model.v_45,
            fringe_hv: fringe(config, 0.0)?,
            fringe_45: fringe(config, 45.0)?,
        },
        accidentals: AccidentalsSection {
            window_half_width_s: p.window.half_width,
            rate_half,
            rate_full,
            convention: p.convention,
            rate_selected: match p.convention {
                AccidentalConvention::Half => rate_half,
                AccidentalConvention::Full => rate_full,
            },
            note: format!(
                "the two window conventions differ by a factor of 2 ({rate_half:.4} vs {rate_full:.4} per second); \
                 simulation and expectations use `{}`",
                p.convention.name()
            ),
        },
        model: ModelSection {
            expected_s,
            expected_abs_s: expected_s.abs(),
            deviation_sigmas: if chsh.sigma > 0.0 {
                (chsh.s - expected_s) / chsh.sigma
            } else {
                0.0
            },
        },
        chsh,
    })
}
