//! Run configuration: TOML files layered over named presets.
//!
//! A file may name a `preset`; its own keys then override the preset
//! key-by-key. Unknown keys are rejected and every error names the key path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::apparatus::ApparatusParams;
use crate::budget::{BudgetOptions, MIN_ANGLE_SAMPLES};
use crate::correlation::ChshAngles;
use crate::error::{Error, Result};
use crate::optimizer::OptimizerOptions;
use crate::preset;
use crate::sim::ExperimentPlan;

pub const PRESETS: [&str; 2] = ["paper", "ideal"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    /// Timestamp streams and a coincidence unit per cell.
    Event,
    /// Poisson draws of the expected counters.
    #[default]
    Aggregate,
}

impl std::str::FromStr for SimulationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "event" => Ok(SimulationMode::Event),
            "aggregate" => Ok(SimulationMode::Aggregate),
            _ => Err(Error::Config(format!("mode: expected `event` or `aggregate`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub angles: ChshAngles,
    pub sets: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    #[default]
    Model,
    Poisson,
    Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub oracle: OracleKind,
    pub dwell: f64,
    pub coarse_step: f64,
    pub fine_span: f64,
    pub max_rounds: u32,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        OptimizerConfig {
            oracle: OracleKind::default(),
            dwell: o.dwell,
            coarse_step: o.coarse_step,
            fine_span: o.fine_span,
            max_rounds: o.max_rounds,
        }
    }
}

impl OptimizerConfig {
    pub fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            dwell: self.dwell,
            coarse_step: self.coarse_step,
            fine_span: self.fine_span,
            max_rounds: self.max_rounds,
        }
    }
}

/// File names are relative to `dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub records: String,
    pub report: String,
    pub optimize: String,
    pub scans: String,
    pub budget: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            records: "records.csv".into(),
            report: "report.json".into(),
            optimize: "optimize.json".into(),
            scans: "scans.csv".into(),
            budget: "budget.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub mode: SimulationMode,
    pub apparatus: ApparatusParams,
    pub plan: PlanConfig,
    #[serde(default)]
    pub budget: BudgetOptions,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (apparatus, plan) = match name {
            "paper" => (preset::paper(), preset::paper_plan(preset::SETS, 1)),
            "ideal" => (preset::ideal(), preset::ideal_plan(1, 1)),
            _ => {
                return Err(Error::Config(format!(
                    "preset: unknown preset `{name}` (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(RunConfig {
            preset: Some(name.to_string()),
            mode: SimulationMode::default(),
            apparatus,
            plan: PlanConfig {
                angles: plan.angles,
                sets: plan.sets,
                seed: plan.seed,
            },
            budget: BudgetOptions::default(),
            optimizer: OptimizerConfig::default(),
            output: OutputConfig::default(),
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let config = match table.remove("preset") {
            None => deserialize(toml::Value::Table(table))?,
            Some(toml::Value::String(name)) => {
                let base = RunConfig::preset(&name)?;
                let mut merged = toml::Value::try_from(&base)
                    .map_err(|e| Error::Config(format!("preset `{name}`: {e}")))?;
                merge(&mut merged, toml::Value::Table(table));
                deserialize(merged)?
            }
            Some(other) => {
                return Err(Error::Config(format!(
                    "preset: expected a string, found {}",
                    other.type_str()
                )))
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.apparatus.validate()?;
        self.experiment_plan().validate()?;
        if self.budget.angle_samples < MIN_ANGLE_SAMPLES {
            return Err(Error::Config(format!(
                "budget.angle_samples: at least {MIN_ANGLE_SAMPLES} required, got {}",
                self.budget.angle_samples
            )));
        }
        let o = &self.optimizer;
        for (key, v) in [
            ("optimizer.dwell", o.dwell),
            ("optimizer.coarse_step", o.coarse_step),
            ("optimizer.fine_span", o.fine_span),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{key}: must be positive, got {v}")));
            }
        }
        if o.max_rounds == 0 {
            return Err(Error::Config("optimizer.max_rounds: must be at least 1".into()));
        }
        Ok(())
    }

    pub fn experiment_plan(&self) -> ExperimentPlan {
        ExperimentPlan {
            angles: self.plan.angles,
            sets: self.plan.sets,
            interval: self.apparatus.timing.interval,
            seed: self.plan.seed,
        }
    }

    /// SHA-256 of the canonical JSON of everything except output locations.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn deserialize(value: toml::Value) -> Result<RunConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::Config(inner.message().to_string())
        } else {
            Error::Config(format!("{path}: {}", inner.message()))
        }
    })
}

/// Tables merge recursively; any other value replaces the base.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            RunConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn preset_overrides() {
        let c = RunConfig::from_toml_str(
            "preset = \"paper\"\nmode = \"event\"\n[plan]\nsets = 10\n[apparatus.det_a]\ndark_rate = 50.0\n",
        )
        .unwrap();
        let base = RunConfig::preset("paper").unwrap();
        assert_eq!(c.plan.sets, 10);
        assert_eq!(c.mode, SimulationMode::Event);
        assert_eq!(c.apparatus.det_a.dark_rate, 50.0);
        assert_eq!(c.apparatus.det_a.dead_time, base.apparatus.det_a.dead_time);
        assert_eq!(c.apparatus.source, base.apparatus.source);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml_str("preset = \"ideal\"\n[apparatus.det_a]\ndarkrate = 1.0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("apparatus.det_a") && err.contains("darkrate"), "{err}");
    }

    #[test]
    fn wrong_type_is_named() {
        let err = RunConfig::from_toml_str("preset = \"ideal\"\n[plan]\nsets = \"many\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("plan.sets"), "{err}");
    }

    #[test]
    fn invalid_value_is_named() {
        let err = RunConfig::from_toml_str("preset = \"ideal\"\n[apparatus.window]\nhalf_width = -1.0\n")
            .unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("window.half_width"), "{err}");
    }

    #[test]
    fn full_file_round_trips() {
        let c = RunConfig::preset("paper").unwrap();
        let text = c.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.config_hash(), c.config_hash());
    }

    #[test]
    fn hash_tracks_content_not_output() {
        let a = RunConfig::preset("paper").unwrap();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        assert_eq!(a.config_hash(), b.config_hash());
        b.plan.seed += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("event".parse::<SimulationMode>().unwrap(), SimulationMode::Event);
        assert!("batch".parse::<SimulationMode>().is_err());
    }
}
