//! Simulation and analysis toolkit for CHSH Bell tests with polarization-
//! entangled photon pairs.
//!
//! The crate models the full chain from a two-qubit state through a lossy,
//! noisy detection apparatus to the counted coincidences, estimates the CHSH
//! parameter with its uncertainty budget, and compares the result against the
//! local, quantum and no-signaling bounds.

pub mod apparatus;
pub mod bounds;
pub mod budget;
pub mod config;
pub mod correlation;
pub mod error;
pub mod estimate;
pub mod optimizer;
pub mod preset;
pub mod records;
pub mod report;
pub mod sim;

pub use apparatus::{
    accidental_rate, dead_time_throughput, expected_setting_rates, AccidentalConvention,
    ActuatorParams, ApparatusParams, CoincidenceWindow, DetectorParams, SettingRates,
    SourceParams, TimingParams,
};
pub use bounds::{
    bound_report, chsh_of_behavior, is_no_signaling, local_deterministic_bound, pr_box,
    BehaviorTable, BoundReport, LocalStrategy, GRINBAUM_BOUND, LOCAL_BOUND, PR_BOUND,
    TSIRELSON_BOUND,
};
pub use budget::{full_budget, BudgetOptions, BudgetTerm, ErrorBudget};
pub use config::{RunConfig, SimulationMode};
pub use correlation::{
    chsh_value, correlation, outcome_probabilities, singlet_state, werner_state, ChshAngles,
    CorrelationModel, OutcomeProbabilities, PolarizerAngle, SettingPair, TwoQubitState,
};
pub use error::{Error, Result};
pub use estimate::{estimate_correlation, estimate_s, estimate_visibility, CorrelationEstimate, SResult};
pub use optimizer::{optimize, scan_fringe, ExperimentOracle, OptimizedAngles, OptimizerOptions};
pub use records::{CoincidenceCounts, MeasurementRecord, MeasurementRecordSet};
pub use report::{build_report, ReportDocument};
pub use sim::{
    match_coincidences, run_experiment, sample_counts_aggregate, simulate_setting, ExperimentPlan,
    TimestampStream,
};

/// Records for `config`, simulated with its configured mode.
pub fn simulate(config: &RunConfig) -> Result<MeasurementRecordSet> {
    let plan = config.experiment_plan();
    match config.mode {
        SimulationMode::Event => run_experiment(&config.apparatus, &plan),
        SimulationMode::Aggregate => sample_counts_aggregate(&config.apparatus, &plan),
    }
}
