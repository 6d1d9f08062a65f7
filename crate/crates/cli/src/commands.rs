use std::fs::File;
use std::path::{Path, PathBuf};

use bellbench::bounds::NoSignaling;
use bellbench::config::OracleKind;
use bellbench::optimizer::{traces_to_csv, EventOracle, ModelOracle, Optimization, PoissonOracle};
use bellbench::sim::{expected_chsh, expected_records};
use bellbench::{
    build_report, chsh_of_behavior, full_budget, is_no_signaling, local_deterministic_bound,
    optimize as run_optimizer, pr_box, singlet_state, BehaviorTable, ChshAngles, Error,
    ErrorBudget, MeasurementRecordSet, OptimizedAngles, RunConfig, SimulationMode,
    GRINBAUM_BOUND, LOCAL_BOUND, PR_BOUND, TSIRELSON_BOUND,
};
use serde::Serialize;

use crate::exit;
use crate::output::OutDir;
use crate::{Builtin, ModeArg, RunArgs};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: exit::CONFIG, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: exit::IO, message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => exit::IO,
            e if e.is_config_error() => exit::CONFIG,
            _ => exit::DATA,
        };
        Failure { code, message: e.to_string() }
    }
}

fn load(run: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match (&run.config, run.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(p)) => RunConfig::preset(p.as_str())?,
        (None, None) => RunConfig::preset("paper")?,
    };
    if let Some(seed) = run.seed {
        cfg.plan.seed = seed;
    }
    if let Some(sets) = run.sets {
        cfg.plan.sets = sets;
    }
    if let Some(mode) = run.mode {
        cfg.mode = match mode {
            ModeArg::Event => SimulationMode::Event,
            ModeArg::Aggregate => SimulationMode::Aggregate,
        };
    }
    if let Some(dir) = &run.out_dir {
        cfg.output.dir = dir.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<OutDir, Failure> {
    OutDir::create(Path::new(&cfg.output.dir))
}

fn read_records(path: &Path) -> Result<MeasurementRecordSet, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    Ok(MeasurementRecordSet::read_csv(std::io::BufReader::new(file), &path.display().to_string())?)
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s.into_bytes()
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn summarize(doc: &bellbench::ReportDocument) {
    println!(
        "S = {:.5} +/- {:.5} (|S| = {:.5}); {} sigma above the Grinbaum bound; 2sqrt2 - |S| = {:.5}",
        doc.chsh.s,
        doc.budget.total,
        doc.chsh.abs_s,
        doc.bounds.grinbaum_sigmas_display,
        doc.bounds.report.tsirelson_gap
    );
}

pub fn simulate(run: &RunArgs) -> Result<(), Failure> {
    let cfg = load(run)?;
    let records = bellbench::simulate(&cfg)?;
    let report = build_report(&records, &cfg)?;
    let out = out_dir(&cfg)?;
    let paths = vec![
        out.write(&cfg.output.records, records.to_csv_string().as_bytes())?,
        out.write(&cfg.output.report, report.to_json().as_bytes())?,
        out.write("config.toml", cfg.to_toml_string().as_bytes())?,
    ];
    summarize(&report);
    announce(&paths);
    Ok(())
}

pub fn analyze(records: &Path, run: &RunArgs) -> Result<(), Failure> {
    let cfg = load(run)?;
    let data = read_records(records)?;
    let report = build_report(&data, &cfg)?;
    let out = out_dir(&cfg)?;
    let path = out.write(&cfg.output.report, report.to_json().as_bytes())?;
    summarize(&report);
    announce(&[path]);
    Ok(())
}

#[derive(Serialize)]
struct OptimizeOutput {
    config_hash: String,
    seed: u64,
    oracle: OracleKind,
    resolution_deg: f64,
    dwell_s: f64,
    angles: OptimizedAngles,
    /// Noise-free `|S|` of the configured apparatus at these angles.
    expected_abs_s_found: f64,
    expected_abs_s_canonical: f64,
    expected_abs_s_configured: f64,
}

pub fn optimize(run: &RunArgs) -> Result<(), Failure> {
    let cfg = load(run)?;
    let p = &cfg.apparatus;
    let opts = cfg.optimizer.options();
    let resolution = p.actuator.resolution;
    let seed = cfg.plan.seed;
    let result: Optimization = match cfg.optimizer.oracle {
        OracleKind::Model => run_optimizer(&mut ModelOracle { params: p }, resolution, &opts)?,
        OracleKind::Poisson => run_optimizer(&mut PoissonOracle::new(p, seed), resolution, &opts)?,
        OracleKind::Event => run_optimizer(&mut EventOracle::new(p, seed), resolution, &opts)?,
    };
    let abs_s = |x: &ChshAngles| expected_chsh(p, x).abs();
    let summary = OptimizeOutput {
        config_hash: cfg.config_hash(),
        seed,
        oracle: cfg.optimizer.oracle,
        resolution_deg: resolution,
        dwell_s: opts.dwell,
        angles: result.angles,
        expected_abs_s_found: abs_s(&result.angles.chsh_angles()),
        expected_abs_s_canonical: abs_s(&ChshAngles::canonical()),
        expected_abs_s_configured: abs_s(&cfg.plan.angles),
    };
    let out = out_dir(&cfg)?;
    let paths = vec![
        out.write(&cfg.output.optimize, &json(&summary))?,
        out.write(&cfg.output.scans, traces_to_csv(&result.traces).as_bytes())?,
    ];
    let a = result.angles;
    println!(
        "a0 = {}, b0 = {}, a1 = {}, b1 = {} after {} rounds; |S| = {:.6}",
        a.a0, a.b0, a.a1, a.b1, a.iterations, summary.expected_abs_s_found
    );
    announce(&paths);
    if !a.converged {
        return Err(Failure {
            code: exit::NOT_CONVERGED,
            message: format!(
                "angle search did not converge within {} rounds; best angles so far were written",
                opts.max_rounds
            ),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundGaps {
    local: f64,
    grinbaum: f64,
    tsirelson: f64,
    pr_box: f64,
}

#[derive(Serialize)]
struct BoundsOutput {
    source: String,
    s: f64,
    abs_s: f64,
    no_signaling: NoSignaling,
    exceeds_local: bool,
    exceeds_grinbaum: bool,
    exceeds_tsirelson: bool,
    /// Bound minus `|S|`.
    gaps: BoundGaps,
}

pub fn bounds(table: Option<&Path>, builtin: Option<Builtin>, out: Option<&Path>) -> Result<(), Failure> {
    let (source, t) = match (builtin, table) {
        (Some(Builtin::Pr), _) => ("builtin:pr".to_string(), pr_box()),
        (Some(Builtin::Local), _) => (
            "builtin:local".to_string(),
            BehaviorTable::from_strategy(&local_deterministic_bound().1),
        ),
        (Some(Builtin::Quantum), _) => (
            "builtin:quantum".to_string(),
            BehaviorTable::from_state(&singlet_state(), &ChshAngles::canonical()),
        ),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            let t: BehaviorTable = serde_json::from_str(&text).map_err(|e| Failure {
                code: exit::DATA,
                message: format!("{}: {e}", path.display()),
            })?;
            t.validate()?;
            (path.display().to_string(), t)
        }
        (None, None) => return Err(Failure::config("bounds: give a table path or --builtin")),
    };
    let s = chsh_of_behavior(&t);
    let abs_s = s.abs();
    let eps = 1e-12;
    let report = BoundsOutput {
        source,
        s,
        abs_s,
        no_signaling: is_no_signaling(&t, 1e-12),
        exceeds_local: abs_s > LOCAL_BOUND + eps,
        exceeds_grinbaum: abs_s > GRINBAUM_BOUND + eps,
        exceeds_tsirelson: abs_s > TSIRELSON_BOUND + eps,
        gaps: BoundGaps {
            local: LOCAL_BOUND - abs_s,
            grinbaum: GRINBAUM_BOUND - abs_s,
            tsirelson: TSIRELSON_BOUND - abs_s,
            pr_box: PR_BOUND - abs_s,
        },
    };
    let bytes = json(&report);
    print!("{}", String::from_utf8_lossy(&bytes));
    if let Some(dir) = out {
        let path = OutDir::create(dir)?.write("bounds.json", &bytes)?;
        announce(&[path]);
    }
    Ok(())
}

#[derive(Serialize)]
struct BudgetOutput {
    config_hash: String,
    source: String,
    sets: usize,
    budget: ErrorBudget,
}

pub fn budget(records: Option<&Path>, run: &RunArgs) -> Result<(), Failure> {
    let cfg = load(run)?;
    let (source, data) = match records {
        Some(path) => (path.display().to_string(), read_records(path)?),
        None => (
            "expected counts of the configured plan".to_string(),
            expected_records(&cfg.apparatus, &cfg.experiment_plan())?,
        ),
    };
    let angles = data.base_angles()?;
    let b = full_budget(&data, &cfg.apparatus, &cfg.apparatus.model, &angles, &cfg.budget)?;
    let out = BudgetOutput {
        config_hash: cfg.config_hash(),
        source,
        sets: data.set_count(),
        budget: b,
    };
    let path = out_dir(&cfg)?.write(&cfg.output.budget, &json(&out))?;
    println!(
        "total {:.3e} (counting {:.3e}, dead time {:.3e}, timing {:.3e}, clock {:.3e} excluded, angle {:.3e})",
        b.total, b.ds_p, b.ds_d, b.ds_t, b.ds_c, b.ds_r
    );
    announce(&[path]);
    Ok(())
}
