//! Seeded Monte Carlo of the detection chain.
//!
//! Two modes produce the same [`MeasurementRecordSet`]:
//! * [`run_experiment`] generates photon-pair emissions, unpaired photons and
//!   dark counts as timestamp streams, applies dead time and pairs events with
//!   a coincidence unit;
//! * [`sample_counts_aggregate`] draws each counter directly from a Poisson
//!   law with the mean given by [`expected_setting_rates`].
//!
//! Every `(set, setting)` cell draws from its own ChaCha stream derived from
//! `(seed, set, setting)`, so output is independent of thread scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apparatus::{expected_setting_rates, ApparatusParams, CoincidenceWindow};
use crate::correlation::{chsh_combination, ChshAngles, PolarizerAngle, SettingPair};
use crate::error::{ensure_nonneg, ensure_positive, Error, Result};
use crate::records::{MeasurementRecord, MeasurementRecordSet};

pub const SETTINGS_PER_SET: usize = 16;

/// Contribution of each outcome channel `++, +−, −+, −−` to a correlation.
pub const OUTCOME_SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

/// One of the sixteen analyzer configurations of a CHSH run.
///
/// Index layout is correlation-major, outcome-minor: `index = 4·pair + outcome`
/// with pairs `(a0,b0), (a0,b1), (a1,b0), (a1,b1)` and outcomes `++, +−, −+, −−`.
/// A "−" outcome is measured with that side's analyzer turned by 90°.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingSpec {
    pub index: usize,
    pub pair: usize,
    pub outcome: usize,
    pub setting: SettingPair,
}

pub fn setting_schedule(angles: &ChshAngles) -> [SettingSpec; SETTINGS_PER_SET] {
    let pairs = angles.pairs();
    std::array::from_fn(|index| {
        let pair = index / 4;
        let outcome = index % 4;
        let base = pairs[pair];
        let a = if outcome & 2 == 0 { base.a } else { base.a.orthogonal() };
        let b = if outcome & 1 == 0 { base.b } else { base.b.orthogonal() };
        SettingSpec {
            index,
            pair,
            outcome,
            setting: SettingPair { a, b },
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub angles: ChshAngles,
    pub sets: u32,
    /// Seconds per setting.
    pub interval: f64,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sets < 1 {
            return Err(Error::domain("plan.sets", self.sets as f64, "need at least one set"));
        }
        ensure_positive("plan.interval", self.interval)
    }

    /// Base angles snapped to the rotation stage grid.
    pub fn quantized_angles(&self, params: &ApparatusParams) -> ChshAngles {
        self.angles.map(|d| params.actuator.quantize(d))
    }
}

/// Independent random stream for one `(set, setting)` cell.
pub fn cell_rng(seed: u64, set: u32, setting: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((set as u64) << 8) | setting as u64);
    rng
}

/// Detection times of one detector, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestampStream {
    pub label: String,
    pub times: Vec<f64>,
}

impl TimestampStream {
    pub fn new(label: impl Into<String>, times: Vec<f64>) -> Self {
        TimestampStream {
            label: label.into(),
            times,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn check_sorted(&self) -> Result<()> {
        match self.times.windows(2).position(|w| !(w[0] <= w[1])) {
            Some(i) => Err(Error::UnsortedStream {
                label: self.label.clone(),
                index: i + 1,
            }),
            None => Ok(()),
        }
    }
}

fn poisson_arrivals<R: Rng + ?Sized>(rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    if rate <= 0.0 {
        return Vec::new();
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut times = Vec::with_capacity((rate * duration * 1.05) as usize + 16);
    let mut t = gap.sample(rng);
    while t < duration {
        times.push(t);
        t += gap.sample(rng);
    }
    times
}

/// Non-paralyzable thinning of a sorted arrival list.
pub fn apply_dead_time(times: &[f64], dead_time: f64) -> Vec<f64> {
    if dead_time <= 0.0 {
        return times.to_vec();
    }
    let mut out = Vec::with_capacity(times.len());
    let mut ready = f64::NEG_INFINITY;
    for &t in times {
        if t >= ready {
            out.push(t);
            ready = t + dead_time;
        }
    }
    out
}

/// Poisson detections at `rate` over `[0, duration)` passed through a
/// non-paralyzable dead time.
pub fn generate_stream(rate: f64, duration: f64, dead_time: f64, seed: u64) -> Result<TimestampStream> {
    ensure_nonneg("rate", rate)?;
    ensure_positive("duration", duration)?;
    ensure_nonneg("dead_time", dead_time)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = poisson_arrivals(rate, duration, &mut rng);
    Ok(TimestampStream::new("poisson", apply_dead_time(&raw, dead_time)))
}

/// Greedy earliest-match pairing of two sorted streams: each A event, in time
/// order, takes the earliest unused B event with `|t_A − t_B| ≤ half_width`.
/// Every event is used at most once. Single pass, linear in the total length.
pub fn match_coincidences(
    sa: &TimestampStream,
    sb: &TimestampStream,
    window: CoincidenceWindow,
) -> Result<u64> {
    sa.check_sorted()?;
    sb.check_sorted()?;
    let w = window.half_width;
    let (a, b) = (&sa.times, &sb.times);
    let mut j = 0;
    let mut count = 0u64;
    for &ta in a {
        while j < b.len() && b[j] < ta - w {
            j += 1;
        }
        if j == b.len() {
            break;
        }
        if b[j] <= ta + w {
            count += 1;
            j += 1;
        }
    }
    Ok(count)
}

/// Counters of one acquisition interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub singles_a: u64,
    pub singles_b: u64,
    pub coincidences: u64,
}

/// Event-level simulation of one analyzer setting for `duration` seconds.
pub fn simulate_setting(
    params: &ApparatusParams,
    a: PolarizerAngle,
    b: PolarizerAngle,
    duration: f64,
    seed: u64,
) -> Result<SettingCounts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_setting_with(params, SettingPair { a, b }, duration, &mut rng)
}

pub fn simulate_setting_with<R: Rng + ?Sized>(
    params: &ApparatusParams,
    s: SettingPair,
    duration: f64,
    rng: &mut R,
) -> Result<SettingCounts> {
    ensure_positive("duration", duration)?;
    let src = &params.source;
    let (eta_a, eta_b) = (params.det_a.efficiency, params.det_b.efficiency);
    let (wa, wb) = (params.wedge_factor(s.a), params.wedge_factor(s.b));

    // Emitted pairs are thinned by both efficiencies down to `pair_rate`.
    let emitted = if eta_a * eta_b > 0.0 {
        src.pair_rate / (eta_a * eta_b)
    } else {
        0.0
    };
    // Detected photons of arm A that belong to a pair, polarizer removed.
    let paired_a = emitted * eta_a;
    let paired_b = emitted * eta_b;
    let unpaired_a = src.singles_rate_a - paired_a;
    let unpaired_b = src.singles_rate_b - paired_b;
    if unpaired_a < -1e-9 * src.singles_rate_a || unpaired_b < -1e-9 * src.singles_rate_b {
        return Err(Error::domain(
            "source.pair_rate",
            src.pair_rate,
            "pair photons alone exceed the singles rate at this efficiency",
        ));
    }

    let p = params.model.outcome_probabilities(s);
    let cut_pp = p.p_pp;
    let cut_pm = cut_pp + p.p_pm;
    let cut_mp = cut_pm + p.p_mp;
    let (keep_a, keep_b) = (eta_a * wa, eta_b * wb);

    let mut times_a = Vec::new();
    let mut times_b = Vec::new();
    for t in poisson_arrivals(emitted, duration, rng) {
        let u: f64 = rng.random();
        let pass_a = u < cut_pm;
        let pass_b = u < cut_pp || (u >= cut_pm && u < cut_mp);
        if pass_a && rng.random::<f64>() < keep_a {
            times_a.push(t);
        }
        if pass_b && rng.random::<f64>() < keep_b {
            times_b.push(t);
        }
    }
    times_a.extend(poisson_arrivals(0.5 * unpaired_a.max(0.0) * wa, duration, rng));
    times_a.extend(poisson_arrivals(params.det_a.dark_rate, duration, rng));
    times_b.extend(poisson_arrivals(0.5 * unpaired_b.max(0.0) * wb, duration, rng));
    times_b.extend(poisson_arrivals(params.det_b.dark_rate, duration, rng));
    times_a.sort_unstable_by(f64::total_cmp);
    times_b.sort_unstable_by(f64::total_cmp);

    let sa = TimestampStream::new("A", apply_dead_time(&times_a, params.det_a.dead_time));
    let sb = TimestampStream::new("B", apply_dead_time(&times_b, params.det_b.dead_time));
    let coincidences = match_coincidences(&sa, &sb, params.match_window())?;
    Ok(SettingCounts {
        singles_a: sa.len() as u64,
        singles_b: sb.len() as u64,
        coincidences,
    })
}

fn assemble<F>(params: &ApparatusParams, plan: &ExperimentPlan, cell: F) -> Result<MeasurementRecordSet>
where
    F: Fn(SettingPair, &mut ChaCha8Rng) -> Result<SettingCounts> + Sync,
{
    params.validate()?;
    plan.validate()?;
    let schedule = setting_schedule(&plan.quantized_angles(params));
    let total = plan.sets as usize * SETTINGS_PER_SET;
    let records = (0..total)
        .into_par_iter()
        .map(|k| {
            let set = (k / SETTINGS_PER_SET) as u32;
            let spec = schedule[k % SETTINGS_PER_SET];
            let mut rng = cell_rng(plan.seed, set, spec.index);
            let c = cell(spec.setting, &mut rng)?;
            Ok(MeasurementRecord {
                set,
                setting: spec.index as u32,
                alice_deg: spec.setting.a.degrees(),
                bob_deg: spec.setting.b.degrees(),
                duration_s: plan.interval,
                singles_a: c.singles_a,
                singles_b: c.singles_b,
                coincidences: c.coincidences,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementRecordSet::new(records))
}

/// Event-level run of `plan.sets` complete 16-setting sets.
pub fn run_experiment(params: &ApparatusParams, plan: &ExperimentPlan) -> Result<MeasurementRecordSet> {
    assemble(params, plan, |s, rng| simulate_setting_with(params, s, plan.interval, rng))
}

fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Counts-level fast path: every counter is Poisson with the mean predicted by
/// [`expected_setting_rates`].
pub fn sample_counts_aggregate(
    params: &ApparatusParams,
    plan: &ExperimentPlan,
) -> Result<MeasurementRecordSet> {
    assemble(params, plan, |s, rng| {
        let r = expected_setting_rates(params, s);
        let t = plan.interval;
        Ok(SettingCounts {
            singles_a: poisson_draw(r.singles_a * t, rng),
            singles_b: poisson_draw(r.singles_b * t, rng),
            coincidences: poisson_draw(r.coincidences() * t, rng),
        })
    })
}

/// Mean coincidence rate (counts/s) of each of the sixteen settings.
pub fn expected_coincidence_rates(params: &ApparatusParams, angles: &ChshAngles) -> [f64; SETTINGS_PER_SET] {
    setting_schedule(angles).map(|spec| expected_setting_rates(params, spec.setting).coincidences())
}

/// `S` obtained from noise-free counts, i.e. the value the estimator converges to.
pub fn expected_chsh(params: &ApparatusParams, angles: &ChshAngles) -> f64 {
    let rates = expected_coincidence_rates(params, angles);
    let e: [f64; 4] = std::array::from_fn(|pair| {
        let block = &rates[4 * pair..4 * pair + 4];
        let num: f64 = block.iter().zip(OUTCOME_SIGNS).map(|(r, s)| s * r).sum();
        num / block.iter().sum::<f64>()
    });
    chsh_combination(e)
}

/// Records holding the rounded mean counts of every cell, for analytic
/// error budgets without sampling noise.
pub fn expected_records(params: &ApparatusParams, plan: &ExperimentPlan) -> Result<MeasurementRecordSet> {
    assemble(params, plan, |s, _| {
        let r = expected_setting_rates(params, s);
        let t = plan.interval;
        Ok(SettingCounts {
            singles_a: (r.singles_a * t).round() as u64,
            singles_b: (r.singles_b * t).round() as u64,
            coincidences: (r.coincidences() * t).round() as u64,
        })
    })
}
