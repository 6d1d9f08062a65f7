//! Alternating fringe scans that tune the four analyzer angles.
//!
//! Starting from `a0 = 0°`, Bob's analyzer is swept to find the coincidence
//! minimum of the fringe; `b0` sits 22.5° past it and `b1` 45° past `b0`. With
//! Bob parked at `b0`, Alice's analyzer is swept the same way to place `a0`
//! and `a1`. The two scans alternate until no angle moves by more than the
//! stage resolution.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::apparatus::{expected_setting_rates, quantize, ApparatusParams};
use crate::correlation::{ChshAngles, PolarizerAngle, SettingPair};
use crate::error::{ensure_positive, Result};
use crate::sim::simulate_setting_with;

/// Anything that returns a coincidence count for analyzer angles `(a, b)`
/// integrated over `dwell` seconds.
pub trait ExperimentOracle {
    fn count(&mut self, a: PolarizerAngle, b: PolarizerAngle, dwell: f64) -> Result<f64>;
}

/// Noise-free expected counts.
pub struct ModelOracle<'a> {
    pub params: &'a ApparatusParams,
}

impl ExperimentOracle for ModelOracle<'_> {
    fn count(&mut self, a: PolarizerAngle, b: PolarizerAngle, dwell: f64) -> Result<f64> {
        Ok(expected_setting_rates(self.params, SettingPair { a, b }).coincidences() * dwell)
    }
}

/// Poisson draws around the expected counts.
pub struct PoissonOracle<'a> {
    pub params: &'a ApparatusParams,
    rng: ChaCha8Rng,
}

impl<'a> PoissonOracle<'a> {
    pub fn new(params: &'a ApparatusParams, seed: u64) -> Self {
        PoissonOracle {
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ExperimentOracle for PoissonOracle<'_> {
    fn count(&mut self, a: PolarizerAngle, b: PolarizerAngle, dwell: f64) -> Result<f64> {
        let mean = expected_setting_rates(self.params, SettingPair { a, b }).coincidences() * dwell;
        if mean <= 0.0 {
            return Ok(0.0);
        }
        Ok(Poisson::new(mean).expect("positive mean").sample(&mut self.rng))
    }
}

/// Full event-level simulation of every probe.
pub struct EventOracle<'a> {
    pub params: &'a ApparatusParams,
    rng: ChaCha8Rng,
}

impl<'a> EventOracle<'a> {
    pub fn new(params: &'a ApparatusParams, seed: u64) -> Self {
        EventOracle {
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ExperimentOracle for EventOracle<'_> {
    fn count(&mut self, a: PolarizerAngle, b: PolarizerAngle, dwell: f64) -> Result<f64> {
        let c = simulate_setting_with(self.params, SettingPair { a, b }, dwell, &mut self.rng)?;
        Ok(c.coincidences as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alice,
    Bob,
}

/// One oracle call per sweep angle with the other analyzer held at `fixed`.
pub fn scan_fringe<O: ExperimentOracle + ?Sized>(
    oracle: &mut O,
    side: Side,
    fixed: PolarizerAngle,
    sweep: &[f64],
    dwell: f64,
) -> Result<Vec<(f64, f64)>> {
    sweep
        .iter()
        .map(|&d| {
            let moving = PolarizerAngle::new(d);
            let c = match side {
                Side::Alice => oracle.count(moving, fixed, dwell)?,
                Side::Bob => oracle.count(fixed, moving, dwell)?,
            };
            Ok((d, c))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOptions {
    pub dwell: f64,
    pub coarse_step: f64,
    /// Half-width of the fine scan around the coarse minimum, degrees.
    pub fine_span: f64,
    pub max_rounds: u32,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            dwell: 10.0,
            coarse_step: 5.0,
            fine_span: 5.0,
            max_rounds: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedAngles {
    pub a0: f64,
    pub b0: f64,
    pub a1: f64,
    pub b1: f64,
    pub iterations: u32,
    pub converged: bool,
}

impl OptimizedAngles {
    pub fn chsh_angles(&self) -> ChshAngles {
        ChshAngles::new(self.a0, self.a1, self.b0, self.b1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanStage {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTrace {
    pub round: u32,
    pub stage: ScanStage,
    pub swept: Side,
    pub fixed_deg: f64,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimization {
    pub angles: OptimizedAngles,
    pub traces: Vec<ScanTrace>,
}

pub const SCAN_CSV_HEADER: &str = "round,stage,swept,fixed_deg,angle_deg,count";

/// Plot data: one row per probe, in probe order.
pub fn traces_to_csv(traces: &[ScanTrace]) -> String {
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for t in traces {
        let stage = match t.stage {
            ScanStage::Coarse => "coarse",
            ScanStage::Fine => "fine",
        };
        let swept = match t.swept {
            Side::Alice => "alice",
            Side::Bob => "bob",
        };
        for (angle, count) in &t.points {
            out.push_str(&format!("{},{stage},{swept},{},{angle},{count}\n", t.round, t.fixed_deg));
        }
    }
    out
}

/// Smallest distance between two analyzer orientations, degrees.
pub fn angular_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(180.0);
    d.min(180.0 - d)
}

fn snap(d: f64, resolution: f64) -> f64 {
    PolarizerAngle::new(quantize(d, resolution)).degrees()
}

/// Vertex of the least-squares parabola through `points`, or `None` when the
/// fit is not convex.
fn parabola_vertex(points: &[(f64, f64)], centre: f64) -> Option<f64> {
    use nalgebra::{Matrix3, Vector3};
    let mut m = Matrix3::zeros();
    let mut v = Vector3::zeros();
    for &(x, y) in points {
        let u = x - centre;
        let row = Vector3::new(1.0, u, u * u);
        m += row * row.transpose();
        v += row * y;
    }
    let c = m.try_inverse()? * v;
    (c[2] > 0.0).then(|| centre - c[1] / (2.0 * c[2]))
}

struct Scanner<'o, O: ?Sized> {
    oracle: &'o mut O,
    opts: OptimizerOptions,
    resolution: f64,
    traces: Vec<ScanTrace>,
}

impl<O: ExperimentOracle + ?Sized> Scanner<'_, O> {
    /// Coarse sweep over a half turn, then a fine sweep around its minimum;
    /// the minimum is refined by a parabola fit and snapped to the stage grid.
    fn locate_minimum(&mut self, round: u32, side: Side, fixed: f64) -> Result<f64> {
        let fixed = PolarizerAngle::new(fixed);
        let res = self.resolution;
        let n_coarse = (180.0 / self.opts.coarse_step).round() as usize;
        let coarse: Vec<f64> = (0..n_coarse)
            .map(|k| quantize(k as f64 * self.opts.coarse_step, res))
            .collect();
        let pts = scan_fringe(self.oracle, side, fixed, &coarse, self.opts.dwell)?;
        // first minimum wins, i.e. ties go to the smaller angle
        let (centre, _) = pts
            .iter()
            .copied()
            .fold((0.0, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best });
        self.traces.push(ScanTrace {
            round,
            stage: ScanStage::Coarse,
            swept: side,
            fixed_deg: fixed.degrees(),
            points: pts,
        });

        let half = (self.opts.fine_span / res).round() as i64;
        let fine: Vec<f64> = (-half..=half)
            .map(|k| quantize(centre + k as f64 * res, res))
            .collect();
        let pts = scan_fringe(self.oracle, side, fixed, &fine, self.opts.dwell)?;
        let best = pts
            .iter()
            .copied()
            .fold((centre, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
            .0;
        let vertex = parabola_vertex(&pts, centre)
            .filter(|v| (v - centre).abs() <= self.opts.fine_span)
            .unwrap_or(best);
        self.traces.push(ScanTrace {
            round,
            stage: ScanStage::Fine,
            swept: side,
            fixed_deg: fixed.degrees(),
            points: pts,
        });
        Ok(vertex)
    }
}

pub fn optimize<O: ExperimentOracle + ?Sized>(
    oracle: &mut O,
    resolution: f64,
    opts: &OptimizerOptions,
) -> Result<Optimization> {
    ensure_positive("resolution", resolution)?;
    ensure_positive("dwell", opts.dwell)?;
    ensure_positive("coarse_step", opts.coarse_step)?;
    ensure_positive("fine_span", opts.fine_span)?;
    let mut scanner = Scanner {
        oracle,
        opts: *opts,
        resolution,
        traces: Vec::new(),
    };
    let mut a0 = 0.0;
    let mut previous: Option<[f64; 4]> = None;
    let mut current = [0.0, 45.0, 22.5, 67.5];
    let mut converged = false;
    let mut rounds = 0;
    while rounds < opts.max_rounds {
        rounds += 1;
        let b_min = scanner.locate_minimum(rounds, Side::Bob, a0)?;
        let b0 = snap(b_min + 22.5, resolution);
        let b1 = snap(b0 + 45.0, resolution);
        let a_min = scanner.locate_minimum(rounds, Side::Alice, b0)?;
        let new_a0 = snap(a_min - 22.5, resolution);
        let a1 = snap(new_a0 + 45.0, resolution);
        current = [new_a0, a1, b0, b1];
        if let Some(prev) = previous {
            if prev
                .iter()
                .zip(current)
                .all(|(p, c)| angular_distance(*p, c) <= resolution * (1.0 + 1e-9))
            {
                converged = true;
                break;
            }
        }
        previous = Some(current);
        a0 = new_a0;
    }
    let [a0, a1, b0, b1] = current;
    Ok(Optimization {
        angles: OptimizedAngles {
            a0,
            b0,
            a1,
            b1,
            iterations: rounds,
            converged,
        },
        traces: scanner.traces,
    })
}
