//! Bounds on the CHSH parameter: the local deterministic value found by
//! enumeration, the quantum (Tsirelson) and conjectured effective-theory
//! (Grinbaum) limits, and the no-signaling PR box.

use serde::{Deserialize, Serialize};

use crate::correlation::{chsh_combination, outcome_probabilities, ChshAngles, TwoQubitState};
use crate::error::{Error, Result};
use crate::estimate::SResult;

pub const LOCAL_BOUND: f64 = 2.0;
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Upper limit on `|S|` from the observer-complexity model; quoted as
/// 2.82537(2). The trailing uncertainty is not used in significance figures.
pub const GRINBAUM_BOUND: f64 = 2.82537;
/// Algebraic maximum reachable by no-signaling boxes.
pub const PR_BOUND: f64 = 4.0;

const NORMALIZATION_TOL: f64 = 1e-12;

/// Conditional distribution `p[x][y][a][b]` of outcomes `a, b` (index 0 is
/// `+1`, index 1 is `−1`) given inputs `x, y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BehaviorTable {
    pub p: [[[[f64; 2]; 2]; 2]; 2],
}

fn outcome_value(i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        -1.0
    }
}

impl BehaviorTable {
    pub fn new(p: [[[[f64; 2]; 2]; 2]; 2]) -> Result<Self> {
        let t = BehaviorTable { p };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let mut worst = 0.0f64;
        for x in 0..2 {
            for y in 0..2 {
                let block = &self.p[x][y];
                if let Some(v) = block.iter().flatten().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(Error::InvalidBehavior {
                        reason: format!("entry {v} at x={x}, y={y} is not a probability"),
                        deviation: v.abs(),
                    });
                }
                let sum: f64 = block.iter().flatten().sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
        if worst > NORMALIZATION_TOL {
            return Err(Error::InvalidBehavior {
                reason: "outcome probabilities do not sum to 1 for every input pair".into(),
                deviation: worst,
            });
        }
        Ok(())
    }

    pub fn uniform() -> Self {
        BehaviorTable {
            p: [[[[0.25; 2]; 2]; 2]; 2],
        }
    }

    /// Quantum behavior of `state` measured at `angles`; input 0/1 of each
    /// side selects its first/second analyzer angle.
    pub fn from_state(state: &TwoQubitState, angles: &ChshAngles) -> Self {
        let pairs = angles.pairs();
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let q = outcome_probabilities(state, pairs[2 * x + y]);
                p[x][y] = [[q.p_pp, q.p_pm], [q.p_mp, q.p_mm]];
            }
        }
        BehaviorTable { p }
    }

    pub fn from_strategy(s: &LocalStrategy) -> Self {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let ia = usize::from(s.alice[x] < 0);
                let ib = usize::from(s.bob[y] < 0);
                p[x][y][ia][ib] = 1.0;
            }
        }
        BehaviorTable { p }
    }

    pub fn correlation(&self, x: usize, y: usize) -> f64 {
        let mut e = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                e += outcome_value(a) * outcome_value(b) * self.p[x][y][a][b];
            }
        }
        e
    }

    /// Convex combination `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &BehaviorTable, lambda: f64) -> BehaviorTable {
        let mut p = self.p;
        for (x, px) in p.iter_mut().enumerate() {
            for (y, pxy) in px.iter_mut().enumerate() {
                for (a, pa) in pxy.iter_mut().enumerate() {
                    for (b, v) in pa.iter_mut().enumerate() {
                        *v = lambda * *v + (1.0 - lambda) * other.p[x][y][a][b];
                    }
                }
            }
        }
        BehaviorTable { p }
    }

    /// Apply a relabeling: optionally swap each party's inputs, and flip the
    /// outputs of chosen inputs (indexed after the swap).
    pub fn relabeled(&self, r: Relabeling) -> BehaviorTable {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let sx = if r.swap_alice_inputs { 1 - x } else { x };
                let sy = if r.swap_bob_inputs { 1 - y } else { y };
                for a in 0..2 {
                    for b in 0..2 {
                        let fa = if r.flip_alice[x] { 1 - a } else { a };
                        let fb = if r.flip_bob[y] { 1 - b } else { b };
                        p[x][y][a][b] = self.p[sx][sy][fa][fb];
                    }
                }
            }
        }
        BehaviorTable { p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Relabeling {
    pub swap_alice_inputs: bool,
    pub swap_bob_inputs: bool,
    pub flip_alice: [bool; 2],
    pub flip_bob: [bool; 2],
}

impl Relabeling {
    /// All 64 relabelings.
    pub fn all() -> impl Iterator<Item = Relabeling> {
        (0u8..64).map(|m| Relabeling {
            swap_alice_inputs: m & 1 != 0,
            swap_bob_inputs: m & 2 != 0,
            flip_alice: [m & 4 != 0, m & 8 != 0],
            flip_bob: [m & 16 != 0, m & 32 != 0],
        })
    }
}

pub fn chsh_of_behavior(t: &BehaviorTable) -> f64 {
    chsh_combination([
        t.correlation(0, 0),
        t.correlation(0, 1),
        t.correlation(1, 0),
        t.correlation(1, 1),
    ])
}

/// Fixed ±1 outcome for each input of each party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalStrategy {
    pub alice: [i8; 2],
    pub bob: [i8; 2],
}

impl LocalStrategy {
    pub fn all() -> impl Iterator<Item = LocalStrategy> {
        let v = |bit: u8| if bit == 0 { 1i8 } else { -1 };
        (0u8..16).map(move |m| LocalStrategy {
            alice: [v(m & 1), v((m >> 1) & 1)],
            bob: [v((m >> 2) & 1), v((m >> 3) & 1)],
        })
    }

    pub fn chsh(&self) -> f64 {
        let (a, b) = (self.alice.map(f64::from), self.bob.map(f64::from));
        a[0] * b[0] - a[0] * b[1] + a[1] * b[0] + a[1] * b[1]
    }
}

/// Largest `|S|` over the 16 deterministic local strategies and the first
/// strategy reaching it.
pub fn local_deterministic_bound() -> (f64, LocalStrategy) {
    LocalStrategy::all()
        .map(|s| (s.chsh().abs(), s))
        .fold((f64::NEG_INFINITY, LocalStrategy { alice: [1, 1], bob: [1, 1] }), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        })
}

/// `p(a,b|x,y) = 1/2` when `a·b` equals the sign that `E(x,y)` carries in
/// `S`, i.e. anticorrelated only for `(x,y) = (0,1)`.
pub fn pr_box() -> BehaviorTable {
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let anti = x == 0 && y == 1;
            for a in 0..2 {
                for b in 0..2 {
                    if (a == b) != anti {
                        p[x][y][a][b] = 0.5;
                    }
                }
            }
        }
    }
    BehaviorTable { p }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoSignaling {
    pub holds: bool,
    pub max_violation: f64,
}

/// Alice's marginals must not depend on Bob's input and vice versa.
pub fn is_no_signaling(t: &BehaviorTable, tol: f64) -> NoSignaling {
    let mut worst = 0.0f64;
    for x in 0..2 {
        for a in 0..2 {
            let m0: f64 = t.p[x][0][a].iter().sum();
            let m1: f64 = t.p[x][1][a].iter().sum();
            worst = worst.max((m0 - m1).abs());
        }
    }
    for y in 0..2 {
        for b in 0..2 {
            let m0: f64 = (0..2).map(|a| t.p[0][y][a][b]).sum();
            let m1: f64 = (0..2).map(|a| t.p[1][y][a][b]).sum();
            worst = worst.max((m0 - m1).abs());
        }
    }
    NoSignaling {
        holds: worst <= tol,
        max_violation: worst,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub s: f64,
    pub sigma: f64,
    pub z_local: f64,
    pub z_grinbaum: f64,
    pub tsirelson_gap: f64,
    pub tsirelson_gap_sigmas: f64,
}

impl BoundReport {
    pub fn from_result(r: &SResult) -> Self {
        bound_report(r.s, r.sigma)
    }

    /// Significance against the Grinbaum bound truncated to one decimal, the
    /// conservative reading (4.353 → "4.3").
    pub fn grinbaum_sigma_display(&self) -> String {
        truncate_one_decimal(self.z_grinbaum)
    }
}

pub fn truncate_one_decimal(x: f64) -> String {
    let t = (x * 10.0 + 1e-9 * x.signum()).trunc() / 10.0;
    format!("{t:.1}")
}

/// Distances of `|s|` from the local, Grinbaum and Tsirelson bounds.
pub fn bound_report(s: f64, sigma: f64) -> BoundReport {
    let abs_s = s.abs();
    let gap = TSIRELSON_BOUND - abs_s;
    BoundReport {
        s,
        sigma,
        z_local: (abs_s - LOCAL_BOUND) / sigma,
        z_grinbaum: (abs_s - GRINBAUM_BOUND) / sigma,
        tsirelson_gap: gap,
        tsirelson_gap_sigmas: gap / sigma,
    }
}
