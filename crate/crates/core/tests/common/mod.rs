//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use bellbench::ChshAngles;
use rand::Rng;

/// O(n·m) greedy matcher: each A event, in time order, scans the whole B list
/// for the earliest unused event within the window.
pub fn brute_force_match(a: &[f64], b: &[f64], half_width: f64) -> u64 {
    let mut used = vec![false; b.len()];
    let mut count = 0;
    for &ta in a {
        let mut best: Option<usize> = None;
        for (j, &tb) in b.iter().enumerate() {
            if used[j] || (ta - tb).abs() > half_width {
                continue;
            }
            if best.map_or(true, |k| tb < b[k]) {
                best = Some(j);
            }
        }
        if let Some(k) = best {
            used[k] = true;
            count += 1;
        }
    }
    count
}

/// Maximize `f` over the four CHSH angles: a 7.5° global grid followed by a
/// compass search whose step halves down to 1e-10°.
pub fn maximize_over_angles(f: impl Fn(&ChshAngles) -> f64) -> (f64, ChshAngles) {
    let grid: Vec<f64> = (0..24).map(|k| 7.5 * k as f64).collect();
    let mut best = (f64::NEG_INFINITY, ChshAngles::canonical());
    for &a0 in &grid {
        for &a1 in &grid {
            for &b0 in &grid {
                for &b1 in &grid {
                    let x = ChshAngles::new(a0, a1, b0, b1);
                    let v = f(&x);
                    if v > best.0 {
                        best = (v, x);
                    }
                }
            }
        }
    }
    let (mut val, start) = best;
    let mut x = start.as_array();
    let mut step = 2.0;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..4 {
            for dir in [-1.0, 1.0] {
                let mut y = x;
                y[i] += dir * step;
                let v = f(&ChshAngles::from_array(y));
                if v > val {
                    val = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (val, ChshAngles::from_array(x))
}

/// Dense 4-D grid search: every angle within `±span` of `centre` on a `step` grid.
pub fn local_grid_max(
    f: impl Fn(&ChshAngles) -> f64,
    centre: &ChshAngles,
    span: f64,
    step: f64,
) -> (f64, ChshAngles) {
    let n = (span / step).round() as i64;
    let offs: Vec<f64> = (-n..=n).map(|k| k as f64 * step).collect();
    let c = centre.as_array();
    let mut best = (f64::NEG_INFINITY, *centre);
    for &d0 in &offs {
        for &d1 in &offs {
            for &d2 in &offs {
                for &d3 in &offs {
                    let x = ChshAngles::new(c[0] + d0, c[1] + d1, c[2] + d2, c[3] + d3);
                    let v = f(&x);
                    if v > best.0 {
                        best = (v, x);
                    }
                }
            }
        }
    }
    best
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let t = a[i].min(b[j]);
        while i < n && a[i] <= t {
            i += 1;
        }
        while j < m && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

/// Sorted uniform timestamps on `[0, duration)`.
pub fn random_stream<R: Rng>(rng: &mut R, n: usize, duration: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * duration).collect();
    t.sort_by(f64::total_cmp);
    t
}

/// Per-outcome projector probabilities of the singlet written out by hand:
/// `P(±,±) = (1 − s_a·s_b·cos 2(a−b))/4`.
pub fn singlet_probability(a_deg: f64, b_deg: f64, sa: f64, sb: f64) -> f64 {
    (1.0 - sa * sb * (2.0 * (a_deg - b_deg).to_radians()).cos()) / 4.0
}
