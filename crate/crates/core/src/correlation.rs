//! Polarization states of a photon pair, single-channel analyzer projectors
//! and the resulting joint outcome probabilities and correlations.
//!
//! Conventions used throughout the crate:
//! * basis order of the two-photon space is `HH, HV, VH, VV`;
//! * a linear polarizer at angle θ (degrees, H = 0°) transmits
//!   `cos θ |H⟩ + sin θ |V⟩`; the "−" outcome of a setting is realized by the
//!   same analyzer rotated to θ + 90°;
//! * the singlet gives `E(a, a) = −1`, so canonical CHSH angles produce
//!   `S = −2√2`. Bounds are always compared against `|S|`.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_range, Error, Result};

/// Sign of each correlation in `S = E(a0,b0) − E(a0,b1) + E(a1,b0) + E(a1,b1)`.
pub const CHSH_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;

/// Polarizer orientation in degrees, canonicalized to `[0, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct PolarizerAngle(f64);

impl PolarizerAngle {
    pub fn new(degrees: f64) -> Self {
        // `+ 0.0` maps -0.0 to 0.0
        let mut d = degrees.rem_euclid(180.0) + 0.0;
        // rem_euclid of a tiny negative value rounds up to the modulus
        if d >= 180.0 {
            d = 0.0;
        }
        PolarizerAngle(d)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    /// The analyzer orientation that selects the complementary outcome.
    pub fn orthogonal(self) -> Self {
        PolarizerAngle::new(self.0 + 90.0)
    }

    pub fn offset(self, degrees: f64) -> Self {
        PolarizerAngle::new(self.0 + degrees)
    }

    /// Transmitted polarization vector `cos θ |H⟩ + sin θ |V⟩`.
    fn transmitted(self) -> Vector2<f64> {
        let t = self.radians();
        Vector2::new(t.cos(), t.sin())
    }
}

impl From<f64> for PolarizerAngle {
    fn from(d: f64) -> Self {
        PolarizerAngle::new(d)
    }
}

impl From<PolarizerAngle> for f64 {
    fn from(a: PolarizerAngle) -> f64 {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingPair {
    pub a: PolarizerAngle,
    pub b: PolarizerAngle,
}

impl SettingPair {
    pub fn new(a: impl Into<PolarizerAngle>, b: impl Into<PolarizerAngle>) -> Self {
        SettingPair {
            a: a.into(),
            b: b.into(),
        }
    }
}

/// The four base analyzer angles of a CHSH test, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshAngles {
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
}

impl ChshAngles {
    pub const fn new(a0: f64, a1: f64, b0: f64, b1: f64) -> Self {
        ChshAngles { a0, a1, b0, b1 }
    }

    /// The textbook optimum for the singlet: 0°, 45°, 22.5°, 67.5°.
    pub const fn canonical() -> Self {
        ChshAngles::new(0.0, 45.0, 22.5, 67.5)
    }

    /// Setting pairs in correlation order `(a0,b0), (a0,b1), (a1,b0), (a1,b1)`.
    pub fn pairs(&self) -> [SettingPair; 4] {
        [
            SettingPair::new(self.a0, self.b0),
            SettingPair::new(self.a0, self.b1),
            SettingPair::new(self.a1, self.b0),
            SettingPair::new(self.a1, self.b1),
        ]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a0, self.a1, self.b0, self.b1]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        ChshAngles::new(v[0], v[1], v[2], v[3])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ChshAngles::new(f(self.a0), f(self.a1), f(self.b0), f(self.b1))
    }
}

/// Combine four correlations in `(a0,b0), (a0,b1), (a1,b0), (a1,b1)` order.
pub fn chsh_combination(e: [f64; 4]) -> f64 {
    e.iter().zip(CHSH_SIGNS).map(|(e, s)| s * e).sum()
}

/// Joint outcome probabilities for one setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl OutcomeProbabilities {
    pub fn total(&self) -> f64 {
        self.p_pp + self.p_pm + self.p_mp + self.p_mm
    }

    pub fn correlation(&self) -> f64 {
        self.p_pp - self.p_pm - self.p_mp + self.p_mm
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }
}

/// Density matrix of the polarization pair in the `HH, HV, VH, VV` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4<Complex64>,
}

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(rho: Matrix4<Complex64>) -> Result<Self> {
        let herm_dev = (rho - rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max deviation {herm_dev:e})"
            )));
        }
        let tr = rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let state = TwoQubitState { rho };
        let min_ev = state.min_eigenvalue();
        if min_ev < PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min_ev:e})"
            )));
        }
        Ok(state)
    }

    /// `|Ψ⁻⟩⟨Ψ⁻|` with `|Ψ⁻⟩ = (|HV⟩ − |VH⟩)/√2`.
    pub fn singlet() -> Self {
        let mut rho = Matrix4::zeros();
        rho[(1, 1)] = Complex64::new(0.5, 0.0);
        rho[(2, 2)] = Complex64::new(0.5, 0.0);
        rho[(1, 2)] = Complex64::new(-0.5, 0.0);
        rho[(2, 1)] = Complex64::new(-0.5, 0.0);
        TwoQubitState { rho }
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState {
            rho: Matrix4::identity() * Complex64::new(0.25, 0.0),
        }
    }

    /// Singlet mixed with white noise: `v·|Ψ⁻⟩⟨Ψ⁻| + (1−v)·I/4`.
    pub fn werner(visibility: f64) -> Result<Self> {
        ensure_range("visibility", visibility, 0.0, 1.0)?;
        let v = Complex64::new(visibility, 0.0);
        let w = Complex64::new(1.0 - visibility, 0.0);
        Ok(TwoQubitState {
            rho: Self::singlet().rho * v + Self::maximally_mixed().rho * w,
        })
    }

    /// Pure state from an (unnormalized) amplitude vector.
    pub fn pure(amplitudes: Vector4<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero amplitude vector".into()));
        }
        let psi = amplitudes / Complex64::new(norm, 0.0);
        Ok(TwoQubitState {
            rho: psi * psi.adjoint(),
        })
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Reduced state of photon A.
    pub fn partial_trace_b(&self) -> Matrix2<Complex64> {
        Matrix2::from_fn(|i, j| self.rho[(2 * i, 2 * j)] + self.rho[(2 * i + 1, 2 * j + 1)])
    }

    /// `⟨ψ|ρ|ψ⟩` for a real product vector `ψ = u ⊗ w`.
    fn sandwich(&self, u: Vector2<f64>, w: Vector2<f64>) -> f64 {
        let psi = Vector4::new(u[0] * w[0], u[0] * w[1], u[1] * w[0], u[1] * w[1]);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += self.rho[(i, j)] * (psi[i] * psi[j]);
            }
        }
        acc.re
    }
}

pub fn singlet_state() -> TwoQubitState {
    TwoQubitState::singlet()
}

pub fn werner_state(visibility: f64) -> Result<TwoQubitState> {
    TwoQubitState::werner(visibility)
}

/// `p_xy = Tr(ρ · Π_x(a) ⊗ Π_y(b))`.
pub fn outcome_probabilities(state: &TwoQubitState, s: SettingPair) -> OutcomeProbabilities {
    let ap = s.a.transmitted();
    let am = s.a.orthogonal().transmitted();
    let bp = s.b.transmitted();
    let bm = s.b.orthogonal().transmitted();
    OutcomeProbabilities {
        p_pp: state.sandwich(ap, bp),
        p_pm: state.sandwich(ap, bm),
        p_mp: state.sandwich(am, bp),
        p_mm: state.sandwich(am, bm),
    }
}

pub fn correlation(state: &TwoQubitState, s: SettingPair) -> f64 {
    outcome_probabilities(state, s).correlation()
}

pub fn chsh_value(state: &TwoQubitState, angles: &ChshAngles) -> f64 {
    let pairs = angles.pairs();
    chsh_combination(pairs.map(|p| correlation(state, p)))
}

/// Analytic correlation family with separate H/V and ±45° visibilities and
/// per-side analyzer offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationModel {
    pub v_hv: f64,
    pub v_45: f64,
    /// Degrees added to every Alice analyzer angle.
    #[serde(default)]
    pub misalign_a: f64,
    /// Degrees added to every Bob analyzer angle.
    #[serde(default)]
    pub misalign_b: f64,
}

impl CorrelationModel {
    pub fn ideal() -> Self {
        CorrelationModel {
            v_hv: 1.0,
            v_45: 1.0,
            misalign_a: 0.0,
            misalign_b: 0.0,
        }
    }

    pub fn with_visibilities(v_hv: f64, v_45: f64) -> Self {
        CorrelationModel {
            v_hv,
            v_45,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_range("v_hv", self.v_hv, 0.0, 1.0)?;
        ensure_range("v_45", self.v_45, 0.0, 1.0)?;
        if !self.misalign_a.is_finite() || !self.misalign_b.is_finite() {
            return Err(Error::domain(
                "misalign",
                self.misalign_a + self.misalign_b,
                "must be finite",
            ));
        }
        Ok(())
    }

    pub fn correlation(&self, s: SettingPair) -> f64 {
        let ta = 2.0 * (s.a.degrees() + self.misalign_a).to_radians();
        let tb = 2.0 * (s.b.degrees() + self.misalign_b).to_radians();
        -(self.v_hv * ta.cos() * tb.cos() + self.v_45 * ta.sin() * tb.sin())
    }

    /// Joint probabilities with unbiased marginals of 1/2 on both sides.
    pub fn outcome_probabilities(&self, s: SettingPair) -> OutcomeProbabilities {
        let e = self.correlation(s);
        OutcomeProbabilities {
            p_pp: (1.0 + e) / 4.0,
            p_pm: (1.0 - e) / 4.0,
            p_mp: (1.0 - e) / 4.0,
            p_mm: (1.0 + e) / 4.0,
        }
    }

    pub fn chsh(&self, angles: &ChshAngles) -> f64 {
        chsh_combination(angles.pairs().map(|p| self.correlation(p)))
    }
}

pub fn model_correlation(m: &CorrelationModel, s: SettingPair) -> f64 {
    m.correlation(s)
}
