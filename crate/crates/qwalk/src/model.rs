//! States and exact linear maps for one period of the lossy split-step walk.
//!
//! Conventions used throughout the crate:
//!
//! - The lattice is the integer interval `[-L, L]` for a half-width `L`.
//! - The coin space is two-dimensional: component 0 is `|0⟩`, component 1 is
//!   `|1⟩`, and `|±⟩ = (|0⟩ ± |1⟩)/√2`.
//! - The shift `S` moves component 0 one site left and component 1 one site
//!   right.
//! - One period applies, right to left,
//!   `R(θ₁/2) S R(θ₂) S R(θ₁/2)` in [`FrameChoice::Prime`] or
//!   `R(θ₂/2) S R(θ₁) S R(θ₂/2)` in [`FrameChoice::DoublePrime`],
//!   followed by the measurement pair: the walker is detected at site `x` with
//!   probability `p·|⟨−|ψ(x)⟩|²`, and the undetected remainder has its `|−⟩`
//!   component scaled by `√(1−p)`.
//! - Rotations are strictly site-local; with a position-dependent coin field
//!   the rotation applied at site `x` uses the angles stored at `x`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::CoinField;
use crate::mat2::Mat2;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut r = angle.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r -= tau;
    }
    r
}

/// The pair of coin angles `(θ₁, θ₂)` defining a split-step period.
///
/// All operator constructions are 2π-periodic in each angle; [`CoinSpec::new`]
/// stores the wrapped representatives in `(-π, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoinSpec {
    pub theta1: f64,
    pub theta2: f64,
}

impl CoinSpec {
    /// Builds a spec with both angles wrapped into `(-π, π]`.
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1: wrap_angle(theta1),
            theta2: wrap_angle(theta2),
        }
    }
}

/// Per-step detection probability `p ∈ [0, 1]` of the `|−⟩` coin component.
///
/// `p = 0` is the unitary limit (useful for checks); loss experiments use
/// `0 < p ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LossParameter(f64);

impl LossParameter {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "loss parameter {p} outside [0, 1]"
            )));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `√(1−p)`, the amplitude retained by the undetected `|−⟩` component.
    pub fn survival_factor(self) -> f64 {
        (1.0 - self.0).sqrt()
    }
}

impl TryFrom<f64> for LossParameter {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

/// Which of the two symmetric period orderings to evolve with.
///
/// Both orderings split the same period at different points; their windings
/// jointly determine the invariant pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameChoice {
    /// `R(θ₁/2) S R(θ₂) S R(θ₁/2)`
    Prime,
    /// `R(θ₂/2) S R(θ₁) S R(θ₂/2)`
    DoublePrime,
}

impl fmt::Display for FrameChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameChoice::Prime => write!(f, "prime"),
            FrameChoice::DoublePrime => write!(f, "double-prime"),
        }
    }
}

impl FromStr for FrameChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prime" => Ok(FrameChoice::Prime),
            "double-prime" | "double_prime" | "dprime" => Ok(FrameChoice::DoublePrime),
            other => Err(Error::InvalidParameter(format!(
                "unknown frame {other:?}; expected \"prime\" or \"double-prime\""
            ))),
        }
    }
}

/// Two-component amplitude field over the bounded lattice `[-L, L]`.
///
/// The squared norm starts at 1 for a normalized initial state and only
/// decreases (by exactly the detected probability) as steps are applied.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkerState {
    half_width: i32,
    step: u32,
    /// Interleaved amplitudes: `amp[2·(x+L) + c]` holds `ψ(x, c)`.
    amp: Vec<Complex64>,
}

impl WalkerState {
    /// An all-zero state (useful as a builder; not normalized).
    pub fn zero(half_width: i32) -> Result<Self> {
        if half_width < 1 {
            return Err(Error::InvalidParameter(format!(
                "lattice half-width must be ≥ 1, got {half_width}"
            )));
        }
        let sites = 2 * half_width as usize + 1;
        Ok(Self {
            half_width,
            step: 0,
            amp: vec![Complex64::new(0.0, 0.0); 2 * sites],
        })
    }

    /// A walker localized at `x` with the given coin amplitudes, normalized.
    pub fn localized(half_width: i32, x: i32, coin: [Complex64; 2]) -> Result<Self> {
        let mut state = Self::zero(half_width)?;
        if x.abs() > half_width {
            return Err(Error::InvalidParameter(format!(
                "site {x} outside lattice of half-width {half_width}"
            )));
        }
        let norm = (coin[0].norm_sqr() + coin[1].norm_sqr()).sqrt();
        if norm <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let i = state.index(x, 0);
        state.amp[i] = coin[0] / norm;
        state.amp[i + 1] = coin[1] / norm;
        Ok(state)
    }

    /// A walker in the non-loss coin state `|+⟩` at `x`.
    pub fn plus_at(half_width: i32, x: i32) -> Result<Self> {
        Self::localized(
            half_width,
            x,
            [
                Complex64::new(SQRT_HALF, 0.0),
                Complex64::new(SQRT_HALF, 0.0),
            ],
        )
    }

    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    /// Number of lattice sites, `2L + 1`.
    pub fn num_sites(&self) -> usize {
        2 * self.half_width as usize + 1
    }

    /// Number of completed periods.
    pub fn step(&self) -> u32 {
        self.step
    }

    pub(crate) fn set_step(&mut self, step: u32) {
        self.step = step;
    }

    fn index(&self, x: i32, c: usize) -> usize {
        debug_assert!(x.abs() <= self.half_width && c < 2);
        2 * (x + self.half_width) as usize + c
    }

    /// Lattice coordinate of site index `i ∈ [0, 2L]`.
    pub fn site(&self, i: usize) -> i32 {
        i as i32 - self.half_width
    }

    pub fn amplitude(&self, x: i32, c: usize) -> Complex64 {
        self.amp[self.index(x, c)]
    }

    pub fn set_amplitude(&mut self, x: i32, c: usize, value: Complex64) {
        let i = self.index(x, c);
        self.amp[i] = value;
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Coin-summed probability at site index `i`.
    pub fn site_norm_sq(&self, i: usize) -> f64 {
        self.amp[2 * i].norm_sqr() + self.amp[2 * i + 1].norm_sqr()
    }

    /// Coin-summed probabilities for all sites, ordered `x = -L ..= L`.
    pub fn site_probabilities(&self) -> Vec<f64> {
        (0..self.num_sites()).map(|i| self.site_norm_sq(i)).collect()
    }

    /// Divides by the norm; errors if the state has fully decayed.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq().sqrt();
        if n <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let mut out = self.clone();
        for a in &mut out.amp {
            *a /= n;
        }
        Ok(out)
    }

    /// Rotates every site's coin in place; the angle may depend on the site
    /// index `i` (site `x = i − L`).
    fn rotate_sites(&mut self, angle_at: impl Fn(usize) -> f64) {
        for i in 0..self.num_sites() {
            let (s, c) = angle_at(i).sin_cos();
            let a0 = self.amp[2 * i];
            let a1 = self.amp[2 * i + 1];
            self.amp[2 * i] = a0 * c - a1 * s;
            self.amp[2 * i + 1] = a0 * s + a1 * c;
        }
    }
}

/// The coin rotation `R(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn coin_rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::from_real(c, -s, s, c)
}

/// The coin-space survivor map `M = |+⟩⟨+| + √(1−p)·|−⟩⟨−|`.
pub fn survivor_kraus(p: LossParameter) -> Mat2 {
    let q = p.survival_factor();
    Mat2::from_real(
        0.5 * (1.0 + q),
        0.5 * (1.0 - q),
        0.5 * (1.0 - q),
        0.5 * (1.0 + q),
    )
}

/// The coin-space detection map `M_e = √p·|−⟩⟨−|`.
pub fn detection_kraus(p: LossParameter) -> Mat2 {
    let r = 0.5 * p.value().sqrt();
    Mat2::from_real(r, -r, -r, r)
}

/// Moves component 0 one site left and component 1 one site right.
///
/// Errors with [`Error::BoundaryOverflow`] if nonzero amplitude would leave
/// the lattice. Amplitude comparisons are exact: sites outside the light cone
/// stay identically zero under the maps in this module, so no tolerance is
/// needed.
pub fn shift_apply(state: &WalkerState) -> Result<WalkerState> {
    let l = state.half_width;
    let zero = Complex64::new(0.0, 0.0);
    if state.amplitude(-l, 0) != zero {
        return Err(Error::BoundaryOverflow {
            x: -l,
            half_width: l,
        });
    }
    if state.amplitude(l, 1) != zero {
        return Err(Error::BoundaryOverflow { x: l, half_width: l });
    }
    let mut out = state.clone();
    for x in -l..=l {
        let c0 = if x < l { state.amplitude(x + 1, 0) } else { zero };
        let c1 = if x > -l { state.amplitude(x - 1, 1) } else { zero };
        out.set_amplitude(x, 0, c0);
        out.set_amplitude(x, 1, c1);
    }
    Ok(out)
}

/// Applies the survivor map `M` at every site.
///
/// The squared norm decreases by exactly the summed detection row of
/// [`detection_probabilities`] on the same input.
pub fn loss_map_apply(state: &WalkerState, p: LossParameter) -> WalkerState {
    let m = survivor_kraus(p);
    let mp = m.m[0][0].re;
    let mm = m.m[0][1].re;
    let mut out = state.clone();
    for i in 0..out.num_sites() {
        let a0 = out.amp[2 * i];
        let a1 = out.amp[2 * i + 1];
        out.amp[2 * i] = a0 * mp + a1 * mm;
        out.amp[2 * i + 1] = a0 * mm + a1 * mp;
    }
    out
}

/// Detection probabilities `P(x) = p·|⟨−|ψ(x)⟩|²` per site, ordered
/// `x = -L ..= L`.
///
/// The input is the (unnormalized) state after the unitary part of the current
/// period, before the survivor map.
pub fn detection_probabilities(state_after_unitary: &WalkerState, p: LossParameter) -> Vec<f64> {
    let pv = p.value();
    (0..state_after_unitary.num_sites())
        .map(|i| {
            let a0 = state_after_unitary.amp[2 * i];
            let a1 = state_after_unitary.amp[2 * i + 1];
            0.5 * pv * (a0 - a1).norm_sqr()
        })
        .collect()
}

/// Applies only the unitary part of one period (rotations and shifts, no
/// measurement). Shared by the exact evolution and the trajectory sampler.
pub(crate) fn apply_unitary_part(
    state: &WalkerState,
    field: &CoinField,
    frame: FrameChoice,
) -> Result<WalkerState> {
    if field.half_width() != state.half_width() {
        return Err(Error::SizeMismatch(format!(
            "coin field half-width {} vs state half-width {}",
            field.half_width(),
            state.half_width()
        )));
    }
    let (outer, inner): (&[f64], &[f64]) = match frame {
        FrameChoice::Prime => (field.theta1_table(), field.theta2_table()),
        FrameChoice::DoublePrime => (field.theta2_table(), field.theta1_table()),
    };
    let mut s = state.clone();
    s.rotate_sites(|i| 0.5 * outer[i]);
    s = shift_apply(&s)?;
    s.rotate_sites(|i| inner[i]);
    s = shift_apply(&s)?;
    s.rotate_sites(|i| 0.5 * outer[i]);
    Ok(s)
}

/// One full period: the frame's rotation/shift sequence, then the measurement
/// pair. Returns the surviving state (step counter advanced) and this step's
/// detection row.
pub fn floquet_step(
    state: &WalkerState,
    field: &CoinField,
    p: LossParameter,
    frame: FrameChoice,
) -> Result<(WalkerState, Vec<f64>)> {
    let after_unitary = apply_unitary_part(state, field, frame)?;
    let row = detection_probabilities(&after_unitary, p);
    let mut survived = loss_map_apply(&after_unitary, p);
    survived.set_step(state.step() + 1);
    Ok((survived, row))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn wrap_angle_lands_in_half_open_interval() {
        assert_abs_diff_eq!(wrap_angle(PI), PI, epsilon = 0.0);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 0.0);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-0.25 * PI), -0.25 * PI, epsilon = 0.0);
        assert_abs_diff_eq!(wrap_angle(2.5 * PI), 0.5 * PI, epsilon = 1e-12);
    }

    #[test]
    fn coin_rotation_analytic_values() {
        let id = coin_rotation(0.0);
        assert_eq!(id, Mat2::identity());

        let quarter = coin_rotation(FRAC_PI_2);
        assert!(quarter.max_abs_diff(&Mat2::from_real(0.0, -1.0, 1.0, 0.0)) < 1e-15);

        let eighth = coin_rotation(FRAC_PI_4);
        let r = 0.5_f64.sqrt();
        assert!(eighth.max_abs_diff(&Mat2::from_real(r, -r, r, r)) < 1e-15);
        assert!((eighth.det() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn kraus_pair_is_complete_for_all_p() {
        for &p in &[0.0, 0.36, 2.0 / 3.0, 0.9, 1.0] {
            let p = LossParameter::new(p).unwrap();
            let m = survivor_kraus(p);
            let me = detection_kraus(p);
            let total = m.adjoint() * m + me.adjoint() * me;
            assert!(
                total.max_abs_diff(&Mat2::identity()) < 1e-12,
                "Kraus completeness failed at p = {}",
                p.value()
            );
        }
    }

    #[test]
    fn loss_parameter_rejects_out_of_range() {
        assert!(LossParameter::new(-0.1).is_err());
        assert!(LossParameter::new(1.5).is_err());
        assert!(LossParameter::new(f64::NAN).is_err());
        assert!(LossParameter::new(0.0).is_ok());
        assert!(LossParameter::new(1.0).is_ok());
    }

    #[test]
    fn shift_moves_components_oppositely() {
        let mut s = WalkerState::zero(3).unwrap();
        s.set_amplitude(0, 0, c(1.0, 0.0));
        let shifted = shift_apply(&s).unwrap();
        assert_eq!(shifted.amplitude(-1, 0), c(1.0, 0.0));
        assert_eq!(shifted.norm_sq(), 1.0);

        let mut s = WalkerState::zero(3).unwrap();
        s.set_amplitude(0, 1, c(1.0, 0.0));
        let shifted = shift_apply(&s).unwrap();
        assert_eq!(shifted.amplitude(1, 1), c(1.0, 0.0));
    }

    #[test]
    fn shift_preserves_norm_of_generic_state() {
        let mut s = WalkerState::zero(4).unwrap();
        s.set_amplitude(-2, 0, c(0.3, 0.4));
        s.set_amplitude(0, 1, c(-0.1, 0.2));
        s.set_amplitude(3, 0, c(0.5, -0.6));
        let before = s.norm_sq();
        let shifted = shift_apply(&s).unwrap();
        assert_abs_diff_eq!(shifted.norm_sq(), before, epsilon = 1e-15);
    }

    #[test]
    fn shift_reports_boundary_overflow() {
        let mut s = WalkerState::zero(2).unwrap();
        s.set_amplitude(-2, 0, c(1.0, 0.0));
        match shift_apply(&s) {
            Err(Error::BoundaryOverflow { x: -2, half_width: 2 }) => {}
            other => panic!("expected BoundaryOverflow at -L, got {other:?}"),
        }
        let mut s = WalkerState::zero(2).unwrap();
        s.set_amplitude(2, 1, c(1.0, 0.0));
        assert!(matches!(
            shift_apply(&s),
            Err(Error::BoundaryOverflow { x: 2, .. })
        ));
    }

    #[test]
    fn loss_map_limits() {
        // p = 0: identity.
        let mut s = WalkerState::zero(2).unwrap();
        s.set_amplitude(1, 0, c(0.6, 0.1));
        s.set_amplitude(-1, 1, c(-0.3, 0.7));
        let out = loss_map_apply(&s, LossParameter::new(0.0).unwrap());
        assert_eq!(out.amp, s.amp);

        // p = 1 on |−⟩: annihilated.
        let minus = [c(SQRT_HALF, 0.0), c(-SQRT_HALF, 0.0)];
        let s = WalkerState::localized(2, 0, minus).unwrap();
        let out = loss_map_apply(&s, LossParameter::new(1.0).unwrap());
        assert!(out.norm_sq() < 1e-30);

        // p = 2/3 on |−⟩: scaled by √(1/3).
        let s = WalkerState::localized(2, 0, minus).unwrap();
        let out = loss_map_apply(&s, LossParameter::new(2.0 / 3.0).unwrap());
        assert_abs_diff_eq!(out.norm_sq(), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn detection_row_limits() {
        let p23 = LossParameter::new(2.0 / 3.0).unwrap();
        let plus = WalkerState::plus_at(2, 0).unwrap();
        let row = detection_probabilities(&plus, p23);
        assert!(row.iter().all(|&v| v.abs() < 1e-30));

        let minus = WalkerState::localized(
            2,
            0,
            [c(SQRT_HALF, 0.0), c(-SQRT_HALF, 0.0)],
        )
        .unwrap();
        let row = detection_probabilities(&minus, LossParameter::new(1.0).unwrap());
        assert_abs_diff_eq!(row[2], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn detection_row_matches_norm_loss() {
        let p = LossParameter::new(2.0 / 3.0).unwrap();
        let mut s = WalkerState::zero(3).unwrap();
        s.set_amplitude(-1, 0, c(0.31, -0.12));
        s.set_amplitude(-1, 1, c(0.05, 0.44));
        s.set_amplitude(2, 0, c(-0.27, 0.09));
        s.set_amplitude(2, 1, c(0.61, 0.33));
        let detected: f64 = detection_probabilities(&s, p).iter().sum();
        let after = loss_map_apply(&s, p);
        assert_abs_diff_eq!(
            s.norm_sq(),
            after.norm_sq() + detected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn trivial_coin_at_p0_is_a_double_left_shift_for_component0() {
        let l = 4;
        let mut s = WalkerState::zero(l).unwrap();
        s.set_amplitude(0, 0, c(1.0, 0.0));
        let field = CoinField::homogeneous(l, CoinSpec::new(0.0, 0.0)).unwrap();
        let (out, row) =
            floquet_step(&s, &field, LossParameter::new(0.0).unwrap(), FrameChoice::Prime)
                .unwrap();
        assert_eq!(out.amplitude(-2, 0), c(1.0, 0.0));
        assert_abs_diff_eq!(out.norm_sq(), 1.0, epsilon = 1e-12);
        assert!(row.iter().all(|&v| v == 0.0));
        assert_eq!(out.step(), 1);
    }

    #[test]
    fn floquet_step_preserves_norm_at_p0() {
        let l = 6;
        let field = CoinField::homogeneous(l, CoinSpec::new(0.9, -1.3)).unwrap();
        let s = WalkerState::localized(l, 1, [c(0.8, 0.1), c(-0.2, 0.55)]).unwrap();
        for frame in [FrameChoice::Prime, FrameChoice::DoublePrime] {
            let (out, row) =
                floquet_step(&s, &field, LossParameter::new(0.0).unwrap(), frame).unwrap();
            assert_abs_diff_eq!(out.norm_sq(), 1.0, epsilon = 1e-12);
            assert!(row.iter().all(|&v| v.abs() < 1e-30));
        }
    }

    #[test]
    fn floquet_step_is_2pi_periodic_in_each_angle() {
        let l = 6;
        let p = LossParameter::new(2.0 / 3.0).unwrap();
        let s = WalkerState::localized(l, 0, [c(0.6, -0.3), c(0.1, 0.73)]).unwrap();
        let tau = std::f64::consts::TAU;
        let base = CoinField::homogeneous(l, CoinSpec::new(0.7, -0.4)).unwrap();
        // Build the shifted field without CoinSpec::new's wrapping so the
        // raw-angle periodicity of the operators themselves is exercised.
        let shifted = CoinField::from_tables(
            l,
            base.theta1_table().iter().map(|t| t + tau).collect(),
            base.theta2_table().iter().map(|t| t - tau).collect(),
        )
        .unwrap();
        for frame in [FrameChoice::Prime, FrameChoice::DoublePrime] {
            let (out_a, row_a) = floquet_step(&s, &base, p, frame).unwrap();
            let (out_b, row_b) = floquet_step(&s, &shifted, p, frame).unwrap();
            for i in 0..out_a.num_sites() {
                assert!((row_a[i] - row_b[i]).abs() < 1e-12);
                for cidx in 0..2 {
                    let x = out_a.site(i);
                    assert!((out_a.amplitude(x, cidx) - out_b.amplitude(x, cidx)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bookkeeping_identity_per_step() {
        let l = 8;
        let p = LossParameter::new(0.36).unwrap();
        let field = CoinField::homogeneous(l, CoinSpec::new(0.3927, 0.7854)).unwrap();
        let mut s = WalkerState::plus_at(l, 0).unwrap();
        for _ in 0..3 {
            let before = s.norm_sq();
            let (next, row) = floquet_step(&s, &field, p, FrameChoice::Prime).unwrap();
            let detected: f64 = row.iter().sum();
            assert_abs_diff_eq!(before, next.norm_sq() + detected, epsilon = 1e-12);
            s = next;
        }
    }
}
