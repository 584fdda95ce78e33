//! Momentum-space period operators, band decomposition, winding numbers, and
//! phase mapping.
//!
//! With the Fourier convention `|k⟩ = Σ_x e^{ikx}|x⟩`, the shift becomes
//! `S(k) = diag(e^{+ik}, e^{−ik})` and the survivor map acts as its coin-space
//! 2×2 form, so one period is a product of 2×2 matrices per momentum.
//!
//! The winding number counts the turns of `v(k) = (Re n_y, Re n_z)` around the
//! origin as `k` sweeps the Brillouin zone, where `n = i·d/sin E` is taken
//! from the *raw* trace decomposition (no determinant normalization — for
//! lossy steps `det Ũ = √(1−p) ≠ 1`, and normalizing either the matrix or the
//! direction field before taking real parts destroys the quantization). The
//! orientation is fixed so that the winding equals the long-run average
//! displacement of the same frame.

use num_complex::Complex64;
use num_rational::Rational32;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::model::{coin_rotation, survivor_kraus, CoinSpec, FrameChoice, LossParameter};

/// Default tolerance separating genuine band degeneracies from grid
/// artifacts, applied to `|sin E|`, `|v|`, and the band-edge distances.
pub const DEFAULT_GAP_TOL: f64 = 1e-4;

/// Default momentum-grid size for windings and bands.
pub const DEFAULT_K_GRID: usize = 256;

/// Accumulated winding angles must land within this many turns of an integer.
pub const WINDING_TURNS_TOL: f64 = 1e-6;

const REFINEMENT_DEPTH: u32 = 12;

/// The 2×2 one-period operator at a single momentum.
#[derive(Clone, Copy, Debug)]
pub struct BlochMatrix {
    pub k: f64,
    pub matrix: Mat2,
    pub frame: FrameChoice,
    pub coin: CoinSpec,
    pub loss: LossParameter,
}

/// Builds the one-period operator at momentum `k` for a homogeneous coin.
pub fn bloch_floquet(
    k: f64,
    coin: CoinSpec,
    p: LossParameter,
    frame: FrameChoice,
) -> BlochMatrix {
    let shift = Mat2::new(
        Complex64::from_polar(1.0, k),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, -k),
    );
    let unitary = match frame {
        FrameChoice::Prime => {
            let half = coin_rotation(0.5 * coin.theta1);
            half * shift * coin_rotation(coin.theta2) * shift * half
        }
        FrameChoice::DoublePrime => {
            let half = coin_rotation(0.5 * coin.theta2);
            half * shift * coin_rotation(coin.theta1) * shift * half
        }
    };
    BlochMatrix {
        k,
        matrix: survivor_kraus(p) * unitary,
        frame,
        coin,
        loss: p,
    }
}

/// Trace decomposition `U = d₀·1 + d·σ` of a Bloch matrix, with the complex
/// quasienergy `E = arccos d₀` (principal branch) and the spinor direction.
///
/// The stored `n` is bilinearly normalized so that `n·n = 1` whenever the
/// point is valid; the raw (unnormalized) direction is what winding
/// accumulation uses internally.
#[derive(Clone, Copy, Debug)]
pub struct BandDecomposition {
    pub d0: Complex64,
    pub d: [Complex64; 3],
    pub energy: Complex64,
    pub n: [Complex64; 3],
    pub valid: bool,
}

pub fn decompose(b: &BlochMatrix) -> BandDecomposition {
    decompose_with_tol(b, DEFAULT_GAP_TOL)
}

pub fn decompose_with_tol(b: &BlochMatrix, gap_tol: f64) -> BandDecomposition {
    let m = &b.matrix.m;
    let i = Complex64::i();
    let d0 = (m[0][0] + m[1][1]) * 0.5;
    let d = [
        (m[0][1] + m[1][0]) * 0.5,
        i * (m[0][1] - m[1][0]) * 0.5,
        (m[0][0] - m[1][1]) * 0.5,
    ];
    let energy = d0.acos();
    let s = energy.sin();
    let mut valid = s.norm() >= gap_tol;
    let raw = if s.norm() > 0.0 {
        [i * d[0] / s, i * d[1] / s, i * d[2] / s]
    } else {
        [Complex64::new(0.0, 0.0); 3]
    };
    // Bilinear square n·n (not the Hermitian norm): for lossy steps the raw
    // direction satisfies n·n = (det − d₀²)/sin²E ≠ 1, so rescale by its
    // square root to present a unit direction.
    let nn = raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2];
    let n = if nn.norm() > 1e-12 {
        let root = nn.sqrt();
        [raw[0] / root, raw[1] / root, raw[2] / root]
    } else {
        valid = false;
        raw
    };
    BandDecomposition {
        d0,
        d,
        energy,
        n,
        valid,
    }
}

/// The raw winding field `v(k) = (Re n_y, Re n_z)` (unnormalized) and its
/// magnitude.
fn winding_field(b: &BlochMatrix) -> ((f64, f64), f64) {
    let m = &b.matrix.m;
    let i = Complex64::i();
    let d0 = (m[0][0] + m[1][1]) * 0.5;
    let dy = i * (m[0][1] - m[1][0]) * 0.5;
    let dz = (m[0][0] - m[1][1]) * 0.5;
    let s = d0.acos().sin();
    if s.norm() == 0.0 {
        return ((0.0, 0.0), 0.0);
    }
    let vy = (i * dy / s).re;
    let vz = (i * dz / s).re;
    ((vy, vz), vy.hypot(vz))
}

/// An integer winding with its diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingNumber {
    pub value: i32,
    /// Signed accumulated turns before rounding; within
    /// [`WINDING_TURNS_TOL`] of `value`.
    pub turns: f64,
    /// Base momentum-grid size used.
    pub grid: usize,
    /// Whether a continuity-tracked branch choice reproduces the same
    /// winding as the principal branch.
    pub branch_consistent: bool,
}

fn angle_between(va: (f64, f64), vb: (f64, f64)) -> f64 {
    let dot = va.0 * vb.0 + va.1 * vb.1;
    let cross = va.0 * vb.1 - va.1 * vb.0;
    cross.atan2(dot)
}

fn accumulate_segment(
    eval: &dyn Fn(f64) -> Result<(f64, f64)>,
    ka: f64,
    va: (f64, f64),
    kb: f64,
    vb: (f64, f64),
    depth: u32,
) -> Result<f64> {
    let dphi = angle_between(va, vb);
    if dphi.abs() <= FRAC_PI_2 {
        return Ok(dphi);
    }
    if depth == 0 {
        let mag = va.0.hypot(va.1).min(vb.0.hypot(vb.1));
        return Err(Error::DegenerateBand {
            k: 0.5 * (ka + kb),
            magnitude: mag,
        });
    }
    let km = 0.5 * (ka + kb);
    let vm = eval(km)?;
    Ok(accumulate_segment(eval, ka, va, km, vm, depth - 1)?
        + accumulate_segment(eval, km, vm, kb, vb, depth - 1)?)
}

pub fn winding_number(
    coin: CoinSpec,
    p: LossParameter,
    frame: FrameChoice,
    grid: usize,
) -> Result<WindingNumber> {
    winding_number_with_tol(coin, p, frame, grid, DEFAULT_GAP_TOL)
}

/// Winding of the raw field `v(k)` over a uniform closed loop through
/// `(−π, π]`, with adaptive bisection of any segment turning by more than
/// π/2.
///
/// A sample with `|v|` below `gap_tol` — on the base grid or during
/// refinement — reports [`Error::DegenerateBand`]: the winding field has a
/// node there, which is how gap closings appear for lossy steps.
pub fn winding_number_with_tol(
    coin: CoinSpec,
    p: LossParameter,
    frame: FrameChoice,
    grid: usize,
    gap_tol: f64,
) -> Result<WindingNumber> {
    if grid < 64 {
        return Err(Error::InvalidParameter(format!(
            "winding needs a momentum grid of at least 64 points, got {grid}"
        )));
    }
    let eval = move |k: f64| -> Result<(f64, f64)> {
        let (v, mag) = winding_field(&bloch_floquet(k, coin, p, frame));
        if mag < gap_tol {
            return Err(Error::DegenerateBand { k, magnitude: mag });
        }
        Ok(v)
    };

    let n = grid;
    let ks: Vec<f64> = (0..n).map(|j| -PI + TAU * (j + 1) as f64 / n as f64).collect();
    let mut vs = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    for &k in &ks {
        vs.push(eval(k)?);
        energies.push(decompose_field_energy(k, coin, p, frame));
    }

    let mut total = 0.0;
    for j in 0..n {
        let (ka, va) = (ks[j], vs[j]);
        let (kb, vb) = if j + 1 < n {
            (ks[j + 1], vs[j + 1])
        } else {
            (ks[0] + TAU, vs[0])
        };
        total += accumulate_segment(&eval, ka, va, kb, vb, REFINEMENT_DEPTH)?;
    }
    let turns = -total / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > WINDING_TURNS_TOL {
        return Err(Error::NonIntegerWinding { turns });
    }

    // Cross-check against the alternative branch continuation: track the
    // quasienergy branch for continuity (flipping sign where the principal
    // branch jumps) and accumulate the correspondingly flipped field without
    // refinement. Where the principal branch is already continuous the two
    // accumulations agree exactly.
    let mut total_tracked = 0.0;
    let mut prev_e = energies[0];
    let mut prev_v = vs[0];
    for j in 1..=n {
        let idx = j % n;
        let e = energies[idx];
        let flip = (e - prev_e).norm() > (-e - prev_e).norm();
        let v = if flip {
            (-vs[idx].0, -vs[idx].1)
        } else {
            vs[idx]
        };
        total_tracked += angle_between(prev_v, v);
        prev_e = if flip { -e } else { e };
        prev_v = v;
    }
    let turns_tracked = -total_tracked / TAU;
    let branch_consistent = (turns_tracked - turns).abs() < WINDING_TURNS_TOL;

    Ok(WindingNumber {
        value: rounded as i32,
        turns,
        grid,
        branch_consistent,
    })
}

/// Minimum over the momentum grid of the winding-field magnitude `|v(k)|` —
/// the quantity whose node signals a band transition for lossy steps. Values
/// below the gap tolerance are what make [`winding_number`] report
/// [`Error::DegenerateBand`].
pub fn min_winding_field_magnitude(
    coin: CoinSpec,
    p: LossParameter,
    frame: FrameChoice,
    grid: usize,
) -> f64 {
    let n = grid.max(2);
    let mut min = f64::INFINITY;
    for j in 0..n {
        let k = -PI + TAU * (j + 1) as f64 / n as f64;
        let (_, mag) = winding_field(&bloch_floquet(k, coin, p, frame));
        min = min.min(mag);
    }
    min
}

fn decompose_field_energy(
    k: f64,
    coin: CoinSpec,
    p: LossParameter,
    frame: FrameChoice,
) -> Complex64 {
    let b = bloch_floquet(k, coin, p, frame);
    let d0 = (b.matrix.m[0][0] + b.matrix.m[1][1]) * 0.5;
    d0.acos()
}

/// Windings of both frames and the derived invariant pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingResult {
    pub theta1: f64,
    pub theta2: f64,
    /// Winding of the `R(θ₁/2)…` frame; `None` at a degeneracy.
    pub nu_prime: Option<i32>,
    /// Winding of the `R(θ₂/2)…` frame; `None` at a degeneracy.
    pub nu_double_prime: Option<i32>,
    /// `(ν′ + ν″)/2` as an exact rational; `None` unless both frames are
    /// valid.
    pub nu_zero: Option<Rational32>,
    /// `(ν′ − ν″)/2` as an exact rational.
    pub nu_pi: Option<Rational32>,
    /// Band-edge gap flags: minimum over k of |E| (respectively the circle
    /// distance of ±E to π) exceeds the gap tolerance, in both frames.
    pub gap0_ok: bool,
    pub gap_pi_ok: bool,
    /// Set when the winding parities disagree and the derived pair is not
    /// integer — never the case for the operators built here.
    pub half_integer_anomaly: bool,
    pub branch_consistent: bool,
    pub k_grid_size: usize,
}

impl WindingResult {
    /// Both frames resolved to an integer winding.
    pub fn valid(&self) -> bool {
        self.nu_prime.is_some() && self.nu_double_prime.is_some()
    }
}

pub fn invariant_pair(coin: CoinSpec, p: LossParameter, grid: usize) -> Result<WindingResult> {
    invariant_pair_with_tol(coin, p, grid, DEFAULT_GAP_TOL)
}

/// Computes ν′ and ν″ and derives `(ν₀, ν_π) = ((ν′+ν″)/2, (ν′−ν″)/2)`.
///
/// Band degeneracies in either frame are reported as `None` fields (the point
/// sits on a transition), not as errors; genuinely invalid inputs (e.g. a
/// too-small grid) still error.
pub fn invariant_pair_with_tol(
    coin: CoinSpec,
    p: LossParameter,
    grid: usize,
    gap_tol: f64,
) -> Result<WindingResult> {
    let take = |frame: FrameChoice| -> Result<Option<WindingNumber>> {
        match winding_number_with_tol(coin, p, frame, grid, gap_tol) {
            Ok(w) => Ok(Some(w)),
            Err(Error::DegenerateBand { .. }) | Err(Error::NonIntegerWinding { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let wp = take(FrameChoice::Prime)?;
    let wd = take(FrameChoice::DoublePrime)?;
    let bands_p = quasienergy_bands_with_tol(coin, p, FrameChoice::Prime, grid, gap_tol)?;
    let bands_d = quasienergy_bands_with_tol(coin, p, FrameChoice::DoublePrime, grid, gap_tol)?;

    let nu_prime = wp.map(|w| w.value);
    let nu_double_prime = wd.map(|w| w.value);
    let (nu_zero, nu_pi, anomaly) = match (nu_prime, nu_double_prime) {
        (Some(a), Some(b)) => (
            Some(Rational32::new(a + b, 2)),
            Some(Rational32::new(a - b, 2)),
            (a + b).rem_euclid(2) != 0,
        ),
        _ => (None, None, false),
    };
    Ok(WindingResult {
        theta1: coin.theta1,
        theta2: coin.theta2,
        nu_prime,
        nu_double_prime,
        nu_zero,
        nu_pi,
        gap0_ok: bands_p.gap0_ok && bands_d.gap0_ok,
        gap_pi_ok: bands_p.gap_pi_ok && bands_d.gap_pi_ok,
        half_integer_anomaly: anomaly,
        branch_consistent: wp.map(|w| w.branch_consistent).unwrap_or(true)
            && wd.map(|w| w.branch_consistent).unwrap_or(true),
        k_grid_size: grid,
    })
}

/// Evaluates [`invariant_pair`] on an inclusive rectangular grid of coin
/// angles. Cells are ordered row-major: the θ₁ index varies slowest.
pub fn phase_diagram(
    theta1_range: (f64, f64),
    theta2_range: (f64, f64),
    resolution: (usize, usize),
    p: LossParameter,
    grid: usize,
) -> Result<Vec<WindingResult>> {
    let (n1, n2) = resolution;
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidParameter(format!(
            "phase-diagram resolution must be at least 2 per axis, got {n1}×{n2}"
        )));
    }
    let cell = |idx: usize| -> Result<WindingResult> {
        let (i, j) = (idx / n2, idx % n2);
        let t1 = theta1_range.0
            + (theta1_range.1 - theta1_range.0) * i as f64 / (n1 - 1) as f64;
        let t2 = theta2_range.0
            + (theta2_range.1 - theta2_range.0) * j as f64 / (n2 - 1) as f64;
        invariant_pair(CoinSpec { theta1: t1, theta2: t2 }, p, grid)
    };
    (0..n1 * n2).into_par_iter().map(cell).collect()
}

/// The two quasienergy bands `±E(k)` with continuity-tracked branches.
#[derive(Clone, Debug)]
pub struct QuasienergyBands {
    pub k: Vec<f64>,
    /// Branch continued from the principal value at the first sample.
    pub upper: Vec<Complex64>,
    /// `−upper`, the partner band.
    pub lower: Vec<Complex64>,
    /// `min_k |E|` and `min_k` circle-distance of `±E` to `π`.
    pub gap0: f64,
    pub gap_pi: f64,
    pub gap0_ok: bool,
    pub gap_pi_ok: bool,
}

pub fn quasienergy_bands(
    coin: CoinSpec,
    p: LossParameter,
    frame: FrameChoice,
    grid: usize,
) -> Result<QuasienergyBands> {
    quasienergy_bands_with_tol(coin, p, frame, grid, DEFAULT_GAP_TOL)
}

pub fn quasienergy_bands_with_tol(
    coin: CoinSpec,
    p: LossParameter,
    frame: FrameChoice,
    grid: usize,
    gap_tol: f64,
) -> Result<QuasienergyBands> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!(
            "band scan needs at least 2 momentum points, got {grid}"
        )));
    }
    let ks: Vec<f64> = (0..grid)
        .map(|j| -PI + TAU * (j + 1) as f64 / grid as f64)
        .collect();
    let mut upper: Vec<Complex64> = Vec::with_capacity(grid);
    for (j, &k) in ks.iter().enumerate() {
        let e = decompose_field_energy(k, coin, p, frame);
        let chosen = if j == 0 {
            e
        } else {
            let prev = upper[j - 1];
            if (e - prev).norm() <= (-e - prev).norm() {
                e
            } else {
                -e
            }
        };
        upper.push(chosen);
    }
    let lower: Vec<Complex64> = upper.iter().map(|e| -e).collect();
    let pi_c = Complex64::new(PI, 0.0);
    let mut gap0 = f64::INFINITY;
    let mut gap_pi = f64::INFINITY;
    for &e in &upper {
        gap0 = gap0.min(e.norm());
        gap_pi = gap_pi.min((e - pi_c).norm().min((e + pi_c).norm()));
    }
    Ok(QuasienergyBands {
        k: ks,
        upper,
        lower,
        gap0,
        gap_pi,
        gap0_ok: gap0 > gap_tol,
        gap_pi_ok: gap_pi > gap_tol,
    })
}

/// Largest over `k` of the distance between the eigenvalue pairs of the two
/// frames' Bloch matrices (best pairing per `k`).
///
/// Exactly zero up to rounding in the unitary limit, where the frames are
/// related by a unitary similarity. For lossy steps this is a reported
/// measurement, not an identity.
pub fn frame_spectral_mismatch(coin: CoinSpec, p: LossParameter, grid: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..grid.max(1) {
        let k = -PI + TAU * (j + 1) as f64 / grid.max(1) as f64;
        let [a1, a2] = bloch_floquet(k, coin, p, FrameChoice::Prime)
            .matrix
            .eigenvalues();
        let [b1, b2] = bloch_floquet(k, coin, p, FrameChoice::DoublePrime)
            .matrix
            .eigenvalues();
        let direct = (a1 - b1).norm().max((a2 - b2).norm());
        let swapped = (a1 - b2).norm().max((a2 - b1).norm());
        worst = worst.max(direct.min(swapped));
    }
    worst
}
