//! Independent dense-matrix oracle.
//!
//! Everything here is built from the operator definitions alone — explicit
//! `2(2L+1)`-dimensional matrices assembled entry by entry with nalgebra —
//! so that agreement with the production engine is a genuine cross-check,
//! not a tautology. The only production types used are the ones under test
//! (states in, rows out).

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::prelude::*;
use rand::rngs::StdRng;

use qwalk::{FrameChoice, WalkerState};

pub fn dim(l: i32) -> usize {
    2 * (2 * l as usize + 1)
}

/// Flat index of `(x, c)`: site-major, coin-minor, like the production state.
pub fn idx(l: i32, x: i32, c: usize) -> usize {
    2 * (x + l) as usize + c
}

fn zeros(l: i32) -> DMatrix<Complex64> {
    DMatrix::from_element(dim(l), dim(l), Complex64::new(0.0, 0.0))
}

/// Block-diagonal coin rotation with per-site angles `thetas[x + l]`,
/// `R(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]` on each site.
pub fn rotation_dense(l: i32, thetas: &[f64]) -> DMatrix<Complex64> {
    assert_eq!(thetas.len(), 2 * l as usize + 1);
    let mut m = zeros(l);
    for x in -l..=l {
        let t = thetas[(x + l) as usize];
        let (s, c) = t.sin_cos();
        m[(idx(l, x, 0), idx(l, x, 0))] = Complex64::new(c, 0.0);
        m[(idx(l, x, 0), idx(l, x, 1))] = Complex64::new(-s, 0.0);
        m[(idx(l, x, 1), idx(l, x, 0))] = Complex64::new(s, 0.0);
        m[(idx(l, x, 1), idx(l, x, 1))] = Complex64::new(c, 0.0);
    }
    m
}

/// Coin-conditioned shift: `|x−1,0⟩⟨x,0| + |x+1,1⟩⟨x,1|`. Amplitude that
/// would leave the lattice is dropped, so callers must keep support away
/// from the walls (the production engine errors in that case instead).
pub fn shift_dense(l: i32) -> DMatrix<Complex64> {
    let mut m = zeros(l);
    let one = Complex64::new(1.0, 0.0);
    for x in -l..=l {
        if x - 1 >= -l {
            m[(idx(l, x - 1, 0), idx(l, x, 0))] = one;
        }
        if x + 1 <= l {
            m[(idx(l, x + 1, 1), idx(l, x, 1))] = one;
        }
    }
    m
}

/// 2×2 coin-space Kraus pair from the projector definitions
/// `M = |+⟩⟨+| + √(1−p)|−⟩⟨−|`, `M_e = √p |−⟩⟨−|`.
fn kraus_blocks(p: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let plus = [1.0 / 2.0_f64.sqrt(), 1.0 / 2.0_f64.sqrt()];
    let minus = [1.0 / 2.0_f64.sqrt(), -1.0 / 2.0_f64.sqrt()];
    let mut m = [[0.0; 2]; 2];
    let mut me = [[0.0; 2]; 2];
    let q = (1.0 - p).sqrt();
    let root_p = p.sqrt();
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = plus[r] * plus[c] + q * minus[r] * minus[c];
            me[r][c] = root_p * minus[r] * minus[c];
        }
    }
    (m, me)
}

fn block_diagonal(l: i32, block: [[f64; 2]; 2]) -> DMatrix<Complex64> {
    let mut m = zeros(l);
    for x in -l..=l {
        for r in 0..2 {
            for c in 0..2 {
                m[(idx(l, x, r), idx(l, x, c))] = Complex64::new(block[r][c], 0.0);
            }
        }
    }
    m
}

pub fn survivor_dense(l: i32, p: f64) -> DMatrix<Complex64> {
    block_diagonal(l, kraus_blocks(p).0)
}

pub fn detector_dense(l: i32, p: f64) -> DMatrix<Complex64> {
    block_diagonal(l, kraus_blocks(p).1)
}

/// Dense unitary part of one period. `Prime`:
/// `R(θ₁/2)·S·R(θ₂)·S·R(θ₁/2)`; `DoublePrime` swaps the angle roles.
pub fn unitary_dense(
    l: i32,
    theta1s: &[f64],
    theta2s: &[f64],
    frame: FrameChoice,
) -> DMatrix<Complex64> {
    let (outer, inner) = match frame {
        FrameChoice::Prime => (theta1s, theta2s),
        FrameChoice::DoublePrime => (theta2s, theta1s),
    };
    let halves: Vec<f64> = outer.iter().map(|t| 0.5 * t).collect();
    let half = rotation_dense(l, &halves);
    let full = rotation_dense(l, inner);
    let s = shift_dense(l);
    &half * &s * &full * &s * &half
}

pub fn state_to_vector(state: &WalkerState) -> DVector<Complex64> {
    let l = state.half_width();
    DVector::from_fn(dim(l), |i, _| {
        state.amplitude((i / 2) as i32 - l, i % 2)
    })
}

/// One full dense run: per-step detection rows and surviving state vectors.
pub struct DenseRun {
    pub rows: Vec<Vec<f64>>,
    pub survival: Vec<f64>,
    pub states: Vec<DVector<Complex64>>,
}

pub fn dense_evolve(
    l: i32,
    theta1s: &[f64],
    theta2s: &[f64],
    p: f64,
    frame: FrameChoice,
    steps: u32,
    psi0: &DVector<Complex64>,
) -> DenseRun {
    let u = unitary_dense(l, theta1s, theta2s, frame);
    let m = survivor_dense(l, p);
    let me = detector_dense(l, p);
    let sites = 2 * l as usize + 1;
    let mut psi = psi0.clone();
    let mut rows = Vec::new();
    let mut survival = Vec::new();
    let mut states = Vec::new();
    for _ in 0..steps {
        let phi = &u * &psi;
        let detected = &me * &phi;
        let mut row = vec![0.0; sites];
        for (i, site_row) in row.iter_mut().enumerate() {
            *site_row = detected[2 * i].norm_sqr() + detected[2 * i + 1].norm_sqr();
        }
        rows.push(row);
        psi = &m * &phi;
        survival.push(psi.norm_squared());
        states.push(psi.clone());
    }
    DenseRun {
        rows,
        survival,
        states,
    }
}

pub fn max_abs_diff_state(a: &WalkerState, b: &DVector<Complex64>) -> f64 {
    let av = state_to_vector(a);
    assert_eq!(av.len(), b.len());
    av.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut worst = 0.0f64;
    for (ra, rb) in a.iter().zip(b) {
        assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// One randomly drawn configuration for engine-vs-oracle comparison.
pub struct RandomConfig {
    pub l: i32,
    pub steps: u32,
    pub theta1s: Vec<f64>,
    pub theta2s: Vec<f64>,
    pub p: f64,
    pub frame: FrameChoice,
    pub initial: WalkerState,
}

pub fn random_config(rng: &mut StdRng) -> RandomConfig {
    let steps = rng.random_range(1..=6u32);
    let l = rng.random_range((2 * steps as i32).max(4)..=12);
    let sites = 2 * l as usize + 1;
    let theta1s: Vec<f64> = (0..sites)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let theta2s: Vec<f64> = (0..sites)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let p = rng.random_range(0.0..=1.0);
    let frame = if rng.random_bool(0.5) {
        FrameChoice::Prime
    } else {
        FrameChoice::DoublePrime
    };
    // Support must stay inside the walls for `steps` periods of radius-2
    // spreading.
    let radius = l - 2 * steps as i32;
    let mut initial = WalkerState::zero(l).unwrap();
    for x in -radius..=radius {
        for c in 0..2 {
            initial.set_amplitude(
                x,
                c,
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            );
        }
    }
    let initial = initial.normalized().unwrap();
    RandomConfig {
        l,
        steps,
        theta1s,
        theta2s,
        p,
        frame,
        initial,
    }
}

/// Runs `count` random engine-vs-dense comparisons and returns the worst
/// entrywise deviation seen across detection rows, survival, and final
/// amplitudes.
pub fn dense_comparison_worst_error(seed: u64, count: usize) -> f64 {
    use qwalk::{evolve, CoinField, LossParameter, StoppingRule};
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let cfg = random_config(&mut rng);
        let field =
            CoinField::from_tables(cfg.l, cfg.theta1s.clone(), cfg.theta2s.clone()).unwrap();
        let rec = evolve(
            &cfg.initial,
            &field,
            LossParameter::new(cfg.p).unwrap(),
            cfg.frame,
            StoppingRule::FixedSteps { steps: cfg.steps },
        )
        .unwrap();
        let dense = dense_evolve(
            cfg.l,
            &cfg.theta1s,
            &cfg.theta2s,
            cfg.p,
            cfg.frame,
            cfg.steps,
            &state_to_vector(&cfg.initial),
        );
        worst = worst.max(max_abs_diff_rows(rec.rows(), &dense.rows));
        for (a, b) in rec.survival().iter().zip(&dense.survival) {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max(max_abs_diff_state(rec.final_state(), dense.states.last().unwrap()));
    }
    worst
}
