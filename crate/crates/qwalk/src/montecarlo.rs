//! Stochastic trajectory sampler used as an independent check on the exact
//! detection bookkeeping.
//!
//! Each trajectory applies the unitary part of a period exactly, then samples
//! the detection outcome with the Born probabilities: detected trajectories
//! terminate recording `(x, t)`; undetected ones continue in the renormalized
//! post-measurement state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::CoinField;
use crate::model::{
    apply_unitary_part, detection_probabilities, loss_map_apply, FrameChoice, LossParameter,
    WalkerState,
};

/// Detection counts accumulated over independent trajectories.
#[derive(Clone, Debug)]
pub struct TrajectoryCounts {
    half_width: i32,
    steps: u32,
    trials: u64,
    seed: u64,
    /// `detected[t − 1][i]` counts trajectories detected at site `x = i − L`
    /// during step `t`.
    detected: Vec<Vec<u64>>,
    /// Trajectories that survived all steps undetected.
    survived: u64,
}

impl TrajectoryCounts {
    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn detected(&self) -> &[Vec<u64>] {
        &self.detected
    }

    pub fn survived(&self) -> u64 {
        self.survived
    }

    pub fn site(&self, i: usize) -> i32 {
        i as i32 - self.half_width
    }

    /// Empirical detection probability for row index `i` at step `t`.
    pub fn empirical(&self, i: usize, t: u32) -> f64 {
        self.detected[(t - 1) as usize][i] as f64 / self.trials as f64
    }

    /// Binomial standard error `√(p̂(1−p̂)/N)` of [`Self::empirical`].
    pub fn std_err(&self, i: usize, t: u32) -> f64 {
        let p_hat = self.empirical(i, t);
        (p_hat * (1.0 - p_hat) / self.trials as f64).sqrt()
    }

    pub fn total_detected(&self) -> u64 {
        self.detected.iter().flatten().sum()
    }
}

/// Samples `trials` independent trajectories.
///
/// Trial `n` draws from ChaCha8 stream `n` of `seed`, so the result is
/// deterministic and independent of how trials are scheduled across threads.
pub fn monte_carlo_oracle(
    initial: &WalkerState,
    field: &CoinField,
    p: LossParameter,
    frame: FrameChoice,
    steps: u32,
    trials: u64,
    seed: u64,
) -> Result<TrajectoryCounts> {
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "trajectory sampling needs at least one trial".to_string(),
        ));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "trajectory sampling needs at least one step".to_string(),
        ));
    }
    let start = initial.normalized()?;
    let sites = start.num_sites();

    // Run one trajectory; Ok(Some((site, step))) = detected, Ok(None) =
    // survived to the end.
    let run_one = |trial: u64| -> Result<Option<(usize, u32)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut state = start.clone();
        for t in 1..=steps {
            let after_unitary = apply_unitary_part(&state, field, frame)?;
            let row = detection_probabilities(&after_unitary, p);
            let total: f64 = row.iter().sum();
            let u: f64 = rng.random();
            if u < total {
                // Detected: pick the site by walking the cumulative row.
                let mut acc = 0.0;
                let mut chosen = sites - 1;
                for (i, &prob) in row.iter().enumerate() {
                    acc += prob;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                return Ok(Some((chosen, t)));
            }
            let survived = loss_map_apply(&after_unitary, p);
            state = survived.normalized()?;
        }
        Ok(None)
    };

    let zero = || TrajectoryCounts {
        half_width: start.half_width(),
        steps,
        trials,
        seed,
        detected: vec![vec![0u64; sites]; steps as usize],
        survived: 0,
    };
    let merge = |mut a: TrajectoryCounts, b: TrajectoryCounts| {
        for (ra, rb) in a.detected.iter_mut().zip(&b.detected) {
            for (ca, cb) in ra.iter_mut().zip(rb) {
                *ca += cb;
            }
        }
        a.survived += b.survived;
        a
    };

    (0..trials)
        .into_par_iter()
        .try_fold(zero, |mut counts: TrajectoryCounts, trial| {
            match run_one(trial)? {
                Some((site, t)) => counts.detected[(t - 1) as usize][site] += 1,
                None => counts.survived += 1,
            }
            Ok(counts)
        })
        .try_reduce(zero, |a, b| Ok(merge(a, b)))
}
