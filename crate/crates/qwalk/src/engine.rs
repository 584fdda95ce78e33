//! Multi-step evolution with detection accounting and truncated-sum
//! observables.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{CoinField, LayoutKind};
use crate::model::{
    detection_probabilities, floquet_step, loss_map_apply, FrameChoice, LossParameter, WalkerState,
};

/// When to stop a multi-step run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum StoppingRule {
    /// Run exactly this many periods. The resulting record never claims
    /// convergence: a fixed-step truncation asserts no control over the tail.
    FixedSteps { steps: u32 },
    /// Run until the surviving norm² drops below `epsilon`, or stop
    /// unconverged at `max_steps`.
    SurvivalBelow { epsilon: f64, max_steps: u32 },
}

impl StoppingRule {
    /// Long-run default: survival below 1e−8, at most 500 periods.
    pub fn long_run() -> Self {
        StoppingRule::SurvivalBelow {
            epsilon: 1e-8,
            max_steps: 500,
        }
    }

    pub fn max_steps(&self) -> u32 {
        match *self {
            StoppingRule::FixedSteps { steps } => steps,
            StoppingRule::SurvivalBelow { max_steps, .. } => max_steps,
        }
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self::long_run()
    }
}

/// Per-step detection rows `P(x, t′)` and survival bookkeeping for one run.
///
/// For a normalized initial state,
/// `Σ_x Σ_{t′ ≤ T} P(x, t′) + ρ_T = 1` to 1e−10.
#[derive(Clone, Debug)]
pub struct DetectionRecord {
    half_width: i32,
    /// `rows[t′ − 1][i]` is the probability of detection at site `x = i − L`
    /// during step `t′`.
    rows: Vec<Vec<f64>>,
    /// `survival[t′ − 1]` is the surviving norm² ρ after step `t′`.
    survival: Vec<f64>,
    converged: bool,
    stop: StoppingRule,
    frame: FrameChoice,
    loss: LossParameter,
    layout: LayoutKind,
    initial_norm_sq: f64,
    final_state: WalkerState,
}

impl DetectionRecord {
    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    /// Number of recorded steps `T`.
    pub fn steps(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    /// Surviving norm² after the last recorded step.
    pub fn final_survival(&self) -> f64 {
        *self.survival.last().unwrap_or(&self.initial_norm_sq)
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn stop(&self) -> StoppingRule {
        self.stop
    }

    pub fn frame(&self) -> FrameChoice {
        self.frame
    }

    pub fn loss(&self) -> LossParameter {
        self.loss
    }

    pub fn layout(&self) -> &LayoutKind {
        &self.layout
    }

    pub fn initial_norm_sq(&self) -> f64 {
        self.initial_norm_sq
    }

    /// The surviving (unnormalized) state after the last recorded step.
    pub fn final_state(&self) -> &WalkerState {
        &self.final_state
    }

    /// Lattice coordinate of row index `i`.
    pub fn site(&self, i: usize) -> i32 {
        i as i32 - self.half_width
    }

    pub fn total_detected(&self) -> f64 {
        self.rows.iter().flatten().sum()
    }

    /// `|Σ rows + ρ_T − initial norm²|` — zero up to rounding.
    pub fn bookkeeping_residual(&self) -> f64 {
        (self.total_detected() + self.final_survival() - self.initial_norm_sq).abs()
    }
}

/// Runs the walk period by period, recording detection rows and survival.
///
/// Under [`StoppingRule::SurvivalBelow`] the run stops at the first step with
/// `ρ < epsilon` (converged) or at `max_steps` (unconverged). Fixed-step runs
/// are always reported unconverged.
pub fn evolve(
    initial: &WalkerState,
    field: &CoinField,
    p: LossParameter,
    frame: FrameChoice,
    stop: StoppingRule,
) -> Result<DetectionRecord> {
    let initial_norm_sq = initial.norm_sq();
    let max_steps = stop.max_steps();
    let mut rows = Vec::with_capacity(max_steps as usize);
    let mut survival = Vec::with_capacity(max_steps as usize);
    let mut converged = false;
    let mut state = initial.clone();
    for _ in 0..max_steps {
        let (next, row) = floquet_step(&state, field, p, frame)?;
        state = next;
        let rho = state.norm_sq();
        rows.push(row);
        survival.push(rho);
        if let StoppingRule::SurvivalBelow { epsilon, .. } = stop {
            if rho < epsilon {
                converged = true;
                break;
            }
        }
    }
    Ok(DetectionRecord {
        half_width: initial.half_width(),
        rows,
        survival,
        converged,
        stop,
        frame,
        loss: p,
        layout: field.layout().clone(),
        initial_norm_sq,
        final_state: state,
    })
}

/// A truncated-sum observable with an explicit bound on the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Upper bound on the magnitude of the neglected tail, from a geometric
    /// fit to the recorded survival decay (conservative fallback when the fit
    /// is unusable).
    pub tail_bound: f64,
    pub converged: bool,
    pub steps_used: u32,
}

/// Decay rate γ of `ρ_t ≈ ρ_T·e^{−γ(t−T)}`, fitted by least squares to
/// `ln ρ_t` over the last quartile of recorded steps (at least two points).
/// `None` when the fit is unusable (non-positive rate, short record, or
/// vanished survival).
fn fitted_decay_rate(survival: &[f64]) -> Option<f64> {
    let t = survival.len();
    if t < 2 {
        return None;
    }
    let window = (t / 4).max(2).min(t);
    let tail = &survival[t - window..];
    if tail.iter().any(|&r| r <= 0.0) {
        return None;
    }
    // Least-squares slope of ln ρ against the step index.
    let n = window as f64;
    let mean_i = (window as f64 - 1.0) / 2.0;
    let mean_y = tail.iter().map(|r| r.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &r) in tail.iter().enumerate() {
        let di = i as f64 - mean_i;
        num += di * (r.ln() - mean_y);
        den += di * di;
    }
    let gamma = -num / den;
    (gamma.is_finite() && gamma > 0.0).then_some(gamma)
}

fn weighted_sum(rec: &DetectionRecord, weight: impl Fn(i32, u32) -> f64) -> f64 {
    let mut total = 0.0;
    for (ti, row) in rec.rows().iter().enumerate() {
        let t = ti as u32 + 1;
        for (i, &prob) in row.iter().enumerate() {
            if prob != 0.0 {
                total += weight(rec.site(i), t) * prob;
            }
        }
    }
    total
}

/// Average displacement `⟨Δx⟩ = Σ_x Σ_{t′} x·P(x, t′)` over the recorded
/// steps.
///
/// The tail bound uses the light cone `|x| ≤ 2t`: with a fitted decay rate γ̂
/// it is `ρ_T·(2·T_used + 2/γ̂)`; without one, the conservative
/// `ρ_T·2·max_steps`.
pub fn average_displacement(rec: &DetectionRecord) -> Estimate {
    let value = weighted_sum(rec, |x, _| x as f64);
    let rho = rec.final_survival();
    let tail_bound = match fitted_decay_rate(rec.survival()) {
        Some(gamma) => rho * (2.0 * rec.steps() as f64 + 2.0 / gamma),
        None => rho * 2.0 * rec.stop().max_steps() as f64,
    };
    Estimate {
        value,
        tail_bound,
        converged: rec.converged(),
        steps_used: rec.steps(),
    }
}

/// Dwell time `⟨t⟩ = Σ_x Σ_{t′} t′·P(x, t′)` over the recorded steps.
///
/// Same tail-bound scheme as [`average_displacement`] with the light-cone
/// factor 2T replaced by T: `ρ_T·(T_used + 2/γ̂)`, falling back to
/// `ρ_T·max_steps`.
pub fn dwell_time(rec: &DetectionRecord) -> Estimate {
    let value = weighted_sum(rec, |_, t| t as f64);
    let rho = rec.final_survival();
    let tail_bound = match fitted_decay_rate(rec.survival()) {
        Some(gamma) => rho * (rec.steps() as f64 + 2.0 / gamma),
        None => rho * rec.stop().max_steps() as f64,
    };
    Estimate {
        value,
        tail_bound,
        converged: rec.converged(),
        steps_used: rec.steps(),
    }
}

/// Displacement and dwell time of one record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub displacement: Estimate,
    pub dwell_time: Estimate,
}

impl Observables {
    pub fn from_record(rec: &DetectionRecord) -> Self {
        Self {
            displacement: average_displacement(rec),
            dwell_time: dwell_time(rec),
        }
    }
}

/// Normalized coin-summed position distribution of a surviving state:
/// `Q(x) = Σ_c |ψ(x,c)|² / Σ_{x,c} |ψ(x,c)|²`.
pub fn survivor_distribution(state: &WalkerState) -> Result<Vec<f64>> {
    let norm_sq = state.norm_sq();
    if norm_sq <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(state
        .site_probabilities()
        .into_iter()
        .map(|q| q / norm_sq)
        .collect())
}

/// One unitary-plus-measurement period applied in isolation to an arbitrary
/// state, returning what [`evolve`] would record for that step. Exposed for
/// oracle comparisons.
pub fn single_period(
    state: &WalkerState,
    field: &CoinField,
    p: LossParameter,
    frame: FrameChoice,
) -> Result<(WalkerState, Vec<f64>)> {
    floquet_step(state, field, p, frame)
}

/// Detection row and post-measurement state for a state that already had the
/// unitary part applied. Exposed for oracle comparisons.
pub fn measure_after_unitary(
    after_unitary: &WalkerState,
    p: LossParameter,
) -> (WalkerState, Vec<f64>) {
    let row = detection_probabilities(after_unitary, p);
    (loss_map_apply(after_unitary, p), row)
}
