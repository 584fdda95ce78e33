//! Scenario runners: displacement/dwell sweeps, boundary (two-region)
//! survivor experiments, disorder ensembles, distribution similarity, and
//! count-table ingestion.

use rayon::prelude::*;
use serde::Serialize;
use std::io::{BufRead, Write};

use crate::engine::{evolve, survivor_distribution, DetectionRecord, Observables, StoppingRule};
use crate::error::{Error, Result};
use crate::field::{sample_disorder, CoinField, DisorderSpec, RegionLayout};
use crate::model::{floquet_step, CoinSpec, FrameChoice, LossParameter, WalkerState};

/// The canonical 13-point sweep `θ₁ = −π/2 + π·(j+1)/14`, `j = 0..12`:
/// uniformly spaced interior points of `(−π/2, π/2)`. The band transitions at
/// `θ₁ = ±π/4` fall between sweep points; indices 2, 3, 9, 10 flank them and
/// the rest sit deep inside phases.
pub fn default_theta1_sweep() -> Vec<f64> {
    (0..13)
        .map(|j| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (j + 1) as f64 / 14.0)
        .collect()
}

/// Sweep indices of [`default_theta1_sweep`] that sit deep inside phases
/// (used when comparing against quantized values).
pub fn deep_sweep_indices() -> Vec<usize> {
    vec![0, 1, 4, 5, 6, 7, 8, 11, 12]
}

/// Sweep indices adjacent to the transitions at `θ₁ = ±π/4`.
pub fn flanking_sweep_indices() -> Vec<usize> {
    vec![2, 3, 9, 10]
}

/// Smallest lattice that keeps a walk of `steps` periods started at `start`
/// away from the boundary (each period moves at most two sites).
pub fn lattice_half_width(steps: u32, start: i32) -> i32 {
    2 * steps as i32 + 2 + start.abs()
}

/// One sweep cell of [`displacement_scan`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanRow {
    pub theta1: f64,
    pub p: f64,
    /// Observables truncated at the requested fixed step count.
    pub fixed: Observables,
    /// Long-run observables under the survival-threshold stopping rule.
    pub long_run: Observables,
}

/// Displacement/dwell scan over `θ₁` values and loss parameters at fixed
/// `θ₂`: each cell carries both the fixed-step values and long-run values
/// with tail bounds. Rows are ordered with the `θ₁` index slowest.
pub fn displacement_scan(
    theta2: f64,
    theta1_values: &[f64],
    p_values: &[LossParameter],
    steps: u32,
    frame: FrameChoice,
) -> Result<Vec<ScanRow>> {
    if steps < 1 {
        return Err(Error::InvalidParameter(
            "displacement scan needs at least one step".to_string(),
        ));
    }
    let long_rule = StoppingRule::long_run();
    let cells: Vec<(f64, LossParameter)> = theta1_values
        .iter()
        .flat_map(|&t1| p_values.iter().map(move |&p| (t1, p)))
        .collect();
    cells
        .into_par_iter()
        .map(|(theta1, p)| {
            let run = |rule: StoppingRule| -> Result<Observables> {
                let l = lattice_half_width(rule.max_steps(), 0);
                let field = CoinField::homogeneous(l, CoinSpec { theta1, theta2 })?;
                let init = WalkerState::plus_at(l, 0)?;
                let rec = evolve(&init, &field, p, frame, rule)?;
                Ok(Observables::from_record(&rec))
            };
            Ok(ScanRow {
                theta1,
                p: p.value(),
                fixed: run(StoppingRule::FixedSteps { steps })?,
                long_run: run(long_rule)?,
            })
        })
        .collect()
}

/// Per-step survivor distributions of one boundary run.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeRun {
    pub half_width: i32,
    /// `q_rows[t − 1][i]` is `Q(x = i − L, t)`.
    pub q_rows: Vec<Vec<f64>>,
    /// Surviving norm² after each step.
    pub survival: Vec<f64>,
}

impl EdgeRun {
    pub fn site(&self, i: usize) -> i32 {
        i as i32 - self.half_width
    }

    pub fn site_index(&self, x: i32) -> usize {
        (x + self.half_width) as usize
    }

    /// `Q(x, t)` with `t` counted from 1.
    pub fn q(&self, x: i32, t: u32) -> f64 {
        self.q_rows[(t - 1) as usize][self.site_index(x)]
    }
}

fn survivor_rows(
    field: &CoinField,
    p: LossParameter,
    steps: u32,
    start: i32,
) -> Result<EdgeRun> {
    let l = field.half_width();
    let mut state = WalkerState::plus_at(l, start)?;
    let mut q_rows = Vec::with_capacity(steps as usize);
    let mut survival = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        let (next, _row) = floquet_step(&state, field, p, FrameChoice::Prime)?;
        state = next;
        q_rows.push(survivor_distribution(&state)?);
        survival.push(state.norm_sq());
    }
    Ok(EdgeRun {
        half_width: l,
        q_rows,
        survival,
    })
}

/// Runs a two-region walk started at `start` and returns the survivor
/// distribution after every step (frame `R(θ₁/2)…`; the boundary sites take
/// the inner angles).
pub fn edge_experiment(
    layout: &RegionLayout,
    p: LossParameter,
    steps: u32,
    start: i32,
) -> Result<EdgeRun> {
    if steps < 1 {
        return Err(Error::InvalidParameter(
            "edge experiment needs at least one step".to_string(),
        ));
    }
    let l = lattice_half_width(steps, start);
    if start.abs() > l {
        return Err(Error::InvalidParameter(format!(
            "start site {start} outside lattice of half-width {l}"
        )));
    }
    let field = layout.field(l)?;
    survivor_rows(&field, p, steps, start)
}

/// A disordered boundary ensemble: member runs plus their elementwise mean.
#[derive(Clone, Debug, Serialize)]
pub struct DisorderEdge {
    pub spec: DisorderSpec,
    pub members: Vec<EdgeRun>,
    /// Elementwise mean of the members' `q_rows`.
    pub mean_q: Vec<Vec<f64>>,
    /// ChaCha8 stream ids, one per member (paired with `spec.seed`).
    pub streams: Vec<u64>,
}

/// Runs [`edge_experiment`] on `ensemble_size` disorder realizations of the
/// layout's mean angles and averages the survivor rows.
pub fn disorder_edge(
    layout: &RegionLayout,
    spec: &DisorderSpec,
    p: LossParameter,
    steps: u32,
    start: i32,
) -> Result<DisorderEdge> {
    if spec.ensemble_size < 1 {
        return Err(Error::InvalidParameter(
            "disorder ensemble needs at least one member".to_string(),
        ));
    }
    let l = lattice_half_width(steps, start);
    let base = layout.field(l)?;
    let streams: Vec<u64> = (0..spec.ensemble_size as u64).collect();
    let members: Vec<EdgeRun> = streams
        .par_iter()
        .map(|&stream| {
            let field = sample_disorder(&base, spec, stream);
            survivor_rows(&field, p, steps, start)
        })
        .collect::<Result<_>>()?;
    let sites = members[0].q_rows[0].len();
    let mut mean_q = vec![vec![0.0; sites]; steps as usize];
    for member in &members {
        for (t, row) in member.q_rows.iter().enumerate() {
            for (i, &q) in row.iter().enumerate() {
                mean_q[t][i] += q;
            }
        }
    }
    let inv = 1.0 / members.len() as f64;
    for row in &mut mean_q {
        for q in row.iter_mut() {
            *q *= inv;
        }
    }
    Ok(DisorderEdge {
        spec: *spec,
        members,
        mean_q,
        streams,
    })
}

/// Ensemble statistics of one scalar observable.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSummary {
    pub members: Vec<f64>,
    pub mean: f64,
    /// Unbiased (n−1) standard deviation; 0 for a single member.
    pub std_dev: f64,
    pub seed: u64,
    /// ChaCha8 stream ids in member order.
    pub streams: Vec<u64>,
}

impl EnsembleSummary {
    pub fn from_members(members: Vec<f64>, seed: u64, streams: Vec<u64>) -> Self {
        let n = members.len() as f64;
        let mean = members.iter().sum::<f64>() / n;
        let std_dev = if members.len() > 1 {
            (members.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            members,
            mean,
            std_dev,
            seed,
            streams,
        }
    }
}

/// One sweep point of [`disorder_displacement`].
#[derive(Clone, Debug, Serialize)]
pub struct DisorderScanPoint {
    pub theta1: f64,
    /// Fixed-step displacement of the clean (offset-free) walk.
    pub clean: f64,
    pub summary: EnsembleSummary,
}

/// Fixed-step displacement under static disorder, per mean-`θ₁` sweep point.
///
/// Member `m` of point `i` draws from ChaCha8 stream
/// `i·ensemble_size + m`, so every realization in the whole sweep is
/// distinct and individually reproducible.
pub fn disorder_displacement(
    theta2_mean: f64,
    theta1_means: &[f64],
    spec: &DisorderSpec,
    p: LossParameter,
    steps: u32,
    frame: FrameChoice,
) -> Result<Vec<DisorderScanPoint>> {
    if spec.ensemble_size < 1 {
        return Err(Error::InvalidParameter(
            "disorder ensemble needs at least one member".to_string(),
        ));
    }
    let l = lattice_half_width(steps, 0);
    let displacement_of = |field: &CoinField| -> Result<f64> {
        let init = WalkerState::plus_at(l, 0)?;
        let rec = evolve(&init, field, p, frame, StoppingRule::FixedSteps { steps })?;
        Ok(crate::engine::average_displacement(&rec).value)
    };
    theta1_means
        .par_iter()
        .enumerate()
        .map(|(i, &theta1)| {
            let base = CoinField::homogeneous(
                l,
                CoinSpec {
                    theta1,
                    theta2: theta2_mean,
                },
            )?;
            let clean = displacement_of(&base)?;
            let streams: Vec<u64> = (0..spec.ensemble_size as u64)
                .map(|m| i as u64 * spec.ensemble_size as u64 + m)
                .collect();
            let members: Vec<f64> = streams
                .iter()
                .map(|&stream| displacement_of(&sample_disorder(&base, spec, stream)))
                .collect::<Result<_>>()?;
            Ok(DisorderScanPoint {
                theta1,
                clean,
                summary: EnsembleSummary::from_members(members, spec.seed, streams),
            })
        })
        .collect()
}

/// Overlap of two probability rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Similarity {
    /// `(Σ_x √(Q_a(x)·Q_b(x)))²` — 1 for identical rows, 0 for disjoint
    /// supports.
    pub value: f64,
    /// Set when an input row summed to something off 1 by more than 1e−6 and
    /// was renormalized before comparing.
    pub renormalized: bool,
}

/// Squared Bhattacharyya overlap of two distributions over the same sites.
pub fn similarity(q_a: &[f64], q_b: &[f64]) -> Result<Similarity> {
    if q_a.len() != q_b.len() {
        return Err(Error::SizeMismatch(format!(
            "distribution lengths {} vs {}",
            q_a.len(),
            q_b.len()
        )));
    }
    if q_a.iter().chain(q_b.iter()).any(|&q| !q.is_finite() || q < 0.0) {
        return Err(Error::InvalidParameter(
            "distributions must be nonnegative and finite".to_string(),
        ));
    }
    let sum_a: f64 = q_a.iter().sum();
    let sum_b: f64 = q_b.iter().sum();
    if sum_a <= 0.0 || sum_b <= 0.0 {
        return Err(Error::EmptyDistribution("similarity of an all-zero row"));
    }
    let renormalized = (sum_a - 1.0).abs() > 1e-6 || (sum_b - 1.0).abs() > 1e-6;
    let overlap: f64 = q_a
        .iter()
        .zip(q_b)
        .map(|(&a, &b)| ((a / sum_a) * (b / sum_b)).sqrt())
        .sum();
    Ok(Similarity {
        value: (overlap * overlap).min(1.0),
        renormalized,
    })
}

/// Raw detection (`R`) and survivor (`T`) counts on a rectangular grid.
///
/// `reflected[t′ − 1][i]` counts detections at site `x = x_min + i` during
/// step `t′`; `transmitted[i]` counts survivors at the final step. Counts are
/// nonnegative reals (upstream efficiency corrections may make them
/// non-integer).
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    x_min: i32,
    reflected: Vec<Vec<f64>>,
    transmitted: Vec<f64>,
}

impl CountTable {
    pub fn new(x_min: i32, reflected: Vec<Vec<f64>>, transmitted: Vec<f64>) -> Result<Self> {
        if reflected.is_empty() {
            return Err(Error::MalformedTable(
                "no detection rows".to_string(),
            ));
        }
        let width = transmitted.len();
        if width == 0 {
            return Err(Error::MalformedTable("zero-width table".to_string()));
        }
        if reflected.iter().any(|row| row.len() != width) {
            return Err(Error::MalformedTable(format!(
                "ragged rows: expected width {width}"
            )));
        }
        let all = reflected.iter().flatten().chain(transmitted.iter());
        let mut any_positive = false;
        for &c in all {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::MalformedTable(format!("negative or non-finite count {c}")));
            }
            any_positive |= c > 0.0;
        }
        if !any_positive {
            return Err(Error::EmptyDistribution("count table with no counts"));
        }
        Ok(Self {
            x_min,
            reflected,
            transmitted,
        })
    }

    pub fn x_min(&self) -> i32 {
        self.x_min
    }

    pub fn width(&self) -> usize {
        self.transmitted.len()
    }

    /// Number of recorded steps `t`.
    pub fn steps(&self) -> u32 {
        self.reflected.len() as u32
    }

    pub fn site(&self, i: usize) -> i32 {
        self.x_min + i as i32
    }

    pub fn reflected(&self) -> &[Vec<f64>] {
        &self.reflected
    }

    pub fn transmitted(&self) -> &[f64] {
        &self.transmitted
    }

    /// Reads the `kind,x,t,count` schema: `kind` is `R` (detected during step
    /// `t`) or `T` (survivor at the final step); missing cells are zero.
    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let mut entries: Vec<(char, i32, u32, f64)> = Vec::new();
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, Ok(h))) => h,
            _ => return Err(Error::MalformedTable("empty file".to_string())),
        };
        let normalized: String = header.split_whitespace().collect();
        if !normalized.eq_ignore_ascii_case("kind,x,t,count") {
            return Err(Error::MalformedTable(format!(
                "expected header \"kind,x,t,count\", got {header:?}"
            )));
        }
        for (line_no, line) in lines {
            let line = line.map_err(|e| Error::MalformedTable(format!("read error: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::MalformedTable(format!(
                    "line {}: expected 4 fields, got {}",
                    line_no + 1,
                    fields.len()
                )));
            }
            let kind = match fields[0] {
                "R" | "r" => 'R',
                "T" | "t" => 'T',
                other => {
                    return Err(Error::MalformedTable(format!(
                        "line {}: unknown kind {other:?}",
                        line_no + 1
                    )))
                }
            };
            let x: i32 = fields[1].parse().map_err(|_| {
                Error::MalformedTable(format!("line {}: bad site {:?}", line_no + 1, fields[1]))
            })?;
            let t: u32 = fields[2].parse().map_err(|_| {
                Error::MalformedTable(format!("line {}: bad step {:?}", line_no + 1, fields[2]))
            })?;
            if t == 0 {
                return Err(Error::MalformedTable(format!(
                    "line {}: steps count from 1",
                    line_no + 1
                )));
            }
            let count: f64 = fields[3].parse().map_err(|_| {
                Error::MalformedTable(format!("line {}: bad count {:?}", line_no + 1, fields[3]))
            })?;
            entries.push((kind, x, t, count));
        }
        if entries.is_empty() {
            return Err(Error::MalformedTable("no data rows".to_string()));
        }
        let t_final = entries.iter().map(|e| e.2).max().unwrap();
        if let Some(bad) = entries.iter().find(|e| e.0 == 'T' && e.2 != t_final) {
            return Err(Error::MalformedTable(format!(
                "survivor counts must all sit at the final step {t_final}, found one at {}",
                bad.2
            )));
        }
        let x_min = entries.iter().map(|e| e.1).min().unwrap();
        let x_max = entries.iter().map(|e| e.1).max().unwrap();
        let width = (x_max - x_min) as usize + 1;
        let mut reflected = vec![vec![0.0; width]; t_final as usize];
        let mut transmitted = vec![0.0; width];
        for (kind, x, t, count) in entries {
            let i = (x - x_min) as usize;
            match kind {
                'R' => reflected[(t - 1) as usize][i] += count,
                _ => transmitted[i] += count,
            }
        }
        Self::new(x_min, reflected, transmitted)
    }

    /// Writes the `kind,x,t,count` schema (zero cells omitted).
    pub fn to_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "kind,x,t,count")?;
        for (ti, row) in self.reflected.iter().enumerate() {
            for (i, &count) in row.iter().enumerate() {
                if count != 0.0 {
                    writeln!(w, "R,{},{},{}", self.site(i), ti + 1, count)?;
                }
            }
        }
        for (i, &count) in self.transmitted.iter().enumerate() {
            if count != 0.0 {
                writeln!(w, "T,{},{},{}", self.site(i), self.steps(), count)?;
            }
        }
        Ok(())
    }
}

/// Normalized experimental distributions derived from a [`CountTable`].
#[derive(Clone, Debug, Serialize)]
pub struct IngestedDistributions {
    pub x_min: i32,
    /// `p_exp[t′ − 1][i] = N_R(x, t′) / Σ_x′ (Σ_t″ N_R + N_T)`.
    pub p_exp: Vec<Vec<f64>>,
    /// `q_exp[i] = N_T(x, t) / Σ_x′ N_T(x′, t)`.
    pub q_exp: Vec<f64>,
    /// `Σ_x Σ_t′ x·P_exp(x, t′)`.
    pub displacement: f64,
    /// `Σ_x Σ_t′ t′·P_exp(x, t′)`.
    pub dwell_time: f64,
}

/// Normalizes a count table into detection and survivor distributions, and
/// evaluates the displacement/dwell sums on the detection part.
pub fn ingest_counts(table: &CountTable) -> Result<IngestedDistributions> {
    let total_r: f64 = table.reflected().iter().flatten().sum();
    let total_t: f64 = table.transmitted().iter().sum();
    let denom = total_r + total_t;
    if denom <= 0.0 {
        return Err(Error::EmptyDistribution("count table with no counts"));
    }
    if total_t <= 0.0 {
        return Err(Error::EmptyDistribution(
            "no survivor counts at the final step",
        ));
    }
    let p_exp: Vec<Vec<f64>> = table
        .reflected()
        .iter()
        .map(|row| row.iter().map(|&c| c / denom).collect())
        .collect();
    let q_exp: Vec<f64> = table.transmitted().iter().map(|&c| c / total_t).collect();
    let mut displacement = 0.0;
    let mut dwell_time = 0.0;
    for (ti, row) in p_exp.iter().enumerate() {
        for (i, &prob) in row.iter().enumerate() {
            displacement += table.site(i) as f64 * prob;
            dwell_time += (ti + 1) as f64 * prob;
        }
    }
    Ok(IngestedDistributions {
        x_min: table.x_min(),
        p_exp,
        q_exp,
        displacement,
        dwell_time,
    })
}

/// Poisson standard errors `√N_R / denominator` for the detection
/// distribution of [`ingest_counts`] (counting-statistics model; offered as a
/// convenience, not used by any simulation path).
pub fn poisson_standard_errors(table: &CountTable) -> Result<Vec<Vec<f64>>> {
    let total_r: f64 = table.reflected().iter().flatten().sum();
    let total_t: f64 = table.transmitted().iter().sum();
    let denom = total_r + total_t;
    if denom <= 0.0 {
        return Err(Error::EmptyDistribution("count table with no counts"));
    }
    Ok(table
        .reflected()
        .iter()
        .map(|row| row.iter().map(|&c| c.sqrt() / denom).collect())
        .collect())
}

/// Builds the count table an ideal detector would record for a finished run:
/// detection rows and final surviving site probabilities, scaled by a total
/// photon budget.
pub fn counts_from_record(rec: &DetectionRecord, scale: f64) -> Result<CountTable> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "count scale must be positive, got {scale}"
        )));
    }
    let reflected: Vec<Vec<f64>> = rec
        .rows()
        .iter()
        .map(|row| row.iter().map(|&prob| prob * scale).collect())
        .collect();
    let transmitted: Vec<f64> = rec
        .final_state()
        .site_probabilities()
        .into_iter()
        .map(|prob| prob * scale)
        .collect();
    CountTable::new(-rec.half_width(), reflected, transmitted)
}
