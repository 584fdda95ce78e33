//! Scenario runners. Each one resolves its configuration, drives the
//! library, and writes the selected artifacts through [`Out`].

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;

use serde_json::json;

use qwalk::{
    edge_experiment, evolve, ingest_counts, lattice_half_width, monte_carlo_oracle,
    poisson_standard_errors, CoinField, CoinSpec, CountTable, FrameChoice, LossParameter,
    StoppingRule, WalkerState, WindingResult,
};

use crate::config::{
    DisorderEdgeConfig, DisorderScanConfig, DisplacementScanConfig, EdgeConfig, IngestConfig,
    OracleCheckConfig, PhaseDiagramConfig,
};
use crate::output::{blue_ramp, heatmap, label_num, line_plot, num, Out, Series, PALETTE};
use crate::{CliError, RunStatus};

fn loss(v: f64) -> Result<LossParameter, CliError> {
    LossParameter::new(v).map_err(|e| CliError::Config(e.to_string()))
}

fn require(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.to_string()))
    }
}

/// Tick label for an angle axis, in units of π.
fn pi_label(v: f64) -> String {
    let r = v / PI;
    if r == 0.0 {
        "0".to_string()
    } else if r == 1.0 {
        "π".to_string()
    } else if r == -1.0 {
        "-π".to_string()
    } else {
        format!("{}π", label_num(r))
    }
}

/// Drops earlier ticks that collide with a later one on the same cell
/// (possible at very small resolutions).
fn dedup_ticks(mut ticks: Vec<(usize, String)>) -> Vec<(usize, String)> {
    ticks.reverse();
    ticks.dedup_by_key(|(i, _)| *i);
    ticks.reverse();
    ticks
}

pub fn displacement_scan(cfg: DisplacementScanConfig, out: &mut Out) -> Result<RunStatus, CliError> {
    require(cfg.steps >= 1, "displacement-scan needs steps ≥ 1")?;
    require(!cfg.theta1_list.is_empty(), "displacement-scan needs at least one θ₁")?;
    require(!cfg.p_list.is_empty(), "displacement-scan needs at least one loss parameter")?;
    let theta1s: Vec<f64> = cfg.theta1_list.iter().map(|a| a.0).collect();
    let ps: Vec<LossParameter> = cfg
        .p_list
        .iter()
        .map(|l| loss(l.0))
        .collect::<Result<_, _>>()?;
    let rows = qwalk::displacement_scan(cfg.theta2.0, &theta1s, &ps, cfg.steps, cfg.frame)?;

    let mut csv = String::from(
        "theta1,p,displacement_fixed,dwell_fixed,displacement_long,displacement_tail,dwell_long,dwell_tail,converged,steps_used\n",
    );
    let mut nonconverged = 0usize;
    for r in &rows {
        let lr = &r.long_run;
        if !lr.displacement.converged {
            nonconverged += 1;
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            num(r.theta1),
            num(r.p),
            num(r.fixed.displacement.value),
            num(r.fixed.dwell_time.value),
            num(lr.displacement.value),
            num(lr.displacement.tail_bound),
            num(lr.dwell_time.value),
            num(lr.dwell_time.tail_bound),
            lr.displacement.converged,
            lr.displacement.steps_used,
        ));
    }
    out.csv("displacement_scan.csv", &csv)?;

    let np = ps.len();
    let series: Vec<Series> = ps
        .iter()
        .enumerate()
        .map(|(j, p)| Series {
            label: format!("p = {}", label_num(p.value())),
            color: PALETTE[j % PALETTE.len()].to_string(),
            points: (0..theta1s.len())
                .map(|i| {
                    let r = &rows[i * np + j];
                    (r.theta1 / PI, r.long_run.displacement.value)
                })
                .collect(),
            bars: Vec::new(),
        })
        .collect();
    out.svg(
        "displacement_scan.svg",
        &line_plot(
            "Long-run average displacement",
            "theta1 / pi",
            "mean displacement",
            &series,
        ),
    )?;

    let max_tail = rows
        .iter()
        .map(|r| r.long_run.displacement.tail_bound)
        .fold(0.0f64, f64::max);
    let stopping = match StoppingRule::long_run() {
        StoppingRule::SurvivalBelow { epsilon, max_steps } => {
            json!({"survival_below": epsilon, "max_steps": max_steps})
        }
        StoppingRule::FixedSteps { steps } => json!({"fixed_steps": steps}),
    };
    out.summary(
        "displacement-scan",
        &cfg,
        json!({
            "rows": rows.len(),
            "nonconverged_long_runs": nonconverged,
            "long_run_stopping": stopping,
            "max_displacement_tail_bound": max_tail,
        }),
    )?;
    Ok(if nonconverged == 0 {
        RunStatus::Clean
    } else {
        RunStatus::NonConverged
    })
}

fn rational(v: Option<qwalk::Rational32>) -> String {
    v.map(|r| r.to_string()).unwrap_or_default()
}

pub fn phase_diagram(cfg: PhaseDiagramConfig, out: &mut Out) -> Result<RunStatus, CliError> {
    require(cfg.resolution >= 2, "phase-diagram needs resolution ≥ 2")?;
    require(cfg.k_grid >= 8, "phase-diagram needs k_grid ≥ 8")?;
    let r = cfg.resolution;
    let cells = qwalk::phase_diagram(
        (cfg.theta1_min.0, cfg.theta1_max.0),
        (cfg.theta2_min.0, cfg.theta2_max.0),
        (r, r),
        loss(cfg.p.0)?,
        cfg.k_grid,
    )?;

    let mut csv = String::from("theta1,theta2,nu_prime,nu_dprime,nu_0,nu_pi,valid\n");
    for c in &cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            num(c.theta1),
            num(c.theta2),
            c.nu_prime.map(|v| v.to_string()).unwrap_or_default(),
            c.nu_double_prime.map(|v| v.to_string()).unwrap_or_default(),
            rational(c.nu_zero),
            rational(c.nu_pi),
            c.valid(),
        ));
    }
    out.csv("phase_diagram.csv", &csv)?;

    // Color each cell by its (ν₀, ν_π) pair; degenerate cells are gray.
    let mut pairs: Vec<(qwalk::Rational32, qwalk::Rational32)> = cells
        .iter()
        .filter_map(|c| Some((c.nu_zero?, c.nu_pi?)))
        .collect();
    pairs.sort();
    pairs.dedup();
    let color_of = |c: &WindingResult| -> String {
        match (c.nu_zero, c.nu_pi) {
            (Some(a), Some(b)) => {
                let i = pairs.iter().position(|&p| p == (a, b)).unwrap();
                PALETTE[i % PALETTE.len()].to_string()
            }
            _ => "#d9d9d9".to_string(),
        }
    };
    let mut colors = vec![String::new(); r * r];
    for (idx, c) in cells.iter().enumerate() {
        let (i, j) = (idx / r, idx % r);
        colors[j * r + i] = color_of(c);
    }
    let tick = |lo: f64, hi: f64, f: f64| lo + (hi - lo) * f;
    let x_ticks = dedup_ticks(
        [0.0, 0.5, 1.0]
            .iter()
            .map(|&f| {
                (
                    (f * (r - 1) as f64).round() as usize,
                    pi_label(tick(cfg.theta1_min.0, cfg.theta1_max.0, f)),
                )
            })
            .collect(),
    );
    let y_ticks = dedup_ticks(
        [0.0, 0.5, 1.0]
            .iter()
            .map(|&f| {
                (
                    (f * (r - 1) as f64).round() as usize,
                    pi_label(tick(cfg.theta2_min.0, cfg.theta2_max.0, f)),
                )
            })
            .collect(),
    );
    let mut legend: Vec<(String, String)> = pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            (
                PALETTE[i % PALETTE.len()].to_string(),
                format!("(nu0, nupi) = ({a}, {b})"),
            )
        })
        .collect();
    let degenerate = cells.iter().filter(|c| !c.valid()).count();
    if degenerate > 0 {
        legend.push(("#d9d9d9".to_string(), "degenerate".to_string()));
    }
    out.svg(
        "phase_diagram.svg",
        &heatmap(
            "Topological phases",
            "theta1",
            "theta2",
            r,
            r,
            &colors,
            &x_ticks,
            &y_ticks,
            &legend,
        ),
    )?;

    let phase_counts: Vec<serde_json::Value> = pairs
        .iter()
        .map(|&(a, b)| {
            let n = cells
                .iter()
                .filter(|c| c.nu_zero == Some(a) && c.nu_pi == Some(b))
                .count();
            json!({"nu_0": a.to_string(), "nu_pi": b.to_string(), "cells": n})
        })
        .collect();
    out.summary(
        "phase-diagram",
        &cfg,
        json!({
            "cells": cells.len(),
            "degenerate_cells": degenerate,
            "gap_tolerance": qwalk::DEFAULT_GAP_TOL,
            "phases": phase_counts,
        }),
    )?;
    Ok(RunStatus::Clean)
}

/// Shared body of the clean and disordered boundary scenarios.
struct EdgeTable<'a> {
    half_width: i32,
    steps: u32,
    rows: &'a [Vec<f64>],
}

impl EdgeTable<'_> {
    fn csv(&self, value_name: &str) -> String {
        let mut csv = format!("x,t,{value_name}\n");
        for (ti, row) in self.rows.iter().enumerate() {
            for (i, q) in row.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    i as i32 - self.half_width,
                    ti + 1,
                    num(*q)
                ));
            }
        }
        csv
    }

    fn svg(&self, title: &str, boundary: i32) -> String {
        let sites = (2 * self.half_width + 1) as usize;
        let q_max = self
            .rows
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v))
            .max(1e-300);
        let colors: Vec<String> = self
            .rows
            .iter()
            .flat_map(|row| row.iter().map(|&v| blue_ramp(v / q_max)))
            .collect();
        let mut xs = vec![-self.half_width, 0, boundary, self.half_width];
        xs.sort();
        xs.dedup();
        let x_ticks: Vec<(usize, String)> = xs
            .into_iter()
            .map(|x| ((x + self.half_width) as usize, x.to_string()))
            .collect();
        let y_ticks = dedup_ticks(
            [1, self.steps]
                .iter()
                .map(|&t| (t as usize - 1, t.to_string()))
                .collect(),
        );
        heatmap(
            title,
            "site x",
            "step t",
            sites,
            self.steps as usize,
            &colors,
            &x_ticks,
            &y_ticks,
            &[
                (blue_ramp(1.0), format!("Q = {}", label_num(q_max))),
                (blue_ramp(0.0), "Q = 0".to_string()),
            ],
        )
    }

    fn argmax_at_final_step(&self) -> (i32, f64) {
        let last = &self.rows[self.rows.len() - 1];
        let (i, v) = last
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        (i as i32 - self.half_width, v)
    }
}

pub fn edge(cfg: EdgeConfig, out: &mut Out) -> Result<RunStatus, CliError> {
    let cfg = cfg.resolved('b').map_err(CliError::Config)?;
    require(cfg.steps >= 1, "edge needs steps ≥ 1")?;
    require(cfg.boundary >= 0, "edge needs a boundary x₀ ≥ 0")?;
    let run = edge_experiment(&cfg.layout(), loss(cfg.p.0)?, cfg.steps, cfg.start)?;
    let table = EdgeTable {
        half_width: run.half_width,
        steps: cfg.steps,
        rows: &run.q_rows,
    };
    out.csv("edge_q.csv", &table.csv("q"))?;
    out.svg(
        "edge_q.svg",
        &table.svg("Survivor distribution at a phase boundary", cfg.boundary),
    )?;
    let (x_max, q_max) = table.argmax_at_final_step();
    out.summary(
        "edge",
        &cfg,
        json!({
            "survival": run.survival.clone(),
            "q_argmax": {"x": x_max, "t": cfg.steps, "q": q_max},
            "boundary_q": run.q(cfg.boundary, cfg.steps),
        }),
    )?;
    Ok(RunStatus::Clean)
}

pub fn disorder_edge(cfg: DisorderEdgeConfig, out: &mut Out) -> Result<RunStatus, CliError> {
    let cfg = cfg.resolved('c').map_err(CliError::Config)?;
    require(cfg.steps >= 1, "disorder-edge needs steps ≥ 1")?;
    require(cfg.boundary >= 0, "disorder-edge needs a boundary x₀ ≥ 0")?;
    require(cfg.ensemble >= 1, "disorder-edge needs an ensemble of ≥ 1")?;
    let de = qwalk::disorder_edge(
        &cfg.layout(),
        &cfg.spec(),
        loss(cfg.p.0)?,
        cfg.steps,
        cfg.start,
    )?;
    let hw = de.members[0].half_width;

    let table = EdgeTable {
        half_width: hw,
        steps: cfg.steps,
        rows: &de.mean_q,
    };
    out.csv("disorder_edge_mean_q.csv", &table.csv("mean_q"))?;

    let mut members_csv = String::from("member,stream,x,t,q\n");
    for (m, run) in de.members.iter().enumerate() {
        for (ti, row) in run.q_rows.iter().enumerate() {
            for (i, q) in row.iter().enumerate() {
                members_csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    m,
                    de.streams[m],
                    i as i32 - hw,
                    ti + 1,
                    num(*q)
                ));
            }
        }
    }
    out.csv("disorder_edge_members.csv", &members_csv)?;

    out.svg(
        "disorder_edge_mean_q.svg",
        &table.svg("Disorder-averaged survivor distribution", cfg.boundary),
    )?;

    let (x_max, q_max) = table.argmax_at_final_step();
    let boundary_idx = (cfg.boundary + hw) as usize;
    out.summary(
        "disorder-edge",
        &cfg,
        json!({
            "ensemble": cfg.ensemble,
            "mean_q_argmax": {"x": x_max, "t": cfg.steps, "mean_q": q_max},
            "mean_boundary_q": de.mean_q[cfg.steps as usize - 1][boundary_idx],
        }),
    )?;
    Ok(RunStatus::Clean)
}

pub fn disorder_scan(cfg: DisorderScanConfig, out: &mut Out) -> Result<RunStatus, CliError> {
    require(cfg.steps >= 1, "disorder-scan needs steps ≥ 1")?;
    require(cfg.ensemble >= 1, "disorder-scan needs an ensemble of ≥ 1")?;
    require(!cfg.theta1_list.is_empty(), "disorder-scan needs at least one θ₁")?;
    let theta1s: Vec<f64> = cfg.theta1_list.iter().map(|a| a.0).collect();
    let points = qwalk::disorder_displacement(
        cfg.theta2.0,
        &theta1s,
        &cfg.spec(),
        loss(cfg.p.0)?,
        cfg.steps,
        cfg.frame,
    )?;

    let mut csv = String::from("theta1,clean,mean,std_dev\n");
    let mut members_csv = String::from("theta1,member,stream,displacement\n");
    for pt in &points {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            num(pt.theta1),
            num(pt.clean),
            num(pt.summary.mean),
            num(pt.summary.std_dev),
        ));
        for (m, &d) in pt.summary.members.iter().enumerate() {
            members_csv.push_str(&format!(
                "{},{},{},{}\n",
                num(pt.theta1),
                m,
                pt.summary.streams[m],
                num(d)
            ));
        }
    }
    out.csv("disorder_scan.csv", &csv)?;
    out.csv("disorder_scan_members.csv", &members_csv)?;

    let series = [
        Series {
            label: "clean".to_string(),
            color: PALETTE[0].to_string(),
            points: points.iter().map(|pt| (pt.theta1 / PI, pt.clean)).collect(),
            bars: Vec::new(),
        },
        Series {
            label: "disorder mean ± σ".to_string(),
            color: PALETTE[1].to_string(),
            points: points
                .iter()
                .map(|pt| (pt.theta1 / PI, pt.summary.mean))
                .collect(),
            bars: points.iter().map(|pt| pt.summary.std_dev).collect(),
        },
    ];
    out.svg(
        "disorder_scan.svg",
        &line_plot(
            "Displacement under coin disorder",
            "theta1 / pi",
            "mean displacement",
            &series,
        ),
    )?;

    let max_dev = points
        .iter()
        .map(|pt| (pt.summary.mean - pt.clean).abs())
        .fold(0.0f64, f64::max);
    out.summary(
        "disorder-scan",
        &cfg,
        json!({
            "points": points.len(),
            "max_abs_deviation_from_clean": max_dev,
        }),
    )?;
    Ok(RunStatus::Clean)
}

pub fn ingest(cfg: IngestConfig, out: &mut Out) -> Result<RunStatus, CliError> {
    let path = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Config("ingest needs an input count table".to_string()))?;
    let file = File::open(&path)
        .map_err(|e| CliError::Run(format!("cannot open {}: {e}", path.display())))?;
    let table = CountTable::from_csv(BufReader::new(file))?;
    let dist = ingest_counts(&table)?;
    let errors = if cfg.poisson_errors {
        Some(poisson_standard_errors(&table)?)
    } else {
        None
    };

    let mut p_csv = String::from(if errors.is_some() {
        "x,t,p_exp,std_err\n"
    } else {
        "x,t,p_exp\n"
    });
    for (ti, row) in dist.p_exp.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let x = dist.x_min + i as i32;
            match &errors {
                Some(se) => p_csv.push_str(&format!(
                    "{},{},{},{}\n",
                    x,
                    ti + 1,
                    num(*v),
                    num(se[ti][i])
                )),
                None => p_csv.push_str(&format!("{},{},{}\n", x, ti + 1, num(*v))),
            }
        }
    }
    out.csv("ingest_p_exp.csv", &p_csv)?;

    let mut q_csv = String::from("x,q_exp\n");
    for (i, v) in dist.q_exp.iter().enumerate() {
        q_csv.push_str(&format!("{},{}\n", dist.x_min + i as i32, num(*v)));
    }
    out.csv("ingest_q_exp.csv", &q_csv)?;

    let detected: f64 = dist.p_exp.iter().flatten().sum();
    out.summary(
        "ingest",
        &cfg,
        json!({
            "x_min": dist.x_min,
            "sites": dist.q_exp.len(),
            "steps": dist.p_exp.len(),
            "detected_fraction": detected,
            "displacement": dist.displacement,
            "dwell_time": dist.dwell_time,
        }),
    )?;
    Ok(RunStatus::Clean)
}

pub fn oracle_check(cfg: OracleCheckConfig, out: &mut Out) -> Result<RunStatus, CliError> {
    require(cfg.steps >= 1, "oracle-check needs steps ≥ 1")?;
    require(cfg.trials >= 1, "oracle-check needs trials ≥ 1")?;
    let l = lattice_half_width(cfg.steps, 0);
    let field = CoinField::homogeneous(l, CoinSpec::new(cfg.theta1.0, cfg.theta2.0))?;
    let init = WalkerState::plus_at(l, 0)?;
    let p = loss(cfg.p.0)?;
    let rec = evolve(
        &init,
        &field,
        p,
        FrameChoice::Prime,
        StoppingRule::FixedSteps { steps: cfg.steps },
    )?;
    let counts = monte_carlo_oracle(
        &init,
        &field,
        p,
        FrameChoice::Prime,
        cfg.steps,
        cfg.trials,
        cfg.seed,
    )?;

    let mut csv = String::from("x,t,p_exact,p_empirical,std_err,within_4se\n");
    let mut cells = 0usize;
    let mut within = 0usize;
    for (ti, row) in rec.rows().iter().enumerate() {
        let t = ti as u32 + 1;
        for (i, &exact) in row.iter().enumerate() {
            let emp = counts.empirical(i, t);
            if exact < 1e-14 && emp == 0.0 {
                continue;
            }
            let se = counts.std_err(i, t);
            let se_eff = if se > 0.0 {
                se
            } else {
                (exact * (1.0 - exact) / cfg.trials as f64).sqrt()
            };
            let ok = if se_eff > 0.0 {
                (emp - exact).abs() <= 4.0 * se_eff
            } else {
                (emp - exact).abs() < 1e-12
            };
            cells += 1;
            within += ok as usize;
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                counts.site(i),
                t,
                num(exact),
                num(emp),
                num(se),
                ok
            ));
        }
    }
    out.csv("oracle_check.csv", &csv)?;

    out.summary(
        "oracle-check",
        &cfg,
        json!({
            "cells": cells,
            "within_4se": within,
            "fraction_within": within as f64 / cells.max(1) as f64,
            "survival_exact": rec.final_survival(),
            "survival_empirical": counts.survived() as f64 / cfg.trials as f64,
        }),
    )?;
    Ok(RunStatus::Clean)
}
