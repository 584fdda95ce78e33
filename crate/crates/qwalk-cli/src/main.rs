//! `qwalk` — scenario runner for the split-step walk with periodic partial
//! loss.
//!
//! Every subcommand reads an optional JSON config (`--config`), applies any
//! flag overrides on top, and writes its artifacts into one output
//! directory. Runs are deterministic: the same config bytes produce the
//! same artifact bytes.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime/data error,
//! 4 completed but at least one long-run estimate did not converge.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{
    load_config, parse_angle, parse_angle_list, parse_loss, parse_loss_list, Angle,
    DisorderEdgeConfig, DisorderScanConfig, DisplacementScanConfig, EdgeConfig, Formats,
    IngestConfig, Loss, OracleCheckConfig, PhaseDiagramConfig,
};
use output::Out;
use qwalk::FrameChoice;

#[derive(Debug)]
pub enum CliError {
    /// Bad parameters or malformed config — exit 2.
    Config(String),
    /// Failure while running or writing — exit 3.
    Run(String),
}

impl From<qwalk::Error> for CliError {
    fn from(e: qwalk::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<String> for CliError {
    fn from(m: String) -> Self {
        CliError::Run(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Clean,
    NonConverged,
}

#[derive(Clone)]
struct AngleList(Vec<f64>);

fn angle_list_arg(s: &str) -> Result<AngleList, String> {
    parse_angle_list(s).map(AngleList)
}

#[derive(Clone)]
struct LossList(Vec<f64>);

fn loss_list_arg(s: &str) -> Result<LossList, String> {
    parse_loss_list(s).map(LossList)
}

fn frame_arg(s: &str) -> Result<FrameChoice, String> {
    match s {
        "prime" => Ok(FrameChoice::Prime),
        "double-prime" => Ok(FrameChoice::DoublePrime),
        _ => Err(format!(
            "unknown frame {s:?} (expected prime or double-prime)"
        )),
    }
}

#[derive(Parser)]
#[command(
    name = "qwalk",
    version,
    about = "Scenarios for a split-step quantum walk with periodic partial loss",
    propagate_version = true
)]
struct Cli {
    /// JSON scenario config; flags override file values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory [env: QWALK_OUT] [default: qwalk-out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Artifact kinds, comma-separated from csv,json,svg [default: csv,json]
    #[arg(long, global = true, value_name = "KINDS")]
    format: Option<String>,
    /// Seed override for scenarios that draw random numbers
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep θ₁ and the loss parameter; record average displacement and
    /// dwell time at a fixed horizon and in the long run
    DisplacementScan(DisplacementScanArgs),
    /// Map the invariant pair (ν₀, ν_π) over a rectangle of coin angles
    PhaseDiagram(PhaseDiagramArgs),
    /// Two-region walk: survivor distribution around a phase boundary
    Edge(EdgeArgs),
    /// Boundary walk averaged over random coin-angle disorder
    DisorderEdge(DisorderEdgeArgs),
    /// Displacement sweep under random coin-angle disorder
    DisorderScan(DisorderScanArgs),
    /// Convert a detector count table into distributions and observables
    Ingest(IngestArgs),
    /// Compare exact detection rows against sampled trajectories
    OracleCheck(OracleCheckArgs),
}

#[derive(Args)]
struct DisplacementScanArgs {
    /// Second coin angle, radians or "a/b pi"
    #[arg(long, value_parser = parse_angle)]
    theta2: Option<f64>,
    /// Comma-separated θ₁ values
    #[arg(long, value_name = "LIST", value_parser = angle_list_arg)]
    theta1_list: Option<AngleList>,
    /// Comma-separated loss parameters in [0, 1]
    #[arg(long, value_name = "LIST", value_parser = loss_list_arg)]
    p_list: Option<LossList>,
    /// Fixed-horizon step count
    #[arg(long)]
    steps: Option<u32>,
    /// Symmetric timeframe: prime or double-prime
    #[arg(long, value_parser = frame_arg)]
    frame: Option<FrameChoice>,
}

impl DisplacementScanArgs {
    fn apply(&self, cfg: &mut DisplacementScanConfig) {
        if let Some(v) = self.theta2 {
            cfg.theta2 = Angle(v);
        }
        if let Some(AngleList(v)) = &self.theta1_list {
            cfg.theta1_list = v.iter().copied().map(Angle).collect();
        }
        if let Some(LossList(v)) = &self.p_list {
            cfg.p_list = v.iter().copied().map(Loss).collect();
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.frame {
            cfg.frame = v;
        }
    }
}

#[derive(Args)]
struct PhaseDiagramArgs {
    #[arg(long, value_parser = parse_angle)]
    theta1_min: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    theta1_max: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    theta2_min: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    theta2_max: Option<f64>,
    /// Grid points per axis
    #[arg(long)]
    resolution: Option<usize>,
    /// Loss parameter in [0, 1]
    #[arg(long, value_parser = parse_loss)]
    p: Option<f64>,
    /// Momentum samples per winding integral
    #[arg(long)]
    k_grid: Option<usize>,
}

impl PhaseDiagramArgs {
    fn apply(&self, cfg: &mut PhaseDiagramConfig) {
        if let Some(v) = self.theta1_min {
            cfg.theta1_min = Angle(v);
        }
        if let Some(v) = self.theta1_max {
            cfg.theta1_max = Angle(v);
        }
        if let Some(v) = self.theta2_min {
            cfg.theta2_min = Angle(v);
        }
        if let Some(v) = self.theta2_max {
            cfg.theta2_max = Angle(v);
        }
        if let Some(v) = self.resolution {
            cfg.resolution = v;
        }
        if let Some(v) = self.p {
            cfg.p = Loss(v);
        }
        if let Some(v) = self.k_grid {
            cfg.k_grid = v;
        }
    }
}

#[derive(Args)]
struct EdgeArgs {
    #[arg(long, value_parser = parse_angle)]
    inner_theta1: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    inner_theta2: Option<f64>,
    /// Outer-region preset: a (same phase), b (ν_π differs), c (both differ)
    #[arg(long)]
    case: Option<String>,
    #[arg(long, value_parser = parse_angle)]
    outer_theta1: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    outer_theta2: Option<f64>,
    /// Region boundary x₀ (inner angles on |x| ≤ x₀)
    #[arg(long)]
    boundary: Option<i32>,
    #[arg(long, value_parser = parse_loss)]
    p: Option<f64>,
    #[arg(long)]
    steps: Option<u32>,
    /// Walker start site
    #[arg(long)]
    start: Option<i32>,
}

impl EdgeArgs {
    fn apply(&self, cfg: &mut EdgeConfig) {
        if let Some(v) = self.inner_theta1 {
            cfg.inner_theta1 = Angle(v);
        }
        if let Some(v) = self.inner_theta2 {
            cfg.inner_theta2 = Angle(v);
        }
        if let Some(v) = &self.case {
            cfg.case = Some(v.clone());
        }
        if let Some(v) = self.outer_theta1 {
            cfg.outer_theta1 = Some(Angle(v));
        }
        if let Some(v) = self.outer_theta2 {
            cfg.outer_theta2 = Some(Angle(v));
        }
        if let Some(v) = self.boundary {
            cfg.boundary = v;
        }
        if let Some(v) = self.p {
            cfg.p = Loss(v);
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.start {
            cfg.start = v;
        }
    }
}

#[derive(Args)]
struct DisorderEdgeArgs {
    #[command(flatten)]
    edge: EdgeArgs,
    /// Disorder half-width in radians (also accepts "a/b pi")
    #[arg(long, value_parser = parse_angle)]
    amplitude: Option<f64>,
    /// Ensemble size
    #[arg(long)]
    ensemble: Option<usize>,
}

impl DisorderEdgeArgs {
    fn apply(&self, cfg: &mut DisorderEdgeConfig, seed: Option<u64>) {
        let mut edge = EdgeConfig {
            inner_theta1: cfg.inner_theta1,
            inner_theta2: cfg.inner_theta2,
            case: cfg.case.clone(),
            outer_theta1: cfg.outer_theta1,
            outer_theta2: cfg.outer_theta2,
            boundary: cfg.boundary,
            p: cfg.p,
            steps: cfg.steps,
            start: cfg.start,
        };
        self.edge.apply(&mut edge);
        cfg.inner_theta1 = edge.inner_theta1;
        cfg.inner_theta2 = edge.inner_theta2;
        cfg.case = edge.case;
        cfg.outer_theta1 = edge.outer_theta1;
        cfg.outer_theta2 = edge.outer_theta2;
        cfg.boundary = edge.boundary;
        cfg.p = edge.p;
        cfg.steps = edge.steps;
        cfg.start = edge.start;
        if let Some(v) = self.amplitude {
            cfg.amplitude = Angle(v);
        }
        if let Some(v) = self.ensemble {
            cfg.ensemble = v;
        }
        if let Some(v) = seed {
            cfg.seed = v;
        }
    }
}

#[derive(Args)]
struct DisorderScanArgs {
    #[arg(long, value_parser = parse_angle)]
    theta2: Option<f64>,
    /// Comma-separated θ₁ values
    #[arg(long, value_name = "LIST", value_parser = angle_list_arg)]
    theta1_list: Option<AngleList>,
    #[arg(long, value_parser = parse_loss)]
    p: Option<f64>,
    #[arg(long)]
    steps: Option<u32>,
    /// Disorder half-width in radians (also accepts "a/b pi")
    #[arg(long, value_parser = parse_angle)]
    amplitude: Option<f64>,
    /// Ensemble size
    #[arg(long)]
    ensemble: Option<usize>,
    /// Symmetric timeframe: prime or double-prime
    #[arg(long, value_parser = frame_arg)]
    frame: Option<FrameChoice>,
}

impl DisorderScanArgs {
    fn apply(&self, cfg: &mut DisorderScanConfig, seed: Option<u64>) {
        if let Some(v) = self.theta2 {
            cfg.theta2 = Angle(v);
        }
        if let Some(AngleList(v)) = &self.theta1_list {
            cfg.theta1_list = v.iter().copied().map(Angle).collect();
        }
        if let Some(v) = self.p {
            cfg.p = Loss(v);
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.amplitude {
            cfg.amplitude = Angle(v);
        }
        if let Some(v) = self.ensemble {
            cfg.ensemble = v;
        }
        if let Some(v) = self.frame {
            cfg.frame = v;
        }
        if let Some(v) = seed {
            cfg.seed = v;
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Count table CSV with header kind,x,t,count
    #[arg(value_name = "COUNTS_CSV")]
    input: Option<PathBuf>,
    /// Write Poisson standard-error columns
    #[arg(long)]
    poisson_errors: bool,
}

impl IngestArgs {
    fn apply(&self, cfg: &mut IngestConfig) {
        if let Some(v) = &self.input {
            cfg.input = Some(v.clone());
        }
        if self.poisson_errors {
            cfg.poisson_errors = true;
        }
    }
}

#[derive(Args)]
struct OracleCheckArgs {
    #[arg(long, value_parser = parse_angle)]
    theta1: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    theta2: Option<f64>,
    #[arg(long, value_parser = parse_loss)]
    p: Option<f64>,
    #[arg(long)]
    steps: Option<u32>,
    /// Number of sampled trajectories
    #[arg(long)]
    trials: Option<u64>,
}

impl OracleCheckArgs {
    fn apply(&self, cfg: &mut OracleCheckConfig, seed: Option<u64>) {
        if let Some(v) = self.theta1 {
            cfg.theta1 = Angle(v);
        }
        if let Some(v) = self.theta2 {
            cfg.theta2 = Angle(v);
        }
        if let Some(v) = self.p {
            cfg.p = Loss(v);
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = seed {
            cfg.seed = v;
        }
    }
}

fn run(cli: Cli) -> Result<RunStatus, CliError> {
    let dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("QWALK_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qwalk-out"));
    let formats = match &cli.format {
        Some(s) => Formats::parse(s).map_err(CliError::Config)?,
        None => Formats::default(),
    };
    let mut out = Out::new(&dir, formats);
    let file = cli.config.as_deref();

    let status = match &cli.command {
        Command::DisplacementScan(a) => {
            let mut cfg: DisplacementScanConfig = load_config(file).map_err(CliError::Config)?;
            a.apply(&mut cfg);
            scenarios::displacement_scan(cfg, &mut out)?
        }
        Command::PhaseDiagram(a) => {
            let mut cfg: PhaseDiagramConfig = load_config(file).map_err(CliError::Config)?;
            a.apply(&mut cfg);
            scenarios::phase_diagram(cfg, &mut out)?
        }
        Command::Edge(a) => {
            let mut cfg: EdgeConfig = load_config(file).map_err(CliError::Config)?;
            a.apply(&mut cfg);
            scenarios::edge(cfg, &mut out)?
        }
        Command::DisorderEdge(a) => {
            let mut cfg: DisorderEdgeConfig = load_config(file).map_err(CliError::Config)?;
            a.apply(&mut cfg, cli.seed);
            scenarios::disorder_edge(cfg, &mut out)?
        }
        Command::DisorderScan(a) => {
            let mut cfg: DisorderScanConfig = load_config(file).map_err(CliError::Config)?;
            a.apply(&mut cfg, cli.seed);
            scenarios::disorder_scan(cfg, &mut out)?
        }
        Command::Ingest(a) => {
            let mut cfg: IngestConfig = load_config(file).map_err(CliError::Config)?;
            a.apply(&mut cfg);
            scenarios::ingest(cfg, &mut out)?
        }
        Command::OracleCheck(a) => {
            let mut cfg: OracleCheckConfig = load_config(file).map_err(CliError::Config)?;
            a.apply(&mut cfg, cli.seed);
            scenarios::oracle_check(cfg, &mut out)?
        }
    };

    for name in out.files() {
        println!("wrote {}", dir.join(name).display());
    }
    Ok(status)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(RunStatus::Clean) => 0,
        Ok(RunStatus::NonConverged) => {
            eprintln!("completed, but at least one long-run estimate did not converge");
            4
        }
        Err(CliError::Config(m)) => {
            eprintln!("config error: {m}");
            2
        }
        Err(CliError::Run(m)) => {
            eprintln!("error: {m}");
            3
        }
    };
    std::process::exit(code);
}
