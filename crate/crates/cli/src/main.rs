//! `rom0d`: command-line pipeline for junction-aware 0D network models.
//!
//! Units are CGS throughout: cm, cm², cm³/s, Ba (dyn/cm²), s, poise, g/cm³.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rom0d::network::BifurcationDefinition;
use rom0d::nondim::ModelKind;
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 1.
    Validation(String),
    /// A numerical procedure failed: exit code 2.
    Numerical(String),
}

impl From<rom0d::Error> for CliError {
    fn from(e: rom0d::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "rom0d", version, about = "Zero-dimensional vascular network models with learned junction losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a symmetric binary tree with Murray's-law radii.
    MakeTree(MakeTreeArgs),
    /// Estimate junction flow splits from downstream effective resistance.
    EstimateSplits(EstimateSplitsArgs),
    /// Generate an oracle-labelled junction cohort.
    GenerateData(GenerateDataArgs),
    /// Train the per-coefficient networks on a cohort.
    Train(TrainArgs),
    /// Predict junction coefficients for every junction of a network.
    Predict(PredictArgs),
    /// Solve a network.
    Solve(SolveArgs),
    /// Fit RRI and RI coefficients to a flow / pressure-drop time series.
    FitCoeffs(FitCoeffsArgs),
    /// Fit junction coefficients in-tree from a Reynolds sweep and re-solve.
    FitTree(FitTreeArgs),
    /// Impedance spectrum of a periodic solution.
    Impedance(ImpedanceArgs),
    /// Compare a solution against a reference.
    Compare(CompareArgs),
}

/// Flags shared by every command.
#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// Output directory; created if missing. A manifest.json is written there.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// JSON object of flag values; explicit flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct MakeTreeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of bifurcation levels (2^depth terminal vessels).
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    /// Root vessel radius, cm.
    #[arg(long, default_value_t = 0.5)]
    pub inlet_radius: f64,
    /// Vessel length over vessel radius, dimensionless.
    #[arg(long, default_value_t = 30.0)]
    pub length_ratio: f64,
    /// Murray exponent k in r_in^k = r_1^k + r_2^k.
    #[arg(long, default_value_t = 3.0)]
    pub murray_exponent: f64,
    /// Steady inflow at the root, cm³/s.
    #[arg(long, default_value_t = 50.0)]
    pub inflow: f64,
    /// Terminal resistance, Ba·s/cm³ [default: 1000·2^depth].
    #[arg(long)]
    pub leaf_resistance: Option<f64>,
    /// Junction extent: no-branch, partial-branch or full-branch.
    #[arg(long, default_value = "partial-branch")]
    pub bif_def: BifurcationDefinition,
}

#[derive(Args, Debug, Serialize)]
pub struct EstimateSplitsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Network JSON.
    #[arg(long)]
    pub network: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateDataArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of sampled junctions (14 rows each).
    #[arg(long, default_value_t = 800)]
    pub junctions: usize,
    /// Seed of geometry sampling, the train/validation split and noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Reference Reynolds number of the characteristic scales.
    #[arg(long, default_value_t = 4500.0)]
    pub reynolds: f64,
    /// Peak inlet Reynolds number of the systolic waveform.
    #[arg(long, default_value_t = 5500.0)]
    pub re_max: f64,
    /// Waveform period, s.
    #[arg(long, default_value_t = 0.4)]
    pub period: f64,
    /// Samples per period.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Standard deviation of Gaussian noise added to ΔP, Ba.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Fraction of junctions held out for validation.
    #[arg(long, default_value_t = 0.1)]
    pub validation_fraction: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory written by generate-data.
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,
    /// Passes over the training split.
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    /// Rows per Adam step.
    #[arg(long, default_value_t = 50)]
    pub batch_size: usize,
    /// Adam step size.
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Master seed for initialization and shuffling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hidden layer count and width, e.g. `2,32`, replacing the per-coefficient defaults.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub hidden: Option<Vec<usize>>,
    /// Worker threads; models train in parallel. 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    /// Network JSON with flow splits.
    #[arg(long)]
    pub network: PathBuf,
    /// Model bundle from `train`.
    #[arg(long)]
    pub models: PathBuf,
    /// Junction models to predict.
    #[arg(long, value_delimiter = ',', default_value = "rri,ri")]
    pub kinds: Vec<ModelKind>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineArg {
    /// Poiseuille vessels, lossless junctions.
    Standard,
    /// Junction losses ΔP = R_lin Q + R_quad Q² + L dQ/dt.
    Rri,
    /// Junction losses ΔP = R_lin Q + L dQ/dt.
    Ri,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JunctionSolverArg {
    /// Least-squares objective under linear constraints.
    Opt,
    /// Square Newton root finding.
    Newton,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Steady,
    Transient,
}

#[derive(Args, Debug, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Network JSON.
    #[arg(long)]
    pub network: PathBuf,
    /// Vessel and junction model.
    #[arg(long, value_enum, default_value = "standard")]
    pub engine: EngineArg,
    /// Solver for the rri and ri engines.
    #[arg(long, value_enum, default_value = "opt")]
    pub junction_solver: JunctionSolverArg,
    /// Steady state, or backward-Euler time stepping.
    #[arg(long, value_enum, default_value = "steady")]
    pub mode: ModeArg,
    /// Time step, s (transient only).
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Number of time steps (transient only).
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Initial time, s; steady solves are evaluated at this time.
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    /// Newton residual tolerance (∞-norm).
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModelArg {
    Rri,
    Ri,
    Both,
}

#[derive(Args, Debug, Serialize)]
pub struct FitCoeffsArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV with columns t (s), Q (cm³/s), dP (Ba) on a uniform grid.
    #[arg(long)]
    pub series: PathBuf,
    /// Pressure-drop law(s) to fit.
    #[arg(long, value_enum, default_value = "both")]
    pub model: FitModelArg,
}

#[derive(Args, Debug, Serialize)]
pub struct FitTreeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Network JSON solved to produce the reference sweep.
    #[arg(long)]
    pub network: PathBuf,
    /// Inlet Reynolds numbers of the sweep.
    #[arg(long, value_delimiter = ',', default_value = "600,1300,2700,5500")]
    pub re: Vec<f64>,
    /// Engine producing the reference solutions.
    #[arg(long, value_enum, default_value = "standard")]
    pub reference_engine: EngineArg,
    /// Restrict the fit to one junction extent [default: all three].
    #[arg(long)]
    pub bif_def: Option<BifurcationDefinition>,
    /// Outlet reference pressure for relative errors, Ba.
    #[arg(long, default_value_t = 0.0)]
    pub datum: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ImpedanceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Solution CSV from `solve --mode transient`.
    #[arg(long)]
    pub solution: PathBuf,
    /// Vessel id whose inlet flow and pressure are analysed [default: first column].
    #[arg(long)]
    pub vessel: Option<usize>,
    /// Period of the inflow, s.
    #[arg(long)]
    pub period: f64,
    /// Number of trailing periods to analyse [default: the whole record].
    #[arg(long)]
    pub periods: Option<usize>,
    /// Pressure subtracted from P_in to form the pressure drop, Ba.
    #[arg(long, default_value_t = 0.0)]
    pub datum: f64,
    /// Harmonics with |F(Q)| below this fraction of the largest are dropped.
    #[arg(long, default_value_t = rom0d::analysis::DEFAULT_HARMONIC_FLOOR)]
    pub floor: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Network JSON both solutions belong to.
    #[arg(long)]
    pub network: PathBuf,
    /// Solution CSV to assess.
    #[arg(long)]
    pub solution: PathBuf,
    /// Reference solution CSV on the same time grid.
    #[arg(long)]
    pub reference: PathBuf,
    /// Outlet reference pressure for relative errors, Ba.
    #[arg(long, default_value_t = 0.0)]
    pub datum: f64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let workers = match &cli.command {
        Command::GenerateData(a) => a.workers,
        Command::Train(a) => a.workers,
        _ => 1,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::MakeTree(a) => commands::make_tree(a),
        Command::EstimateSplits(a) => commands::estimate_splits(a),
        Command::GenerateData(a) => commands::generate_data(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Solve(a) => commands::solve(a),
        Command::FitCoeffs(a) => commands::fit_coeffs(a),
        Command::FitTree(a) => commands::fit_tree(a),
        Command::Impedance(a) => commands::impedance(a),
        Command::Compare(a) => commands::compare(a),
    })
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match parse(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

/// Parses with repeated flags allowed; the last occurrence wins.
fn parse(argv: Vec<std::ffi::OsString>) -> Result<Cli, clap::Error> {
    let mut cmd = Cli::command().args_override_self(true);
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for n in names {
        cmd = cmd.mut_subcommand(n, |s| s.args_override_self(true));
    }
    let matches = cmd.try_get_matches_from(argv)?;
    Cli::from_arg_matches(&matches)
}

fn report(e: CliError) -> ExitCode {
    match e {
        CliError::Validation(m) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        CliError::Numerical(m) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn later_flags_override_earlier() {
        let argv = ["rom0d", "solve", "--network", "n.json", "--out", "o", "--dt", "0.1", "--dt", "0.2"];
        let Command::Solve(a) = parse(argv.iter().map(Into::into).collect()).unwrap().command else {
            panic!("expected solve");
        };
        assert_eq!(a.dt, 0.2);
    }

    #[test]
    fn every_flag_is_documented() {
        for sub in Cli::command().get_subcommands() {
            assert!(sub.get_about().is_some(), "{}", sub.get_name());
            for arg in sub.get_arguments() {
                let id = arg.get_id().as_str();
                assert!(
                    arg.get_help().is_some() || id == "help",
                    "{} --{id}",
                    sub.get_name()
                );
            }
        }
    }
}
