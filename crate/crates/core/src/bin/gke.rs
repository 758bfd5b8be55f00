use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gke::cli::{
    cmd_generate, cmd_solve, cmd_verify, parse_reals, parse_spectrum, parse_suite, Command,
    ReportFormat, RunConfig, EXIT_INPUT_ERROR,
};
use gke::{CheckId, Generator, MapSpec};

#[derive(Parser)]
#[command(name = "gke", version, about = "Matrix means from the generalized Karcher equation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded random ensemble with spectra in [m, M].
    Generate(Common),
    /// Solve the equation for an ensemble file.
    Solve(Common),
    /// Run the inequality checks on random ensembles.
    Verify(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// log, power:T, affine, harmonic or deform:P:TAG
    #[arg(long, value_parser = parse_generator)]
    generator: Option<Generator>,
    /// Comma-separated weights summing to 1.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Number of matrices per ensemble.
    #[arg(long, default_value_t = 3)]
    count: usize,
    /// Spectrum bounds as m,M.
    #[arg(long, value_parser = parse_bounds, default_value = "1,4")]
    spectrum: Bounds,
    /// Check ids, id prefixes, or `all`.
    #[arg(long, value_parser = parse_checks, default_value = "all")]
    suite: Checks,
    /// Positive linear map for the map checks, e.g. pinch:1|2,3 or trace.
    #[arg(long, value_parser = parse_map)]
    map: Option<MapSpec>,
    #[arg(long, value_enum, default_value_t = Report::Json)]
    report: Report,
    /// Omit timings so reports are reproducible byte for byte.
    #[arg(long)]
    stable: bool,
}

#[derive(Clone)]
struct Weights(Vec<f64>);
#[derive(Clone)]
struct Bounds((f64, f64));
#[derive(Clone)]
struct Checks(Vec<CheckId>);

fn parse_generator(s: &str) -> Result<Generator, String> {
    s.parse().map_err(|e: gke::GkeError| e.to_string())
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    parse_reals(s).map(Weights).map_err(|e| e.to_string())
}

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    parse_spectrum(s).map(Bounds).map_err(|e| e.to_string())
}

fn parse_checks(s: &str) -> Result<Checks, String> {
    parse_suite(s).map(Checks).map_err(|e| e.to_string())
}

fn parse_map(s: &str) -> Result<MapSpec, String> {
    s.parse().map_err(|e: gke::GkeError| e.to_string())
}

fn config(command: Command, c: Common) -> RunConfig {
    RunConfig {
        command,
        input: c.input,
        output: c.output,
        generator: c.generator,
        weights: c.weights.map(|w| w.0),
        tol: c.tol,
        max_iter: c.max_iter,
        seed: c.seed,
        trials: c.trials,
        dim: c.dim,
        count: c.count,
        spectrum: c.spectrum.0,
        suite: c.suite.0,
        map: c.map,
        report: match c.report {
            Report::Json => ReportFormat::Json,
            Report::Csv => ReportFormat::Csv,
        },
        stable: c.stable,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("GKE_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT_ERROR as u8 } else { 0 });
        }
    };
    let code = match cli.command {
        Cmd::Generate(c) => cmd_generate(&config(Command::Generate, c)),
        Cmd::Solve(c) => cmd_solve(&config(Command::Solve, c)),
        Cmd::Verify(c) => cmd_verify(&config(Command::Verify, c)),
    };
    ExitCode::from(code as u8)
}
