//! Command implementations behind the `gke` binary and the on-disk formats.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GkeError, Result};
use crate::generators::Generator;
use crate::hermitian::{CMatrix, HermitianMatrix, PositiveDefiniteMatrix, SpectrumBounds, C64};
use crate::maps::MapSpec;
use crate::means::{solve_gke, solve_power_mean, MatrixEnsemble, SolveReport, SolverOptions};
use crate::sampling::random_bounded_ensemble;
use crate::verify::{
    run_suite, summarize, CheckId, CheckResult, Recipe, SuiteEntry, DEFAULT_CHECK_TOLERANCE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_SOLVER_ERROR: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Seeded random ensemble with spectra in [m, M]; see
/// [`random_bounded_ensemble`].
pub fn generate_ensemble(k: usize, n: usize, m: f64, big_m: f64, seed: u64) -> Result<MatrixEnsemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_bounded_ensemble(k, n, m, big_m, &mut rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
}

/// JSON form of an ensemble. Entries are `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub matrices: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsFile>,
}

impl EnsembleFile {
    pub fn from_ensemble(e: &MatrixEnsemble) -> Self {
        let k = e.dim();
        let matrices = e
            .matrices()
            .iter()
            .map(|a| {
                (0..k)
                    .map(|i| (0..k).map(|j| [a.entry(i, j).re, a.entry(i, j).im]).collect())
                    .collect()
            })
            .collect();
        Self {
            dim: k,
            weights: e.weights().to_vec(),
            matrices,
            bounds: e.bounds().map(|b| BoundsFile {
                m: b.lower(),
                big_m: b.upper(),
            }),
        }
    }

    /// Validates and converts; errors name the offending field.
    pub fn to_ensemble(&self) -> Result<MatrixEnsemble> {
        let k = self.dim;
        if k == 0 {
            return Err(GkeError::Parse("field `dim`: must be at least 1".into()));
        }
        if self.matrices.is_empty() {
            return Err(GkeError::Parse("field `matrices`: must contain at least one matrix".into()));
        }
        if self.weights.len() != self.matrices.len() {
            return Err(GkeError::Parse(format!(
                "field `weights`: {} entries for {} matrices",
                self.weights.len(),
                self.matrices.len()
            )));
        }
        let mut mats = Vec::with_capacity(self.matrices.len());
        for (idx, rows) in self.matrices.iter().enumerate() {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(GkeError::Parse(format!("field `matrices[{idx}]`: expected a {k}×{k} array")));
            }
            let data = CMatrix::from_fn(k, k, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
            let pd = HermitianMatrix::new(data)
                .and_then(PositiveDefiniteMatrix::new)
                .map_err(|e| GkeError::Parse(format!("field `matrices[{idx}]`: {e}")))?;
            mats.push(pd);
        }
        let e = MatrixEnsemble::new(mats, self.weights.clone())
            .map_err(|e| GkeError::Parse(format!("field `weights`: {e}")))?;
        match &self.bounds {
            None => Ok(e),
            Some(b) => {
                let bounds = SpectrumBounds::new(b.m, b.big_m)
                    .map_err(|e| GkeError::Parse(format!("field `bounds`: {e}")))?;
                e.with_bounds(bounds)
                    .map_err(|e| GkeError::Parse(format!("field `bounds`: {e}")))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            GkeError::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })
    }

    /// Pretty JSON with shortest round-trip floats and a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ensemble file serializes");
        s.push('\n');
        s
    }
}

pub fn read_ensemble(path: &Path) -> Result<MatrixEnsemble> {
    let text = fs::read_to_string(path)
        .map_err(|e| GkeError::Config(format!("cannot read {}: {e}", path.display())))?;
    EnsembleFile::parse(&text)
        .and_then(|f| f.to_ensemble())
        .map_err(|e| GkeError::Parse(format!("{}: {e}", path.display())))
}

pub fn write_ensemble(path: &Path, e: &MatrixEnsemble) -> Result<()> {
    fs::write(path, EnsembleFile::from_ensemble(e).render())?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Generate,
    Solve,
    Verify,
}

/// Everything a command needs, already parsed.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub generator: Option<Generator>,
    pub weights: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub seed: u64,
    pub trials: usize,
    pub dim: usize,
    pub count: usize,
    pub spectrum: (f64, f64),
    pub suite: Vec<CheckId>,
    pub map: Option<MapSpec>,
    pub report: ReportFormat,
    pub stable: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input: None,
            output: None,
            generator: None,
            weights: None,
            tol: None,
            max_iter: 500,
            seed: 0,
            trials: 10,
            dim: 3,
            count: 3,
            spectrum: (1.0, 4.0),
            suite: CheckId::ALL.to_vec(),
            map: None,
            report: ReportFormat::Json,
            stable: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(GkeError::Config(format!("--tol must be positive, got {t}")));
            }
        }
        if self.max_iter == 0 {
            return Err(GkeError::Config("--max-iter must be at least 1".into()));
        }
        if !(1..=crate::sampling::MAX_GENERATED_DIM).contains(&self.dim) {
            return Err(GkeError::Config(format!("--dim must lie in 1..=16, got {}", self.dim)));
        }
        if self.count == 0 {
            return Err(GkeError::Config("--count must be at least 1".into()));
        }
        SpectrumBounds::new(self.spectrum.0, self.spectrum.1)
            .map_err(|e| GkeError::Config(format!("--spectrum: {e}")))?;
        Ok(())
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverOptions::default()
        }
    }
}

/// "m,M".
pub fn parse_spectrum(s: &str) -> Result<(f64, f64)> {
    let v = parse_reals(s)?;
    match v.as_slice() {
        [m, big_m] => Ok((*m, *big_m)),
        _ => Err(GkeError::Parse(format!("expected m,M, got {s:?}"))),
    }
}

/// Comma-separated reals.
pub fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| GkeError::Parse(format!("invalid number {t:?}")))
        })
        .collect()
}

/// `all`, or a comma list of check ids; a bare prefix such as `eq6` or
/// `thm41` selects every id that starts with it followed by `_`.
pub fn parse_suite(s: &str) -> Result<Vec<CheckId>> {
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if tok == "all" {
            out.extend_from_slice(CheckId::ALL);
            continue;
        }
        if let Ok(id) = tok.parse::<CheckId>() {
            out.push(id);
            continue;
        }
        let prefix = format!("{tok}_");
        let matched: Vec<CheckId> = CheckId::ALL
            .iter()
            .copied()
            .filter(|id| id.as_str().starts_with(&prefix))
            .collect();
        if matched.is_empty() {
            return Err(GkeError::Config(format!("unknown check {tok:?}")));
        }
        out.extend(matched);
    }
    let mut seen = Vec::new();
    out.retain(|id| {
        let fresh = !seen.contains(id);
        seen.push(*id);
        fresh
    });
    Ok(out)
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn report_error(e: &GkeError) {
    eprintln!("error: {e}");
}

pub fn cmd_generate(config: &RunConfig) -> i32 {
    let run = || -> Result<()> {
        config.validate()?;
        let (m, big_m) = config.spectrum;
        let mut e = generate_ensemble(config.dim, config.count, m, big_m, config.seed)?;
        if let Some(w) = &config.weights {
            e = e.with_weights(w.clone())?;
        }
        emit(config.output.as_deref(), &EnsembleFile::from_ensemble(&e).render())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report_error(&e);
            EXIT_INPUT_ERROR
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CrossCheck {
    solver: &'static str,
    iterations: usize,
    converged: bool,
    relative_distance: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveOutput {
    generator: String,
    dim: usize,
    solution: Vec<Vec<[f64; 2]>>,
    iterations: usize,
    final_residual: f64,
    tolerance: f64,
    converged: bool,
    restarts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check: Option<CrossCheck>,
}

fn matrix_rows(a: &HermitianMatrix) -> Vec<Vec<[f64; 2]>> {
    let k = a.dim();
    (0..k)
        .map(|i| (0..k).map(|j| [a.entry(i, j).re, a.entry(i, j).im]).collect())
        .collect()
}

/// Solves the equation for `config.input`; exit 0 when converged, 2 when
/// not, 1 on any input error.
pub fn cmd_solve(config: &RunConfig) -> i32 {
    let run = || -> Result<(SolveReport, String)> {
        config.validate()?;
        let input = config
            .input
            .as_deref()
            .ok_or_else(|| GkeError::Config("solve requires --input".into()))?;
        let mut e = read_ensemble(input)?;
        if let Some(w) = &config.weights {
            e = e
                .with_weights(w.clone())
                .map_err(|err| GkeError::Config(format!("--weights: {err}")))?;
        }
        let g = config.generator.clone().unwrap_or(Generator::Log);
        let opts = config.solver();
        let report = solve_gke(&e, &g, &opts)?;
        let cross_check = match g {
            Generator::Power(t) if t > 0.0 => {
                let pm = solve_power_mean(&e, t, &opts)?;
                let dist = (pm.solution.as_matrix() - report.solution.as_matrix()).norm()
                    / report.solution.as_matrix().norm();
                Some(CrossCheck {
                    solver: "power-mean fixed point",
                    iterations: pm.iterations,
                    converged: pm.converged,
                    relative_distance: dist,
                })
            }
            _ => None,
        };
        let out = SolveOutput {
            generator: g.tag(),
            dim: e.dim(),
            solution: matrix_rows(&report.solution),
            iterations: report.iterations,
            final_residual: report.final_residual,
            tolerance: report.tolerance,
            converged: report.converged,
            restarts: report.restarts,
            cross_check,
        };
        let mut text = serde_json::to_string_pretty(&out).expect("solve output serializes");
        text.push('\n');
        Ok((report, text))
    };
    match run() {
        Ok((report, text)) => {
            if let Err(e) = emit(config.output.as_deref(), &text) {
                report_error(&e);
                return EXIT_INPUT_ERROR;
            }
            if report.converged {
                EXIT_OK
            } else {
                eprintln!(
                    "not converged: residual {:e} > tolerance {:e} after {} iterations",
                    report.final_residual, report.tolerance, report.iterations
                );
                EXIT_NOT_CONVERGED
            }
        }
        Err(e) => {
            report_error(&e);
            EXIT_INPUT_ERROR
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ReportLine<'a> {
    check_id: &'static str,
    seed: Option<u64>,
    trial: usize,
    dims: usize,
    n: usize,
    generator: &'a str,
    p: Option<f64>,
    holds: bool,
    margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed: Option<f64>,
}

/// One JSON object per line.
pub fn render_json_report(results: &[CheckResult], stable: bool) -> String {
    let mut out = String::new();
    for r in results {
        let line = ReportLine {
            check_id: r.check_id.as_str(),
            seed: r.fingerprint.seed,
            trial: r.fingerprint.trial,
            dims: r.fingerprint.dim,
            n: r.fingerprint.n,
            generator: &r.fingerprint.generator,
            p: r.p,
            holds: r.holds,
            margin: r.margin,
            elapsed: (!stable).then_some(r.elapsed),
        };
        out.push_str(&serde_json::to_string(&line).expect("report line serializes"));
        out.push('\n');
    }
    out
}

/// Fixed columns: checkId, seed, dim, n, generator, p, holds, margin.
pub fn render_csv_report(results: &[CheckResult]) -> String {
    let mut out = String::from("checkId,seed,dim,n,generator,p,holds,margin\n");
    for r in results {
        let fp = &r.fingerprint;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.check_id,
            fp.seed.map(|s| s.to_string()).unwrap_or_default(),
            fp.dim,
            fp.n,
            fp.generator,
            r.p.map(|p| p.to_string()).unwrap_or_default(),
            r.holds,
            r.margin
        );
    }
    out
}

pub fn render_summary(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for s in summarize(results) {
        let _ = writeln!(
            out,
            "{:<28} trials={:<5} failures={:<4} min_margin={:e}",
            s.check_id.as_str(),
            s.trials,
            s.failures,
            s.min_margin
        );
    }
    out
}

/// Runs the selected checks; exit 0 iff every check holds, 4 when some
/// check fails, 3 on a solver failure and 1 on a configuration error.
pub fn cmd_verify(config: &RunConfig) -> i32 {
    let run = || -> Result<Vec<CheckResult>> {
        config.validate()?;
        if let Some(map) = &config.map {
            map.build(config.dim)
                .map_err(|e| GkeError::Config(format!("--map: {e}")))?;
        }
        let recipe = Recipe {
            dim: config.dim,
            count: config.count,
            lower: config.spectrum.0,
            upper: config.spectrum.1,
            generator: config.generator.clone(),
            map: config.map.clone(),
            weights: config.weights.clone(),
            solver: config.solver(),
            ..Recipe::default()
        };
        let entries: Vec<SuiteEntry> = config
            .suite
            .iter()
            .map(|&check| SuiteEntry {
                check,
                recipe: recipe.clone(),
                trials: config.trials,
            })
            .collect();
        run_suite(&entries, config.seed, DEFAULT_CHECK_TOLERANCE)
    };
    let results = match run() {
        Ok(r) => r,
        Err(e @ GkeError::Solver(_)) => {
            report_error(&e);
            return EXIT_SOLVER_ERROR;
        }
        Err(e) => {
            report_error(&e);
            return EXIT_INPUT_ERROR;
        }
    };
    let report = match config.report {
        ReportFormat::Json => render_json_report(&results, config.stable),
        ReportFormat::Csv => render_csv_report(&results),
    };
    if let Err(e) = emit(config.output.as_deref(), &report) {
        report_error(&e);
        return EXIT_INPUT_ERROR;
    }
    let summary = render_summary(&results);
    if config.output.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    if results.iter().all(|r| r.holds) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_file_round_trips_byte_identically() {
        let e = generate_ensemble(3, 4, 0.5, 20.0, 17).unwrap();
        let text = EnsembleFile::from_ensemble(&e).render();
        let back = EnsembleFile::parse(&text).unwrap().to_ensemble().unwrap();
        assert_eq!(EnsembleFile::from_ensemble(&back).render(), text);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = r#"{"dim": 2, "weights": [1.0], "matrices": [[[[1,0],[2,0]],[[0,0],[1,0]]]]}"#;
        let err = EnsembleFile::parse(bad).unwrap().to_ensemble().unwrap_err();
        assert!(err.to_string().contains("matrices[0]"), "{err}");
        let err = EnsembleFile::parse("{\"dim\": 2,\n \"weights\": \"x\"}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let bounds = r#"{"dim": 1, "weights": [1.0], "matrices": [[[[5,0]]]], "bounds": {"m": 1, "M": 2}}"#;
        let err = EnsembleFile::parse(bounds).unwrap().to_ensemble().unwrap_err();
        assert!(err.to_string().contains("bounds"), "{err}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_ensemble(4, 3, 1.0, 9.0, 5).unwrap();
        let b = generate_ensemble(4, 3, 1.0, 9.0, 5).unwrap();
        assert_eq!(a.matrices(), b.matrices());
        assert_eq!(a.weights(), b.weights());
        assert!(generate_ensemble(0, 1, 1.0, 2.0, 0).is_err());
        assert!(generate_ensemble(2, 0, 1.0, 2.0, 0).is_err());
    }

    #[test]
    fn suite_parsing() {
        assert_eq!(parse_suite("eq6").unwrap(), vec![CheckId::Sandwich]);
        assert_eq!(parse_suite("thm41").unwrap().len(), 3);
        assert_eq!(parse_suite("all").unwrap().len(), 20);
        assert_eq!(parse_suite("eq6,eq6_sandwich").unwrap().len(), 1);
        assert!(parse_suite("nope").is_err());
        assert_eq!(parse_spectrum("1,4").unwrap(), (1.0, 4.0));
        assert!(parse_spectrum("1").is_err());
    }

    #[test]
    fn csv_report_has_fixed_header() {
        assert_eq!(render_csv_report(&[]), "checkId,seed,dim,n,generator,p,holds,margin\n");
    }
}
