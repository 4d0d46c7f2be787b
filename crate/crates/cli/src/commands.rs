use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use combmap::extremal::{alternation_scan, chebyshev_grid, eval_extremal, expected_alternation_count};
use combmap::geometry::curve_height;
use combmap::herglotz::{boundary_u, circle_v};
use combmap::oracle::{compare, remez_with, ChebyshevSystem, RemezOptions, RemezSolution};
use combmap::solver::{solve_with, SolveOptions, SolveRecord, SolveResult, SolverError};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

pub const RESULT_FILE: &str = "result.json";
const CURVE_SAMPLES: usize = 401;
const BOUNDARY_SAMPLES: usize = 400;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed result file: {msg}")]
    BadResult { path: PathBuf, msg: String },
    #[error("{0}")]
    Numerical(String),
    #[error("comparison failed: relative difference {relative_difference:e} against threshold {threshold:e}")]
    CompareFail { relative_difference: f64, threshold: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::BadResult { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::CompareFail { .. } => 3,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|source| CliError::Io { path: cfg.out_dir.clone(), source })
}

fn solve_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions { schedule: cfg.schedule.clone(), tol_b0: cfg.tol_b0, ..SolveOptions::default() }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Runs the solve and writes `result.json`. An unconverged run still
/// writes its history before failing.
fn run_solve(cfg: &RunConfig) -> Result<SolveResult, CliError> {
    prepare_out(cfg)?;
    let path = cfg.out_dir.join(RESULT_FILE);
    match solve_with(&cfg.problem, &solve_options(cfg)) {
        Ok(result) => {
            write_file(&path, &to_json(&result.record()))?;
            if !result.converged() {
                print_history(&result.record());
                return Err(CliError::Numerical(format!(
                    "no convergence: Cauchy test not met within schedule {:?} (history written to {})",
                    cfg.schedule,
                    path.display()
                )));
            }
            Ok(result)
        }
        Err(SolverError::NoConvergence { reason, history, .. }) => {
            let doc = serde_json::json!({ "problem": cfg.problem, "converged": false, "error": reason, "history": history });
            write_file(&path, &to_json(&doc))?;
            Err(CliError::Numerical(format!("no convergence: {reason} (history written to {})", path.display())))
        }
        Err(e) => Err(numerical(e)),
    }
}

pub fn load_result(path: &Path) -> Result<SolveResult, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let rec: SolveRecord =
        serde_json::from_str(&text).map_err(|e| CliError::BadResult { path: path.to_path_buf(), msg: e.to_string() })?;
    SolveResult::from_record(&rec).map_err(numerical)
}

/// A stored result when given, else a fresh solve.
fn obtain(cfg: &RunConfig, stored: Option<&Path>) -> Result<SolveResult, CliError> {
    match stored {
        Some(path) => {
            let r = load_result(path)?;
            if r.spec() != &cfg.problem {
                return Err(CliError::BadResult { path: path.to_path_buf(), msg: "problem differs from the config".into() });
            }
            Ok(r)
        }
        None => run_solve(cfg),
    }
}

fn print_history(rec: &SolveRecord) {
    println!("{:>6} {:>20} {:>12} {:>12} {:>6}", "n", "B0", "|dB0|", "residual", "steps");
    for h in &rec.history {
        let change = h.b0_change.map_or("-".to_string(), |d| format!("{d:.3e}"));
        println!("{:>6} {:>20.15} {:>12} {:>12.3e} {:>6}", h.n, h.b0, change, h.max_residual, h.steps);
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let result = run_solve(cfg)?;
    let rec = result.record();
    print_history(&rec);
    println!("B0* = {:.15}", rec.b0);
    println!("L = {:.15}", rec.l);
    let report = alternation_scan(&result, cfg.grid).map_err(numerical)?;
    println!("alternation count = {} (expected {})", report.count, expected_alternation_count(&cfg.problem));
    println!("wrote {}", cfg.out_dir.join(RESULT_FILE).display());
    Ok(())
}

fn run_oracle(cfg: &RunConfig) -> Result<RemezSolution, CliError> {
    let sys = ChebyshevSystem::new(&cfg.problem).map_err(numerical)?;
    let opts = RemezOptions { grid: cfg.grid, ..RemezOptions::default() };
    remez_with(&sys, |_| 1.0, &opts).map_err(numerical)
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let sol = run_oracle(cfg)?;
    println!("E = {:.15}", sol.e);
    let coeffs: Vec<String> = sol.coefficients.iter().map(|c| format!("{c:.15}")).collect();
    println!("coefficients (c0, c2, ...) = ({})", coeffs.join(", "));
    println!("iterations = {}, condition = {:.3e}", sol.iterations, sol.condition);
    Ok(())
}

pub fn cmd_compare(cfg: &RunConfig, stored: Option<&Path>, threshold: f64) -> Result<(), CliError> {
    let sol = run_oracle(cfg)?;
    let result = obtain(cfg, stored)?;
    let c = compare(&result, &sol);
    println!("E = {:.15}", sol.e);
    println!("L = {:.15}", 1.0 / result.b0_star().cosh());
    println!("relative difference = {:.3e}", c.relative_difference);
    match c.coefficient_deviation {
        Some(d) => println!("coefficient deviation = {d:.3e}"),
        None => println!("coefficient deviation = unavailable"),
    }
    if c.passes(threshold) {
        println!("PASS (threshold {threshold:e})");
        Ok(())
    } else {
        println!("FAIL (threshold {threshold:e})");
        Err(CliError::CompareFail { relative_difference: c.relative_difference, threshold })
    }
}

fn csv_row(out: &mut String, cols: &[f64]) {
    let cells: Vec<String> = cols.iter().map(|v| format!("{v:.16e}")).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn curve_csv(result: &SolveResult) -> Result<String, CliError> {
    let (b0, uc) = (result.b0_star(), result.spec().center());
    let mut out = String::from("u,v\n");
    let n = CURVE_SAMPLES;
    for i in 0..n {
        let t = (2 * i) as f64 - (n - 1) as f64;
        let u = uc + FRAC_PI_2 * t / (n + 1) as f64;
        csv_row(&mut out, &[u, curve_height(u, b0, uc).map_err(numerical)?]);
    }
    Ok(out)
}

fn tips_csv(result: &SolveResult) -> String {
    let mut out = String::from("k,re_w,im_w,residual\n");
    for (k, t) in result.tips().iter().enumerate() {
        let _ = write!(out, "{},", k + 1);
        csv_row(&mut out, &[t.w.re, t.w.im, t.residual]);
    }
    out
}

fn boundary_csv(result: &SolveResult) -> Result<String, CliError> {
    let (lo, hi) = result.angles().arc();
    let mut out = String::from("alpha,u,v\n");
    for i in 1..=BOUNDARY_SAMPLES {
        let alpha = lo + (hi - lo) * i as f64 / (BOUNDARY_SAMPLES + 1) as f64;
        let u = boundary_u(alpha, result.measure(), result.scale()).map_err(numerical)?;
        let v = circle_v(alpha, result.measure(), result.scale()).map_err(numerical)?;
        csv_row(&mut out, &[alpha, u, v]);
    }
    Ok(out)
}

/// Grid samples of `f` merged with the refined extrema, flagged in the
/// last column.
fn alternation_csv(result: &SolveResult, grid: usize) -> Result<String, CliError> {
    let report = alternation_scan(result, grid).map_err(numerical)?;
    let mut rows: Vec<(f64, f64, bool)> = Vec::with_capacity(grid + report.points.len());
    for x in chebyshev_grid(result.spec().a, 1.0, grid) {
        rows.push((x, eval_extremal(x, result).map_err(numerical)?, false));
    }
    rows.extend(report.points.iter().zip(&report.values).map(|(&x, &f)| (x, f, true)));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    let mut out = String::from("x,f,extremum\n");
    for (x, f, ext) in rows {
        let _ = writeln!(out, "{x:.16e},{f:.16e},{}", u8::from(ext));
    }
    Ok(out)
}

pub fn cmd_trace(cfg: &RunConfig, stored: Option<&Path>) -> Result<(), CliError> {
    let result = obtain(cfg, stored)?;
    prepare_out(cfg)?;
    let files = [
        ("curve.csv", curve_csv(&result)?),
        ("tips.csv", tips_csv(&result)),
        ("boundary.csv", boundary_csv(&result)?),
        ("alternation.csv", alternation_csv(&result, cfg.grid)?),
    ];
    for (name, body) in &files {
        let path = cfg.out_dir.join(name);
        write_file(&path, body)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
