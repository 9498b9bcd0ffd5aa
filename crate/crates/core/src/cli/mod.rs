//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::phase::critical_catalog;
use crate::shooting::{
    bisect::{brackets_of, first_violation},
    check_flow_lemma, find_interfaces, interface_fit, origin_fit, shoot, verify_supersolution, SearchError,
    ShotOutcome, SupersolutionGrid,
};

use config::{Format, RunConfig, Settings};
use output::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "selfsim",
    version,
    about = "Self-similar profiles of u_t = Δu^m + |x|^σ u^p: exponents, shooting, interface search, critical points"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print α, β, L, p_c and the origin-expansion coefficient.
    Exponents {
        #[command(flatten)]
        settings: Settings,
    },
    /// Shoot one D (--D) or a log-spaced sweep (--D-min, --D-max, --D-count).
    Shoot {
        #[command(flatten)]
        settings: Settings,
    },
    /// Bracket and bisect for the interface parameter D*, then run the checks.
    FindInterface {
        #[command(flatten)]
        settings: Settings,
    },
    /// Critical points with Jacobians, spectra and local behaviours.
    Catalog {
        #[command(flatten)]
        settings: Settings,
    },
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("selfsim: {e}");
            e.exit_code()
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn emit(stdout: &mut dyn Write, out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// Run `f` on a pool capped by SELFSIM_THREADS, or on the global pool.
fn with_threads<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match std::env::var("SELFSIM_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Validation(format!("SELFSIM_THREADS must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Exponents { settings } => cmd_exponents(settings.layered()?.try_into()?, stdout),
        Command::Shoot { settings } => cmd_shoot(settings.layered()?.try_into()?, stdout),
        Command::FindInterface { settings } => cmd_find_interface(settings.layered()?.try_into()?, stdout),
        Command::Catalog { settings } => cmd_catalog(settings.layered()?.try_into()?, stdout),
    }
}

pub fn cmd_exponents(rc: RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let rec = ExponentsRecord::new(&rc.problem);
    let text = match rc.format.unwrap_or(Format::Text) {
        Format::Json => to_json(&rec),
        _ => rec.text(),
    };
    emit(stdout, rc.out.as_deref(), &text)
}

pub fn cmd_shoot(rc: RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ds = match (&rc.sweep, rc.d) {
        (_, Some(d)) => vec![d],
        (Some(s), None) => s.clone(),
        (None, None) => return Err(CliError::Validation("shoot needs --D or --D-min/--D-max".into())),
    };
    let problem = rc.problem;
    let cfg = *rc.shot();
    let shots: Vec<ShotOutcome> = with_threads(|| {
        ds.par_iter()
            .map(|&d| shoot(d, &problem, &cfg))
            .collect::<Result<Vec<_>, _>>()
    })?
    .map_err(|e| CliError::Validation(e.to_string()))?;

    let format = rc.format.unwrap_or(Format::Text);
    let mut files = vec![None; shots.len()];
    if let Some(dir) = &rc.out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for (i, shot) in shots.iter().enumerate() {
            let name = format!("shot_{i:03}.csv");
            let path = dir.join(&name);
            let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            write_trace_csv(std::io::BufWriter::new(file), shot).map_err(|e| io_err(&path, e))?;
            files[i] = Some(name);
        }
    } else if format == Format::Csv {
        if shots.len() != 1 {
            return Err(CliError::Validation("CSV on stdout needs a single --D; use --out for sweeps".into()));
        }
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &shots[0]).map_err(|e| CliError::Io(e.to_string()))?;
        return emit(stdout, None, &String::from_utf8_lossy(&buf));
    }

    let entries: Vec<_> = shots
        .iter()
        .map(|s| crate::shooting::ScanEntry {
            d: s.d,
            kind: s.kind.clone(),
        })
        .collect();
    let summary = SweepSummary {
        params: ParamsRecord::new(&problem),
        shots: shots
            .iter()
            .zip(files)
            .map(|(s, f)| ShotRecord::new(s, &problem, f))
            .collect(),
        brackets: brackets_of(&entries)
            .iter()
            .map(|b| BracketRecord {
                lo: F17(b.lo),
                hi: F17(b.hi),
            })
            .collect(),
        monotone: first_violation(&entries).is_none(),
        uniqueness_guaranteed: problem.params.uniqueness_guaranteed(),
    };
    let json = to_json(&summary);
    if let Some(dir) = &rc.out {
        let path = dir.join("summary.json");
        fs::write(&path, &json).map_err(|e| io_err(&path, e))?;
    }
    let text = match format {
        Format::Json => json,
        _ => {
            let mut t = String::new();
            for s in &summary.shots {
                t.push_str(&format!("D = {}  {}\n", fmt17(s.d.0), s.kind));
            }
            t.push_str(&format!(
                "brackets: {}  monotone: {}\n",
                summary.brackets.len(),
                summary.monotone
            ));
            t
        }
    };
    emit(stdout, None, &text)
}

fn search_error(e: SearchError) -> CliError {
    match e {
        SearchError::NoBracket { scan } => {
            let log: Vec<String> = scan
                .iter()
                .map(|s| format!("  D = {}  {}", fmt17(s.d), s.kind.label()))
                .collect();
            CliError::Numerical(format!(
                "no bracket: the scan never produced both SignChange and GrowUp\n{}",
                log.join("\n")
            ))
        }
        SearchError::NonMonotoneClassification { .. } => CliError::Numerical(e.to_string()),
        SearchError::Shoot(_) | SearchError::Config(_) => CliError::Validation(e.to_string()),
    }
}

pub const SUPERSOLUTION_KS: [f64; 2] = [0.5, 0.9];

pub fn cmd_find_interface(rc: RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let problem = rc.problem;
    let search = rc.search.clone();
    let (results, upper) = with_threads(|| {
        find_interfaces(&problem, &search).map(|r| {
            let upper = shoot(r[0].d_hi, &problem, &search.shot);
            (r, upper)
        })
    })?
    .map_err(search_error)?;
    let upper = upper.map_err(|e| CliError::Validation(e.to_string()))?;
    let main = &results[0];
    let lower = &main.lower_shot;

    let flows: Vec<FlowRecord> = [lower, &upper]
        .iter()
        .map(|s| FlowRecord::new(s.d, &check_flow_lemma(s, 1e-12)))
        .collect();
    let grid = SupersolutionGrid::default();
    let runs: Vec<CheckRecord<SupersolutionRecord>> = SUPERSOLUTION_KS
        .iter()
        .map(|&k| {
            CheckRecord::from_result(
                verify_supersolution(k, lower, main.xi0_star, &problem, &grid).map(|r| SupersolutionRecord::from(&r)),
            )
        })
        .collect();
    let ss_passed = runs.iter().all(|r| matches!(r, CheckRecord::Done(s) if s.passed));
    let checks = Checks {
        origin_fit: CheckRecord::from_result(origin_fit(lower, &problem).map(|c| FitRecord::from(&c))),
        interface_fit: CheckRecord::from_result(interface_fit(lower, &problem).map(|c| FitRecord::from(&c))),
        monotone_xz: MonotoneXzRecord {
            passed: flows.iter().all(|f| f.passed),
            shots: flows,
        },
        supersolution: SupersolutionChecks {
            runs,
            passed: ss_passed,
        },
    };
    let rec = InterfaceRecord::new(&problem, main, &results[1..], checks);
    let text = match rc.format.unwrap_or(Format::Json) {
        Format::Text => format!(
            "D_star         {}\nxi0            {}\nC              {}\nbracket_width  {}\niterations     {}\n",
            fmt17(main.d_star),
            fmt17(main.xi0_star),
            fmt17(main.c_star),
            fmt17(main.bracket_width),
            main.iterations
        ),
        _ => to_json(&rec),
    };
    emit(stdout, rc.out.as_deref(), &text)
}

pub fn cmd_catalog(rc: RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let rec = CatalogRecord {
        params: ParamsRecord::new(&rc.problem),
        entries: critical_catalog(&rc.problem).iter().map(CatalogEntryRecord::from).collect(),
    };
    emit(stdout, rc.out.as_deref(), &to_json(&rec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run(std::iter::once("selfsim").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn exponents_text_and_json() {
        let (code, out) = run_capture(&["exponents", "--m", "3", "--p", "1.2", "--sigma", "-0.7", "--N", "3"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("alpha    1.3000000000000000e0"));
        let (code, out) = run_capture(&["exponents", "--preset", "fig1b", "--format", "json"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["alpha"].as_f64(), Some(0.25));
        assert_eq!(v["beta"].as_f64(), Some(0.75));
    }

    #[test]
    fn validation_failures_exit_with_two() {
        let (code, _) = run_capture(&["exponents", "--m", "3", "--p", "1.9", "--sigma", "-0.7", "--N", "3"]);
        assert_eq!(code, 2);
        let (code, _) = run_capture(&["exponents", "--m", "3"]);
        assert_eq!(code, 2);
        let (code, _) = run_capture(&["exponents", "--preset", "nope"]);
        assert_eq!(code, 2);
        let (code, _) = run_capture(&["frobnicate"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 3);
        assert_eq!(CliError::Io(String::new()).exit_code(), 4);
    }

    #[test]
    fn single_shot_csv_on_stdout() {
        let (code, out) = run_capture(&["shoot", "--preset", "fig1a", "--D", "1e-4", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("xi,f,v,X,Y,Z\n"));
    }
}
