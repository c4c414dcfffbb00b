mod config;
mod constants;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracns::dynamics::{RunStatus, Solver};
use fracns::estimates::ConstantsLedger;
use fracns::harness::{self, StabilityReport};
use fracns::{suites, Execution, GridSpec, HarnessError};
use serde::Serialize;

use crate::config::{Manifest, RunConfig};
use crate::error::CliError;
use crate::output::write_atomic;

const EXIT_USAGE: u8 = 1;
const EXIT_FAILED: u8 = 2;
const EXIT_UNRESOLVED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "fracns", version, about = "Fractional Navier-Stokes solver, stability harness and constant calculators")]
struct Cli {
    /// Worker threads for parallel work; 1 runs everything sequentially.
    #[arg(long, global = true, env = "FRACNS_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory from a run config.
    Simulate {
        config: PathBuf,
        /// Print the normalized config and exit.
        #[arg(long)]
        print_config: bool,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every experiment of a stability manifest.
    Stability {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite: lemma32, interpolation, energy or scaling.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the full report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate a calculator, e.g. `constants gamma s=1 beta=1.25`.
    Constants {
        query: String,
        /// `key=value` inputs; ledger keys c_bar, d_bar, c2_lemma, c1_k override the ledger.
        args: Vec<String>,
        /// Take the ledger from a run config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Estimate the discrete embedding constant by random search.
    Calibrate {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let jobs = cli.jobs;
    if jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let exec = if jobs == Some(1) {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Simulate {
            config,
            print_config,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            if print_config {
                emit(&cfg.to_toml()?);
                return Ok(0);
            }
            with_jobs(jobs, || simulate(&cfg, out, exec))?
        }
        Command::Stability { manifest, out } => {
            let m = Manifest::load(&manifest)?;
            with_jobs(jobs, || stability(&m, out, exec))?
        }
        Command::Verify { suite, seed, report } => with_jobs(jobs, || verify(&suite, seed, report, exec))?,
        Command::Constants { query, args, config } => {
            let ledger = match config {
                Some(p) => RunConfig::load(&p)?.ledger,
                None => ConstantsLedger::default(),
            };
            let out = constants::evaluate(&query, &args, ledger)?;
            emit(&(to_json(&out)? + "\n"));
            Ok(0)
        }
        Command::Calibrate {
            alpha,
            n,
            trials,
            seed,
            out,
        } => {
            let grid = GridSpec::new(n).map_err(|e| CliError::Usage(e.to_string()))?;
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let cal = harness::calibrate_embedding(alpha, grid, trials, seed)?;
            let text = to_json(&CalibrationOutput {
                schema: "fracns.calibration.v1",
                n,
                seed,
                trials,
                calibration: &cal,
            })?;
            if let Some(p) = out {
                write_atomic(&p, &text)?;
            }
            emit(&(text + "\n"));
            Ok(0)
        }
    }
}

#[derive(Serialize)]
struct CalibrationOutput<'a> {
    schema: &'static str,
    n: usize,
    seed: u64,
    trials: usize,
    #[serde(flatten)]
    calibration: &'a harness::Calibration,
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Serialize(e.to_string()))
}

#[cfg(feature = "parallel")]
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}"))),
        _ => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<T: Send>(_jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}

fn exit_for(status: RunStatus) -> u8 {
    match status {
        RunStatus::Completed => 0,
        RunStatus::BlowupDetected => EXIT_FAILED,
        RunStatus::ResolutionExhausted => EXIT_UNRESOLVED,
    }
}

fn simulate(cfg: &RunConfig, out: Option<PathBuf>, exec: Execution) -> Result<u8, CliError> {
    let u0 = harness::make_datum(&cfg.datum_spec(), cfg.grid)?;
    let solver = Solver::with_execution(cfg.grid, cfg.solver.clone(), exec)?;
    let rep = solver.run(&u0)?;
    let dir = out.unwrap_or_else(|| cfg.output.directory.clone());
    let stem = &cfg.output.stem;
    if cfg.output.formats.csv() {
        write_atomic(&dir.join(format!("{stem}.csv")), &rep.to_csv())?;
    }
    if cfg.output.formats.json() {
        write_atomic(&dir.join(format!("{stem}.json")), &rep.to_json())?;
    }
    let status = serde_json::to_value(rep.status).ok();
    emit(&format!(
        "status {} after {} steps, t = {:e}, energy {:e}\n",
        status.as_ref().and_then(|s| s.as_str()).unwrap_or("?"),
        rep.times.len().saturating_sub(1),
        rep.times.last().copied().unwrap_or(0.0),
        rep.energy.last().copied().unwrap_or(0.0)
    ));
    Ok(exit_for(rep.status))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum EntryStatus {
    Dominated,
    Violated,
    Failed,
    Skipped,
}

#[derive(Debug, Serialize)]
struct SummaryEntry {
    name: String,
    status: EntryStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    dominated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_blowup_time: Option<f64>,
}

#[derive(Debug, Serialize)]
struct StabilitySummary {
    schema: &'static str,
    all_dominated: bool,
    entries: Vec<SummaryEntry>,
}

fn entry(name: &str, result: Result<StabilityReport, HarnessError>) -> SummaryEntry {
    let blank = |status, reason: String| SummaryEntry {
        name: name.to_string(),
        status,
        reason: Some(reason),
        dominated: false,
        max_f: None,
        final_f: None,
        first_violation_time: None,
        bound_blowup_time: None,
    };
    match result {
        Err(e @ HarnessError::Inadmissible(_)) => blank(EntryStatus::Skipped, e.to_string()),
        Err(e) => blank(EntryStatus::Failed, e.to_string()),
        Ok(r) => {
            let status = match (&r.failure, r.dominated) {
                (Some(_), _) => EntryStatus::Failed,
                (None, true) => EntryStatus::Dominated,
                (None, false) => EntryStatus::Violated,
            };
            SummaryEntry {
                name: name.to_string(),
                status,
                reason: r.failure.clone(),
                dominated: r.dominated && r.failure.is_none(),
                max_f: Some(r.max_f()),
                final_f: Some(r.final_f()),
                first_violation_time: r.first_violation_time,
                bound_blowup_time: r.bound_blowup_time,
            }
        }
    }
}

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn summary_csv(s: &StabilitySummary) -> String {
    let mut out = String::from("name,status,dominated,max_f,final_f,first_violation_time,reason\n");
    for e in &s.entries {
        let status = serde_json::to_value(&e.status).ok();
        let reason = e.reason.as_deref().unwrap_or("").replace('"', "\"\"");
        out.push_str(&format!(
            "{},{},{},{},{},{},\"{}\"\n",
            e.name,
            status.as_ref().and_then(|s| s.as_str()).unwrap_or(""),
            e.dominated,
            csv_field(e.max_f),
            csv_field(e.final_f),
            csv_field(e.first_violation_time),
            reason
        ));
    }
    out
}

fn stability(m: &Manifest, out: Option<PathBuf>, exec: Execution) -> Result<u8, CliError> {
    let dir = out.unwrap_or_else(|| m.output.directory.clone());
    let admissible: Vec<_> = m.cases.iter().filter(|c| c.setup.check_admissible().is_ok()).cloned().collect();
    let mut runs = harness::stability_suite(&admissible, exec).into_iter();
    let mut entries = Vec::with_capacity(m.cases.len());
    for case in &m.cases {
        let result = match case.setup.check_admissible() {
            Err(e) => Err(e),
            Ok(()) => runs.next().expect("one result per admissible case"),
        };
        if let Ok(r) = &result {
            write_report(&dir, &case.name, r, m.output.formats)?;
        }
        let e = entry(&case.name, result);
        let status = serde_json::to_value(&e.status).ok();
        emit(&format!(
            "{}: {}{}\n",
            e.name,
            status.as_ref().and_then(|s| s.as_str()).unwrap_or(""),
            e.reason.as_ref().map(|r| format!(" ({r})")).unwrap_or_default()
        ));
        entries.push(e);
    }
    let all_dominated = entries
        .iter()
        .all(|e| matches!(e.status, EntryStatus::Dominated | EntryStatus::Skipped));
    let summary = StabilitySummary {
        schema: "fracns.stability_summary.v1",
        all_dominated,
        entries,
    };
    write_atomic(&dir.join("summary.json"), &to_json(&summary)?)?;
    write_atomic(&dir.join("summary.csv"), &summary_csv(&summary))?;
    Ok(if all_dominated { 0 } else { EXIT_FAILED })
}

fn write_report(dir: &Path, name: &str, r: &StabilityReport, formats: config::Formats) -> Result<(), CliError> {
    if formats.csv() {
        write_atomic(&dir.join(format!("{name}.csv")), &r.to_csv())?;
    }
    if formats.json() {
        write_atomic(&dir.join(format!("{name}.json")), &to_json(r)?)?;
    }
    Ok(())
}

fn verify(suite: &str, seed: u64, report: Option<PathBuf>, exec: Execution) -> Result<u8, CliError> {
    let rep = suites::run_named(suite, seed, exec).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown suite {suite:?}; expected one of {}",
            suites::SUITES.join(", ")
        ))
    })??;
    for c in &rep.checks {
        emit(&format!("{c}\n"));
    }
    let pass = rep.passed();
    emit(&format!("{suite}: {}\n", if pass { "PASS" } else { "FAIL" }));
    if let Some(p) = report {
        write_atomic(&p, &to_json(&rep)?)?;
    }
    Ok(if pass { 0 } else { EXIT_FAILED })
}
