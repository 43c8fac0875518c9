//! `minispec` command line: check, verify, run scenarios, emit thermistor
//! tables and re-render saved reports.
//!
//! Exit status is 0 on success, 1 when a check, obligation or expectation
//! fails, and 2 for usage, I/O and configuration errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use minispec::frontend::{load_file, LoadError};
use minispec::thermo::{build_table, ThermistorParams};
use minispec::verifier::{
    run_scenario, verify_program, DomainConfig, Report, Scenario, ScenarioResult,
};

#[derive(Parser)]
#[command(
    name = "minispec",
    version,
    about = "Contract checking for annotated C-like sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and resolve source files.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Check every obligation over the configured domains.
    Verify {
        file: PathBuf,
        #[arg(long)]
        domains: PathBuf,
        /// Only verify this function.
        #[arg(long)]
        function: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Wall-clock budget per obligation, overriding the configuration.
        #[arg(long)]
        budget_ms: Option<u64>,
        /// Largest domain product to enumerate, overriding the configuration.
        #[arg(long)]
        max_states: Option<u64>,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 1 when an obligation is unknown or timed out.
        #[arg(long)]
        strict: bool,
    },
    /// Run scenario files against a program.
    Scenario {
        file: PathBuf,
        #[arg(long)]
        domains: PathBuf,
        #[arg(long = "scenario", required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the thermistor lookup table as CSV.
    Table {
        #[arg(long, default_value_t = -40, allow_negative_numbers = true)]
        t_min: i64,
        #[arg(long, default_value_t = 125, allow_negative_numbers = true)]
        t_max: i64,
        #[arg(long, default_value_t = 100)]
        entries: usize,
        /// Print ghost-array declarations instead of CSV.
        #[arg(long)]
        snippet: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a JSON report written by `verify --out`.
    Report {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        strict: bool,
    },
}

/// Usage, I/O or configuration problem.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Fatal> {
    std::fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fatal> {
    std::fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn load_domains(path: &Path) -> Result<DomainConfig, Fatal> {
    DomainConfig::from_json(&read(path)?).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<minispec::frontend::TypedProgram, Fatal> {
    load_file(path).map_err(|e| Fatal(e.to_string()))
}

fn run(cli: Cli) -> Result<u8, Fatal> {
    match cli.command {
        Command::Check { files } => {
            let mut status = 0;
            for path in files {
                match load_file(&path) {
                    Ok(tp) => {
                        let n = tp.functions.len();
                        println!(
                            "{}: {n} function{}",
                            path.display(),
                            if n == 1 { "" } else { "s" }
                        );
                    }
                    Err(e @ LoadError::Io { .. }) => return Err(Fatal(e.to_string())),
                    Err(e) => {
                        eprintln!("{e}");
                        status = 1;
                    }
                }
            }
            Ok(status)
        }
        Command::Verify {
            file,
            domains,
            function,
            format,
            budget_ms,
            max_states,
            out,
            strict,
        } => {
            let mut dc = load_domains(&domains)?;
            if let Some(b) = budget_ms {
                dc.budget_ms = b;
            }
            if let Some(m) = max_states {
                dc.max_states = m;
            }
            let tp = load_program(&file)?;
            let report = verify_program(&tp, &dc, function.as_deref())?;
            if let Some(path) = out {
                write(&path, &report.to_json())?;
            }
            print_report(&report, format);
            Ok(report.exit_code(strict) as u8)
        }
        Command::Scenario {
            file,
            domains,
            scenarios,
            format,
            out,
        } => {
            let dc = load_domains(&domains)?;
            let tp = load_program(&file)?;
            let mut results = Vec::new();
            for path in &scenarios {
                let s = Scenario::from_json(&read(path)?)
                    .map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
                results.push(run_scenario(&tp, &s, &dc)?);
            }
            let json = serde_json::to_string_pretty(&results)?;
            if let Some(path) = out {
                write(&path, &json)?;
            }
            match format {
                Format::Json => println!("{json}"),
                Format::Text => print!("{}", scenarios_text(&results)),
            }
            Ok(if results.iter().all(ScenarioResult::passed) {
                0
            } else {
                1
            })
        }
        Command::Table {
            t_min,
            t_max,
            entries,
            snippet,
            out,
        } => {
            let table = build_table(t_min, t_max, entries, &ThermistorParams::default())?;
            let text = if snippet {
                table.to_mc_snippet("NTC")
            } else {
                table.to_csv()
            };
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Report {
            file,
            format,
            strict,
        } => {
            let report: Report = serde_json::from_str(&read(&file)?)
                .map_err(|e| Fatal(format!("{}: {e}", file.display())))?;
            print_report(&report, format);
            Ok(report.exit_code(strict) as u8)
        }
    }
}

fn print_report(report: &Report, format: Format) {
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", report.to_json()),
    }
}

fn scenarios_text(results: &[ScenarioResult]) -> String {
    let mut s = String::new();
    for r in results {
        let verdict = if r.passed() { "passed" } else { "FAILED" };
        let _ = writeln!(s, "scenario: {} ({verdict})", r.name);
        for (i, step) in r.steps.iter().enumerate() {
            let ret = step
                .return_value
                .as_ref()
                .map(|v| format!(" -> {v}"))
                .unwrap_or_default();
            let _ = writeln!(s, "  step {}: {}(){ret}", i + 1, step.call);
            if let Some(e) = &step.error {
                let _ = writeln!(s, "    error: {e}");
            }
            for v in &step.verdicts {
                let mark = if v.holds { "ok  " } else { "FAIL" };
                match &v.message {
                    Some(m) => {
                        let _ = writeln!(s, "    {mark} {} ({m})", v.expr);
                    }
                    None => {
                        let _ = writeln!(s, "    {mark} {}", v.expr);
                    }
                }
            }
        }
    }
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fatal(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
