//! Per-function summaries and their text and JSON renderings.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::coverage::{output_coverage, CoverageGap};
use super::domain::DomainConfig;
use super::engine::{check_function, Status, Verdict};
use super::VerifyError;
use crate::frontend::typed::TypedProgram;

/// Raw results for one function.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionResult {
    pub name: String,
    pub hardware: bool,
    pub verdicts: Vec<Verdict>,
    pub coverage: Vec<CoverageGap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRow {
    pub name: String,
    pub hardware: bool,
    /// Counts are absent for hardware functions, which are not checked.
    pub scheduled: Option<usize>,
    pub valid: Option<usize>,
    pub failed: Option<usize>,
    pub unknown: Option<usize>,
    pub timeout: Option<usize>,
    pub obligations: Vec<Verdict>,
    pub coverage: Vec<CoverageGap>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub functions: usize,
    pub scheduled: usize,
    pub valid: usize,
    pub failed: usize,
    pub unknown: usize,
    pub timeout: usize,
    pub coverage_gaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Coupling clauses and stubs the verdicts depend on.
    pub assumptions: Vec<String>,
    pub functions: Vec<FunctionRow>,
    pub totals: Totals,
}

pub fn summarize(results: Vec<FunctionResult>, assumptions: Vec<String>) -> Report {
    let mut totals = Totals::default();
    let functions = results
        .into_iter()
        .map(|r| {
            totals.functions += 1;
            let count = |s: Status| r.verdicts.iter().filter(|v| v.status == s).count();
            let counts = [
                Status::Valid,
                Status::Failed,
                Status::Unknown,
                Status::Timeout,
            ]
            .map(count);
            totals.coverage_gaps += r.coverage.len();
            if r.hardware {
                return FunctionRow {
                    name: r.name,
                    hardware: true,
                    scheduled: None,
                    valid: None,
                    failed: None,
                    unknown: None,
                    timeout: None,
                    obligations: r.verdicts,
                    coverage: r.coverage,
                };
            }
            totals.scheduled += r.verdicts.len();
            totals.valid += counts[0];
            totals.failed += counts[1];
            totals.unknown += counts[2];
            totals.timeout += counts[3];
            FunctionRow {
                name: r.name,
                hardware: false,
                scheduled: Some(r.verdicts.len()),
                valid: Some(counts[0]),
                failed: Some(counts[1]),
                unknown: Some(counts[2]),
                timeout: Some(counts[3]),
                obligations: r.verdicts,
                coverage: r.coverage,
            }
        })
        .collect();
    Report {
        assumptions,
        functions,
        totals,
    }
}

/// Checks every function of `tp` (or only `only`) and runs the coverage
/// lint on those with a contract.
pub fn verify_program(
    tp: &TypedProgram,
    dc: &DomainConfig,
    only: Option<&str>,
) -> Result<Report, VerifyError> {
    if let Some(name) = only {
        if tp.function(name).is_none() {
            return Err(VerifyError::UnknownFunction { name: name.into() });
        }
    }
    let mut results = Vec::new();
    for f in &tp.functions {
        if only.is_some_and(|n| n != f.name) {
            continue;
        }
        if f.hardware {
            results.push(FunctionResult {
                name: f.name.clone(),
                hardware: true,
                verdicts: Vec::new(),
                coverage: Vec::new(),
            });
            continue;
        }
        let verdicts = check_function(tp, &f.name, dc)?;
        let coverage = if f.contract.is_some() {
            output_coverage(tp, &f.name, dc)?
        } else {
            Vec::new()
        };
        results.push(FunctionResult {
            name: f.name.clone(),
            hardware: false,
            verdicts,
            coverage,
        });
    }
    Ok(summarize(results, assumptions(tp, dc)?))
}

fn assumptions(tp: &TypedProgram, dc: &DomainConfig) -> Result<Vec<String>, VerifyError> {
    let mut out = Vec::new();
    for (text, e) in dc.resolve_coupling(tp)? {
        match e {
            Some(_) => out.push(format!("coupling: {text}")),
            None => out.push(format!("coupling: {text} (not applicable to this program)")),
        }
    }
    for (name, stub) in &dc.stubs {
        if tp.function(name).is_some() {
            out.push(format!("stub: {name}: {}", stub.describe()));
        }
    }
    Ok(out)
}

impl Report {
    /// 1 if any obligation failed; with `strict`, also if any is unknown
    /// or timed out. Coverage gaps never fail a run.
    pub fn exit_code(&self, strict: bool) -> i32 {
        let t = &self.totals;
        if t.failed > 0 || (strict && t.unknown + t.timeout > 0) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if !self.assumptions.is_empty() {
            s.push_str("Assumptions:\n");
            for a in &self.assumptions {
                let _ = writeln!(s, "  {a}");
            }
            s.push('\n');
        }
        let width = self
            .functions
            .iter()
            .map(|f| f.name.len())
            .max()
            .unwrap_or(0)
            .max("function".len());
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>5}  {:>6}  {:>7}  {:>7}",
            "function", "scheduled", "valid", "failed", "unknown", "timeout"
        );
        let cell = |c: Option<usize>| c.map_or("-".to_string(), |n| n.to_string());
        for f in &self.functions {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9}  {:>5}  {:>6}  {:>7}  {:>7}",
                f.name,
                cell(f.scheduled),
                cell(f.valid),
                cell(f.failed),
                cell(f.unknown),
                cell(f.timeout)
            );
        }
        let t = &self.totals;
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>5}  {:>6}  {:>7}  {:>7}",
            "total", t.scheduled, t.valid, t.failed, t.unknown, t.timeout
        );

        let failed: Vec<&Verdict> = self
            .verdicts()
            .filter(|v| v.status == Status::Failed)
            .collect();
        if !failed.is_empty() {
            s.push_str("\nFailed:\n");
            for v in failed {
                let _ = writeln!(s, "  {}", v.obligation);
                let _ = writeln!(s, "    goal: {}", v.goal);
                if let Some(m) = &v.message {
                    let _ = writeln!(s, "    {m}");
                }
                if let Some(cex) = &v.counterexample {
                    let vals: Vec<String> = cex.iter().map(|(k, x)| format!("{k} = {x}")).collect();
                    let _ = writeln!(s, "    counterexample: {}", vals.join(", "));
                }
            }
        }
        let open: Vec<&Verdict> = self
            .verdicts()
            .filter(|v| matches!(v.status, Status::Unknown | Status::Timeout))
            .collect();
        if !open.is_empty() {
            s.push_str("\nUndecided:\n");
            for v in open {
                let status = if v.status == Status::Unknown {
                    "unknown"
                } else {
                    "timeout"
                };
                let _ = writeln!(
                    s,
                    "  {} ({status}): {}",
                    v.obligation,
                    v.message.as_deref().unwrap_or("")
                );
            }
        }
        let gaps: Vec<(&str, &CoverageGap)> = self
            .functions
            .iter()
            .flat_map(|f| f.coverage.iter().map(move |g| (f.name.as_str(), g)))
            .collect();
        if !gaps.is_empty() {
            s.push_str("\nCoverage gaps:\n");
            for (f, g) in gaps {
                let vals: Vec<String> = g
                    .witness
                    .iter()
                    .map(|(k, x)| format!("{k} = {x}"))
                    .collect();
                let _ = writeln!(
                    s,
                    "  {f}: {} changes with no applicable ensures clause",
                    g.output
                );
                if !vals.is_empty() {
                    let _ = writeln!(s, "    witness: {}", vals.join(", "));
                }
            }
        }
        s
    }

    fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.functions.iter().flat_map(|f| &f.obligations)
    }
}
