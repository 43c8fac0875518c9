//! Output-coverage lint: finds executions in which a function changes an
//! output that no applicable ensures clause talks about.
//!
//! Outputs are `\result`, out-parameters and the module and ghost
//! variables the function may write. A state variable counts only when its
//! value actually changes. A clause applies at a point when the assumes clauses
//! of its behavior hold in the pre-state and, for a clause of the form
//! `A ==> B`, when `A` holds after the call. A clause mentions an output
//! if it reads it outside `\old`, directly or through a variable coupled
//! to it by an equality clause of the domain configuration.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::domain::DomainConfig;
use super::engine::{antecedent, coupled, enumerate, Clause, Goal, Output, Plan, Status};
use super::VerifyError;
use crate::frontend::typed::{TExpr, TExprKind, Type, TypedProgram};
use crate::semantics::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGap {
    /// `\result`, `*param` or a state variable name.
    pub output: String,
    /// Inputs of the first execution in which the output changes uncovered.
    pub witness: BTreeMap<String, Value>,
}

fn mentions(e: &TExpr, out: &mut BTreeSet<Output>) {
    match &e.kind {
        TExprKind::Old(_) => {}
        TExprKind::Result => {
            out.insert(Output::Result);
        }
        TExprKind::OutParam(i) => {
            out.insert(Output::OutParam(*i));
        }
        TExprKind::State(s) => {
            out.insert(Output::State(*s));
        }
        _ => {
            for c in e.children() {
                mentions(c, out);
            }
        }
    }
}

/// Gaps in the ensures clauses of `name`, one per uncovered output. An
/// output whose check did not finish is reported with an empty witness.
pub fn output_coverage(
    tp: &TypedProgram,
    name: &str,
    dc: &DomainConfig,
) -> Result<Vec<CoverageGap>, VerifyError> {
    let plan = Plan::new(tp, name, dc)?;
    let f = plan.func;
    let c = f
        .contract
        .as_ref()
        .ok_or_else(|| VerifyError::NoContract { name: name.into() })?;

    let mut outputs = Vec::new();
    if f.return_type != Type::Void {
        outputs.push((Output::Result, "\\result".to_string()));
    }
    for (i, p) in f.params.iter().enumerate().filter(|(_, p)| p.out) {
        outputs.push((Output::OutParam(i), format!("*{}", p.name)));
    }
    for &s in &plan.writes {
        outputs.push((Output::State(s), tp.state_vars[s].qualified_name()));
    }

    let clauses: Vec<Clause<'_>> = c
        .behaviors
        .iter()
        .flat_map(|b| {
            b.ensures.iter().map(|e| {
                let mut m = BTreeSet::new();
                mentions(e, &mut m);
                let partners: Vec<Output> = m
                    .iter()
                    .filter_map(|o| match o {
                        Output::State(s) => Some(*s),
                        _ => None,
                    })
                    .flat_map(|s| {
                        (0..tp.state_vars.len())
                            .filter(move |&t| t != s)
                            .map(move |t| (s, t))
                    })
                    .filter(|&(s, t)| coupled(&plan, s, t))
                    .map(|(_, t)| Output::State(t))
                    .collect();
                m.extend(partners);
                Clause {
                    assumes: &b.assumes,
                    antecedent: antecedent(e),
                    mentions: m,
                }
            })
        })
        .collect();

    let goals: Vec<Goal<'_>> = outputs
        .iter()
        .map(|(o, _)| Goal::Coverage {
            output: *o,
            clauses: &clauses,
        })
        .collect();
    let (results, _) = enumerate(&plan, &goals);
    Ok(outputs
        .into_iter()
        .zip(results)
        .filter(|(_, r)| r.status != Status::Valid)
        .map(|((_, output), r)| CoverageGap {
            output,
            witness: r.witness.unwrap_or_default(),
        })
        .collect())
}
