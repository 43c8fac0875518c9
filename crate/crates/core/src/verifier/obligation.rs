use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::frontend::span::Span;
use crate::frontend::typed::{TBlock, TExpr, TFunction, TStmt, TStmtKind, TypedProgram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObligationKind {
    BehaviorEnsures { behavior: String, index: usize },
    Completeness,
    Disjointness,
    Assertion { span: Span },
    LoopInvariantInit { span: Span },
    LoopInvariantPreserve { span: Span },
    Frame,
}

/// One checkable goal of a function.
#[derive(Debug, Clone, PartialEq)]
pub struct Obligation {
    /// Stable identifier, e.g. `f::ensures::KeepWC::0` or `f::assert::3:5`.
    pub id: String,
    pub function: String,
    pub kind: ObligationKind,
    /// The goal expression where there is one (ensures, assertions, loop
    /// invariants).
    pub goal: Option<TExpr>,
    /// Goal as written in the source, or a description.
    pub text: String,
}

/// Obligations of `name`: ensures clauses (per behavior, in order), the
/// declared completeness and disjointness checks, inline assertions, two
/// per annotated loop, and the frame check if there is an assigns clause.
pub fn gen_obligations(tp: &TypedProgram, name: &str) -> Result<Vec<Obligation>, VerifyError> {
    let f = tp
        .function(name)
        .ok_or_else(|| VerifyError::UnknownFunction { name: name.into() })?;
    if f.hardware {
        return Err(VerifyError::HardwareFunction { name: name.into() });
    }
    let text_of = |e: &TExpr| tp.span_text(&e.span).unwrap_or_default();
    let mut out = Vec::new();
    let push = |out: &mut Vec<Obligation>, id: String, kind, goal: Option<TExpr>, text: String| {
        out.push(Obligation {
            id: format!("{name}::{id}"),
            function: name.to_string(),
            kind,
            goal,
            text,
        })
    };
    if let Some(c) = &f.contract {
        for b in &c.behaviors {
            for (i, e) in b.ensures.iter().enumerate() {
                push(
                    &mut out,
                    format!("ensures::{}::{i}", b.name),
                    ObligationKind::BehaviorEnsures {
                        behavior: b.name.clone(),
                        index: i,
                    },
                    Some(e.clone()),
                    text_of(e),
                );
            }
        }
        let names = || named_behaviors(f).join(", ");
        if c.complete_declared {
            push(
                &mut out,
                "complete".into(),
                ObligationKind::Completeness,
                None,
                format!("complete behaviors {}", names()),
            );
        }
        if c.disjoint_declared {
            push(
                &mut out,
                "disjoint".into(),
                ObligationKind::Disjointness,
                None,
                format!("disjoint behaviors {}", names()),
            );
        }
    }
    let mut asserts = Vec::new();
    let mut loops = Vec::new();
    if let Some(body) = &f.body {
        collect_block(body, &mut asserts, &mut loops);
    }
    for e in asserts {
        let s = &e.span;
        push(
            &mut out,
            format!("assert::{}:{}", s.line_start, s.col_start),
            ObligationKind::Assertion { span: s.clone() },
            Some(e.clone()),
            text_of(e),
        );
    }
    for inv in loops {
        let s = &inv.span;
        let pos = format!("{}:{}", s.line_start, s.col_start);
        let text = tp.span_text(s).unwrap_or_default();
        push(
            &mut out,
            format!("loop_inv_init::{pos}"),
            ObligationKind::LoopInvariantInit { span: s.clone() },
            Some(inv.expr.clone()),
            text.clone(),
        );
        push(
            &mut out,
            format!("loop_inv_preserve::{pos}"),
            ObligationKind::LoopInvariantPreserve { span: s.clone() },
            Some(inv.expr.clone()),
            text,
        );
    }
    if let Some(targets) = f.contract.as_ref().and_then(|c| c.assigns.as_ref()) {
        let listed: Vec<String> = targets
            .iter()
            .filter_map(|t| tp.span_text(&t.span))
            .collect();
        push(
            &mut out,
            "frame".into(),
            ObligationKind::Frame,
            None,
            format!("assigns {}", listed.join(", ")),
        );
    }
    Ok(out)
}

pub(crate) fn named_behaviors(f: &TFunction) -> Vec<String> {
    f.contract
        .iter()
        .flat_map(|c| &c.behaviors)
        .filter(|b| b.name != crate::frontend::ast::DEFAULT_BEHAVIOR)
        .map(|b| b.name.clone())
        .collect()
}

fn collect_block<'a>(
    b: &'a TBlock,
    asserts: &mut Vec<&'a TExpr>,
    loops: &mut Vec<&'a crate::frontend::typed::LoopInvariant>,
) {
    for s in &b.stmts {
        collect_stmt(s, asserts, loops);
    }
}

fn collect_stmt<'a>(
    s: &'a TStmt,
    asserts: &mut Vec<&'a TExpr>,
    loops: &mut Vec<&'a crate::frontend::typed::LoopInvariant>,
) {
    match &s.kind {
        TStmtKind::Assert(e) => asserts.push(e),
        TStmtKind::If {
            then_block,
            else_block,
            ..
        } => {
            collect_block(then_block, asserts, loops);
            if let Some(b) = else_block {
                collect_block(b, asserts, loops);
            }
        }
        TStmtKind::While {
            body, invariant, ..
        }
        | TStmtKind::For {
            body, invariant, ..
        } => {
            if let Some(inv) = invariant {
                loops.push(inv);
            }
            collect_block(body, asserts, loops);
        }
        TStmtKind::Block(b) => collect_block(b, asserts, loops),
        _ => {}
    }
}
