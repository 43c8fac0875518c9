//! Ghost erasure.

use thiserror::Error;

use crate::frontend::span::Span;
use crate::frontend::typed::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StripError {
    #[error("{span}: concrete code reads ghost `{name}`")]
    GhostLeak { span: Span, name: String },
}

/// Removes ghost state, ghost statements, assertions, loop invariants,
/// contracts and logic definitions. Concrete state slots keep their indices
/// because ghosts are laid out after them.
pub fn strip_ghost(tp: &TypedProgram) -> Result<TypedProgram, StripError> {
    let concrete = tp.concrete_state_len();
    let mut functions = Vec::with_capacity(tp.functions.len());
    for f in &tp.functions {
        let body = match &f.body {
            Some(b) => {
                check_block(tp, f, b)?;
                Some(strip_block(b))
            }
            None => None,
        };
        functions.push(TFunction {
            contract: None,
            body,
            ..f.clone()
        });
    }
    Ok(TypedProgram {
        constants: tp.constants.clone(),
        state_vars: tp.state_vars[..concrete].to_vec(),
        logic_defs: Vec::new(),
        functions,
        sources: tp.sources.clone(),
    })
}

fn check_expr(tp: &TypedProgram, f: &TFunction, e: &TExpr) -> Result<(), StripError> {
    let mut leak = None;
    e.walk(&mut |n| {
        if leak.is_some() {
            return;
        }
        let name = match &n.kind {
            TExprKind::State(i) if tp.state_vars[*i].ghost => Some(tp.state_vars[*i].name.clone()),
            TExprKind::Local(i) if f.locals[*i].ghost => Some(f.locals[*i].name.clone()),
            _ => None,
        };
        if let Some(name) = name {
            leak = Some(StripError::GhostLeak {
                span: n.span.clone(),
                name,
            });
        }
    });
    leak.map_or(Ok(()), Err)
}

fn check_lvalue(
    tp: &TypedProgram,
    f: &TFunction,
    lv: &LValue,
    span: &Span,
) -> Result<(), StripError> {
    let ghost_name = match lv {
        LValue::State(i) | LValue::StateIndex(i, _) if tp.state_vars[*i].ghost => {
            Some(&tp.state_vars[*i].name)
        }
        LValue::Local(i) | LValue::LocalIndex(i, _) if f.locals[*i].ghost => {
            Some(&f.locals[*i].name)
        }
        _ => None,
    };
    if let Some(name) = ghost_name {
        return Err(StripError::GhostLeak {
            span: span.clone(),
            name: name.clone(),
        });
    }
    if let LValue::LocalIndex(_, e) | LValue::StateIndex(_, e) = lv {
        check_expr(tp, f, e)?;
    }
    Ok(())
}

fn check_block(tp: &TypedProgram, f: &TFunction, b: &TBlock) -> Result<(), StripError> {
    for s in &b.stmts {
        check_stmt(tp, f, s)?;
    }
    Ok(())
}

fn check_stmt(tp: &TypedProgram, f: &TFunction, s: &TStmt) -> Result<(), StripError> {
    match &s.kind {
        TStmtKind::Assign { target, value } => {
            check_lvalue(tp, f, target, &s.span)?;
            check_expr(tp, f, value)
        }
        TStmtKind::Expr(e) => check_expr(tp, f, e),
        TStmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            check_expr(tp, f, cond)?;
            check_block(tp, f, then_block)?;
            else_block
                .as_ref()
                .map_or(Ok(()), |b| check_block(tp, f, b))
        }
        TStmtKind::While { cond, body, .. } => {
            check_expr(tp, f, cond)?;
            check_block(tp, f, body)
        }
        TStmtKind::For {
            init,
            cond,
            step,
            body,
            ..
        } => {
            if let Some(i) = init {
                check_stmt(tp, f, i)?;
            }
            if let Some(c) = cond {
                check_expr(tp, f, c)?;
            }
            if let Some(st) = step {
                check_stmt(tp, f, st)?;
            }
            check_block(tp, f, body)
        }
        TStmtKind::Return(Some(e)) => check_expr(tp, f, e),
        TStmtKind::Block(b) => check_block(tp, f, b),
        // ghost code and annotations disappear
        TStmtKind::Ghost(_) | TStmtKind::Assert(_) => Ok(()),
        TStmtKind::Return(None)
        | TStmtKind::Break
        | TStmtKind::Continue
        | TStmtKind::ExternEffect => Ok(()),
    }
}

fn strip_block(b: &TBlock) -> TBlock {
    TBlock {
        stmts: b.stmts.iter().filter_map(strip_stmt).collect(),
        span: b.span.clone(),
    }
}

fn strip_stmt(s: &TStmt) -> Option<TStmt> {
    let kind = match &s.kind {
        TStmtKind::Ghost(_) | TStmtKind::Assert(_) => return None,
        TStmtKind::If {
            cond,
            then_block,
            else_block,
        } => TStmtKind::If {
            cond: cond.clone(),
            then_block: strip_block(then_block),
            else_block: else_block.as_ref().map(strip_block),
        },
        TStmtKind::While { cond, body, .. } => TStmtKind::While {
            cond: cond.clone(),
            body: strip_block(body),
            invariant: None,
        },
        TStmtKind::For {
            init,
            cond,
            step,
            body,
            ..
        } => TStmtKind::For {
            init: init.clone(),
            cond: cond.clone(),
            step: step.clone(),
            body: strip_block(body),
            invariant: None,
        },
        TStmtKind::Block(b) => TStmtKind::Block(strip_block(b)),
        other => other.clone(),
    };
    Some(TStmt {
        kind,
        span: s.span.clone(),
    })
}
