//! Big-step interpreter for resolved functions.
//!
//! Out-parameters are copy-in/copy-out. Ghost statements run in program
//! order with concrete ones. Assertions and loop invariants are evaluated as
//! they are reached and violations are recorded, not raised.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frontend::span::Span;
use crate::frontend::typed::*;

use super::eval::{eval_logic, Env, EvalError};
use super::state::{ModuleState, Snapshot};
use super::Value;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
const MAX_CALL_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("step budget of {budget} statements exceeded (possible non-termination)")]
    StepBudgetExceeded { budget: u64 },
    #[error("call of hardware function `{name}` without a stub")]
    CalledHardwareFunction { name: String },
    #[error("function `{name}` has no body")]
    MissingBody { name: String },
    #[error("unknown function `{name}`")]
    UnknownFunction { name: String },
    #[error("`{name}` expects {expected} argument(s), got {found}")]
    ArgumentMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("call depth limit exceeded in `{name}`")]
    CallDepth { name: String },
    #[error("stub for `{name}`: {message}")]
    Stub { name: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FailureKind {
    Assert,
    LoopInvariantInit,
    LoopInvariantPreserve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionFailure {
    pub span: Span,
    pub kind: FailureKind,
    /// Values of the variables the annotation mentions.
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecResult {
    pub return_value: Option<Value>,
    /// Final values of out-parameters by name.
    pub out_params: BTreeMap<String, Value>,
    /// Final frame values of all parameters, in declaration order.
    pub final_params: Vec<Value>,
    pub post_state: ModuleState,
    pub assertion_failures: Vec<AssertionFailure>,
    /// Spans of executed statements, in order (empty unless tracing).
    pub trace: Vec<Span>,
    pub entry: Snapshot,
}

/// Result of a stubbed call.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CallOutcome {
    pub return_value: Option<Value>,
    /// Values written to out-parameters, by parameter index.
    pub outs: BTreeMap<usize, Value>,
}

/// Intercepts calls made by the function under execution. Returning `None`
/// runs the callee normally.
pub trait CallHook {
    fn call(
        &self,
        tp: &TypedProgram,
        callee: &TFunction,
        args: &[Value],
        state: &mut ModuleState,
    ) -> Option<Result<CallOutcome, ExecError>>;
}

#[derive(Debug, Clone, Copy)]
pub struct ExecOptions {
    pub budget: u64,
    pub trace: bool,
    /// Evaluate assertions and loop invariants.
    pub check_annotations: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            budget: DEFAULT_STEP_BUDGET,
            trace: true,
            check_annotations: true,
        }
    }
}

/// Runs `name` with tracing and the given step budget.
pub fn exec_function(
    tp: &TypedProgram,
    name: &str,
    args: &[Value],
    state: &ModuleState,
    budget: u64,
) -> Result<ExecResult, ExecError> {
    exec_with(
        tp,
        name,
        args,
        state,
        &ExecOptions {
            budget,
            ..ExecOptions::default()
        },
        None,
    )
}

pub fn exec_with(
    tp: &TypedProgram,
    name: &str,
    args: &[Value],
    state: &ModuleState,
    opts: &ExecOptions,
    hook: Option<&dyn CallHook>,
) -> Result<ExecResult, ExecError> {
    let index = tp
        .function_index(name)
        .ok_or_else(|| ExecError::UnknownFunction { name: name.into() })?;
    let f = &tp.functions[index];
    if f.hardware {
        return Err(ExecError::CalledHardwareFunction { name: name.into() });
    }
    let mut interp = Interp {
        tp,
        hook,
        steps: 0,
        budget: opts.budget,
        trace: opts.trace.then(Vec::new),
        failures: Vec::new(),
        check_annotations: opts.check_annotations,
        depth: 0,
    };
    let mut post = state.clone();
    let entry = Snapshot {
        state: state.clone(),
        args: coerce_args(f, args)?,
    };
    let (ret, final_params) = interp.call(index, entry.args.clone(), &mut post)?;
    let out_params = f
        .params
        .iter()
        .zip(&final_params)
        .filter(|(p, _)| p.out)
        .map(|(p, v)| (p.name.clone(), v.clone()))
        .collect();
    Ok(ExecResult {
        return_value: ret,
        out_params,
        final_params,
        post_state: post,
        assertion_failures: interp.failures,
        trace: interp.trace.unwrap_or_default(),
        entry,
    })
}

fn coerce_args(f: &TFunction, args: &[Value]) -> Result<Vec<Value>, ExecError> {
    if args.len() != f.params.len() {
        return Err(ExecError::ArgumentMismatch {
            name: f.name.clone(),
            expected: f.params.len(),
            found: args.len(),
        });
    }
    Ok(args
        .iter()
        .zip(&f.params)
        .map(|(a, p)| a.clone().coerce(&p.ty))
        .collect())
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Option<Value>),
}

struct Frame {
    func: usize,
    locals: Vec<Value>,
    entry: Snapshot,
}

struct Interp<'a> {
    tp: &'a TypedProgram,
    hook: Option<&'a dyn CallHook>,
    steps: u64,
    budget: u64,
    trace: Option<Vec<Span>>,
    failures: Vec<AssertionFailure>,
    check_annotations: bool,
    depth: usize,
}

impl<'a> Interp<'a> {
    fn call(
        &mut self,
        index: usize,
        args: Vec<Value>,
        state: &mut ModuleState,
    ) -> Result<(Option<Value>, Vec<Value>), ExecError> {
        let f = &self.tp.functions[index];
        let body = f.body.as_ref().ok_or_else(|| ExecError::MissingBody {
            name: f.name.clone(),
        })?;
        if self.depth >= MAX_CALL_DEPTH {
            return Err(ExecError::CallDepth {
                name: f.name.clone(),
            });
        }
        let mut locals: Vec<Value> = f.locals.iter().map(|l| l.ty.zero()).collect();
        locals[..args.len()].clone_from_slice(&args);
        let mut frame = Frame {
            func: index,
            locals,
            entry: Snapshot {
                state: state.clone(),
                args,
            },
        };
        self.depth += 1;
        let flow = self.block(body, &mut frame, state);
        self.depth -= 1;
        let ret = match flow? {
            Flow::Return(v) => v.map(|v| v.coerce(&f.return_type)),
            _ => None,
        };
        frame.locals.truncate(f.params.len());
        Ok((ret, frame.locals))
    }

    fn env<'e>(&self, frame: &'e Frame, state: &'e ModuleState) -> Env<'e>
    where
        'a: 'e,
    {
        Env {
            logic: &self.tp.logic_defs,
            locals: &frame.locals,
            params: &frame.locals,
            outs: &frame.locals,
            state: &state.values,
            snapshot: Some(&frame.entry),
            result: None,
        }
    }

    fn eval(&self, e: &TExpr, frame: &Frame, state: &ModuleState) -> Result<Value, ExecError> {
        Ok(eval_logic(e, &self.env(frame, state))?)
    }

    fn eval_bool(&self, e: &TExpr, frame: &Frame, state: &ModuleState) -> Result<bool, ExecError> {
        let v = self.eval(e, frame, state)?;
        v.as_bool().ok_or_else(|| {
            ExecError::Eval(EvalError::Unsupported {
                span: e.span.clone(),
                message: "condition is not boolean".into(),
            })
        })
    }

    fn tick(&mut self, span: &Span) -> Result<(), ExecError> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(ExecError::StepBudgetExceeded {
                budget: self.budget,
            });
        }
        if let Some(t) = &mut self.trace {
            t.push(span.clone());
        }
        Ok(())
    }

    fn block(
        &mut self,
        b: &TBlock,
        frame: &mut Frame,
        state: &mut ModuleState,
    ) -> Result<Flow, ExecError> {
        for s in &b.stmts {
            match self.stmt(s, frame, state)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn check(
        &mut self,
        e: &TExpr,
        span: &Span,
        kind: FailureKind,
        frame: &Frame,
        state: &ModuleState,
    ) -> Result<(), ExecError> {
        if !self.check_annotations {
            return Ok(());
        }
        if !self.eval_bool(e, frame, state)? {
            let rendered = self.render(e, frame, state);
            self.failures.push(AssertionFailure {
                span: span.clone(),
                kind,
                rendered,
            });
        }
        Ok(())
    }

    /// `name = value` pairs for locals and state read by `e`.
    fn render(&self, e: &TExpr, frame: &Frame, state: &ModuleState) -> String {
        let f_locals = &self.tp.functions[frame.func].locals;
        let mut seen = BTreeMap::new();
        e.walk(&mut |n| match &n.kind {
            TExprKind::Local(i) => {
                if let (Some(info), Some(v)) = (f_locals.get(*i), frame.locals.get(*i)) {
                    seen.insert(info.name.clone(), v.to_string());
                }
            }
            TExprKind::State(i) => {
                if let (Some(var), Some(v)) = (self.tp.state_vars.get(*i), state.values.get(*i)) {
                    seen.insert(var.qualified_name(), v.to_string());
                }
            }
            _ => {}
        });
        seen.into_iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn store(
        &self,
        lv: &LValue,
        value: Value,
        frame: &mut Frame,
        state: &mut ModuleState,
    ) -> Result<(), ExecError> {
        let index = |e: &TExpr, frame: &Frame, state: &ModuleState| -> Result<i64, ExecError> {
            let v = self.eval(e, frame, state)?;
            v.as_int().ok_or_else(|| {
                ExecError::Eval(EvalError::Unsupported {
                    span: e.span.clone(),
                    message: "array index is not an integer".into(),
                })
            })
        };
        match lv {
            LValue::Local(i) => frame.locals[*i] = value,
            LValue::State(i) => {
                let ty = &self.tp.state_vars[*i].ty;
                state.values[*i] = value.coerce(ty);
            }
            LValue::LocalIndex(i, e) => {
                let k = index(e, frame, state)?;
                set_elem(&mut frame.locals[*i], k, value, &e.span)?;
            }
            LValue::StateIndex(i, e) => {
                let k = index(e, frame, state)?;
                set_elem(&mut state.values[*i], k, value, &e.span)?;
            }
        }
        Ok(())
    }

    fn load(&self, lv: &LValue, frame: &Frame, state: &ModuleState) -> Result<Value, ExecError> {
        let elem = |base: &Value, e: &TExpr| -> Result<Value, ExecError> {
            let k = self.eval(e, frame, state)?.as_int().unwrap_or(-1);
            let items = base.as_array().unwrap_or(&[]);
            usize::try_from(k)
                .ok()
                .and_then(|k| items.get(k))
                .cloned()
                .ok_or_else(|| {
                    ExecError::Eval(EvalError::IndexOutOfBounds {
                        span: e.span.clone(),
                        index: k,
                        len: items.len(),
                    })
                })
        };
        match lv {
            LValue::Local(i) => Ok(frame.locals[*i].clone()),
            LValue::State(i) => Ok(state.values[*i].clone()),
            LValue::LocalIndex(i, e) => elem(&frame.locals[*i], e),
            LValue::StateIndex(i, e) => elem(&state.values[*i], e),
        }
    }

    /// Evaluates a right-hand side that may be a program call.
    fn value(
        &mut self,
        e: &TExpr,
        frame: &mut Frame,
        state: &mut ModuleState,
    ) -> Result<Option<Value>, ExecError> {
        match &e.kind {
            TExprKind::Call(index, args) => self.perform_call(*index, args, &e.span, frame, state),
            _ => Ok(Some(self.eval(e, frame, state)?)),
        }
    }

    fn perform_call(
        &mut self,
        index: usize,
        args: &[CallArg],
        span: &Span,
        frame: &mut Frame,
        state: &mut ModuleState,
    ) -> Result<Option<Value>, ExecError> {
        let callee = &self.tp.functions[index];
        let mut vals = Vec::with_capacity(args.len());
        for (a, p) in args.iter().zip(&callee.params) {
            let v = match a {
                CallArg::Value(e) => self.eval(e, frame, state)?,
                CallArg::Out(lv) => self.load(lv, frame, state)?,
            };
            vals.push(v.coerce(&p.ty));
        }
        let stubbed = match self.hook {
            Some(h) => h.call(self.tp, callee, &vals, state),
            None => None,
        };
        let (ret, outs): (Option<Value>, BTreeMap<usize, Value>) = match stubbed {
            Some(r) => {
                let o = r?;
                (o.return_value, o.outs)
            }
            None => {
                if callee.hardware {
                    return Err(ExecError::CalledHardwareFunction {
                        name: callee.name.clone(),
                    });
                }
                let _ = span;
                let (ret, finals) = self.call(index, vals, state)?;
                let outs = callee
                    .params
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.out)
                    .map(|(i, _)| (i, finals[i].clone()))
                    .collect();
                (ret, outs)
            }
        };
        for (i, a) in args.iter().enumerate() {
            if let (CallArg::Out(lv), Some(v)) = (a, outs.get(&i)) {
                let v = v.clone().coerce(&callee.params[i].ty);
                self.store(lv, v, frame, state)?;
            }
        }
        Ok(ret)
    }

    fn stmt(
        &mut self,
        s: &TStmt,
        frame: &mut Frame,
        state: &mut ModuleState,
    ) -> Result<Flow, ExecError> {
        self.tick(&s.span)?;
        match &s.kind {
            TStmtKind::Assign { target, value } => {
                let v = self.value(value, frame, state)?.ok_or_else(|| {
                    ExecError::Eval(EvalError::Unsupported {
                        span: value.span.clone(),
                        message: "void call used as a value".into(),
                    })
                })?;
                self.store(target, v, frame, state)?;
                Ok(Flow::Normal)
            }
            TStmtKind::Expr(e) => {
                self.value(e, frame, state)?;
                Ok(Flow::Normal)
            }
            TStmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                if self.eval_bool(cond, frame, state)? {
                    self.block(then_block, frame, state)
                } else if let Some(b) = else_block {
                    self.block(b, frame, state)
                } else {
                    Ok(Flow::Normal)
                }
            }
            TStmtKind::While {
                cond,
                body,
                invariant,
            } => self.run_loop(Some(cond), None, body, invariant.as_ref(), frame, state),
            TStmtKind::For {
                init,
                cond,
                step,
                body,
                invariant,
            } => {
                if let Some(i) = init {
                    self.stmt(i, frame, state)?;
                }
                self.run_loop(
                    cond.as_ref(),
                    step.as_deref(),
                    body,
                    invariant.as_ref(),
                    frame,
                    state,
                )
            }
            TStmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.value(e, frame, state)?,
                    None => None,
                };
                Ok(Flow::Return(v))
            }
            TStmtKind::Break => Ok(Flow::Break),
            TStmtKind::Continue => Ok(Flow::Continue),
            TStmtKind::Block(b) => self.block(b, frame, state),
            TStmtKind::Ghost(inner) => self.stmt(inner, frame, state),
            TStmtKind::Assert(e) => {
                self.check(e, &s.span, FailureKind::Assert, frame, state)?;
                Ok(Flow::Normal)
            }
            TStmtKind::ExternEffect => Err(ExecError::CalledHardwareFunction {
                name: "extern_effect".into(),
            }),
        }
    }

    fn run_loop(
        &mut self,
        cond: Option<&TExpr>,
        step: Option<&TStmt>,
        body: &TBlock,
        invariant: Option<&LoopInvariant>,
        frame: &mut Frame,
        state: &mut ModuleState,
    ) -> Result<Flow, ExecError> {
        if let Some(inv) = invariant {
            self.check(
                &inv.expr,
                &inv.span,
                FailureKind::LoopInvariantInit,
                frame,
                state,
            )?;
        }
        loop {
            if let Some(c) = cond {
                self.tick(&c.span)?;
                if !self.eval_bool(c, frame, state)? {
                    return Ok(Flow::Normal);
                }
            }
            match self.block(body, frame, state)? {
                Flow::Break => return Ok(Flow::Normal),
                Flow::Return(v) => return Ok(Flow::Return(v)),
                Flow::Normal | Flow::Continue => {}
            }
            if let Some(st) = step {
                self.stmt(st, frame, state)?;
            }
            if let Some(inv) = invariant {
                self.check(
                    &inv.expr,
                    &inv.span,
                    FailureKind::LoopInvariantPreserve,
                    frame,
                    state,
                )?;
            }
        }
    }
}

fn set_elem(arr: &mut Value, k: i64, value: Value, span: &Span) -> Result<(), ExecError> {
    let Value::Array(items) = arr else {
        return Err(ExecError::Eval(EvalError::Unsupported {
            span: span.clone(),
            message: "indexing a non-array".into(),
        }));
    };
    let len = items.len();
    let slot = usize::try_from(k)
        .ok()
        .filter(|&k| k < len)
        .ok_or_else(|| {
            ExecError::Eval(EvalError::IndexOutOfBounds {
                span: span.clone(),
                index: k,
                len,
            })
        })?;
    std::sync::Arc::make_mut(items)[slot] = value;
    Ok(())
}
