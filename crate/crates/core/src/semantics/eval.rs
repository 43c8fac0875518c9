//! Evaluation of typed expressions.
//!
//! One evaluator serves program code and logic: the static type on each
//! node decides whether integer arithmetic wraps (`uint16`, `int32`) or is
//! checked (`integer`). Logic integers are 64-bit and overflow is an error.

use std::cmp::Ordering;

use thiserror::Error;

use crate::frontend::ast::{BinOp, CmpOp, Quantifier, UnOp};
use crate::frontend::span::Span;
use crate::frontend::typed::{Builtin, TExpr, TExprKind, TLogicDef, Type};
use crate::thermo::{self, ThermistorParams};

use super::state::Snapshot;
use super::Value;

const MAX_LOGIC_DEPTH: usize = 256;
const MAX_QUANT_RANGE: i64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{span}: division by zero")]
    DivisionByZero { span: Span },
    #[error("{span}: integer overflow")]
    Overflow { span: Span },
    #[error("{span}: `\\old`/`\\at(.., Pre)` evaluated without a pre-state snapshot")]
    MissingSnapshot { span: Span },
    #[error("{span}: `\\result` evaluated without a return value")]
    MissingResult { span: Span },
    #[error("{span}: quantifier range is not bounded")]
    Unbounded { span: Span },
    #[error("{span}: index {index} out of bounds for length {len}")]
    IndexOutOfBounds { span: Span, index: i64, len: usize },
    #[error("{span}: logic recursion limit exceeded")]
    RecursionLimit { span: Span },
    #[error("{span}: {message}")]
    Domain { span: Span, message: String },
    #[error("{span}: {message}")]
    Unsupported { span: Span, message: String },
}

impl EvalError {
    pub fn span(&self) -> &Span {
        match self {
            EvalError::DivisionByZero { span }
            | EvalError::Overflow { span }
            | EvalError::MissingSnapshot { span }
            | EvalError::MissingResult { span }
            | EvalError::Unbounded { span }
            | EvalError::IndexOutOfBounds { span, .. }
            | EvalError::RecursionLimit { span }
            | EvalError::Domain { span, .. }
            | EvalError::Unsupported { span, .. } => span,
        }
    }
}

/// Everything an expression may read.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub logic: &'a [TLogicDef],
    /// Current function frame (code, assertions, loop invariants).
    pub locals: &'a [Value],
    /// Parameter values at entry (contracts).
    pub params: &'a [Value],
    /// Final out-parameter values, indexed like the parameters (ensures).
    pub outs: &'a [Value],
    pub state: &'a [Value],
    pub snapshot: Option<&'a Snapshot>,
    pub result: Option<&'a Value>,
}

impl<'a> Env<'a> {
    pub fn empty(logic: &'a [TLogicDef]) -> Self {
        Env {
            logic,
            locals: &[],
            params: &[],
            outs: &[],
            state: &[],
            snapshot: None,
            result: None,
        }
    }
}

/// Evaluates `e` in `env`.
pub fn eval_logic(e: &TExpr, env: &Env<'_>) -> Result<Value, EvalError> {
    let mut ev = Evaluator {
        env: *env,
        bound: Vec::new(),
        depth: 0,
    };
    ev.eval(e)
}

/// Evaluates a boolean expression.
pub fn eval_bool(e: &TExpr, env: &Env<'_>) -> Result<bool, EvalError> {
    let v = eval_logic(e, env)?;
    v.as_bool().ok_or_else(|| EvalError::Unsupported {
        span: e.span.clone(),
        message: format!("expected a boolean, got {}", v.kind()),
    })
}

/// Evaluates a closed constant expression.
pub fn eval_const(e: &TExpr) -> Result<Value, EvalError> {
    eval_logic(e, &Env::empty(&[]))
}

struct Evaluator<'a> {
    env: Env<'a>,
    bound: Vec<Value>,
    depth: usize,
}

fn get<'v>(slice: &'v [Value], i: usize, span: &Span, what: &str) -> Result<&'v Value, EvalError> {
    slice.get(i).ok_or_else(|| EvalError::Unsupported {
        span: span.clone(),
        message: format!("{what} is not available in this context"),
    })
}

fn int_of(v: &Value, span: &Span) -> Result<i64, EvalError> {
    v.as_int().ok_or_else(|| EvalError::Unsupported {
        span: span.clone(),
        message: format!("expected an integer, got {}", v.kind()),
    })
}

fn real_of(v: &Value, span: &Span) -> Result<f64, EvalError> {
    v.as_real().ok_or_else(|| EvalError::Unsupported {
        span: span.clone(),
        message: format!("expected a number, got {}", v.kind()),
    })
}

fn bool_of(v: &Value, span: &Span) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::Unsupported {
        span: span.clone(),
        message: format!("expected a boolean, got {}", v.kind()),
    })
}

/// Converts a real to an integer, failing on NaN/infinity/out of range.
fn real_to_int(x: f64, span: &Span) -> Result<i64, EvalError> {
    if x.is_finite() && x >= i64::MIN as f64 && x < i64::MAX as f64 {
        Ok(x as i64)
    } else {
        Err(EvalError::Overflow { span: span.clone() })
    }
}

/// Fits an integer result into its static type.
fn fit(v: i64, ty: &Type) -> i64 {
    ty.wrap(v)
}

pub(crate) fn compare(a: &Value, b: &Value, op: CmpOp, span: &Span) -> Result<bool, EvalError> {
    let ord = match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        _ => {
            let (x, y) = (real_of(a, span)?, real_of(b, span)?);
            match x.partial_cmp(&y) {
                Some(o) => o,
                // NaN compares unequal to everything
                None => return Ok(op == CmpOp::Ne),
            }
        }
    };
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}

impl Evaluator<'_> {
    fn eval(&mut self, e: &TExpr) -> Result<Value, EvalError> {
        let span = &e.span;
        match &e.kind {
            TExprKind::Const(v) => Ok(v.clone()),
            TExprKind::Local(i) => get(self.env.locals, *i, span, "local variable").cloned(),
            TExprKind::Param(i) => get(self.env.params, *i, span, "parameter").cloned(),
            TExprKind::OutParam(i) => get(self.env.outs, *i, span, "out-parameter").cloned(),
            TExprKind::State(i) => get(self.env.state, *i, span, "state variable").cloned(),
            TExprKind::Bound(i) => get(&self.bound, *i, span, "bound variable").cloned(),
            TExprKind::Result => self
                .env
                .result
                .cloned()
                .ok_or_else(|| EvalError::MissingResult { span: span.clone() }),
            TExprKind::Old(inner) => {
                let snap = self
                    .env
                    .snapshot
                    .ok_or_else(|| EvalError::MissingSnapshot { span: span.clone() })?;
                let saved = self.env;
                self.env = Env {
                    logic: saved.logic,
                    locals: &snap.args,
                    params: &snap.args,
                    outs: &snap.args,
                    state: &snap.state.values,
                    snapshot: Some(snap),
                    result: None,
                };
                let r = self.eval(inner);
                self.env = saved;
                r
            }
            TExprKind::Unary(op, inner) => {
                let v = self.eval(inner)?;
                match op {
                    UnOp::Not => Ok(Value::Bool(!bool_of(&v, span)?)),
                    UnOp::Neg => match v {
                        Value::Real(x) => Ok(Value::Real(-x)),
                        Value::Int(x) => {
                            let r = x
                                .checked_neg()
                                .ok_or_else(|| EvalError::Overflow { span: span.clone() })?;
                            Ok(Value::Int(fit(r, &e.ty)))
                        }
                        other => Err(EvalError::Unsupported {
                            span: span.clone(),
                            message: format!("cannot negate {}", other.kind()),
                        }),
                    },
                    UnOp::Deref | UnOp::AddrOf => Err(EvalError::Unsupported {
                        span: span.clone(),
                        message: "pointer operator survived resolution".into(),
                    }),
                }
            }
            TExprKind::Binary(op, a, b) => self.binary(*op, a, b, e),
            TExprKind::Compare(items, ops) => {
                let mut prev = self.eval(&items[0])?;
                for (i, op) in ops.iter().enumerate() {
                    let next = self.eval(&items[i + 1])?;
                    if !compare(&prev, &next, *op, span)? {
                        return Ok(Value::Bool(false));
                    }
                    prev = next;
                }
                Ok(Value::Bool(true))
            }
            TExprKind::Index(base, idx) => {
                let b = self.eval(base)?;
                let i = int_of(&self.eval(idx)?, span)?;
                let items = b.as_array().ok_or_else(|| EvalError::Unsupported {
                    span: span.clone(),
                    message: "indexing a non-array".into(),
                })?;
                usize::try_from(i)
                    .ok()
                    .and_then(|k| items.get(k))
                    .cloned()
                    .ok_or(EvalError::IndexOutOfBounds {
                        span: span.clone(),
                        index: i,
                        len: items.len(),
                    })
            }
            TExprKind::Cast(inner) => {
                let v = self.eval(inner)?;
                cast(&v, &e.ty, span)
            }
            TExprKind::Builtin(b, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                builtin(*b, &vals, &e.ty, span)
            }
            TExprKind::LogicCall(i, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                let def = self
                    .env
                    .logic
                    .get(*i)
                    .ok_or_else(|| EvalError::Unsupported {
                        span: span.clone(),
                        message: "logic definition is not available".into(),
                    })?;
                for (v, (_, ty)) in vals.iter_mut().zip(&def.params) {
                    *v = std::mem::replace(v, Value::Bool(false)).coerce(ty);
                }
                if self.depth >= MAX_LOGIC_DEPTH {
                    return Err(EvalError::RecursionLimit { span: span.clone() });
                }
                self.depth += 1;
                let saved = std::mem::replace(&mut self.bound, vals);
                let r = self.eval(&def.body);
                self.bound = saved;
                self.depth -= 1;
                Ok(r?.coerce(&def.return_type))
            }
            TExprKind::Call(..) => Err(EvalError::Unsupported {
                span: span.clone(),
                message: "program call inside an expression".into(),
            }),
            TExprKind::Quant {
                q,
                slot,
                range,
                body,
            } => {
                let Some((lo, hi)) = range else {
                    return Err(EvalError::Unbounded { span: span.clone() });
                };
                let lo = int_of(&self.eval(lo)?, span)?;
                let hi = int_of(&self.eval(hi)?, span)?;
                if hi.saturating_sub(lo) > MAX_QUANT_RANGE {
                    return Err(EvalError::Unbounded { span: span.clone() });
                }
                let want = *q == Quantifier::Exists;
                self.bound.truncate(*slot);
                let mut k = lo;
                while k <= hi {
                    self.bound.push(Value::Int(k));
                    let r = self.eval(body).and_then(|v| bool_of(&v, span));
                    self.bound.truncate(*slot);
                    if r? == want {
                        return Ok(Value::Bool(want));
                    }
                    k += 1;
                }
                Ok(Value::Bool(!want))
            }
        }
    }

    fn binary(&mut self, op: BinOp, a: &TExpr, b: &TExpr, e: &TExpr) -> Result<Value, EvalError> {
        let span = &e.span;
        match op {
            BinOp::And => {
                let x = bool_of(&self.eval(a)?, span)?;
                Ok(Value::Bool(x && bool_of(&self.eval(b)?, span)?))
            }
            BinOp::Or => {
                let x = bool_of(&self.eval(a)?, span)?;
                Ok(Value::Bool(x || bool_of(&self.eval(b)?, span)?))
            }
            BinOp::Implies => {
                let x = bool_of(&self.eval(a)?, span)?;
                Ok(Value::Bool(!x || bool_of(&self.eval(b)?, span)?))
            }
            BinOp::Equiv => {
                let x = bool_of(&self.eval(a)?, span)?;
                Ok(Value::Bool(x == bool_of(&self.eval(b)?, span)?))
            }
            _ => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                arith(op, &x, &y, &e.ty, span)
            }
        }
    }
}

pub(crate) fn arith(
    op: BinOp,
    x: &Value,
    y: &Value,
    ty: &Type,
    span: &Span,
) -> Result<Value, EvalError> {
    if *ty == Type::Real {
        let (x, y) = (real_of(x, span)?, real_of(y, span)?);
        let r = match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => {
                if y == 0.0 {
                    return Err(EvalError::DivisionByZero { span: span.clone() });
                }
                x / y
            }
            _ => {
                return Err(EvalError::Unsupported {
                    span: span.clone(),
                    message: format!("`{}` on reals", op.symbol()),
                })
            }
        };
        return Ok(Value::Real(r));
    }
    let (x, y) = (int_of(x, span)?, int_of(y, span)?);
    let overflow = || EvalError::Overflow { span: span.clone() };
    let r = match op {
        BinOp::Add => x.checked_add(y).ok_or_else(overflow)?,
        BinOp::Sub => x.checked_sub(y).ok_or_else(overflow)?,
        BinOp::Mul => x.checked_mul(y).ok_or_else(overflow)?,
        BinOp::Div | BinOp::Mod => {
            if y == 0 {
                return Err(EvalError::DivisionByZero { span: span.clone() });
            }
            // truncating division, as in C and ACSL
            if op == BinOp::Div {
                x.checked_div(y).ok_or_else(overflow)?
            } else {
                x.checked_rem(y).ok_or_else(overflow)?
            }
        }
        _ => unreachable!("boolean operators handled by the caller"),
    };
    Ok(Value::Int(fit(r, ty)))
}

pub(crate) fn cast(v: &Value, target: &Type, span: &Span) -> Result<Value, EvalError> {
    match target {
        Type::Real => Ok(Value::Real(real_of(v, span)?)),
        t if t.is_integral() => {
            let i = match v {
                Value::Int(i) => *i,
                Value::Real(x) => real_to_int(x.trunc(), span)?,
                other => {
                    return Err(EvalError::Unsupported {
                        span: span.clone(),
                        message: format!("cannot cast {}", other.kind()),
                    })
                }
            };
            Ok(Value::Int(fit(i, t)))
        }
        other => Err(EvalError::Unsupported {
            span: span.clone(),
            message: format!("cannot cast to {other}"),
        }),
    }
}

fn builtin(b: Builtin, vals: &[Value], ty: &Type, span: &Span) -> Result<Value, EvalError> {
    let domain = |message: String| EvalError::Domain {
        span: span.clone(),
        message,
    };
    let thermo_err = |e: thermo::ThermoError| domain(e.to_string());
    let params = ThermistorParams::default();
    let x = &vals[0];
    match b {
        Builtin::Abs => match x {
            Value::Int(i) => Ok(Value::Int(
                i.checked_abs()
                    .ok_or(EvalError::Overflow { span: span.clone() })?,
            )),
            _ => Ok(Value::Real(real_of(x, span)?.abs())),
        },
        Builtin::Floor | Builtin::Ceil => match x {
            Value::Int(i) => Ok(Value::Int(*i)),
            _ => {
                let r = real_of(x, span)?;
                let r = if b == Builtin::Floor {
                    r.floor()
                } else {
                    r.ceil()
                };
                Ok(Value::Int(real_to_int(r, span)?))
            }
        },
        Builtin::Exp => Ok(Value::Real(real_of(x, span)?.exp())),
        Builtin::Log => {
            let r = real_of(x, span)?;
            if r <= 0.0 {
                return Err(domain(format!("\\log of non-positive value {r}")));
            }
            Ok(Value::Real(r.ln()))
        }
        Builtin::Sqrt => {
            let r = real_of(x, span)?;
            if r < 0.0 {
                return Err(domain(format!("\\sqrt of negative value {r}")));
            }
            Ok(Value::Real(r.sqrt()))
        }
        Builtin::Min | Builtin::Max => {
            let y = &vals[1];
            let pick_first = compare(
                x,
                y,
                if b == Builtin::Min {
                    CmpOp::Le
                } else {
                    CmpOp::Ge
                },
                span,
            )?;
            let v = if pick_first { x } else { y };
            Ok(v.clone().coerce(ty))
        }
        Builtin::NtcResistance => Ok(Value::Real(
            thermo::resistance(real_of(x, span)?, &params).map_err(thermo_err)?,
        )),
        Builtin::NtcVoltage => Ok(Value::Real(
            thermo::divider_voltage(real_of(x, span)?, &params).map_err(thermo_err)?,
        )),
        Builtin::NtcCode => Ok(Value::Int(
            thermo::adc_code(real_of(x, span)?, &params).map_err(thermo_err)?,
        )),
    }
}
