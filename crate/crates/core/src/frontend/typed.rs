//! Resolved program representation.
//!
//! Every name is bound to a slot: function locals (parameters first),
//! module state (concrete variables first, ghosts after), quantifier or
//! logic-definition binders, or a folded constant. Every expression carries
//! its checked type.

use std::collections::BTreeMap;
use std::fmt;

use super::ast::{BinOp, CmpOp, Quantifier, UnOp};
use super::span::Span;
use crate::semantics::Value;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Void,
    Bool,
    UInt16,
    Int32,
    /// Unbounded mathematical integer (logic only).
    Integer,
    Real,
    Array(Box<Type>, usize),
}

impl Type {
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Type::UInt16 | Type::Int32 | Type::Integer | Type::Real
        )
    }

    pub fn is_integral(&self) -> bool {
        matches!(self, Type::UInt16 | Type::Int32 | Type::Integer)
    }

    /// Position in the widening chain `uint16 → int32 → integer → real`.
    pub fn rank(&self) -> Option<u8> {
        match self {
            Type::UInt16 => Some(0),
            Type::Int32 => Some(1),
            Type::Integer => Some(2),
            Type::Real => Some(3),
            _ => None,
        }
    }

    /// True if a value of type `self` may be used where `target` is expected.
    pub fn widens_to(&self, target: &Type) -> bool {
        if self == target {
            return true;
        }
        match (self.rank(), target.rank()) {
            (Some(a), Some(b)) => a <= b,
            _ => false,
        }
    }

    /// True if the integer `v` is representable in this type.
    pub fn holds_int(&self, v: i64) -> bool {
        match self {
            Type::UInt16 => (0..=u16::MAX as i64).contains(&v),
            Type::Int32 => (i32::MIN as i64..=i32::MAX as i64).contains(&v),
            Type::Integer | Type::Real => true,
            _ => false,
        }
    }

    /// Reduces `v` into the value range of a fixed-width program type.
    pub fn wrap(&self, v: i64) -> i64 {
        match self {
            Type::UInt16 => v.rem_euclid(1 << 16),
            Type::Int32 => v as i32 as i64,
            _ => v,
        }
    }

    /// Zero value used for declarations without initializer.
    pub fn zero(&self) -> Value {
        match self {
            Type::Bool => Value::Bool(false),
            Type::Real => Value::Real(0.0),
            Type::Array(elem, n) => Value::array(vec![elem.zero(); *n]),
            _ => Value::Int(0),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Void => write!(f, "void"),
            Type::Bool => write!(f, "bool"),
            Type::UInt16 => write!(f, "uint16"),
            Type::Int32 => write!(f, "int32"),
            Type::Integer => write!(f, "integer"),
            Type::Real => write!(f, "real"),
            Type::Array(elem, n) => write!(f, "{elem}[{n}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Abs,
    Floor,
    Ceil,
    Exp,
    Log,
    Sqrt,
    Min,
    Max,
    NtcResistance,
    NtcVoltage,
    NtcCode,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "\\abs" => Builtin::Abs,
            "\\floor" => Builtin::Floor,
            "\\ceil" => Builtin::Ceil,
            "\\exp" => Builtin::Exp,
            "\\log" => Builtin::Log,
            "\\sqrt" => Builtin::Sqrt,
            "\\min" => Builtin::Min,
            "\\max" => Builtin::Max,
            "\\ntc_resistance" => Builtin::NtcResistance,
            "\\ntc_voltage" => Builtin::NtcVoltage,
            "\\ntc_code" => Builtin::NtcCode,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Min | Builtin::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    Const(Value),
    /// Function frame slot (parameters occupy the first slots).
    Local(usize),
    /// Entry value of a parameter, as seen from a contract.
    Param(usize),
    /// Final value of an out-parameter (`*p` in a contract).
    OutParam(usize),
    State(usize),
    /// Quantifier variable or logic-definition parameter.
    Bound(usize),
    Result,
    /// Evaluate in the pre-state (`\old(e)`, `\at(e, Pre)`).
    Old(Box<TExpr>),
    Unary(UnOp, Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    Compare(Vec<TExpr>, Vec<CmpOp>),
    Index(Box<TExpr>, Box<TExpr>),
    Cast(Box<TExpr>),
    Builtin(Builtin, Vec<TExpr>),
    /// Application of a predicate or logic function (index into
    /// [`TypedProgram::logic_defs`]).
    LogicCall(usize, Vec<TExpr>),
    /// Call of a program function (index into [`TypedProgram::functions`]).
    Call(usize, Vec<CallArg>),
    Quant {
        q: Quantifier,
        /// Binder slot of the quantified variable.
        slot: usize,
        /// Inclusive integer range, or `None` when the body does not bound
        /// the variable syntactically.
        range: Option<(Box<TExpr>, Box<TExpr>)>,
        body: Box<TExpr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Type,
    pub span: Span,
}

impl TExpr {
    pub fn new(kind: TExprKind, ty: Type, span: Span) -> Self {
        TExpr { kind, ty, span }
    }

    /// Direct sub-expressions, in source order.
    pub fn children(&self) -> Vec<&TExpr> {
        match &self.kind {
            TExprKind::Old(e) | TExprKind::Unary(_, e) | TExprKind::Cast(e) => vec![e],
            TExprKind::Binary(_, a, b) | TExprKind::Index(a, b) => vec![a, b],
            TExprKind::Compare(items, _)
            | TExprKind::Builtin(_, items)
            | TExprKind::LogicCall(_, items) => items.iter().collect(),
            TExprKind::Call(_, args) => args
                .iter()
                .filter_map(|a| match a {
                    CallArg::Value(e) => Some(e),
                    CallArg::Out(LValue::LocalIndex(_, e) | LValue::StateIndex(_, e)) => Some(&**e),
                    CallArg::Out(_) => None,
                })
                .collect(),
            TExprKind::Quant { range, body, .. } => {
                let mut v: Vec<&TExpr> = Vec::new();
                if let Some((lo, hi)) = range {
                    v.push(lo);
                    v.push(hi);
                }
                v.push(body);
                v
            }
            _ => Vec::new(),
        }
    }

    /// Calls `f` on this node and every sub-expression, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a TExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CallArg {
    Value(TExpr),
    /// `&lvalue` passed to an out-parameter.
    Out(LValue),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    Local(usize),
    State(usize),
    LocalIndex(usize, Box<TExpr>),
    StateIndex(usize, Box<TExpr>),
}

impl LValue {
    /// Index expression, if any.
    pub fn index(&self) -> Option<&TExpr> {
        match self {
            LValue::LocalIndex(_, e) | LValue::StateIndex(_, e) => Some(e),
            _ => None,
        }
    }

    pub fn state_slot(&self) -> Option<usize> {
        match self {
            LValue::State(s) | LValue::StateIndex(s, _) => Some(*s),
            _ => None,
        }
    }

    pub fn local_slot(&self) -> Option<usize> {
        match self {
            LValue::Local(s) | LValue::LocalIndex(s, _) => Some(*s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopInvariant {
    /// Conjunction of all `loop invariant` clauses of the annotation.
    pub expr: TExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TStmtKind {
    Assign {
        target: LValue,
        value: TExpr,
    },
    Expr(TExpr),
    If {
        cond: TExpr,
        then_block: TBlock,
        else_block: Option<TBlock>,
    },
    While {
        cond: TExpr,
        body: TBlock,
        invariant: Option<LoopInvariant>,
    },
    For {
        init: Option<Box<TStmt>>,
        cond: Option<TExpr>,
        step: Option<Box<TStmt>>,
        body: TBlock,
        invariant: Option<LoopInvariant>,
    },
    Return(Option<TExpr>),
    Break,
    Continue,
    Block(TBlock),
    Ghost(Box<TStmt>),
    Assert(TExpr),
    ExternEffect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TStmt {
    pub kind: TStmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TBlock {
    pub stmts: Vec<TStmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstInfo {
    pub name: String,
    pub module: Option<String>,
    pub ty: Type,
    pub value: Value,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVar {
    pub name: String,
    pub module: Option<String>,
    pub ty: Type,
    pub ghost: bool,
    pub init: Value,
    pub span: Span,
}

impl StateVar {
    /// `module::name` for module variables, the bare name otherwise.
    pub fn qualified_name(&self) -> String {
        match (&self.module, self.ghost) {
            (Some(m), false) => format!("{m}::{}", self.name),
            _ => self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TLogicDef {
    pub name: String,
    pub params: Vec<(String, Type)>,
    /// `Bool` for predicates.
    pub return_type: Type,
    pub is_predicate: bool,
    pub body: TExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TParam {
    pub name: String,
    pub ty: Type,
    pub out: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalInfo {
    pub name: String,
    pub ty: Type,
    pub ghost: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssignLoc {
    Nothing,
    State(usize),
    Param(usize),
    OutParam(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TAssigns {
    pub loc: AssignLoc,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TBehavior {
    pub name: String,
    pub assumes: Vec<TExpr>,
    pub ensures: Vec<TExpr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TContract {
    pub requires: Vec<TExpr>,
    pub assigns: Option<Vec<TAssigns>>,
    pub behaviors: Vec<TBehavior>,
    pub complete_declared: bool,
    pub disjoint_declared: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TFunction {
    pub name: String,
    pub module: Option<String>,
    pub hardware: bool,
    pub params: Vec<TParam>,
    pub return_type: Type,
    pub contract: Option<TContract>,
    pub body: Option<TBlock>,
    /// Frame layout; the first `params.len()` entries are the parameters.
    pub locals: Vec<LocalInfo>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub constants: Vec<ConstInfo>,
    /// Concrete module variables first, then ghosts.
    pub state_vars: Vec<StateVar>,
    pub logic_defs: Vec<TLogicDef>,
    pub functions: Vec<TFunction>,
    /// Source text per file, used to render goals from spans.
    pub sources: BTreeMap<String, String>,
}

impl TypedProgram {
    pub fn function(&self, name: &str) -> Option<&TFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn logic_def(&self, name: &str) -> Option<(usize, &TLogicDef)> {
        self.logic_defs
            .iter()
            .enumerate()
            .find(|(_, d)| d.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&ConstInfo> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// Number of concrete (non-ghost) state slots.
    pub fn concrete_state_len(&self) -> usize {
        self.state_vars.iter().take_while(|v| !v.ghost).count()
    }

    /// Finds a state variable by qualified name (`m::v`), ghost name, or
    /// unambiguous bare module-variable name.
    pub fn state_slot(&self, name: &str) -> Option<usize> {
        if let Some((m, v)) = name.split_once("::") {
            return self
                .state_vars
                .iter()
                .position(|s| !s.ghost && s.module.as_deref() == Some(m) && s.name == v);
        }
        let mut hits = self
            .state_vars
            .iter()
            .enumerate()
            .filter(|(_, s)| s.name == name);
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }

    /// Source text covered by `span`, with annotation margins (`@`) removed
    /// and whitespace collapsed.
    pub fn span_text(&self, span: &Span) -> Option<String> {
        let src = self.sources.get(&*span.file)?;
        let lines: Vec<&str> = src.lines().collect();
        let mut out = String::new();
        for line_no in span.line_start..=span.line_end {
            let line = lines.get(line_no as usize - 1)?;
            let chars: Vec<char> = line.chars().collect();
            let from = if line_no == span.line_start {
                span.col_start as usize - 1
            } else {
                0
            };
            let to = if line_no == span.line_end {
                (span.col_end as usize).min(chars.len())
            } else {
                chars.len()
            };
            let piece: String = chars.get(from..to)?.iter().collect();
            let piece = if line_no == span.line_start {
                piece
            } else {
                strip_margin(&piece).to_string()
            };
            out.push(' ');
            out.push_str(&piece);
        }
        Some(out.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

fn strip_margin(line: &str) -> &str {
    let t = line.trim_start();
    match t.strip_prefix('@') {
        Some(rest) => rest,
        None => t,
    }
}
