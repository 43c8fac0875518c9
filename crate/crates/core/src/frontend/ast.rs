//! Untyped syntax tree produced by the parser.
//!
//! Every node carries exactly one [`Span`]. [`Program::clear_spans`] resets
//! them so that two parses can be compared structurally.

use super::span::Span;

/// Source-level type names. `int` parses as `Int32`, `double` as `Real`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeName {
    Void,
    Bool,
    UInt16,
    Int32,
    Integer,
    Real,
}

impl TypeName {
    pub fn from_keyword(s: &str) -> Option<TypeName> {
        Some(match s {
            "void" => TypeName::Void,
            "bool" | "_Bool" | "boolean" => TypeName::Bool,
            "uint16_t" => TypeName::UInt16,
            "int32_t" | "int" => TypeName::Int32,
            "integer" => TypeName::Integer,
            "real" | "double" => TypeName::Real,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            TypeName::Void => "void",
            TypeName::Bool => "bool",
            TypeName::UInt16 => "uint16_t",
            TypeName::Int32 => "int32_t",
            TypeName::Integer => "integer",
            TypeName::Real => "real",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub imports: Vec<Import>,
    pub constants: Vec<VarDecl>,
    pub module_vars: Vec<VarDecl>,
    pub ghost_decls: Vec<VarDecl>,
    pub predicates: Vec<LogicDef>,
    pub logic_functions: Vec<LogicDef>,
    pub functions: Vec<FunctionDef>,
}

impl Program {
    /// Appends the declarations of `other`, keeping their order.
    pub fn merge(&mut self, other: Program) {
        self.imports.extend(other.imports);
        self.constants.extend(other.constants);
        self.module_vars.extend(other.module_vars);
        self.ghost_decls.extend(other.ghost_decls);
        self.predicates.extend(other.predicates);
        self.logic_functions.extend(other.logic_functions);
        self.functions.extend(other.functions);
    }

    pub fn is_empty(&self) -> bool {
        self.imports.is_empty()
            && self.constants.is_empty()
            && self.module_vars.is_empty()
            && self.ghost_decls.is_empty()
            && self.predicates.is_empty()
            && self.logic_functions.is_empty()
            && self.functions.is_empty()
    }

    pub fn clear_spans(&mut self) {
        for i in &mut self.imports {
            i.span = Span::dummy();
        }
        for d in self
            .constants
            .iter_mut()
            .chain(self.module_vars.iter_mut())
            .chain(self.ghost_decls.iter_mut())
        {
            d.clear_spans();
        }
        for l in self
            .predicates
            .iter_mut()
            .chain(self.logic_functions.iter_mut())
        {
            l.span = Span::dummy();
            for p in &mut l.params {
                p.span = Span::dummy();
            }
            l.body.clear_spans();
        }
        for f in &mut self.functions {
            f.clear_spans();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Import {
    pub path: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    /// File-scope `static`: visible only inside bodies of its own module.
    Static,
    /// Header-visible declaration.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    Expr(Expr),
    List(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub module: Option<String>,
    pub storage: Storage,
    pub is_const: bool,
    pub ty: TypeName,
    pub name: String,
    pub array_len: Option<u64>,
    pub init: Option<Initializer>,
    pub span: Span,
}

impl VarDecl {
    fn clear_spans(&mut self) {
        self.span = Span::dummy();
        match &mut self.init {
            Some(Initializer::Expr(e)) => e.clear_spans(),
            Some(Initializer::List(es)) => es.iter_mut().for_each(Expr::clear_spans),
            None => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicParam {
    pub ty: TypeName,
    pub name: String,
    pub span: Span,
}

/// `predicate P(..) = e;` (return type `None`) or `logic T f(..) = e;`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicDef {
    pub module: Option<String>,
    pub name: String,
    pub return_type: Option<TypeName>,
    pub params: Vec<LogicParam>,
    pub body: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeName,
    pub name: String,
    /// Out-reference parameter (`T* p`).
    pub out: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FunctionAttrs {
    pub hardware: bool,
    pub is_static: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub module: Option<String>,
    pub attrs: FunctionAttrs,
    pub return_type: TypeName,
    pub name: String,
    pub params: Vec<Param>,
    pub contract: Option<Contract>,
    /// `None` for a prototype.
    pub body: Option<Block>,
    pub span: Span,
}

impl FunctionDef {
    fn clear_spans(&mut self) {
        self.span = Span::dummy();
        for p in &mut self.params {
            p.span = Span::dummy();
        }
        if let Some(c) = &mut self.contract {
            c.clear_spans();
        }
        if let Some(b) = &mut self.body {
            b.clear_spans();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Location {
    Nothing,
    Name(String),
    Qualified(String, String),
    Deref(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignsTarget {
    pub location: Location,
    pub span: Span,
}

pub const DEFAULT_BEHAVIOR: &str = "default";

#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    /// [`DEFAULT_BEHAVIOR`] for clauses written outside any named behavior.
    pub name: String,
    pub assumes: Vec<Expr>,
    pub ensures: Vec<Expr>,
    pub span: Span,
}

impl Behavior {
    pub fn is_default(&self) -> bool {
        self.name == DEFAULT_BEHAVIOR
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub requires: Vec<Expr>,
    pub assigns: Option<Vec<AssignsTarget>>,
    pub behaviors: Vec<Behavior>,
    pub complete_declared: bool,
    pub disjoint_declared: bool,
    pub span: Span,
}

impl Contract {
    fn clear_spans(&mut self) {
        self.span = Span::dummy();
        self.requires.iter_mut().for_each(Expr::clear_spans);
        if let Some(a) = &mut self.assigns {
            for t in a {
                t.span = Span::dummy();
            }
        }
        for b in &mut self.behaviors {
            b.span = Span::dummy();
            b.assumes.iter_mut().for_each(Expr::clear_spans);
            b.ensures.iter_mut().for_each(Expr::clear_spans);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

impl Block {
    fn clear_spans(&mut self) {
        self.span = Span::dummy();
        self.stmts.iter_mut().for_each(Stmt::clear_spans);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopAnnot {
    pub invariants: Vec<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl {
        ty: TypeName,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
        annot: Option<LoopAnnot>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Block,
        annot: Option<LoopAnnot>,
    },
    Return(Option<Expr>),
    Break,
    Continue,
    Block(Block),
    /// `//@ ghost <stmt>`
    Ghost(Box<Stmt>),
    /// `//@ assert e;`
    Assert(Expr),
    /// Opaque hardware side effect, only legal in `hardware` functions.
    ExternEffect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    fn clear_spans(&mut self) {
        self.span = Span::dummy();
        match &mut self.kind {
            StmtKind::Decl { init, .. } => {
                if let Some(e) = init {
                    e.clear_spans();
                }
            }
            StmtKind::Assign { target, value } => {
                target.clear_spans();
                value.clear_spans();
            }
            StmtKind::Expr(e) | StmtKind::Assert(e) => e.clear_spans(),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                cond.clear_spans();
                then_block.clear_spans();
                if let Some(b) = else_block {
                    b.clear_spans();
                }
            }
            StmtKind::While { cond, body, annot } => {
                cond.clear_spans();
                body.clear_spans();
                clear_annot(annot);
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
                annot,
            } => {
                if let Some(s) = init {
                    s.clear_spans();
                }
                if let Some(c) = cond {
                    c.clear_spans();
                }
                if let Some(s) = step {
                    s.clear_spans();
                }
                body.clear_spans();
                clear_annot(annot);
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.clear_spans();
                }
            }
            StmtKind::Block(b) => b.clear_spans(),
            StmtKind::Ghost(s) => s.clear_spans(),
            StmtKind::Break | StmtKind::Continue | StmtKind::ExternEffect => {}
        }
    }
}

fn clear_annot(annot: &mut Option<LoopAnnot>) {
    if let Some(a) = annot {
        a.span = Span::dummy();
        a.invariants.iter_mut().for_each(Expr::clear_spans);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
    Deref,
    AddrOf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Implies,
    Equiv,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "==>",
            BinOp::Equiv => "<==>",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Pre,
    Here,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Real(f64),
    Bool(bool),
    Name(String),
    /// `module::name`
    Qualified(String, String),
    Result,
    Old(Box<Expr>),
    At(Box<Expr>, Label),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `a op b` or a chain `a op b op c`; `ops.len() == operands.len() - 1`.
    Compare(Vec<Expr>, Vec<CmpOp>),
    /// Program call, logic application, or `\builtin(..)` (name keeps the backslash).
    Call(String, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Cast(TypeName, Box<Expr>),
    Quant {
        q: Quantifier,
        ty: TypeName,
        var: String,
        body: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn clear_spans(&mut self) {
        self.span = Span::dummy();
        match &mut self.kind {
            ExprKind::Int(_)
            | ExprKind::Real(_)
            | ExprKind::Bool(_)
            | ExprKind::Name(_)
            | ExprKind::Qualified(..)
            | ExprKind::Result => {}
            ExprKind::Old(e)
            | ExprKind::At(e, _)
            | ExprKind::Unary(_, e)
            | ExprKind::Cast(_, e) => e.clear_spans(),
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
                a.clear_spans();
                b.clear_spans();
            }
            ExprKind::Compare(es, _) | ExprKind::Call(_, es) => {
                es.iter_mut().for_each(Expr::clear_spans)
            }
            ExprKind::Quant { body, .. } => body.clear_spans(),
        }
    }
}
