//! Name resolution and type checking.
//!
//! Visibility follows the header/implementation split of C modules:
//!
//! * contracts see parameters, constants, ghost state and logic
//!   definitions, but not module variables (assigns clauses may name them
//!   with a `module::` qualifier);
//! * concrete code sees locals, constants and module variables, never ghosts;
//! * ghost code and body annotations see everything, but ghost code may only
//!   write ghost locations;
//! * logic definitions see their parameters, constants and other logic
//!   definitions.

use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use super::span::Span;
use super::typed::*;
use super::ResolveError;
use crate::semantics::eval::eval_const;
use crate::semantics::Value;

type RResult<T> = Result<T, ResolveError>;

/// Resolves a parsed program. Goal text rendering needs the sources, see
/// [`resolve_with_sources`].
pub fn resolve(p: &Program) -> RResult<TypedProgram> {
    resolve_with_sources(p, BTreeMap::new())
}

pub fn resolve_with_sources(
    p: &Program,
    sources: BTreeMap<String, String>,
) -> RResult<TypedProgram> {
    let mut r = Resolver::default();
    r.constants(&p.constants)?;
    r.state(&p.module_vars, &p.ghost_decls)?;
    let defs: Vec<&LogicDef> = p
        .predicates
        .iter()
        .chain(p.logic_functions.iter())
        .collect();
    r.logic_signatures(&defs)?;
    let logic_defs = r.logic_bodies(&defs)?;
    let merged = r.function_signatures(&p.functions)?;
    let mut functions = Vec::new();
    for (i, m) in merged.iter().enumerate() {
        functions.push(r.function(i, m)?);
    }
    Ok(TypedProgram {
        constants: r.consts,
        state_vars: r.state,
        logic_defs,
        functions,
        sources,
    })
}

/// Resolves an expression written outside the program (coupling
/// assumptions, scenario expectations). It may mention ghosts, module
/// variables (qualified, or bare when unambiguous), constants, logic
/// definitions, `\old(..)`, and `\result` of `function` if given.
pub fn resolve_external_expr(
    tp: &TypedProgram,
    e: &Expr,
    function: Option<&str>,
) -> RResult<TExpr> {
    let mut r = Resolver {
        consts: tp.constants.clone(),
        state: tp.state_vars.clone(),
        ..Resolver::default()
    };
    for (i, d) in tp.logic_defs.iter().enumerate() {
        r.logic_index.insert(d.name.clone(), i);
        r.logic_sigs.push(LogicSig {
            params: d.params.iter().map(|(_, t)| t.clone()).collect(),
            ret: d.return_type.clone(),
        });
    }
    let sig = match function {
        Some(name) => {
            let f = tp
                .function(name)
                .ok_or_else(|| ResolveError::UndefinedName {
                    span: e.span.clone(),
                    name: name.to_string(),
                    hint: " (no such function)".into(),
                })?;
            Some(FnSig {
                name: f.name.clone(),
                module: f.module.clone(),
                hardware: f.hardware,
                params: f.params.clone(),
                ret: f.return_type.clone(),
            })
        }
        None => None,
    };
    let mut cx = ExprCtx {
        mode: Mode::External,
        sig: sig.as_ref(),
        frame: None,
        bound: Vec::new(),
    };
    let t = r.expr(e, &mut cx)?;
    r.expect_bool(&t)?;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    /// Constant and state initializers.
    Const,
    /// Body of a predicate or logic function.
    Logic,
    /// `requires` / `assumes`.
    Pre,
    /// `ensures`.
    Post,
    Code {
        ghost: bool,
    },
    /// `assert` and loop invariants inside a body.
    Annot,
    External,
}

impl Mode {
    fn is_logic(self) -> bool {
        !matches!(self, Mode::Const | Mode::Code { .. })
    }
}

#[derive(Debug, Clone)]
struct LogicSig {
    params: Vec<Type>,
    ret: Type,
}

#[derive(Debug, Clone)]
struct FnSig {
    name: String,
    module: Option<String>,
    hardware: bool,
    params: Vec<TParam>,
    ret: Type,
}

#[derive(Default)]
struct Frame {
    locals: Vec<LocalInfo>,
    scopes: Vec<Vec<(String, usize)>>,
    loop_depth: usize,
}

impl Frame {
    fn lookup(&self, name: &str) -> Option<usize> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.iter().rev().find(|(n, _)| n == name).map(|(_, i)| *i))
    }
}

struct ExprCtx<'a> {
    mode: Mode,
    sig: Option<&'a FnSig>,
    frame: Option<&'a Frame>,
    bound: Vec<(String, Type)>,
}

/// A function after merging its prototype and definition.
struct MergedFn<'p> {
    sig: FnSig,
    contract: Option<&'p Contract>,
    body: Option<&'p Block>,
    span: Span,
}

#[derive(Default)]
struct Resolver {
    consts: Vec<ConstInfo>,
    state: Vec<StateVar>,
    logic_sigs: Vec<LogicSig>,
    logic_index: HashMap<String, usize>,
    fn_sigs: Vec<FnSig>,
    fn_index: HashMap<String, usize>,
}

fn type_of(t: TypeName) -> Type {
    match t {
        TypeName::Void => Type::Void,
        TypeName::Bool => Type::Bool,
        TypeName::UInt16 => Type::UInt16,
        TypeName::Int32 => Type::Int32,
        TypeName::Integer => Type::Integer,
        TypeName::Real => Type::Real,
    }
}

fn mismatch(span: &Span, expected: impl ToString, found: impl ToString) -> ResolveError {
    ResolveError::TypeMismatch {
        span: span.clone(),
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

fn invalid(span: &Span, message: impl Into<String>) -> ResolveError {
    ResolveError::Invalid {
        span: span.clone(),
        message: message.into(),
    }
}

fn undefined(span: &Span, name: &str, hint: &str) -> ResolveError {
    ResolveError::UndefinedName {
        span: span.clone(),
        name: name.to_string(),
        hint: hint.to_string(),
    }
}

/// Type of an integer literal in program code: the narrowest fixed type
/// holding it.
fn literal_type(v: i64, logic: bool) -> Type {
    if logic {
        Type::Integer
    } else if Type::UInt16.holds_int(v) {
        Type::UInt16
    } else if Type::Int32.holds_int(v) {
        Type::Int32
    } else {
        Type::Integer
    }
}

fn check_assignable(target: &Type, value: &TExpr) -> RResult<()> {
    if value.ty.widens_to(target) {
        return Ok(());
    }
    if let TExprKind::Const(Value::Int(v)) = value.kind {
        if target.is_integral() && target.holds_int(v) {
            return Ok(());
        }
    }
    Err(mismatch(&value.span, target, &value.ty))
}

fn mentions_bound(e: &TExpr, slot: usize) -> bool {
    let mut hit = false;
    e.walk(&mut |n| {
        if matches!(n.kind, TExprKind::Bound(s) if s == slot) {
            hit = true;
        }
    });
    hit
}

fn is_bound(e: &TExpr, slot: usize) -> bool {
    matches!(e.kind, TExprKind::Bound(s) if s == slot)
}

fn plus(e: &TExpr, k: i64) -> TExpr {
    let one = TExpr::new(
        TExprKind::Const(Value::Int(k)),
        Type::Integer,
        e.span.clone(),
    );
    TExpr::new(
        TExprKind::Binary(BinOp::Add, Box::new(e.clone()), Box::new(one)),
        Type::Integer,
        e.span.clone(),
    )
}

/// Extracts an inclusive integer range for the quantified variable from the
/// guard of `\forall x; guard ==> P` / `\exists x; guard && P`.
fn quant_range(q: Quantifier, slot: usize, body: &TExpr) -> Option<(TExpr, TExpr)> {
    let guard = match (&body.kind, q) {
        (TExprKind::Binary(BinOp::Implies, g, _), Quantifier::Forall) => g,
        (TExprKind::Binary(BinOp::And, g, _), Quantifier::Exists) => g,
        _ => return None,
    };
    let mut conjuncts = Vec::new();
    flatten_and(guard, &mut conjuncts);
    let mut lo: Option<TExpr> = None;
    let mut hi: Option<TExpr> = None;
    for c in conjuncts {
        let TExprKind::Compare(items, ops) = &c.kind else {
            continue;
        };
        for (i, op) in ops.iter().enumerate() {
            let (a, b) = (&items[i], &items[i + 1]);
            // normalize to `a op b` with op in {<, <=}
            let (a, b, strict) = match op {
                CmpOp::Lt => (a, b, true),
                CmpOp::Le => (a, b, false),
                CmpOp::Gt => (b, a, true),
                CmpOp::Ge => (b, a, false),
                _ => continue,
            };
            if is_bound(b, slot) && !mentions_bound(a, slot) && a.ty.is_integral() {
                lo.get_or_insert(if strict { plus(a, 1) } else { a.clone() });
            } else if is_bound(a, slot) && !mentions_bound(b, slot) && b.ty.is_integral() {
                hi.get_or_insert(if strict { plus(b, -1) } else { b.clone() });
            }
        }
    }
    Some((lo?, hi?))
}

fn flatten_and<'a>(e: &'a TExpr, out: &mut Vec<&'a TExpr>) {
    if let TExprKind::Binary(BinOp::And, a, b) = &e.kind {
        flatten_and(a, out);
        flatten_and(b, out);
    } else {
        out.push(e);
    }
}

impl Resolver {
    // ---- declarations ----

    fn global_name_taken(&self, name: &str) -> bool {
        self.consts.iter().any(|c| c.name == name)
            || self.state.iter().any(|s| s.ghost && s.name == name)
    }

    fn constants(&mut self, decls: &[VarDecl]) -> RResult<()> {
        for d in decls {
            if self.global_name_taken(&d.name) {
                return Err(ResolveError::DuplicateName {
                    span: d.span.clone(),
                    name: d.name.clone(),
                    what: "constant",
                });
            }
            let (ty, value) = self.initial_value(d)?;
            if d.init.is_none() {
                return Err(invalid(
                    &d.span,
                    format!("constant `{}` needs an initializer", d.name),
                ));
            }
            self.consts.push(ConstInfo {
                name: d.name.clone(),
                module: d.module.clone(),
                ty,
                value,
                span: d.span.clone(),
            });
        }
        Ok(())
    }

    fn state(&mut self, module_vars: &[VarDecl], ghosts: &[VarDecl]) -> RResult<()> {
        for d in module_vars {
            let clash = self.consts.iter().any(|c| c.name == d.name)
                || self
                    .state
                    .iter()
                    .any(|s| s.name == d.name && s.module == d.module);
            if clash {
                return Err(ResolveError::DuplicateName {
                    span: d.span.clone(),
                    name: d.name.clone(),
                    what: "module variable",
                });
            }
            let (ty, init) = self.initial_value(d)?;
            self.state.push(StateVar {
                name: d.name.clone(),
                module: d.module.clone(),
                ty,
                ghost: false,
                init,
                span: d.span.clone(),
            });
        }
        for d in ghosts {
            if self.global_name_taken(&d.name) || self.state.iter().any(|s| s.name == d.name) {
                return Err(ResolveError::DuplicateName {
                    span: d.span.clone(),
                    name: d.name.clone(),
                    what: "ghost variable",
                });
            }
            let (ty, init) = self.initial_value(d)?;
            self.state.push(StateVar {
                name: d.name.clone(),
                module: d.module.clone(),
                ty,
                ghost: true,
                init,
                span: d.span.clone(),
            });
        }
        Ok(())
    }

    fn const_expr(&mut self, e: &Expr, target: &Type) -> RResult<Value> {
        let mut cx = ExprCtx {
            mode: Mode::Const,
            sig: None,
            frame: None,
            bound: Vec::new(),
        };
        let t = self.expr(e, &mut cx)?;
        check_assignable(target, &t)?;
        let v = eval_const(&t)
            .map_err(|err| invalid(&e.span, format!("cannot evaluate initializer: {err}")))?;
        Ok(v.coerce(target))
    }

    fn initial_value(&mut self, d: &VarDecl) -> RResult<(Type, Value)> {
        let elem = type_of(d.ty);
        if elem == Type::Void {
            return Err(invalid(&d.span, "variables cannot have type void"));
        }
        match d.array_len {
            None => {
                let v = match &d.init {
                    None => elem.zero(),
                    Some(Initializer::Expr(e)) => self.const_expr(e, &elem)?,
                    Some(Initializer::List(_)) => {
                        return Err(invalid(&d.span, "brace initializer on a scalar"));
                    }
                };
                Ok((elem, v))
            }
            Some(n) => {
                let n = n as usize;
                let ty = Type::Array(Box::new(elem.clone()), n);
                let v = match &d.init {
                    None => ty.zero(),
                    Some(Initializer::List(items)) => {
                        if items.len() > n {
                            return Err(invalid(
                                &d.span,
                                format!("{} initializers for an array of length {n}", items.len()),
                            ));
                        }
                        let mut vals = Vec::with_capacity(n);
                        for e in items {
                            vals.push(self.const_expr(e, &elem)?);
                        }
                        vals.resize(n, elem.zero());
                        Value::array(vals)
                    }
                    // `= v` on an array fills every element
                    Some(Initializer::Expr(e)) => Value::array(vec![self.const_expr(e, &elem)?; n]),
                };
                Ok((ty, v))
            }
        }
    }

    fn logic_signatures(&mut self, defs: &[&LogicDef]) -> RResult<()> {
        for d in defs {
            if self.logic_index.contains_key(&d.name) {
                return Err(ResolveError::DuplicateName {
                    span: d.span.clone(),
                    name: d.name.clone(),
                    what: "logic definition",
                });
            }
            let mut params = Vec::new();
            for (i, p) in d.params.iter().enumerate() {
                if d.params[..i].iter().any(|q| q.name == p.name) {
                    return Err(ResolveError::DuplicateName {
                        span: p.span.clone(),
                        name: p.name.clone(),
                        what: "parameter",
                    });
                }
                let t = type_of(p.ty);
                if t == Type::Void {
                    return Err(invalid(&p.span, "parameters cannot have type void"));
                }
                params.push(t);
            }
            let ret = match d.return_type {
                None => Type::Bool,
                Some(TypeName::Void) => {
                    return Err(invalid(&d.span, "logic functions cannot return void"))
                }
                Some(t) => type_of(t),
            };
            self.logic_index
                .insert(d.name.clone(), self.logic_sigs.len());
            self.logic_sigs.push(LogicSig { params, ret });
        }
        Ok(())
    }

    fn logic_bodies(&mut self, defs: &[&LogicDef]) -> RResult<Vec<TLogicDef>> {
        let mut out = Vec::new();
        for (i, d) in defs.iter().enumerate() {
            let sig = self.logic_sigs[i].clone();
            let mut cx = ExprCtx {
                mode: Mode::Logic,
                sig: None,
                frame: None,
                bound: d
                    .params
                    .iter()
                    .map(|p| p.name.clone())
                    .zip(sig.params.iter().cloned())
                    .collect(),
            };
            let body = self.expr(&d.body, &mut cx)?;
            check_assignable(&sig.ret, &body)?;
            out.push(TLogicDef {
                name: d.name.clone(),
                params: d
                    .params
                    .iter()
                    .map(|p| p.name.clone())
                    .zip(sig.params)
                    .collect(),
                return_type: sig.ret,
                is_predicate: d.return_type.is_none(),
                body,
                span: d.span.clone(),
            });
        }
        Ok(out)
    }

    fn function_signatures<'p>(&mut self, fns: &'p [FunctionDef]) -> RResult<Vec<MergedFn<'p>>> {
        let mut merged: Vec<MergedFn<'p>> = Vec::new();
        for f in fns {
            let mut params = Vec::new();
            for (i, p) in f.params.iter().enumerate() {
                if f.params[..i].iter().any(|q| q.name == p.name) {
                    return Err(ResolveError::DuplicateName {
                        span: p.span.clone(),
                        name: p.name.clone(),
                        what: "parameter",
                    });
                }
                let ty = type_of(p.ty);
                if ty == Type::Void {
                    return Err(invalid(&p.span, "parameters cannot have type void"));
                }
                params.push(TParam {
                    name: p.name.clone(),
                    ty,
                    out: p.out,
                    span: p.span.clone(),
                });
            }
            let sig = FnSig {
                name: f.name.clone(),
                module: f.module.clone(),
                hardware: f.attrs.hardware,
                params,
                ret: type_of(f.return_type),
            };
            if let Some(&i) = self.fn_index.get(&f.name) {
                let m = &mut merged[i];
                let same = m.sig.ret == sig.ret
                    && m.sig.params.len() == sig.params.len()
                    && m.sig
                        .params
                        .iter()
                        .zip(&sig.params)
                        .all(|(a, b)| a.name == b.name && a.ty == b.ty && a.out == b.out);
                if !same {
                    return Err(invalid(
                        &f.span,
                        format!(
                            "declaration of `{}` does not match its earlier declaration",
                            f.name
                        ),
                    ));
                }
                if (f.contract.is_some() && m.contract.is_some())
                    || (f.body.is_some() && m.body.is_some())
                {
                    return Err(ResolveError::DuplicateName {
                        span: f.span.clone(),
                        name: f.name.clone(),
                        what: if f.body.is_some() {
                            "function definition"
                        } else {
                            "function contract"
                        },
                    });
                }
                m.sig.hardware |= sig.hardware;
                if f.contract.is_some() {
                    m.contract = f.contract.as_ref();
                }
                if f.body.is_some() {
                    m.body = f.body.as_ref();
                    m.span = f.span.clone();
                }
                self.fn_sigs[i].hardware = m.sig.hardware;
                continue;
            }
            self.fn_index.insert(f.name.clone(), merged.len());
            self.fn_sigs.push(sig.clone());
            merged.push(MergedFn {
                sig,
                contract: f.contract.as_ref(),
                body: f.body.as_ref(),
                span: f.span.clone(),
            });
        }
        Ok(merged)
    }

    fn function(&mut self, index: usize, m: &MergedFn<'_>) -> RResult<TFunction> {
        let sig = self.fn_sigs[index].clone();
        let contract = match m.contract {
            Some(c) => Some(self.contract(c, &sig)?),
            None => None,
        };
        let mut frame = Frame::default();
        frame.scopes.push(Vec::new());
        for (i, p) in sig.params.iter().enumerate() {
            frame.locals.push(LocalInfo {
                name: p.name.clone(),
                ty: p.ty.clone(),
                ghost: false,
            });
            frame.scopes[0].push((p.name.clone(), i));
        }
        let body = match m.body {
            Some(b) => Some(self.block(b, &sig, &mut frame, false)?),
            None => None,
        };
        Ok(TFunction {
            name: sig.name.clone(),
            module: sig.module.clone(),
            hardware: sig.hardware,
            params: sig.params.clone(),
            return_type: sig.ret.clone(),
            contract,
            body,
            locals: frame.locals,
            span: m.span.clone(),
        })
    }

    fn contract(&mut self, c: &Contract, sig: &FnSig) -> RResult<TContract> {
        let mut requires = Vec::new();
        for e in &c.requires {
            requires.push(self.logic_bool(e, Mode::Pre, sig)?);
        }
        let assigns = match &c.assigns {
            None => None,
            Some(targets) => {
                let mut out = Vec::new();
                for t in targets {
                    out.push(TAssigns {
                        loc: self.assigns_loc(t, sig)?,
                        span: t.span.clone(),
                    });
                }
                Some(out)
            }
        };
        let mut behaviors: Vec<TBehavior> = Vec::new();
        for b in &c.behaviors {
            if behaviors.iter().any(|x| x.name == b.name) {
                return Err(ResolveError::DuplicateName {
                    span: b.span.clone(),
                    name: b.name.clone(),
                    what: "behavior",
                });
            }
            let mut assumes = Vec::new();
            for e in &b.assumes {
                assumes.push(self.logic_bool(e, Mode::Pre, sig)?);
            }
            let mut ensures = Vec::new();
            for e in &b.ensures {
                ensures.push(self.logic_bool(e, Mode::Post, sig)?);
            }
            behaviors.push(TBehavior {
                name: b.name.clone(),
                assumes,
                ensures,
                span: b.span.clone(),
            });
        }
        if (c.complete_declared || c.disjoint_declared)
            && !behaviors.iter().any(|b| !b.assumes.is_empty())
        {
            return Err(invalid(
                &c.span,
                "`complete`/`disjoint behaviors` need at least one behavior with `assumes`",
            ));
        }
        Ok(TContract {
            requires,
            assigns,
            behaviors,
            complete_declared: c.complete_declared,
            disjoint_declared: c.disjoint_declared,
            span: c.span.clone(),
        })
    }

    fn logic_bool(&mut self, e: &Expr, mode: Mode, sig: &FnSig) -> RResult<TExpr> {
        let mut cx = ExprCtx {
            mode,
            sig: Some(sig),
            frame: None,
            bound: Vec::new(),
        };
        let t = self.expr(e, &mut cx)?;
        self.expect_bool(&t)?;
        Ok(t)
    }

    fn expect_bool(&self, t: &TExpr) -> RResult<()> {
        if t.ty == Type::Bool {
            Ok(())
        } else {
            Err(mismatch(&t.span, Type::Bool, &t.ty))
        }
    }

    fn assigns_loc(&self, t: &AssignsTarget, sig: &FnSig) -> RResult<AssignLoc> {
        match &t.location {
            Location::Nothing => Ok(AssignLoc::Nothing),
            Location::Deref(p) => match sig.params.iter().position(|q| &q.name == p) {
                Some(i) if sig.params[i].out => Ok(AssignLoc::OutParam(i)),
                Some(_) => Err(invalid(&t.span, format!("`{p}` is not an out-parameter"))),
                None => Err(undefined(&t.span, p, "")),
            },
            Location::Name(n) => {
                if let Some(i) = sig.params.iter().position(|q| &q.name == n) {
                    return Ok(AssignLoc::Param(i));
                }
                if let Some(i) = self.state.iter().position(|s| s.ghost && &s.name == n) {
                    return Ok(AssignLoc::State(i));
                }
                if self.state.iter().any(|s| !s.ghost && &s.name == n) {
                    return Err(undefined(
                        &t.span,
                        n,
                        " (module variables are not visible in contracts; qualify it as `module::name`)",
                    ));
                }
                Err(undefined(&t.span, n, ""))
            }
            Location::Qualified(m, v) => self
                .state
                .iter()
                .position(|s| !s.ghost && s.module.as_deref() == Some(m) && &s.name == v)
                .map(AssignLoc::State)
                .ok_or_else(|| undefined(&t.span, &format!("{m}::{v}"), "")),
        }
    }

    // ---- statements ----

    fn block(&mut self, b: &Block, sig: &FnSig, frame: &mut Frame, ghost: bool) -> RResult<TBlock> {
        frame.scopes.push(Vec::new());
        let mut stmts = Vec::new();
        for s in &b.stmts {
            let r = self.stmt(s, sig, frame, ghost);
            match r {
                Ok(t) => stmts.push(t),
                Err(e) => {
                    frame.scopes.pop();
                    return Err(e);
                }
            }
        }
        frame.scopes.pop();
        Ok(TBlock {
            stmts,
            span: b.span.clone(),
        })
    }

    fn code_expr(
        &mut self,
        e: &Expr,
        sig: &FnSig,
        frame: &Frame,
        ghost: bool,
        allow_call: bool,
    ) -> RResult<TExpr> {
        if !allow_call {
            self.reject_nested_calls(e)?;
        } else if let ExprKind::Call(_, args) = &e.kind {
            for a in args {
                self.reject_nested_calls(a)?;
            }
        }
        let mut cx = ExprCtx {
            mode: Mode::Code { ghost },
            sig: Some(sig),
            frame: Some(frame),
            bound: Vec::new(),
        };
        self.expr(e, &mut cx)
    }

    /// Program calls may only appear as a whole statement, an assignment or
    /// initializer right-hand side, or a return value.
    fn reject_nested_calls(&self, e: &Expr) -> RResult<()> {
        let mut found = None;
        visit_expr(e, &mut |x| {
            if let ExprKind::Call(name, _) = &x.kind {
                if found.is_none() && self.fn_index.contains_key(name) {
                    found = Some(x.span.clone());
                }
            }
        });
        match found {
            Some(span) => Err(invalid(
                &span,
                "function calls may only appear as a statement, an assigned value, or a return value",
            )),
            None => Ok(()),
        }
    }

    fn annot_expr(&mut self, e: &Expr, sig: &FnSig, frame: &Frame) -> RResult<TExpr> {
        let mut cx = ExprCtx {
            mode: Mode::Annot,
            sig: Some(sig),
            frame: Some(frame),
            bound: Vec::new(),
        };
        let t = self.expr(e, &mut cx)?;
        self.expect_bool(&t)?;
        Ok(t)
    }

    fn new_local(
        &self,
        frame: &mut Frame,
        name: &str,
        ty: Type,
        ghost: bool,
        span: &Span,
    ) -> RResult<usize> {
        let scope = frame.scopes.last_mut().expect("scope");
        if scope.iter().any(|(n, _)| n == name) {
            return Err(ResolveError::DuplicateName {
                span: span.clone(),
                name: name.to_string(),
                what: "local variable",
            });
        }
        let slot = frame.locals.len();
        frame.locals.push(LocalInfo {
            name: name.to_string(),
            ty,
            ghost,
        });
        frame
            .scopes
            .last_mut()
            .expect("scope")
            .push((name.to_string(), slot));
        Ok(slot)
    }

    fn stmt(&mut self, s: &Stmt, sig: &FnSig, frame: &mut Frame, ghost: bool) -> RResult<TStmt> {
        let kind = match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                let ty = type_of(*ty);
                if ty == Type::Void {
                    return Err(invalid(&s.span, "variables cannot have type void"));
                }
                let value = match init {
                    Some(e) => {
                        let v = self.code_expr(e, sig, frame, ghost, true)?;
                        check_assignable(&ty, &v)?;
                        v
                    }
                    None => TExpr::new(TExprKind::Const(ty.zero()), ty.clone(), s.span.clone()),
                };
                let slot = self.new_local(frame, name, ty, ghost, &s.span)?;
                TStmtKind::Assign {
                    target: LValue::Local(slot),
                    value,
                }
            }
            StmtKind::Assign { target, value } => {
                let value = self.code_expr(value, sig, frame, ghost, true)?;
                let (lv, ty) = self.lvalue(target, sig, frame, ghost)?;
                check_assignable(&ty, &value)?;
                TStmtKind::Assign { target: lv, value }
            }
            StmtKind::Expr(e) => {
                if ghost {
                    return Err(invalid(&s.span, "ghost code cannot call program functions"));
                }
                TStmtKind::Expr(self.code_expr(e, sig, frame, ghost, true)?)
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let cond = self.code_expr(cond, sig, frame, ghost, false)?;
                self.expect_bool(&cond)?;
                let then_block = self.block(then_block, sig, frame, ghost)?;
                let else_block = match else_block {
                    Some(b) => Some(self.block(b, sig, frame, ghost)?),
                    None => None,
                };
                TStmtKind::If {
                    cond,
                    then_block,
                    else_block,
                }
            }
            StmtKind::While { cond, body, annot } => {
                let cond = self.code_expr(cond, sig, frame, ghost, false)?;
                self.expect_bool(&cond)?;
                let invariant = self.loop_invariant(annot.as_ref(), sig, frame)?;
                frame.loop_depth += 1;
                let body = self.block(body, sig, frame, ghost);
                frame.loop_depth -= 1;
                TStmtKind::While {
                    cond,
                    body: body?,
                    invariant,
                }
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
                annot,
            } => {
                frame.scopes.push(Vec::new());
                let r = self.for_loop(init, cond, step, body, annot, sig, frame, ghost);
                frame.scopes.pop();
                r?
            }
            StmtKind::Return(e) => {
                let value = match e {
                    Some(e) => {
                        let v = self.code_expr(e, sig, frame, ghost, true)?;
                        if sig.ret == Type::Void {
                            return Err(invalid(&s.span, "void function returns a value"));
                        }
                        check_assignable(&sig.ret, &v)?;
                        Some(v)
                    }
                    None => {
                        if sig.ret != Type::Void {
                            return Err(invalid(
                                &s.span,
                                format!("`{}` must return a value", sig.name),
                            ));
                        }
                        None
                    }
                };
                if ghost {
                    return Err(invalid(&s.span, "ghost code cannot return"));
                }
                TStmtKind::Return(value)
            }
            StmtKind::Break | StmtKind::Continue => {
                if frame.loop_depth == 0 {
                    return Err(invalid(&s.span, "`break`/`continue` outside a loop"));
                }
                if matches!(s.kind, StmtKind::Break) {
                    TStmtKind::Break
                } else {
                    TStmtKind::Continue
                }
            }
            StmtKind::Block(b) => TStmtKind::Block(self.block(b, sig, frame, ghost)?),
            StmtKind::Ghost(inner) => {
                if !matches!(inner.kind, StmtKind::Decl { .. } | StmtKind::Assign { .. }) {
                    return Err(invalid(
                        &s.span,
                        "ghost statements must be declarations or assignments",
                    ));
                }
                TStmtKind::Ghost(Box::new(self.stmt(inner, sig, frame, true)?))
            }
            StmtKind::Assert(e) => TStmtKind::Assert(self.annot_expr(e, sig, frame)?),
            StmtKind::ExternEffect => {
                if !sig.hardware {
                    return Err(invalid(
                        &s.span,
                        "`extern_effect` is only allowed in hardware functions",
                    ));
                }
                TStmtKind::ExternEffect
            }
        };
        Ok(TStmt {
            kind,
            span: s.span.clone(),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn for_loop(
        &mut self,
        init: &Option<Box<Stmt>>,
        cond: &Option<Expr>,
        step: &Option<Box<Stmt>>,
        body: &Block,
        annot: &Option<LoopAnnot>,
        sig: &FnSig,
        frame: &mut Frame,
        ghost: bool,
    ) -> RResult<TStmtKind> {
        let init = match init {
            Some(s) => Some(Box::new(self.stmt(s, sig, frame, ghost)?)),
            None => None,
        };
        let cond = match cond {
            Some(c) => {
                let c = self.code_expr(c, sig, frame, ghost, false)?;
                self.expect_bool(&c)?;
                Some(c)
            }
            None => None,
        };
        let invariant = self.loop_invariant(annot.as_ref(), sig, frame)?;
        let step = match step {
            Some(s) => Some(Box::new(self.stmt(s, sig, frame, ghost)?)),
            None => None,
        };
        frame.loop_depth += 1;
        let body = self.block(body, sig, frame, ghost);
        frame.loop_depth -= 1;
        Ok(TStmtKind::For {
            init,
            cond,
            step,
            body: body?,
            invariant,
        })
    }

    fn loop_invariant(
        &mut self,
        annot: Option<&LoopAnnot>,
        sig: &FnSig,
        frame: &Frame,
    ) -> RResult<Option<LoopInvariant>> {
        let Some(annot) = annot else { return Ok(None) };
        let mut acc: Option<TExpr> = None;
        for e in &annot.invariants {
            let t = self.annot_expr(e, sig, frame)?;
            acc = Some(match acc {
                None => t,
                Some(prev) => {
                    let span = prev.span.to(&t.span);
                    TExpr::new(
                        TExprKind::Binary(BinOp::And, Box::new(prev), Box::new(t)),
                        Type::Bool,
                        span,
                    )
                }
            });
        }
        Ok(acc.map(|expr| LoopInvariant {
            expr,
            span: annot.span.clone(),
        }))
    }

    fn lvalue(
        &mut self,
        e: &Expr,
        sig: &FnSig,
        frame: &Frame,
        ghost: bool,
    ) -> RResult<(LValue, Type)> {
        let check_ghost = |is_ghost: bool, name: &str| -> RResult<()> {
            if ghost && !is_ghost {
                Err(ResolveError::IllegalWrite {
                    span: e.span.clone(),
                    name: name.to_string(),
                    reason: "ghost code may only write ghost variables".into(),
                })
            } else if !ghost && is_ghost {
                Err(ResolveError::IllegalWrite {
                    span: e.span.clone(),
                    name: name.to_string(),
                    reason: "ghost variables can only be written by ghost code".into(),
                })
            } else {
                Ok(())
            }
        };
        match &e.kind {
            ExprKind::Name(n) => {
                if let Some(slot) = frame.lookup(n) {
                    let info = &frame.locals[slot];
                    if slot < sig.params.len() && sig.params[slot].out {
                        return Err(invalid(
                            &e.span,
                            format!("out-parameter `{n}` must be written through `*{n}`"),
                        ));
                    }
                    check_ghost(info.ghost, n)?;
                    return Ok((LValue::Local(slot), info.ty.clone()));
                }
                if self.consts.iter().any(|c| &c.name == n) {
                    return Err(ResolveError::IllegalWrite {
                        span: e.span.clone(),
                        name: n.clone(),
                        reason: "constants are read-only".into(),
                    });
                }
                let slot =
                    self.state_lookup(n, sig.module.as_deref(), Mode::Code { ghost }, &e.span)?;
                check_ghost(self.state[slot].ghost, n)?;
                Ok((LValue::State(slot), self.state[slot].ty.clone()))
            }
            ExprKind::Qualified(m, v) => {
                let slot = self.qualified_lookup(m, v, &e.span)?;
                check_ghost(false, v)?;
                Ok((LValue::State(slot), self.state[slot].ty.clone()))
            }
            ExprKind::Unary(UnOp::Deref, inner) => {
                let ExprKind::Name(n) = &inner.kind else {
                    return Err(invalid(&e.span, "only out-parameters can be dereferenced"));
                };
                match sig.params.iter().position(|p| &p.name == n) {
                    Some(i) if sig.params[i].out => {
                        check_ghost(false, n)?;
                        Ok((LValue::Local(i), sig.params[i].ty.clone()))
                    }
                    _ => Err(invalid(&e.span, format!("`{n}` is not an out-parameter"))),
                }
            }
            ExprKind::Index(base, idx) => {
                let (lv, ty) = self.lvalue(base, sig, frame, ghost)?;
                let Type::Array(elem, _) = ty else {
                    return Err(mismatch(&base.span, "array", ty));
                };
                let idx = self.code_expr(idx, sig, frame, ghost, false)?;
                if !idx.ty.is_integral() {
                    return Err(mismatch(&idx.span, "integer", &idx.ty));
                }
                let lv = match lv {
                    LValue::Local(s) => LValue::LocalIndex(s, Box::new(idx)),
                    LValue::State(s) => LValue::StateIndex(s, Box::new(idx)),
                    _ => return Err(invalid(&e.span, "nested array indexing is not supported")),
                };
                Ok((lv, *elem))
            }
            _ => Err(invalid(&e.span, "left-hand side is not assignable")),
        }
    }

    // ---- names ----

    /// Finds a module/ghost variable by bare name as seen from `module`.
    fn state_lookup(
        &self,
        name: &str,
        module: Option<&str>,
        mode: Mode,
        span: &Span,
    ) -> RResult<usize> {
        if let Some(i) = self.state.iter().position(|s| s.ghost && s.name == name) {
            return match mode {
                Mode::Code { ghost: false } => Err(undefined(
                    span,
                    name,
                    " (ghost variables cannot be read by concrete code)",
                )),
                Mode::Const | Mode::Logic => Err(undefined(span, name, "")),
                _ => Ok(i),
            };
        }
        let candidates: Vec<usize> = self
            .state
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.ghost && s.name == name)
            .map(|(i, _)| i)
            .collect();
        if candidates.is_empty() {
            return Err(undefined(span, name, ""));
        }
        match mode {
            Mode::Pre | Mode::Post => {
                return Err(undefined(
                    span,
                    name,
                    " (module variables are not visible in contracts; use a ghost variable)",
                ))
            }
            Mode::Const | Mode::Logic => return Err(undefined(span, name, "")),
            _ => {}
        }
        if let Some(&i) = candidates
            .iter()
            .find(|&&i| self.state[i].module.as_deref() == module)
        {
            return Ok(i);
        }
        // Code sees only its own module's variables unqualified; external
        // expressions may use any unambiguous bare name.
        match (mode, candidates.as_slice()) {
            (Mode::External, [i]) => Ok(*i),
            (Mode::External, _) => Err(invalid(
                span,
                format!("`{name}` is ambiguous; qualify it as `module::{name}`"),
            )),
            _ => Err(undefined(
                span,
                name,
                " (variable of another module; qualify it as `module::name`)",
            )),
        }
    }

    fn qualified_lookup(&self, m: &str, v: &str, span: &Span) -> RResult<usize> {
        self.state
            .iter()
            .position(|s| !s.ghost && s.module.as_deref() == Some(m) && s.name == v)
            .ok_or_else(|| undefined(span, &format!("{m}::{v}"), ""))
    }

    // ---- expressions ----

    fn expr(&mut self, e: &Expr, cx: &mut ExprCtx<'_>) -> RResult<TExpr> {
        let logic = cx.mode.is_logic();
        let span = e.span.clone();
        let t = match &e.kind {
            ExprKind::Int(v) => TExpr::new(
                TExprKind::Const(Value::Int(*v)),
                literal_type(*v, logic),
                span,
            ),
            ExprKind::Real(v) => TExpr::new(TExprKind::Const(Value::Real(*v)), Type::Real, span),
            ExprKind::Bool(b) => TExpr::new(TExprKind::Const(Value::Bool(*b)), Type::Bool, span),
            ExprKind::Name(n) => self.name(n, &span, cx)?,
            ExprKind::Qualified(m, v) => {
                match cx.mode {
                    Mode::Code { .. } | Mode::Annot | Mode::External => {
                        let slot = self.qualified_lookup(m, v, &span)?;
                        TExpr::new(TExprKind::State(slot), self.state[slot].ty.clone(), span)
                    }
                    Mode::Pre | Mode::Post => return Err(undefined(
                        &span,
                        &format!("{m}::{v}"),
                        " (module variables may only be named in `assigns` clauses of a contract)",
                    )),
                    _ => return Err(undefined(&span, &format!("{m}::{v}"), "")),
                }
            }
            ExprKind::Result => {
                let ret = match (cx.mode, cx.sig) {
                    (Mode::Post | Mode::External, Some(sig)) => sig.ret.clone(),
                    _ => {
                        return Err(invalid(
                            &span,
                            "`\\result` is only available in `ensures` clauses",
                        ))
                    }
                };
                if ret == Type::Void {
                    return Err(invalid(&span, "`\\result` used in a void function"));
                }
                TExpr::new(TExprKind::Result, ret, span)
            }
            ExprKind::Old(inner) | ExprKind::At(inner, Label::Pre) => {
                if !matches!(cx.mode, Mode::Post | Mode::Annot | Mode::External) {
                    return Err(invalid(&span, "pre-state values are not available here"));
                }
                let saved = cx.mode;
                // inside \old the pre-state reading of out-parameters applies
                if cx.mode == Mode::Post {
                    cx.mode = Mode::Pre;
                }
                let t = self.expr(inner, cx);
                cx.mode = saved;
                let t = t?;
                let ty = t.ty.clone();
                TExpr::new(TExprKind::Old(Box::new(t)), ty, span)
            }
            ExprKind::At(inner, Label::Here) => {
                let t = self.expr(inner, cx)?;
                TExpr::new(t.kind, t.ty, span)
            }
            ExprKind::Unary(op, inner) => self.unary(*op, inner, span, cx)?,
            ExprKind::Binary(op, a, b) => {
                let a = self.expr(a, cx)?;
                let b = self.expr(b, cx)?;
                self.binary(*op, a, b, span, logic)?
            }
            ExprKind::Compare(items, ops) => {
                let mut typed = Vec::new();
                for it in items {
                    typed.push(self.expr(it, cx)?);
                }
                for (i, op) in ops.iter().enumerate() {
                    let (a, b) = (&typed[i], &typed[i + 1]);
                    let ok = (a.ty.is_numeric() && b.ty.is_numeric())
                        || (a.ty == Type::Bool
                            && b.ty == Type::Bool
                            && matches!(op, CmpOp::Eq | CmpOp::Ne));
                    if !ok {
                        let expected = if a.ty == Type::Bool {
                            "bool"
                        } else {
                            "numeric"
                        };
                        let culprit = if a.ty.is_numeric() || a.ty == Type::Bool {
                            b
                        } else {
                            a
                        };
                        return Err(mismatch(&culprit.span, expected, &culprit.ty));
                    }
                }
                TExpr::new(TExprKind::Compare(typed, ops.clone()), Type::Bool, span)
            }
            ExprKind::Call(name, args) => self.call(name, args, span, cx)?,
            ExprKind::Index(base, idx) => {
                let base = self.expr(base, cx)?;
                let idx = self.expr(idx, cx)?;
                let Type::Array(elem, _) = &base.ty else {
                    return Err(mismatch(&base.span, "array", &base.ty));
                };
                if !idx.ty.is_integral() {
                    return Err(mismatch(&idx.span, "integer", &idx.ty));
                }
                let elem = (**elem).clone();
                TExpr::new(TExprKind::Index(Box::new(base), Box::new(idx)), elem, span)
            }
            ExprKind::Cast(ty, inner) => {
                let target = type_of(*ty);
                let t = self.expr(inner, cx)?;
                if !target.is_numeric() || !t.ty.is_numeric() {
                    return Err(mismatch(&t.span, "numeric", &t.ty));
                }
                TExpr::new(TExprKind::Cast(Box::new(t)), target, span)
            }
            ExprKind::Quant { q, ty, var, body } => {
                let vty = type_of(*ty);
                if !vty.is_numeric() {
                    return Err(mismatch(&span, "numeric quantifier variable", vty));
                }
                let slot = cx.bound.len();
                let bound_ty = if vty == Type::Real {
                    Type::Real
                } else {
                    Type::Integer
                };
                cx.bound.push((var.clone(), bound_ty));
                let b = self.expr(body, cx);
                cx.bound.pop();
                let b = b?;
                self.expect_bool(&b)?;
                let range = if vty == Type::Real {
                    None
                } else {
                    quant_range(*q, slot, &b).map(|(lo, hi)| (Box::new(lo), Box::new(hi)))
                };
                TExpr::new(
                    TExprKind::Quant {
                        q: *q,
                        slot,
                        range,
                        body: Box::new(b),
                    },
                    Type::Bool,
                    span,
                )
            }
        };
        Ok(t)
    }

    fn name(&self, n: &str, span: &Span, cx: &ExprCtx<'_>) -> RResult<TExpr> {
        if let Some(i) = cx.bound.iter().rposition(|(b, _)| b == n) {
            return Ok(TExpr::new(
                TExprKind::Bound(i),
                cx.bound[i].1.clone(),
                span.clone(),
            ));
        }
        match cx.mode {
            Mode::Code { .. } | Mode::Annot => {
                let frame = cx.frame.expect("frame");
                if let Some(slot) = frame.lookup(n) {
                    let sig = cx.sig.expect("sig");
                    if slot < sig.params.len() && sig.params[slot].out {
                        return Err(invalid(
                            span,
                            format!("out-parameter `{n}` must be read through `*{n}`"),
                        ));
                    }
                    let info = &frame.locals[slot];
                    if info.ghost && cx.mode == (Mode::Code { ghost: false }) {
                        return Err(undefined(
                            span,
                            n,
                            " (ghost variables cannot be read by concrete code)",
                        ));
                    }
                    return Ok(TExpr::new(
                        TExprKind::Local(slot),
                        info.ty.clone(),
                        span.clone(),
                    ));
                }
            }
            Mode::Pre | Mode::Post => {
                let sig = cx.sig.expect("sig");
                if let Some(i) = sig.params.iter().position(|p| p.name == n) {
                    if sig.params[i].out {
                        return Err(invalid(
                            span,
                            format!("out-parameter `{n}` must be read through `*{n}`"),
                        ));
                    }
                    return Ok(TExpr::new(
                        TExprKind::Param(i),
                        sig.params[i].ty.clone(),
                        span.clone(),
                    ));
                }
            }
            _ => {}
        }
        if let Some(c) = self.consts.iter().find(|c| c.name == n) {
            return Ok(TExpr::new(
                TExprKind::Const(c.value.clone()),
                c.ty.clone(),
                span.clone(),
            ));
        }
        let module = cx.sig.and_then(|s| s.module.as_deref());
        let slot = self.state_lookup(n, module, cx.mode, span)?;
        Ok(TExpr::new(
            TExprKind::State(slot),
            self.state[slot].ty.clone(),
            span.clone(),
        ))
    }

    fn unary(
        &mut self,
        op: UnOp,
        inner: &Expr,
        span: Span,
        cx: &mut ExprCtx<'_>,
    ) -> RResult<TExpr> {
        let logic = cx.mode.is_logic();
        match op {
            UnOp::Deref => {
                let ExprKind::Name(n) = &inner.kind else {
                    return Err(invalid(&span, "only out-parameters can be dereferenced"));
                };
                let sig = cx
                    .sig
                    .ok_or_else(|| invalid(&span, "dereference outside a function context"))?;
                let Some(i) = sig.params.iter().position(|p| &p.name == n && p.out) else {
                    return Err(invalid(&span, format!("`{n}` is not an out-parameter")));
                };
                let ty = sig.params[i].ty.clone();
                let kind = match cx.mode {
                    Mode::Pre => TExprKind::Param(i),
                    Mode::Post => TExprKind::OutParam(i),
                    Mode::Code { .. } | Mode::Annot => TExprKind::Local(i),
                    _ => return Err(invalid(&span, "dereference outside a function context")),
                };
                Ok(TExpr::new(kind, ty, span))
            }
            UnOp::AddrOf => Err(invalid(
                &span,
                "`&` is only allowed on arguments for out-parameters",
            )),
            UnOp::Not => {
                let t = self.expr(inner, cx)?;
                self.expect_bool(&t)?;
                Ok(TExpr::new(
                    TExprKind::Unary(UnOp::Not, Box::new(t)),
                    Type::Bool,
                    span,
                ))
            }
            UnOp::Neg => {
                let t = self.expr(inner, cx)?;
                if !t.ty.is_numeric() {
                    return Err(mismatch(&t.span, "numeric", &t.ty));
                }
                // negative literals fold so that `-20` is an int32 constant
                match t.kind {
                    TExprKind::Const(Value::Int(v)) if matches!(inner.kind, ExprKind::Int(_)) => {
                        let v = -v;
                        return Ok(TExpr::new(
                            TExprKind::Const(Value::Int(v)),
                            literal_type(v, logic),
                            span,
                        ));
                    }
                    TExprKind::Const(Value::Real(v)) if matches!(inner.kind, ExprKind::Real(_)) => {
                        return Ok(TExpr::new(
                            TExprKind::Const(Value::Real(-v)),
                            Type::Real,
                            span,
                        ));
                    }
                    _ => {}
                }
                let ty = match (&t.ty, logic) {
                    (Type::Real, _) => Type::Real,
                    (_, true) => Type::Integer,
                    (Type::UInt16, false) => Type::Int32,
                    (other, false) => other.clone(),
                };
                Ok(TExpr::new(
                    TExprKind::Unary(UnOp::Neg, Box::new(t)),
                    ty,
                    span,
                ))
            }
        }
    }

    fn binary(&self, op: BinOp, a: TExpr, b: TExpr, span: Span, logic: bool) -> RResult<TExpr> {
        let ty = match op {
            BinOp::And | BinOp::Or | BinOp::Implies | BinOp::Equiv => {
                self.expect_bool(&a)?;
                self.expect_bool(&b)?;
                Type::Bool
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                for x in [&a, &b] {
                    if !x.ty.is_numeric() {
                        return Err(mismatch(&x.span, "numeric", &x.ty));
                    }
                }
                if op == BinOp::Mod {
                    for x in [&a, &b] {
                        if !x.ty.is_integral() {
                            return Err(mismatch(&x.span, "integer", &x.ty));
                        }
                    }
                }
                if a.ty == Type::Real || b.ty == Type::Real {
                    Type::Real
                } else if logic {
                    Type::Integer
                } else if a.ty.rank() >= b.ty.rank() {
                    a.ty.clone()
                } else {
                    b.ty.clone()
                }
            }
        };
        Ok(TExpr::new(
            TExprKind::Binary(op, Box::new(a), Box::new(b)),
            ty,
            span,
        ))
    }

    fn call(
        &mut self,
        name: &str,
        args: &[Expr],
        span: Span,
        cx: &mut ExprCtx<'_>,
    ) -> RResult<TExpr> {
        if let Some(b) = Builtin::from_name(name) {
            if args.len() != b.arity() {
                return Err(invalid(
                    &span,
                    format!(
                        "`{name}` takes {} argument(s), got {}",
                        b.arity(),
                        args.len()
                    ),
                ));
            }
            let mut typed = Vec::new();
            for a in args {
                let t = self.expr(a, cx)?;
                if !t.ty.is_numeric() {
                    return Err(mismatch(&t.span, "numeric", &t.ty));
                }
                typed.push(t);
            }
            let any_real = typed.iter().any(|t| t.ty == Type::Real);
            let ty = match b {
                Builtin::Abs | Builtin::Min | Builtin::Max => {
                    if any_real {
                        Type::Real
                    } else {
                        Type::Integer
                    }
                }
                Builtin::Floor | Builtin::Ceil | Builtin::NtcCode => Type::Integer,
                Builtin::Exp
                | Builtin::Log
                | Builtin::Sqrt
                | Builtin::NtcResistance
                | Builtin::NtcVoltage => Type::Real,
            };
            return Ok(TExpr::new(TExprKind::Builtin(b, typed), ty, span));
        }
        if name.starts_with('\\') {
            return Err(undefined(&span, name, " (unknown builtin)"));
        }
        if let Some(&i) = self.logic_index.get(name) {
            if !cx.mode.is_logic() {
                return Err(invalid(
                    &span,
                    format!("logic definition `{name}` used in code"),
                ));
            }
            let sig = self.logic_sigs[i].clone();
            if sig.params.len() != args.len() {
                return Err(invalid(
                    &span,
                    format!(
                        "`{name}` takes {} argument(s), got {}",
                        sig.params.len(),
                        args.len()
                    ),
                ));
            }
            let mut typed = Vec::new();
            for (a, pty) in args.iter().zip(&sig.params) {
                let t = self.expr(a, cx)?;
                check_assignable(pty, &t)?;
                typed.push(t);
            }
            return Ok(TExpr::new(TExprKind::LogicCall(i, typed), sig.ret, span));
        }
        if let Some(&i) = self.fn_index.get(name) {
            if cx.mode.is_logic() || cx.mode == Mode::Const {
                return Err(invalid(
                    &span,
                    format!("program function `{name}` cannot be called here"),
                ));
            }
            let sig = self.fn_sigs[i].clone();
            if sig.params.len() != args.len() {
                return Err(invalid(
                    &span,
                    format!(
                        "`{name}` takes {} argument(s), got {}",
                        sig.params.len(),
                        args.len()
                    ),
                ));
            }
            let mut typed = Vec::new();
            for (a, p) in args.iter().zip(&sig.params) {
                if p.out {
                    let ExprKind::Unary(UnOp::AddrOf, target) = &a.kind else {
                        return Err(invalid(
                            &a.span,
                            format!("out-parameter `{}` needs an `&` argument", p.name),
                        ));
                    };
                    let caller = cx.sig.expect("sig").clone();
                    let frame = cx.frame.expect("frame");
                    let ghost = matches!(cx.mode, Mode::Code { ghost: true });
                    let (lv, ty) = self.lvalue(target, &caller, frame, ghost)?;
                    if ty != p.ty {
                        return Err(mismatch(&a.span, &p.ty, ty));
                    }
                    typed.push(CallArg::Out(lv));
                } else {
                    let t = self.expr(a, cx)?;
                    check_assignable(&p.ty, &t)?;
                    typed.push(CallArg::Value(t));
                }
            }
            return Ok(TExpr::new(TExprKind::Call(i, typed), sig.ret, span));
        }
        Err(undefined(&span, name, ""))
    }
}

fn visit_expr(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Old(x) | ExprKind::At(x, _) | ExprKind::Unary(_, x) | ExprKind::Cast(_, x) => {
            visit_expr(x, f)
        }
        ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
            visit_expr(a, f);
            visit_expr(b, f);
        }
        ExprKind::Compare(items, _) | ExprKind::Call(_, items) => {
            for x in items {
                visit_expr(x, f);
            }
        }
        ExprKind::Quant { body, .. } => visit_expr(body, f),
        _ => {}
    }
}
