//! Input-space construction and the enumeration loop shared by all checks.
//!
//! Points are visited in lexicographic order of the input list (first input
//! slowest). The space is split into contiguous chunks that may run in
//! parallel; per goal, the verdict is taken from the first chunk (in index
//! order) that contains a violation, so results do not depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::{Domain, DomainConfig, Stub, StubRow};
use super::obligation::{gen_obligations, Obligation, ObligationKind};
use super::VerifyError;
use crate::frontend::ast::{BinOp, CmpOp, DEFAULT_BEHAVIOR};
use crate::frontend::span::Span;
use crate::frontend::typed::*;
use crate::semantics::eval::{eval_logic, Env, EvalError};
use crate::semantics::exec::{
    exec_with, CallHook, CallOutcome, ExecError, ExecOptions, ExecResult, FailureKind,
};
use crate::semantics::{ModuleState, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Valid,
    Failed,
    Unknown,
    Timeout,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub obligation: String,
    pub goal: String,
    pub status: Status,
    /// Input values (and derived ghost values) of the first violating point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<BTreeMap<String, Value>>,
    /// Admissible points at which the goal applied, up to and including
    /// the counterexample if there is one.
    pub states_checked: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Equality ignores `elapsed`.
impl PartialEq for Verdict {
    fn eq(&self, other: &Self) -> bool {
        self.obligation == other.obligation
            && self.goal == other.goal
            && self.status == other.status
            && self.counterexample == other.counterexample
            && self.states_checked == other.states_checked
            && self.message == other.message
    }
}

// ---- stubs ----

#[derive(Debug, Clone, Copy)]
pub(crate) enum OutSlot {
    Result,
    Param(usize),
}

#[derive(Debug, Clone)]
pub(crate) enum ResolvedStub {
    /// Output slot and index into the point's stub values.
    Outputs(Vec<(OutSlot, usize)>),
    GhostArray {
        slot: usize,
        param: usize,
    },
    Table(Vec<StubRow>),
}

fn out_slot(callee: &TFunction, name: &str) -> Result<OutSlot, String> {
    if name == "\\result" {
        return if callee.return_type == Type::Void {
            Err(format!("`{}` returns nothing", callee.name))
        } else {
            Ok(OutSlot::Result)
        };
    }
    callee
        .params
        .iter()
        .position(|p| p.out && p.name == name)
        .map(OutSlot::Param)
        .ok_or_else(|| format!("`{}` has no out-parameter `{name}`", callee.name))
}

/// Resolves the stub for `callee`; Outputs inputs are appended to
/// `inputs` (deduplicated by name).
pub(crate) fn resolve_stub(
    tp: &TypedProgram,
    callee: &TFunction,
    stub: &Stub,
    inputs: &mut Vec<String>,
) -> Result<ResolvedStub, VerifyError> {
    let cfg = |message: String| VerifyError::Config {
        message: format!("stub for `{}`: {message}", callee.name),
    };
    Ok(match stub {
        Stub::Outputs { outputs } => {
            let mut slots = Vec::new();
            for (out, input) in outputs {
                let slot = out_slot(callee, out).map_err(cfg)?;
                let k = match inputs.iter().position(|n| n == input) {
                    Some(k) => k,
                    None => {
                        inputs.push(input.clone());
                        inputs.len() - 1
                    }
                };
                slots.push((slot, k));
            }
            ResolvedStub::Outputs(slots)
        }
        Stub::GhostArray { ghost_array, index } => {
            let slot = tp
                .state_slot(ghost_array)
                .filter(|&s| matches!(tp.state_vars[s].ty, Type::Array(..)))
                .ok_or_else(|| cfg(format!("`{ghost_array}` is not an array variable")))?;
            let param = callee
                .params
                .iter()
                .position(|p| !p.out && p.name == *index)
                .ok_or_else(|| cfg(format!("no parameter `{index}`")))?;
            ResolvedStub::GhostArray { slot, param }
        }
        Stub::Table { table } => {
            for row in table {
                if row.args.len() != callee.params.len() {
                    return Err(cfg(format!(
                        "row has {} argument(s), expected {}",
                        row.args.len(),
                        callee.params.len()
                    )));
                }
                for name in row.outputs.keys() {
                    out_slot(callee, name).map_err(cfg)?;
                }
            }
            ResolvedStub::Table(table.clone())
        }
    })
}

/// Call hook serving stubs and, in scenarios, injected outputs.
pub(crate) struct StubHook<'a> {
    pub stubs: &'a [(String, ResolvedStub)],
    pub stub_vals: &'a [Value],
    pub inject: Option<&'a BTreeMap<String, BTreeMap<String, Value>>>,
}

impl CallHook for StubHook<'_> {
    fn call(
        &self,
        _tp: &TypedProgram,
        callee: &TFunction,
        args: &[Value],
        state: &mut ModuleState,
    ) -> Option<Result<CallOutcome, ExecError>> {
        let err = |message: String| ExecError::Stub {
            name: callee.name.clone(),
            message,
        };
        let named = |outputs: &BTreeMap<String, Value>| -> Result<CallOutcome, ExecError> {
            let mut o = CallOutcome::default();
            for (name, v) in outputs {
                match out_slot(callee, name).map_err(err)? {
                    OutSlot::Result => o.return_value = Some(v.clone().coerce(&callee.return_type)),
                    OutSlot::Param(i) => {
                        o.outs.insert(i, v.clone());
                    }
                }
            }
            Ok(o)
        };
        if let Some(outputs) = self.inject.and_then(|m| m.get(&callee.name)) {
            return Some(named(outputs));
        }
        let (_, stub) = self.stubs.iter().find(|(n, _)| *n == callee.name)?;
        Some(match stub {
            ResolvedStub::Outputs(slots) => {
                let mut o = CallOutcome::default();
                for &(slot, k) in slots {
                    let Some(v) = self.stub_vals.get(k) else {
                        return Some(Err(err("no value available for this output".into())));
                    };
                    match slot {
                        OutSlot::Result => {
                            o.return_value = Some(v.clone().coerce(&callee.return_type))
                        }
                        OutSlot::Param(i) => {
                            o.outs.insert(i, v.clone());
                        }
                    }
                }
                Ok(o)
            }
            ResolvedStub::GhostArray { slot, param } => {
                let k = args[*param].as_int().unwrap_or(-1);
                match state.values[*slot]
                    .as_array()
                    .and_then(|a| usize::try_from(k).ok().and_then(|k| a.get(k)))
                {
                    Some(v) => Ok(CallOutcome {
                        return_value: Some(v.clone().coerce(&callee.return_type)),
                        outs: BTreeMap::new(),
                    }),
                    None => Err(err(format!("index {k} is out of bounds"))),
                }
            }
            ResolvedStub::Table(rows) => match rows.iter().find(|r| r.args.as_slice() == args) {
                Some(r) => named(&r.outputs),
                None => Err(err(format!(
                    "no table row for arguments ({})",
                    args.iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))),
            },
        })
    }
}

// ---- input space ----

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Target {
    Param(usize),
    State(usize),
    Elem(usize, usize),
    Stub(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Input {
    pub name: String,
    pub target: Target,
    pub domain: Domain,
}

/// Concrete starting point of one execution.
pub(crate) struct Point {
    pub args: Vec<Value>,
    pub state: ModuleState,
    pub stub_vals: Vec<Value>,
}

/// Everything needed to enumerate the inputs of one function.
pub(crate) struct Plan<'a> {
    pub tp: &'a TypedProgram,
    pub func: &'a TFunction,
    pub inputs: Vec<Input>,
    /// Ghost slots defined by coupling clauses, applied in order.
    definitional: Vec<(usize, TExpr)>,
    filters: Vec<TExpr>,
    stubs: Vec<(String, ResolvedStub)>,
    /// State slots related by an equality coupling clause.
    pub partners: Vec<(usize, usize)>,
    /// State slots the function may write (including through callees).
    pub writes: BTreeSet<usize>,
    base_state: ModuleState,
    base_args: Vec<Value>,
    n_stub_inputs: usize,
    max_states: u64,
    budget: Duration,
}

fn state_reads(e: &TExpr, out: &mut BTreeSet<usize>) {
    e.walk(&mut |n| {
        if let TExprKind::State(s) = n.kind {
            out.insert(s);
        }
    });
}

/// State read outside of any `\old` (post) and inside one (pre).
fn split_reads(e: &TExpr, pre: &mut BTreeSet<usize>, post: &mut BTreeSet<usize>) {
    match &e.kind {
        TExprKind::Old(inner) => state_reads(inner, pre),
        TExprKind::State(s) => {
            post.insert(*s);
        }
        _ => {
            for c in e.children() {
                split_reads(c, pre, post);
            }
        }
    }
}

/// Reads, writes and stubbed callees of a function body and of the
/// non-stubbed callees it reaches.
struct BodyScan<'a> {
    tp: &'a TypedProgram,
    dc: &'a DomainConfig,
    visited: BTreeSet<usize>,
    reads: BTreeSet<usize>,
    writes: BTreeSet<usize>,
    /// Stubbed callees in order of first call.
    stubbed: Vec<usize>,
    error: Option<VerifyError>,
}

impl BodyScan<'_> {
    fn function(&mut self, index: usize) {
        if !self.visited.insert(index) {
            return;
        }
        if let Some(body) = &self.tp.functions[index].body {
            self.block(body);
        }
    }

    fn block(&mut self, b: &TBlock) {
        for s in &b.stmts {
            self.stmt(s);
        }
    }

    fn lvalue(&mut self, lv: &LValue) {
        if let Some(s) = lv.state_slot() {
            self.writes.insert(s);
        }
        if let Some(e) = lv.index() {
            self.expr(e);
        }
    }

    fn expr(&mut self, e: &TExpr) {
        let mut calls = Vec::new();
        e.walk(&mut |n| match &n.kind {
            TExprKind::State(s) => {
                self.reads.insert(*s);
            }
            TExprKind::Call(i, args) => {
                calls.push(*i);
                for a in args {
                    if let CallArg::Out(lv) = a {
                        if let Some(s) = lv.state_slot() {
                            self.writes.insert(s);
                        }
                    }
                }
            }
            _ => {}
        });
        for i in calls {
            let callee = &self.tp.functions[i];
            if self.dc.stubs.contains_key(&callee.name) {
                if !self.stubbed.contains(&i) {
                    self.stubbed.push(i);
                }
            } else if callee.hardware {
                self.error.get_or_insert(VerifyError::StubMissing {
                    name: callee.name.clone(),
                });
            } else {
                self.function(i);
            }
        }
    }

    fn stmt(&mut self, s: &TStmt) {
        match &s.kind {
            TStmtKind::Assign { target, value } => {
                self.lvalue(target);
                self.expr(value);
            }
            TStmtKind::Expr(e) | TStmtKind::Assert(e) | TStmtKind::Return(Some(e)) => self.expr(e),
            TStmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.expr(cond);
                self.block(then_block);
                if let Some(b) = else_block {
                    self.block(b);
                }
            }
            TStmtKind::While {
                cond,
                body,
                invariant,
            } => {
                self.expr(cond);
                if let Some(inv) = invariant {
                    self.expr(&inv.expr);
                }
                self.block(body);
            }
            TStmtKind::For {
                init,
                cond,
                step,
                body,
                invariant,
            } => {
                if let Some(s) = init {
                    self.stmt(s);
                }
                if let Some(c) = cond {
                    self.expr(c);
                }
                if let Some(s) = step {
                    self.stmt(s);
                }
                if let Some(inv) = invariant {
                    self.expr(&inv.expr);
                }
                self.block(body);
            }
            TStmtKind::Block(b) => self.block(b),
            TStmtKind::Ghost(inner) => self.stmt(inner),
            TStmtKind::Return(None)
            | TStmtKind::Break
            | TStmtKind::Continue
            | TStmtKind::ExternEffect => {}
        }
    }
}

fn lookup<'d>(dc: &'d DomainConfig, keys: &[String]) -> Option<&'d Domain> {
    keys.iter().find_map(|k| dc.domains.get(k))
}

fn state_keys(v: &StateVar) -> Vec<String> {
    let q = v.qualified_name();
    if q == v.name {
        vec![q]
    } else {
        vec![q, v.name.clone()]
    }
}

/// `g == e` with `g` a ghost scalar without a domain and not mentioned in `e`.
fn definitional(tp: &TypedProgram, dc: &DomainConfig, e: &TExpr) -> Option<(usize, TExpr)> {
    let TExprKind::Compare(items, ops) = &e.kind else {
        return None;
    };
    if ops.as_slice() != [CmpOp::Eq] {
        return None;
    }
    for (a, b) in [(&items[0], &items[1]), (&items[1], &items[0])] {
        if let TExprKind::State(g) = a.kind {
            let var = &tp.state_vars[g];
            let scalar = !matches!(var.ty, Type::Array(..));
            let mut mentioned = BTreeSet::new();
            state_reads(b, &mut mentioned);
            if var.ghost
                && scalar
                && lookup(dc, &state_keys(var)).is_none()
                && !mentioned.contains(&g)
            {
                return Some((g, b.clone()));
            }
        }
    }
    None
}

impl<'a> Plan<'a> {
    pub fn new(tp: &'a TypedProgram, name: &str, dc: &DomainConfig) -> Result<Self, VerifyError> {
        let index = tp
            .function_index(name)
            .ok_or_else(|| VerifyError::UnknownFunction { name: name.into() })?;
        let func = &tp.functions[index];
        if func.hardware {
            return Err(VerifyError::HardwareFunction { name: name.into() });
        }
        let mut scan = BodyScan {
            tp,
            dc,
            visited: BTreeSet::new(),
            reads: BTreeSet::new(),
            writes: BTreeSet::new(),
            stubbed: Vec::new(),
            error: None,
        };
        scan.function(index);
        if let Some(e) = scan.error {
            return Err(e);
        }

        let mut stubs = Vec::new();
        let mut stub_inputs = Vec::new();
        for &i in &scan.stubbed {
            let callee = &tp.functions[i];
            let r = resolve_stub(tp, callee, &dc.stubs[&callee.name], &mut stub_inputs)?;
            if let ResolvedStub::GhostArray { slot, .. } = r {
                scan.reads.insert(slot);
            }
            stubs.push((callee.name.clone(), r));
        }

        let mut pre = scan.reads.clone();
        let mut post = BTreeSet::new();
        if let Some(c) = &func.contract {
            for e in &c.requires {
                state_reads(e, &mut pre);
            }
            for b in &c.behaviors {
                for e in &b.assumes {
                    state_reads(e, &mut pre);
                }
                for e in &b.ensures {
                    split_reads(e, &mut pre, &mut post);
                }
            }
        }
        let mut relevant: BTreeSet<usize> = pre
            .union(&post.difference(&scan.writes).copied().collect())
            .copied()
            .collect();

        let mut defs = Vec::new();
        let mut filters = Vec::new();
        let mut partners = Vec::new();
        for (_, e) in dc.resolve_coupling(tp)? {
            let Some(e) = e else { continue };
            if let TExprKind::Compare(items, ops) = &e.kind {
                if let ([a, b], [CmpOp::Eq]) = (items.as_slice(), ops.as_slice()) {
                    if let (TExprKind::State(x), TExprKind::State(y)) = (&a.kind, &b.kind) {
                        partners.push((*x, *y));
                    }
                }
            }
            match definitional(tp, dc, &e) {
                Some(d) => defs.push(d),
                None => filters.push(e),
            }
        }
        // a relevant defined ghost makes its defining expression relevant
        loop {
            let before = relevant.len();
            for (g, e) in &defs {
                if relevant.contains(g) {
                    state_reads(e, &mut relevant);
                }
            }
            if relevant.len() == before {
                break;
            }
        }
        let defined: BTreeSet<usize> = defs.iter().map(|(g, _)| *g).collect();

        let mut inputs = Vec::new();
        for (i, p) in func.params.iter().enumerate() {
            let keys = [format!("{}.{}", func.name, p.name), p.name.clone()];
            match lookup(dc, &keys) {
                Some(d) => inputs.push(Input {
                    name: p.name.clone(),
                    target: Target::Param(i),
                    domain: d.clone(),
                }),
                None if p.out => {}
                None => {
                    return Err(VerifyError::DomainMissing {
                        name: p.name.clone(),
                    })
                }
            }
        }
        for &s in &relevant {
            if defined.contains(&s) {
                continue;
            }
            let var = &tp.state_vars[s];
            match &var.ty {
                Type::Array(_, n) => {
                    for k in 0..*n {
                        let keys: Vec<String> = state_keys(var)
                            .iter()
                            .map(|q| format!("{q}[{k}]"))
                            .collect();
                        if let Some(d) = lookup(dc, &keys) {
                            inputs.push(Input {
                                name: keys[0].clone(),
                                target: Target::Elem(s, k),
                                domain: d.clone(),
                            });
                        }
                    }
                }
                _ => match lookup(dc, &state_keys(var)) {
                    Some(d) => inputs.push(Input {
                        name: var.qualified_name(),
                        target: Target::State(s),
                        domain: d.clone(),
                    }),
                    None => {
                        return Err(VerifyError::DomainMissing {
                            name: var.qualified_name(),
                        })
                    }
                },
            }
        }
        for (k, name) in stub_inputs.iter().enumerate() {
            let d = dc
                .domains
                .get(name)
                .ok_or_else(|| VerifyError::DomainMissing { name: name.clone() })?;
            inputs.push(Input {
                name: name.clone(),
                target: Target::Stub(k),
                domain: d.clone(),
            });
        }

        Ok(Plan {
            tp,
            func,
            inputs,
            definitional: defs,
            filters,
            stubs,
            partners,
            writes: scan.writes,
            base_state: ModuleState::initial(tp),
            base_args: func.params.iter().map(|p| p.ty.zero()).collect(),
            n_stub_inputs: stub_inputs.len(),
            max_states: dc.max_states,
            budget: Duration::from_millis(dc.budget_ms),
        })
    }

    /// Size of the domain product, if it fits in `u64`.
    pub fn total(&self) -> Option<u64> {
        self.inputs
            .iter()
            .try_fold(1u64, |acc, i| acc.checked_mul(i.domain.len()))
    }

    fn digits(&self, mut index: u64) -> Vec<u64> {
        let mut d = vec![0; self.inputs.len()];
        for (k, input) in self.inputs.iter().enumerate().rev() {
            let n = input.domain.len();
            d[k] = index % n;
            index /= n;
        }
        d
    }

    pub fn values_at(&self, index: u64) -> Vec<Value> {
        self.digits(index)
            .iter()
            .zip(&self.inputs)
            .map(|(&k, i)| i.domain.get(k))
            .collect()
    }

    pub fn point(&self, vals: &[Value]) -> Point {
        let mut args = self.base_args.clone();
        let mut state = self.base_state.clone();
        let mut stub_vals = vec![Value::Int(0); self.n_stub_inputs];
        for (input, v) in self.inputs.iter().zip(vals) {
            match input.target {
                Target::Param(i) => args[i] = v.clone().coerce(&self.func.params[i].ty),
                Target::State(s) => state.values[s] = v.clone().coerce(&self.tp.state_vars[s].ty),
                Target::Elem(s, k) => {
                    let elem_ty = match &self.tp.state_vars[s].ty {
                        Type::Array(t, _) => (**t).clone(),
                        t => t.clone(),
                    };
                    if let Value::Array(items) = &mut state.values[s] {
                        Arc::make_mut(items)[k] = v.clone().coerce(&elem_ty);
                    }
                }
                Target::Stub(k) => stub_vals[k] = v.clone(),
            }
        }
        for (g, e) in &self.definitional {
            let env = Env {
                state: &state.values,
                ..Env::empty(&self.tp.logic_defs)
            };
            if let Ok(v) = eval_logic(e, &env) {
                state.values[*g] = v.coerce(&self.tp.state_vars[*g].ty);
            }
        }
        Point {
            args,
            state,
            stub_vals,
        }
    }

    pub(crate) fn pre_env<'p>(&'p self, p: &'p Point) -> Env<'p> {
        Env {
            logic: &self.tp.logic_defs,
            locals: &p.args,
            params: &p.args,
            outs: &p.args,
            state: &p.state.values,
            snapshot: None,
            result: None,
        }
    }

    /// Coupling filters and `requires` clauses hold. A clause that cannot
    /// be evaluated counts as not holding.
    pub fn admissible(&self, p: &Point) -> bool {
        let env = self.pre_env(p);
        let requires = self.func.contract.iter().flat_map(|c| &c.requires);
        self.filters
            .iter()
            .chain(requires)
            .all(|e| matches!(eval_logic(e, &env), Ok(Value::Bool(true))))
    }

    pub fn execute(&self, p: &Point) -> Result<ExecResult, ExecError> {
        let hook = StubHook {
            stubs: &self.stubs,
            stub_vals: &p.stub_vals,
            inject: None,
        };
        let opts = ExecOptions {
            trace: false,
            ..ExecOptions::default()
        };
        exec_with(
            self.tp,
            &self.func.name,
            &p.args,
            &p.state,
            &opts,
            Some(&hook),
        )
    }

    pub fn counterexample(&self, vals: &[Value], p: &Point) -> BTreeMap<String, Value> {
        let mut m: BTreeMap<String, Value> = self
            .inputs
            .iter()
            .map(|i| i.name.clone())
            .zip(vals.iter().cloned())
            .collect();
        for (g, _) in &self.definitional {
            m.insert(
                self.tp.state_vars[*g].qualified_name(),
                p.state.values[*g].clone(),
            );
        }
        m
    }

    pub fn values_from_map(&self, m: &BTreeMap<String, Value>) -> Result<Vec<Value>, VerifyError> {
        self.inputs
            .iter()
            .map(|i| {
                m.get(&i.name)
                    .cloned()
                    .ok_or_else(|| VerifyError::IncompleteCounterexample {
                        name: i.name.clone(),
                    })
            })
            .collect()
    }

    fn behavior(&self, name: &str) -> Option<&'a TBehavior> {
        self.func
            .contract
            .as_ref()?
            .behaviors
            .iter()
            .find(|b| b.name == name)
    }
}

pub(crate) fn post_env<'r>(tp: &'r TypedProgram, r: &'r ExecResult) -> Env<'r> {
    Env {
        logic: &tp.logic_defs,
        locals: &r.final_params,
        params: &r.entry.args,
        outs: &r.final_params,
        state: &r.post_state.values,
        snapshot: Some(&r.entry),
        result: r.return_value.as_ref(),
    }
}

/// True if evaluating `e` may require an unbounded quantifier.
pub(crate) fn unbounded(tp: &TypedProgram, e: &TExpr) -> bool {
    fn go(tp: &TypedProgram, e: &TExpr, seen: &mut BTreeSet<usize>) -> bool {
        let mut found = false;
        e.walk(&mut |n| match &n.kind {
            TExprKind::Quant { range: None, .. } => found = true,
            TExprKind::LogicCall(i, _)
                if seen.insert(*i) && go(tp, &tp.logic_defs[*i].body, seen) =>
            {
                found = true
            }
            _ => {}
        });
        found
    }
    go(tp, e, &mut BTreeSet::new())
}

// ---- goals ----

/// An ensures clause as seen by the coverage lint.
pub(crate) struct Clause<'a> {
    pub assumes: &'a [TExpr],
    /// Left side of a top-level implication.
    pub antecedent: Option<&'a TExpr>,
    pub mentions: BTreeSet<Output>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Output {
    Result,
    OutParam(usize),
    State(usize),
}

pub(crate) enum Goal<'a> {
    Ensures {
        assumes: &'a [TExpr],
        expr: &'a TExpr,
    },
    Annotation {
        span: &'a Span,
        kind: FailureKind,
    },
    Frame {
        allowed_state: Vec<bool>,
        allowed_out: Vec<bool>,
    },
    Complete {
        behaviors: Vec<&'a TBehavior>,
    },
    Disjoint {
        behaviors: Vec<&'a TBehavior>,
    },
    Coverage {
        output: Output,
        clauses: &'a [Clause<'a>],
    },
    /// Decided without enumeration.
    Unknown(String),
}

enum Outcome {
    /// Point is outside the goal's scope and not counted.
    Skip,
    Pass,
    Violation(String),
    Unknown(String),
}

fn all_hold(es: &[TExpr], env: &Env<'_>) -> Result<bool, EvalError> {
    for e in es {
        if !matches!(eval_logic(e, env)?, Value::Bool(true)) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn eval_goal(e: &TExpr, env: &Env<'_>) -> Outcome {
    match eval_logic(e, env) {
        Ok(Value::Bool(true)) => Outcome::Pass,
        Ok(_) => Outcome::Violation("goal does not hold".into()),
        Err(EvalError::Unbounded { .. }) => {
            Outcome::Unknown("goal needs an unbounded quantifier".into())
        }
        Err(err) => Outcome::Violation(format!("goal cannot be evaluated: {err}")),
    }
}

type Exec = Option<Result<ExecResult, ExecError>>;

fn run<'e>(plan: &Plan<'_>, p: &Point, exec: &'e mut Exec) -> Result<&'e ExecResult, String> {
    exec.get_or_insert_with(|| plan.execute(p))
        .as_ref()
        .map_err(|e| format!("execution failed: {e}"))
}

impl Goal<'_> {
    fn check(&self, plan: &Plan<'_>, p: &Point, exec: &mut Exec) -> Outcome {
        let tp = plan.tp;
        match self {
            Goal::Unknown(m) => Outcome::Unknown(m.clone()),
            Goal::Ensures { assumes, expr } => {
                match all_hold(assumes, &plan.pre_env(p)) {
                    Ok(true) => {}
                    Ok(false) => return Outcome::Skip,
                    Err(e) => {
                        return Outcome::Violation(format!("assumes cannot be evaluated: {e}"))
                    }
                }
                match run(plan, p, exec) {
                    Ok(r) => eval_goal(expr, &post_env(tp, r)),
                    Err(m) => Outcome::Violation(m),
                }
            }
            Goal::Annotation { span, kind } => match run(plan, p, exec) {
                Ok(r) => match r
                    .assertion_failures
                    .iter()
                    .find(|f| f.kind == *kind && &&f.span == span)
                {
                    Some(f) if f.rendered.is_empty() => {
                        Outcome::Violation("annotation does not hold".into())
                    }
                    Some(f) => {
                        Outcome::Violation(format!("annotation does not hold with {}", f.rendered))
                    }
                    None => Outcome::Pass,
                },
                Err(m) => Outcome::Violation(m),
            },
            Goal::Frame {
                allowed_state,
                allowed_out,
            } => match run(plan, p, exec) {
                Ok(r) => {
                    for (s, ok) in allowed_state.iter().enumerate() {
                        let (before, after) = (&p.state.values[s], &r.post_state.values[s]);
                        if !ok && before != after {
                            let name = tp.state_vars[s].qualified_name();
                            return Outcome::Violation(format!("`{name}` is not in the assigns clause but changed from {before} to {after}"));
                        }
                    }
                    for (i, ok) in allowed_out.iter().enumerate() {
                        let (before, after) = (&r.entry.args[i], &r.final_params[i]);
                        if !ok && before != after {
                            let name = &plan.func.params[i].name;
                            return Outcome::Violation(format!("`*{name}` is not in the assigns clause but changed from {before} to {after}"));
                        }
                    }
                    Outcome::Pass
                }
                Err(m) => Outcome::Violation(m),
            },
            Goal::Complete { behaviors } => {
                let env = plan.pre_env(p);
                for b in behaviors {
                    match all_hold(&b.assumes, &env) {
                        Ok(true) => return Outcome::Pass,
                        Ok(false) => {}
                        Err(e) => {
                            return Outcome::Violation(format!(
                                "assumes of {} cannot be evaluated: {e}",
                                b.name
                            ))
                        }
                    }
                }
                Outcome::Violation("no behavior applies".into())
            }
            Goal::Disjoint { behaviors } => {
                let env = plan.pre_env(p);
                let mut hit: Option<&str> = None;
                for b in behaviors {
                    match all_hold(&b.assumes, &env) {
                        Ok(true) => match hit {
                            Some(first) => {
                                return Outcome::Violation(format!(
                                    "behaviors {first} and {} both apply",
                                    b.name
                                ))
                            }
                            None => hit = Some(&b.name),
                        },
                        Ok(false) => {}
                        Err(e) => {
                            return Outcome::Violation(format!(
                                "assumes of {} cannot be evaluated: {e}",
                                b.name
                            ))
                        }
                    }
                }
                Outcome::Pass
            }
            Goal::Coverage { output, clauses } => {
                let r = match run(plan, p, exec) {
                    Ok(r) => r,
                    // nothing is written when execution fails
                    Err(_) => return Outcome::Pass,
                };
                let changed = match output {
                    Output::Result => r.return_value.is_some(),
                    Output::OutParam(_) => true,
                    Output::State(s) => p.state.values[*s] != r.post_state.values[*s],
                };
                if !changed {
                    return Outcome::Pass;
                }
                let pre = plan.pre_env(p);
                let post = post_env(tp, r);
                let covered = clauses.iter().any(|c| {
                    c.mentions.contains(output)
                        && matches!(all_hold(c.assumes, &pre), Ok(true))
                        && c.antecedent
                            .is_none_or(|a| matches!(eval_logic(a, &post), Ok(Value::Bool(true))))
                });
                if covered {
                    Outcome::Pass
                } else {
                    Outcome::Violation(
                        "changed, but no applicable ensures clause mentions it".into(),
                    )
                }
            }
        }
    }
}

// ---- enumeration ----

pub(crate) struct GoalResult {
    pub status: Status,
    pub states_checked: u64,
    /// Index and values of the deciding point for Failed/Unknown.
    pub witness: Option<BTreeMap<String, Value>>,
    pub message: Option<String>,
}

#[derive(Default)]
struct ChunkGoal {
    counted: u64,
    event: Option<(u64, Outcome)>,
}

struct Chunk {
    goals: Vec<ChunkGoal>,
    timed_out: bool,
}

pub(crate) fn enumerate(plan: &Plan<'_>, goals: &[Goal<'_>]) -> (Vec<GoalResult>, Duration) {
    let start = Instant::now();
    let total = match plan.total() {
        Some(t) if t <= plan.max_states => t,
        t => {
            let size = t.map_or("more than 2^64".to_string(), |t| t.to_string());
            let msg = format!(
                "domain product of {size} points exceeds max_states = {}",
                plan.max_states
            );
            let results = goals
                .iter()
                .map(|_| GoalResult {
                    status: Status::Timeout,
                    states_checked: 0,
                    witness: None,
                    message: Some(msg.clone()),
                })
                .collect();
            return (results, start.elapsed());
        }
    };
    let budget = plan.budget.saturating_mul(goals.len().max(1) as u32);
    let deadline = start + budget;
    let best: Vec<AtomicU64> = goals
        .iter()
        .map(|g| {
            AtomicU64::new(if matches!(g, Goal::Unknown(_)) {
                0
            } else {
                u64::MAX
            })
        })
        .collect();

    let threads = rayon::current_num_threads() as u64;
    let chunk_len = (total / (threads * 8)).clamp(64, 16_384);
    let n_chunks = total.div_ceil(chunk_len);
    let chunks: Vec<Chunk> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk_len;
            let hi = (lo + chunk_len).min(total);
            process_chunk(plan, goals, &best, lo, hi, deadline)
        })
        .collect();

    let mut results = Vec::new();
    for (g, goal) in goals.iter().enumerate() {
        if let Goal::Unknown(m) = goal {
            results.push(GoalResult {
                status: Status::Unknown,
                states_checked: 0,
                witness: None,
                message: Some(m.clone()),
            });
            continue;
        }
        let mut counted = 0;
        let mut result = None;
        for chunk in &chunks {
            let cg = &chunk.goals[g];
            counted += cg.counted;
            if let Some((index, outcome)) = &cg.event {
                let vals = plan.values_at(*index);
                let witness = Some(plan.counterexample(&vals, &plan.point(&vals)));
                result = Some(match outcome {
                    Outcome::Unknown(m) => GoalResult {
                        status: Status::Unknown,
                        states_checked: counted,
                        witness: None,
                        message: Some(m.clone()),
                    },
                    Outcome::Violation(m) => GoalResult {
                        status: Status::Failed,
                        states_checked: counted,
                        witness,
                        message: Some(m.clone()),
                    },
                    _ => unreachable!("only violations and unknowns are recorded"),
                });
                break;
            }
            if chunk.timed_out {
                result = Some(GoalResult {
                    status: Status::Timeout,
                    states_checked: counted,
                    witness: None,
                    message: Some(format!("budget of {} ms exhausted", budget.as_millis())),
                });
                break;
            }
        }
        results.push(result.unwrap_or(GoalResult {
            status: Status::Valid,
            states_checked: counted,
            witness: None,
            message: None,
        }));
    }
    (results, start.elapsed())
}

fn process_chunk(
    plan: &Plan<'_>,
    goals: &[Goal<'_>],
    best: &[AtomicU64],
    lo: u64,
    hi: u64,
    deadline: Instant,
) -> Chunk {
    let mut out = Chunk {
        goals: goals.iter().map(|_| ChunkGoal::default()).collect(),
        timed_out: false,
    };
    // goals already decided by an earlier point elsewhere are skipped
    let mut open: Vec<usize> = (0..goals.len())
        .filter(|&g| best[g].load(Ordering::Relaxed) > lo)
        .collect();
    if open.is_empty() {
        return out;
    }
    let mut digits = plan.digits(lo);
    let mut vals: Vec<Value> = digits
        .iter()
        .zip(&plan.inputs)
        .map(|(&k, i)| i.domain.get(k))
        .collect();
    for index in lo..hi {
        if index > lo {
            // odometer step, last input fastest
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < plan.inputs[k].domain.len() {
                    vals[k] = plan.inputs[k].domain.get(digits[k]);
                    break;
                }
                digits[k] = 0;
                vals[k] = plan.inputs[k].domain.get(0);
            }
        }
        if (index - lo).is_multiple_of(256) && Instant::now() > deadline {
            out.timed_out = true;
            break;
        }
        let p = plan.point(&vals);
        if !plan.admissible(&p) {
            continue;
        }
        let mut exec = None;
        open.retain(|&g| {
            if best[g].load(Ordering::Relaxed) < index {
                return false;
            }
            let cg = &mut out.goals[g];
            match goals[g].check(plan, &p, &mut exec) {
                Outcome::Skip => true,
                Outcome::Pass => {
                    cg.counted += 1;
                    true
                }
                o => {
                    cg.counted += 1;
                    cg.event = Some((index, o));
                    best[g].fetch_min(index, Ordering::Relaxed);
                    false
                }
            }
        });
        if open.is_empty() {
            break;
        }
    }
    out
}

// ---- public checks ----

fn goal_for<'a>(plan: &Plan<'a>, ob: &Obligation) -> Result<Goal<'a>, VerifyError> {
    let tp = plan.tp;
    let f = plan.func;
    let unknown_if = |es: &[&TExpr], g: Goal<'a>| {
        if es.iter().any(|e| unbounded(tp, e)) {
            Goal::Unknown("goal quantifies over an unbounded range".into())
        } else {
            g
        }
    };
    let missing = || VerifyError::UnknownObligation { id: ob.id.clone() };
    Ok(match &ob.kind {
        ObligationKind::BehaviorEnsures { behavior, index } => {
            let b = plan.behavior(behavior).ok_or_else(missing)?;
            let expr = b.ensures.get(*index).ok_or_else(missing)?;
            let mut all: Vec<&TExpr> = b.assumes.iter().collect();
            all.push(expr);
            unknown_if(
                &all,
                Goal::Ensures {
                    assumes: &b.assumes,
                    expr,
                },
            )
        }
        ObligationKind::Completeness | ObligationKind::Disjointness => {
            let behaviors: Vec<&TBehavior> = f
                .contract
                .iter()
                .flat_map(|c| &c.behaviors)
                .filter(|b| b.name != DEFAULT_BEHAVIOR)
                .collect();
            let assumes: Vec<&TExpr> = behaviors.iter().flat_map(|b| &b.assumes).collect();
            let g = if ob.kind == ObligationKind::Completeness {
                Goal::Complete { behaviors }
            } else {
                Goal::Disjoint { behaviors }
            };
            unknown_if(&assumes, g)
        }
        ObligationKind::Assertion { span } => Goal::Annotation {
            span: span_ref(f, span).ok_or_else(missing)?,
            kind: FailureKind::Assert,
        },
        ObligationKind::LoopInvariantInit { span } => Goal::Annotation {
            span: span_ref(f, span).ok_or_else(missing)?,
            kind: FailureKind::LoopInvariantInit,
        },
        ObligationKind::LoopInvariantPreserve { span } => Goal::Annotation {
            span: span_ref(f, span).ok_or_else(missing)?,
            kind: FailureKind::LoopInvariantPreserve,
        },
        ObligationKind::Frame => {
            let targets = f
                .contract
                .as_ref()
                .and_then(|c| c.assigns.as_ref())
                .ok_or_else(|| VerifyError::NoAssigns {
                    name: f.name.clone(),
                })?;
            let mut allowed_state = vec![false; tp.state_vars.len()];
            let mut allowed_out = vec![true; f.params.len()];
            for (i, p) in f.params.iter().enumerate() {
                allowed_out[i] = !p.out;
            }
            for t in targets {
                match t.loc {
                    AssignLoc::State(s) => allowed_state[s] = true,
                    AssignLoc::OutParam(i) => allowed_out[i] = true,
                    AssignLoc::Param(_) | AssignLoc::Nothing => {}
                }
            }
            Goal::Frame {
                allowed_state,
                allowed_out,
            }
        }
    })
}

/// The annotation span as stored in the function body, so goals can hold a
/// reference with the plan's lifetime.
fn span_ref<'a>(f: &'a TFunction, span: &Span) -> Option<&'a Span> {
    let mut found = None;
    fn block<'a>(b: &'a TBlock, span: &Span, found: &mut Option<&'a Span>) {
        for s in &b.stmts {
            stmt(s, span, found);
        }
    }
    fn stmt<'a>(s: &'a TStmt, span: &Span, found: &mut Option<&'a Span>) {
        match &s.kind {
            TStmtKind::Assert(e) if &e.span == span => *found = Some(&e.span),
            TStmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                block(then_block, span, found);
                if let Some(b) = else_block {
                    block(b, span, found);
                }
            }
            TStmtKind::While {
                body, invariant, ..
            }
            | TStmtKind::For {
                body, invariant, ..
            } => {
                if let Some(inv) = invariant {
                    if &inv.span == span {
                        *found = Some(&inv.span);
                    }
                }
                block(body, span, found);
            }
            TStmtKind::Block(b) => block(b, span, found),
            _ => {}
        }
    }
    block(f.body.as_ref()?, span, &mut found);
    found
}

fn verdicts(plan: &Plan<'_>, obs: &[Obligation]) -> Result<Vec<Verdict>, VerifyError> {
    let goals = obs
        .iter()
        .map(|ob| goal_for(plan, ob))
        .collect::<Result<Vec<_>, _>>()?;
    let (results, elapsed) = enumerate(plan, &goals);
    Ok(obs
        .iter()
        .zip(results)
        .map(|(ob, r)| Verdict {
            obligation: ob.id.clone(),
            goal: ob.text.clone(),
            status: r.status,
            counterexample: r.witness,
            states_checked: r.states_checked,
            message: r.message,
            elapsed,
        })
        .collect())
}

/// Checks a single obligation.
pub fn check_obligation(
    tp: &TypedProgram,
    ob: &Obligation,
    dc: &DomainConfig,
) -> Result<Verdict, VerifyError> {
    let plan = Plan::new(tp, &ob.function, dc)?;
    Ok(verdicts(&plan, std::slice::from_ref(ob))?.remove(0))
}

/// Checks all obligations of `name` in one pass over its input space.
/// Verdicts equal those of [`check_obligation`] run one at a time.
pub fn check_function(
    tp: &TypedProgram,
    name: &str,
    dc: &DomainConfig,
) -> Result<Vec<Verdict>, VerifyError> {
    let obs = gen_obligations(tp, name)?;
    let plan = Plan::new(tp, name, dc)?;
    verdicts(&plan, &obs)
}

fn synthetic(name: &str, id: &str, kind: ObligationKind, text: String) -> Obligation {
    Obligation {
        id: format!("{name}::{id}"),
        function: name.to_string(),
        kind,
        goal: None,
        text,
    }
}

/// Completeness and disjointness of the named behaviors, whether or not
/// the contract declares them.
pub fn check_behavior_sets(
    tp: &TypedProgram,
    name: &str,
    dc: &DomainConfig,
) -> Result<(Verdict, Verdict), VerifyError> {
    let f = tp
        .function(name)
        .ok_or_else(|| VerifyError::UnknownFunction { name: name.into() })?;
    let c = f
        .contract
        .as_ref()
        .ok_or_else(|| VerifyError::NoContract { name: name.into() })?;
    if !c
        .behaviors
        .iter()
        .any(|b| b.name != DEFAULT_BEHAVIOR && !b.assumes.is_empty())
    {
        return Err(VerifyError::NoBehaviors { name: name.into() });
    }
    let names = super::obligation::named_behaviors(f).join(", ");
    let obs = [
        synthetic(
            name,
            "complete",
            ObligationKind::Completeness,
            format!("complete behaviors {names}"),
        ),
        synthetic(
            name,
            "disjoint",
            ObligationKind::Disjointness,
            format!("disjoint behaviors {names}"),
        ),
    ];
    let plan = Plan::new(tp, name, dc)?;
    let mut v = verdicts(&plan, &obs)?;
    let disjoint = v.pop().expect("two verdicts");
    let complete = v.pop().expect("two verdicts");
    Ok((complete, disjoint))
}

/// Checks the assigns clause of `name`.
pub fn check_frame(
    tp: &TypedProgram,
    name: &str,
    dc: &DomainConfig,
) -> Result<Verdict, VerifyError> {
    let f = tp
        .function(name)
        .ok_or_else(|| VerifyError::UnknownFunction { name: name.into() })?;
    let targets = f
        .contract
        .as_ref()
        .and_then(|c| c.assigns.as_ref())
        .ok_or_else(|| VerifyError::NoAssigns { name: name.into() })?;
    let listed: Vec<String> = targets
        .iter()
        .filter_map(|t| tp.span_text(&t.span))
        .collect();
    let ob = synthetic(
        name,
        "frame",
        ObligationKind::Frame,
        format!("assigns {}", listed.join(", ")),
    );
    check_obligation(tp, &ob, dc)
}

/// Re-executes a counterexample. Returns true if the obligation is
/// violated at that point.
pub fn replay(
    tp: &TypedProgram,
    ob: &Obligation,
    counterexample: &BTreeMap<String, Value>,
    dc: &DomainConfig,
) -> Result<bool, VerifyError> {
    let plan = Plan::new(tp, &ob.function, dc)?;
    let goal = goal_for(&plan, ob)?;
    let vals = plan.values_from_map(counterexample)?;
    let p = plan.point(&vals);
    if !plan.admissible(&p) {
        return Ok(false);
    }
    Ok(matches!(
        goal.check(&plan, &p, &mut None),
        Outcome::Violation(_)
    ))
}

/// Equality coupling `a == b` between two state variables, either way.
pub(crate) fn coupled(plan: &Plan<'_>, a: usize, b: usize) -> bool {
    plan.partners
        .iter()
        .any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b))
}

/// Splits `A ==> B` into its antecedent.
pub(crate) fn antecedent(e: &TExpr) -> Option<&TExpr> {
    match &e.kind {
        TExprKind::Binary(BinOp::Implies, a, _) => Some(a),
        _ => None,
    }
}
