use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::frontend::typed::TypedProgram;
use crate::frontend::{parse_logic_expr, resolve::resolve_external_expr, typed::TExpr};
use crate::semantics::Value;

pub const DEFAULT_BUDGET_MS: u64 = 30_000;
pub const DEFAULT_MAX_STATES: u64 = 100_000_000;

/// Finite set of values for one input, enumerated in the order given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Inclusive integer range.
    Range([i64; 2]),
    Values(Vec<Value>),
}

impl Domain {
    pub fn len(&self) -> u64 {
        match self {
            Domain::Range([lo, hi]) => (hi - lo + 1).max(0) as u64,
            Domain::Values(v) => v.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, k: u64) -> Value {
        match self {
            Domain::Range([lo, _]) => Value::Int(lo + k as i64),
            Domain::Values(v) => v[k as usize].clone(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match self {
            Domain::Range([lo, hi]) => v.as_int().is_some_and(|x| *lo <= x && x <= *hi),
            Domain::Values(vs) => vs.contains(v),
        }
    }
}

/// Replacement for a callee during checking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stub {
    /// Each listed output (`\result` or an out-parameter name) takes the
    /// value of a free input with the given name.
    Outputs { outputs: BTreeMap<String, String> },
    /// Returns `ghost_array[index]`, `index` naming a parameter.
    GhostArray { ghost_array: String, index: String },
    /// Explicit relation from argument tuples to outputs.
    Table { table: Vec<StubRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubRow {
    pub args: Vec<Value>,
    #[serde(default)]
    pub outputs: BTreeMap<String, Value>,
}

impl Stub {
    pub fn describe(&self) -> String {
        match self {
            Stub::Outputs { outputs } => outputs
                .iter()
                .map(|(o, i)| format!("{o} := <{i}>"))
                .collect::<Vec<_>>()
                .join(", "),
            Stub::GhostArray { ghost_array, index } => {
                format!("\\result := {ghost_array}[{index}]")
            }
            Stub::Table { table } => format!("table of {} row(s)", table.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    /// Keys are parameter names (optionally `function.param`), state
    /// variable names (`module::var` or ghost names), array elements
    /// (`gADC[3]`) and stub input names.
    #[serde(default)]
    pub domains: BTreeMap<String, Domain>,
    /// Pre-state assumptions. A clause `g == e` where `g` is a ghost
    /// variable without a domain defines `g`; every other clause filters.
    #[serde(default)]
    pub coupling: Vec<String>,
    #[serde(default)]
    pub stubs: BTreeMap<String, Stub>,
    /// Wall-clock limit per obligation.
    #[serde(default = "default_budget_ms")]
    pub budget_ms: u64,
    /// Largest domain product that will be enumerated.
    #[serde(default = "default_max_states")]
    pub max_states: u64,
}

fn default_budget_ms() -> u64 {
    DEFAULT_BUDGET_MS
}

fn default_max_states() -> u64 {
    DEFAULT_MAX_STATES
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            domains: BTreeMap::new(),
            coupling: Vec::new(),
            stubs: BTreeMap::new(),
            budget_ms: DEFAULT_BUDGET_MS,
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

impl DomainConfig {
    pub fn from_json(text: &str) -> Result<Self, VerifyError> {
        let dc: DomainConfig = serde_json::from_str(text).map_err(|e| VerifyError::Config {
            message: e.to_string(),
        })?;
        dc.validate()?;
        Ok(dc)
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        for (name, d) in &self.domains {
            let bad = |why: &str| VerifyError::Config {
                message: format!("domain `{name}`: {why}"),
            };
            match d {
                Domain::Range([lo, hi]) if lo > hi => return Err(bad("empty range")),
                Domain::Values(v) if v.is_empty() => return Err(bad("no values")),
                Domain::Values(v) => {
                    let mut seen = BTreeSet::new();
                    for x in v {
                        if !seen.insert(x.to_string()) {
                            return Err(bad(&format!("duplicate value {x}")));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn with_domain(mut self, name: &str, d: Domain) -> Self {
        self.domains.insert(name.to_string(), d);
        self
    }

    /// Resolves the coupling clauses against `tp`. Clauses naming
    /// something the program does not declare are returned as `None`;
    /// other errors are reported.
    pub fn resolve_coupling(
        &self,
        tp: &TypedProgram,
    ) -> Result<Vec<(String, Option<TExpr>)>, VerifyError> {
        let mut out = Vec::new();
        for text in &self.coupling {
            let e =
                parse_logic_expr(text, "<coupling>").map_err(|source| VerifyError::ExprParse {
                    text: text.clone(),
                    source,
                })?;
            match resolve_external_expr(tp, &e, None) {
                Ok(t) => out.push((text.clone(), Some(t))),
                Err(crate::frontend::ResolveError::UndefinedName { .. }) => {
                    out.push((text.clone(), None))
                }
                Err(source) => {
                    return Err(VerifyError::ExprResolve {
                        text: text.clone(),
                        source,
                    })
                }
            }
        }
        Ok(out)
    }
}
