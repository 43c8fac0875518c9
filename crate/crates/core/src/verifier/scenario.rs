//! Scenarios: a sequence of calls on one evolving module state, with
//! callee outputs injected per step and expectations checked after each
//! call.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::domain::DomainConfig;
use super::engine::{post_env, resolve_stub, ResolvedStub, StubHook};
use super::VerifyError;
use crate::frontend::parse_logic_expr;
use crate::frontend::resolve::resolve_external_expr;
use crate::frontend::typed::TypedProgram;
use crate::semantics::eval::eval_logic;
use crate::semantics::exec::{exec_with, ExecOptions};
use crate::semantics::{ModuleState, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Overrides of the declared initial values, by variable name.
    #[serde(default)]
    pub initial: BTreeMap<String, Value>,
    pub steps: Vec<Step>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, VerifyError> {
        serde_json::from_str(text).map_err(|e| VerifyError::Config {
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub call: String,
    #[serde(default)]
    pub args: Args,
    /// Callee name to output name (`\result` or out-parameter) to value.
    #[serde(default)]
    pub inject: BTreeMap<String, BTreeMap<String, Value>>,
    /// Boolean expressions over the post-state; `\old` refers to the state
    /// before this step.
    #[serde(default)]
    pub expect: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Args {
    Positional(Vec<Value>),
    Named(BTreeMap<String, Value>),
}

impl Default for Args {
    fn default() -> Self {
        Args::Positional(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub expr: String,
    pub holds: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub call: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_value: Option<Value>,
    pub verdicts: Vec<ExpectationResult>,
    /// Set when the call itself failed; the state is then left unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl StepResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.verdicts.iter().all(|v| v.holds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: String,
    pub steps: Vec<StepResult>,
    /// Module and ghost variables after the last step.
    pub final_state: BTreeMap<String, Value>,
    /// Index of the first step that failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<usize>,
}

impl ScenarioResult {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Runs every step of `scenario`, continuing after failures. Callees
/// without injected outputs use the stubs of `dc`. Configuration problems
/// (unknown functions, malformed expectations, bad arguments) are errors.
pub fn run_scenario(
    tp: &TypedProgram,
    scenario: &Scenario,
    dc: &DomainConfig,
) -> Result<ScenarioResult, VerifyError> {
    let mut stubs: Vec<(String, ResolvedStub)> = Vec::new();
    let mut unused = Vec::new();
    for (name, stub) in &dc.stubs {
        if let Some(f) = tp.function(name) {
            stubs.push((name.clone(), resolve_stub(tp, f, stub, &mut unused)?));
        }
    }

    let mut state = ModuleState::initial(tp);
    for (name, v) in &scenario.initial {
        if !state.set(tp, name, v.clone()) {
            return Err(VerifyError::Config {
                message: format!("scenario `{}`: unknown variable `{name}`", scenario.name),
            });
        }
    }

    let mut steps = Vec::new();
    let mut first_failure = None;
    for (n, step) in scenario.steps.iter().enumerate() {
        let f = tp
            .function(&step.call)
            .ok_or_else(|| VerifyError::UnknownFunction {
                name: step.call.clone(),
            })?;
        for callee in step.inject.keys() {
            if tp.function(callee).is_none() {
                return Err(VerifyError::UnknownFunction {
                    name: callee.clone(),
                });
            }
        }
        let args = positional(f, &step.args).map_err(|message| VerifyError::Config {
            message: format!("scenario `{}`, step {}: {message}", scenario.name, n + 1),
        })?;
        let mut expectations = Vec::new();
        for text in &step.expect {
            let e = parse_logic_expr(text, "<expectation>").map_err(|source| {
                VerifyError::ExprParse {
                    text: text.clone(),
                    source,
                }
            })?;
            let t = resolve_external_expr(tp, &e, Some(&step.call)).map_err(|source| {
                VerifyError::ExprResolve {
                    text: text.clone(),
                    source,
                }
            })?;
            expectations.push((text, t));
        }

        let hook = StubHook {
            stubs: &stubs,
            stub_vals: &[],
            inject: Some(&step.inject),
        };
        let opts = ExecOptions {
            trace: false,
            ..ExecOptions::default()
        };
        let result = match exec_with(tp, &step.call, &args, &state, &opts, Some(&hook)) {
            Ok(r) => {
                let env = post_env(tp, &r);
                let verdicts = expectations
                    .iter()
                    .map(|(text, e)| match eval_logic(e, &env) {
                        Ok(Value::Bool(b)) => ExpectationResult {
                            expr: (*text).clone(),
                            holds: b,
                            message: None,
                        },
                        Ok(v) => ExpectationResult {
                            expr: (*text).clone(),
                            holds: false,
                            message: Some(format!("evaluates to {v}")),
                        },
                        Err(err) => ExpectationResult {
                            expr: (*text).clone(),
                            holds: false,
                            message: Some(err.to_string()),
                        },
                    })
                    .collect();
                let out = StepResult {
                    call: step.call.clone(),
                    return_value: r.return_value.clone(),
                    verdicts,
                    error: None,
                };
                state = r.post_state;
                out
            }
            Err(e) => StepResult {
                call: step.call.clone(),
                return_value: None,
                verdicts: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        if first_failure.is_none() && !result.passed() {
            first_failure = Some(n);
        }
        steps.push(result);
    }

    let mut final_state = state.concrete_map(tp);
    final_state.extend(state.ghost_map(tp));
    Ok(ScenarioResult {
        name: scenario.name.clone(),
        steps,
        final_state,
        first_failure,
    })
}

/// Argument values in declaration order; out-parameters start at zero.
fn positional(f: &crate::frontend::typed::TFunction, args: &Args) -> Result<Vec<Value>, String> {
    let inputs: Vec<usize> = (0..f.params.len()).filter(|&i| !f.params[i].out).collect();
    let mut out: Vec<Value> = f.params.iter().map(|p| p.ty.zero()).collect();
    match args {
        Args::Positional(vs) => {
            if vs.len() != inputs.len() {
                return Err(format!(
                    "`{}` takes {} argument(s), got {}",
                    f.name,
                    inputs.len(),
                    vs.len()
                ));
            }
            for (&i, v) in inputs.iter().zip(vs) {
                out[i] = v.clone().coerce(&f.params[i].ty);
            }
        }
        Args::Named(m) => {
            for name in m.keys() {
                if !f.params.iter().any(|p| !p.out && p.name == *name) {
                    return Err(format!("`{}` has no parameter `{name}`", f.name));
                }
            }
            for &i in &inputs {
                let p = &f.params[i];
                let v = m
                    .get(&p.name)
                    .ok_or_else(|| format!("missing argument `{}`", p.name))?;
                out[i] = v.clone().coerce(&p.ty);
            }
        }
    }
    Ok(out)
}
