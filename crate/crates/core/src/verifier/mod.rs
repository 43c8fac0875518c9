//! Obligation generation and bounded exhaustive checking.
//!
//! Every goal is decided by enumerating a finite input space described by a
//! [`DomainConfig`]: function parameters, the module and ghost variables the
//! function depends on, and values produced by stubbed callees. A `Valid`
//! verdict therefore means "valid over the configured domains".

mod coverage;
mod domain;
mod engine;
mod obligation;
mod report;
mod scenario;

use thiserror::Error;

use crate::frontend::{ParseError, ResolveError};

pub use coverage::{output_coverage, CoverageGap};
pub use domain::{Domain, DomainConfig, Stub, StubRow};
pub use engine::{
    check_behavior_sets, check_frame, check_function, check_obligation, replay, Status, Verdict,
};
pub use obligation::{gen_obligations, Obligation, ObligationKind};
pub use report::{summarize, verify_program, FunctionResult, FunctionRow, Report, Totals};
pub use scenario::{
    run_scenario, Args, ExpectationResult, Scenario, ScenarioResult, Step, StepResult,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("unknown function `{name}`")]
    UnknownFunction { name: String },
    #[error("`{name}` is a hardware function and is excluded from verification")]
    HardwareFunction { name: String },
    #[error("no domain configured for `{name}`")]
    DomainMissing { name: String },
    #[error("call of hardware function `{name}` has no stub")]
    StubMissing { name: String },
    #[error("`{name}` has no contract")]
    NoContract { name: String },
    #[error("`{name}` has no assigns clause")]
    NoAssigns { name: String },
    #[error("`{name}` has no behavior with assumes clauses")]
    NoBehaviors { name: String },
    #[error("unknown obligation `{id}`")]
    UnknownObligation { id: String },
    #[error("counterexample lacks a value for `{name}`")]
    IncompleteCounterexample { name: String },
    #[error("invalid configuration: {message}")]
    Config { message: String },
    #[error("in expression `{text}`: {source}")]
    ExprParse { text: String, source: ParseError },
    #[error("in expression `{text}`: {source}")]
    ExprResolve { text: String, source: ResolveError },
}
