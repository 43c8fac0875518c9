//! Interpreter, logic evaluator and ghost erasure.

pub mod eval;
pub mod exec;
pub mod state;
pub mod strip;
mod value;

pub use eval::{eval_bool, eval_logic, Env, EvalError};
pub use exec::{
    exec_function, exec_with, CallHook, CallOutcome, ExecError, ExecOptions, ExecResult,
};
pub use state::{ModuleState, Snapshot};
pub use strip::{strip_ghost, StripError};
pub use value::Value;
