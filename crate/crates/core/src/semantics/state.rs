use std::collections::BTreeMap;

use crate::frontend::typed::TypedProgram;

use super::Value;

/// Values of all module variables and ghost variables, indexed by the state
/// slots of a [`TypedProgram`] (concrete slots first).
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleState {
    pub values: Vec<Value>,
}

impl ModuleState {
    /// State as declared by the initializers.
    pub fn initial(tp: &TypedProgram) -> Self {
        ModuleState {
            values: tp.state_vars.iter().map(|v| v.init.clone()).collect(),
        }
    }

    /// Looks up by qualified name, ghost name, or unambiguous bare name.
    pub fn get(&self, tp: &TypedProgram, name: &str) -> Option<&Value> {
        tp.state_slot(name).and_then(|i| self.values.get(i))
    }

    /// Sets a variable; returns false if the name is unknown.
    pub fn set(&mut self, tp: &TypedProgram, name: &str, value: Value) -> bool {
        match tp.state_slot(name) {
            Some(i) if i < self.values.len() => {
                self.values[i] = value.coerce(&tp.state_vars[i].ty);
                true
            }
            _ => false,
        }
    }

    /// The concrete (non-ghost) part.
    pub fn concrete<'a>(&'a self, tp: &TypedProgram) -> &'a [Value] {
        &self.values[..tp.concrete_state_len().min(self.values.len())]
    }

    pub fn concrete_map(&self, tp: &TypedProgram) -> BTreeMap<String, Value> {
        self.named(tp, false)
    }

    pub fn ghost_map(&self, tp: &TypedProgram) -> BTreeMap<String, Value> {
        self.named(tp, true)
    }

    fn named(&self, tp: &TypedProgram, ghost: bool) -> BTreeMap<String, Value> {
        tp.state_vars
            .iter()
            .zip(&self.values)
            .filter(|(v, _)| v.ghost == ghost)
            .map(|(v, val)| (v.qualified_name(), val.clone()))
            .collect()
    }
}

/// Frozen pre-state: module state plus the argument values at entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: ModuleState,
    pub args: Vec<Value>,
}
