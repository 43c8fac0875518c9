use std::collections::BTreeMap;
use std::sync::OnceLock;

use minispec::corpus;
use minispec::frontend::resolve::resolve_external_expr;
use minispec::frontend::typed::{TExprKind, TFunction, TStmtKind, TypedProgram};
use minispec::frontend::{parse_logic_expr, parse_source, resolve};
use minispec::semantics::{
    eval_logic, exec_function, exec_with, strip_ghost, CallHook, CallOutcome, Env, ExecError,
    ExecOptions, ModuleState, Snapshot, StripError, Value,
};
use proptest::prelude::*;

fn program(src: &str) -> TypedProgram {
    resolve(&parse_source(src, "t.mc").expect("parses")).expect("resolves")
}

/// Evaluates a boolean expression written outside the program.
fn holds(tp: &TypedProgram, text: &str, state: &ModuleState, snapshot: Option<&Snapshot>) -> bool {
    let e = resolve_external_expr(tp, &parse_logic_expr(text, "x").unwrap(), None).unwrap();
    let env = Env {
        state: &state.values,
        snapshot,
        ..Env::empty(&tp.logic_defs)
    };
    eval_logic(&e, &env).unwrap() == Value::Bool(true)
}

fn int(v: i64) -> Value {
    Value::Int(v)
}

#[test]
fn setter_latches_only_from_idle_or_on_release() {
    let tp = corpus::load_entry("cbit_wc.mc").unwrap();
    let cases = [
        // (current, command, expected)
        (0, 2, 2),
        (3, 65535, 65535),
        (3, 2, 3),
        (65535, 3, 65535),
    ];
    for (current, command, expected) in cases {
        let mut state = ModuleState::initial(&tp);
        state.set(&tp, "cbit::WorkCondition", int(current));
        state.set(&tp, "gWorkCond", int(current));
        let r = exec_function(&tp, "cbit_set_work_cond", &[int(command)], &state, 1000).unwrap();
        assert_eq!(
            r.post_state.get(&tp, "cbit::WorkCondition"),
            Some(&int(expected))
        );
        assert_eq!(r.post_state.get(&tp, "gWorkCond"), Some(&int(expected)));
        assert!(r.assertion_failures.is_empty());
        assert!(!r.trace.is_empty());
    }
}

#[test]
fn setter_assertion_failure_is_recorded_not_raised() {
    let tp = corpus::load_entry("cbit_wc.mc").unwrap();
    let mut state = ModuleState::initial(&tp);
    state.set(&tp, "gWorkCond", int(3));
    let r = exec_function(&tp, "cbit_set_work_cond", &[int(2)], &state, 1000).unwrap();
    assert_eq!(r.assertion_failures.len(), 1);
    assert!(
        r.assertion_failures[0].rendered.contains("gWorkCond"),
        "{}",
        r.assertion_failures[0].rendered
    );
}

#[test]
fn error_count_predicates() {
    let tp = corpus::load_entry("cbit.mc").unwrap();
    let s = ModuleState::initial(&tp);
    assert!(holds(&tp, "A_TempReadFailTrans(10, 17, 1)", &s, None));
    assert!(!holds(&tp, "A_TempReadFailTrans(10, 17, 3)", &s, None));
    assert!(holds(&tp, "A_TempReadFailPerm(10, 17, 3)", &s, None));
    assert!(holds(&tp, "A_TempReadOK(10, 15)", &s, None));
    assert!(holds(&tp, "temp_average(20, 21) == 20", &s, None));
    assert!(holds(&tp, "temp_average(-21, -20) == -21", &s, None));
}

#[test]
fn real_builtins() {
    let tp = corpus::load_entry("acq.mc").unwrap();
    let s = ModuleState::initial(&tp);
    assert!(holds(&tp, "\\exp(0.0) == 1.0", &s, None));
    assert!(holds(&tp, "\\floor(-0.5) == -1", &s, None));
    assert!(holds(&tp, "\\abs(-7) == 7", &s, None));
    assert!(holds(&tp, "R(25) == 10000.0", &s, None));
    assert!(holds(&tp, "D(25) == 814", &s, None));
}

#[test]
fn old_reads_the_snapshot() {
    let tp = corpus::load_entry("cbit.mc").unwrap();
    let mut pre = ModuleState::initial(&tp);
    pre.set(&tp, "gerrcnt", int(2));
    let mut post = pre.clone();
    post.set(&tp, "gerrcnt", int(3));
    let snap = Snapshot {
        state: pre,
        args: Vec::new(),
    };
    assert!(holds(&tp, "\\old(gerrcnt) == 2", &post, Some(&snap)));
    assert!(holds(&tp, "\\at(gerrcnt, Pre) == 2", &post, Some(&snap)));
    assert!(holds(&tp, "gerrcnt == 3", &post, Some(&snap)));
}

#[test]
fn program_arithmetic_wraps_and_logic_arithmetic_does_not() {
    let tp = program(
        "static uint16_t x = 65535;
         static int32_t y = 0;
         void inc(void) { x = x + 1; y = 2147483647; y = y + 1; }",
    );
    let r = exec_function(&tp, "inc", &[], &ModuleState::initial(&tp), 100).unwrap();
    assert_eq!(r.post_state.get(&tp, "x"), Some(&int(0)));
    assert_eq!(r.post_state.get(&tp, "y"), Some(&int(-2147483648)));
    assert!(holds(
        &tp,
        "x + 1 == 65536",
        &ModuleState::initial(&tp),
        None
    ));
}

#[test]
fn out_parameters_are_copied_out() {
    let tp = program("void two(int32_t* a, int32_t* b) { *a = 1; *b = *a + 1; }");
    let r = exec_function(
        &tp,
        "two",
        &[int(0), int(0)],
        &ModuleState::initial(&tp),
        100,
    )
    .unwrap();
    assert_eq!(
        r.out_params,
        BTreeMap::from([("a".to_string(), int(1)), ("b".to_string(), int(2))])
    );
}

#[test]
fn runaway_loop_hits_the_step_budget() {
    let tp = program("void spin(void) { while (0 == 0) { } }");
    let err = exec_function(&tp, "spin", &[], &ModuleState::initial(&tp), 500).unwrap_err();
    assert_eq!(err, ExecError::StepBudgetExceeded { budget: 500 });
}

#[test]
fn hardware_callee_without_a_hook_is_an_error() {
    let tp = corpus::load_entry("acq.mc").unwrap();
    let err = exec_function(
        &tp,
        "acq_measure_temp",
        &[int(0), int(0)],
        &ModuleState::initial(&tp),
        10_000,
    )
    .unwrap_err();
    assert!(
        matches!(err, ExecError::CalledHardwareFunction { ref name } if name == "adc_read"),
        "{err:?}"
    );
    let err =
        exec_function(&tp, "adc_read", &[int(3)], &ModuleState::initial(&tp), 10).unwrap_err();
    assert!(matches!(err, ExecError::CalledHardwareFunction { .. }));
}

/// Serves `adc_read` from a fixed array of channel codes.
struct Adc([i64; 16]);

impl CallHook for Adc {
    fn call(
        &self,
        _tp: &TypedProgram,
        callee: &TFunction,
        args: &[Value],
        _state: &mut ModuleState,
    ) -> Option<Result<CallOutcome, ExecError>> {
        (callee.name == "adc_read").then(|| {
            let ch = args[0].as_int().unwrap() as usize;
            Ok(CallOutcome {
                return_value: Some(int(self.0[ch % 16])),
                ..CallOutcome::default()
            })
        })
    }
}

#[test]
fn acquisition_inverts_the_code_table() {
    let tp = corpus::load_entry("acq.mc").unwrap();
    let mut codes = [0; 16];
    codes[3] = 814; // exactly D(25)
    codes[4] = 813; // just below D(25)
    let r = exec_with(
        &tp,
        "acq_measure_temp",
        &[int(0), int(0)],
        &ModuleState::initial(&tp),
        &ExecOptions::default(),
        Some(&Adc(codes)),
    )
    .unwrap();
    assert_eq!(r.out_params["temp1"], int(25));
    assert_eq!(r.out_params["temp2"], int(25));
    assert!(r.assertion_failures.is_empty());
    assert_eq!(r.post_state.get(&tp, "D1"), Some(&int(814)));
}

#[test]
fn stripping_the_setter_leaves_the_guarded_assignment() {
    let tp = corpus::load_entry("cbit_wc.mc").unwrap();
    let stripped = strip_ghost(&tp).unwrap();
    assert!(stripped.state_vars.iter().all(|v| !v.ghost));
    let f = stripped.function("cbit_set_work_cond").unwrap();
    assert!(f.contract.is_none());
    let body = &f.body.as_ref().unwrap().stmts;
    assert_eq!(body.len(), 1);
    let TStmtKind::If {
        then_block,
        else_block,
        ..
    } = &body[0].kind
    else {
        panic!("expected the guard, got {:?}", body[0].kind);
    };
    assert!(else_block.is_none());
    assert_eq!(then_block.stmts.len(), 1);
    assert!(matches!(then_block.stmts[0].kind, TStmtKind::Assign { .. }));
}

#[test]
fn stripping_a_ghost_free_program_changes_nothing() {
    let tp = program(
        "static uint16_t n = 0;
         uint16_t bump(uint16_t k) { uint16_t i; for (i = 0; i < k; i++) { n = n + 1; } return n; }",
    );
    assert_eq!(strip_ghost(&tp).unwrap(), tp);
}

#[test]
fn concrete_read_of_a_ghost_is_a_leak() {
    let mut tp = corpus::load_entry("cbit_wc.mc").unwrap();
    let ghost = tp.state_slot("gWorkCond").unwrap();
    let f = tp
        .functions
        .iter_mut()
        .find(|f| f.name == "cbit_set_work_cond")
        .unwrap();
    let stmts = &mut f.body.as_mut().unwrap().stmts;
    let guard = stmts
        .iter_mut()
        .find(|s| matches!(s.kind, TStmtKind::If { .. }))
        .unwrap();
    let TStmtKind::If { then_block, .. } = &mut guard.kind else {
        unreachable!()
    };
    let TStmtKind::Assign { value, .. } = &mut then_block.stmts[0].kind else {
        panic!("expected the latch assignment");
    };
    value.kind = TExprKind::State(ghost);
    match strip_ghost(&tp) {
        Err(StripError::GhostLeak { name, .. }) => assert_eq!(name, "gWorkCond"),
        other => panic!("expected a leak, got {other:?}"),
    }
}

/// Runs `name` on the full program and on its ghost-free version and
/// compares everything concrete code can observe.
fn erasure_holds(
    tp: &TypedProgram,
    stripped: &TypedProgram,
    name: &str,
    args: &[Value],
    state: &ModuleState,
    adc: &Adc,
) {
    let opts = ExecOptions {
        trace: false,
        ..ExecOptions::default()
    };
    let full = exec_with(tp, name, args, state, &opts, Some(adc)).unwrap();
    let concrete = ModuleState {
        values: state.concrete(tp).to_vec(),
    };
    let bare = exec_with(stripped, name, args, &concrete, &opts, Some(adc)).unwrap();
    assert_eq!(full.return_value, bare.return_value);
    assert_eq!(full.out_params, bare.out_params);
    assert_eq!(full.post_state.concrete(tp), &bare.post_state.values[..]);
}

fn programs() -> &'static (TypedProgram, TypedProgram) {
    static CELL: OnceLock<(TypedProgram, TypedProgram)> = OnceLock::new();
    CELL.get_or_init(|| {
        let tp = corpus::load_entry("cbit.mc").unwrap();
        let stripped = strip_ghost(&tp).unwrap();
        (tp, stripped)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ghost_erasure_preserves_concrete_behavior(
        new_cond in 0i64..=65535,
        wc in prop::sample::select(vec![0i64, 2, 3, 65535, 7]),
        err_cnt in 0i64..6,
        module_temp in -40i64..126,
        ghosts in prop::collection::vec(-100i64..70_000, 8),
        codes in prop::array::uniform16(250i64..1300),
    ) {
        let (tp, stripped) = programs();
        let mut state = ModuleState::initial(tp);
        state.set(tp, "cbit::WorkCondition", int(wc));
        state.set(tp, "cbit::ErrCnt", int(err_cnt));
        state.set(tp, "cbit::ModuleTemp", int(module_temp));
        // ghosts get unrelated values: erasure must not depend on them
        for (name, v) in ["gWorkCond", "gerrcnt", "gModuleTemp", "T1", "T2", "D1", "D2"].iter().zip(&ghosts) {
            state.set(tp, name, int(*v));
        }
        let adc = Adc(codes);
        erasure_holds(tp, stripped, "cbit_set_work_cond", &[int(new_cond)], &state, &adc);
        erasure_holds(tp, stripped, "cbit_check_temperature", &[], &state, &adc);
        erasure_holds(tp, stripped, "acq_measure_temp", &[int(ghosts[7]), int(0)], &state, &adc);
    }
}
