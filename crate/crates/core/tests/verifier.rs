use std::collections::BTreeMap;
use std::path::Path;

use minispec::corpus;
use minispec::frontend::typed::TypedProgram;
use minispec::frontend::{load_program, parse_source, resolve, resolve_with_sources};
use minispec::semantics::Value;
use minispec::verifier::*;
use proptest::prelude::*;

fn program(src: &str) -> TypedProgram {
    resolve(&parse_source(src, "t.mc").expect("parses")).expect("resolves")
}

/// Loads a corpus entry after rewriting one of its files.
fn corpus_with(entry: &str, file: &str, edit: impl Fn(&str) -> String) -> TypedProgram {
    let (p, sources) = load_program(Path::new(entry), |path| {
        let key = path.to_string_lossy().into_owned();
        let text = corpus::asset(&key).expect("corpus asset");
        Ok(if key == file {
            edit(text)
        } else {
            text.to_string()
        })
    })
    .unwrap();
    resolve_with_sources(&p, sources).unwrap()
}

fn int(v: i64) -> Value {
    Value::Int(v)
}

fn values(vs: &[i64]) -> Domain {
    Domain::Values(vs.iter().map(|&v| int(v)).collect())
}

/// Corpus domains with a coarse grid of sensor readings: every branch of
/// the temperature check, in well under a second.
fn small_domains() -> DomainConfig {
    let readings = values(&[
        -40, -25, -21, -20, -19, 0, 5, 10, 15, 20, 25, 59, 60, 61, 63, 66, 125,
    ]);
    corpus::default_domains()
        .unwrap()
        .with_domain("reading1", readings.clone())
        .with_domain("reading2", readings)
}

fn by_id<'a>(verdicts: &'a [Verdict], id: &str) -> &'a Verdict {
    verdicts
        .iter()
        .find(|v| v.obligation == id)
        .unwrap_or_else(|| panic!("no verdict {id}"))
}

#[test]
fn contract_free_function_has_no_obligations() {
    let tp = program("static uint16_t n = 0;\nvoid tick(void) { n = n + 1; }");
    assert!(gen_obligations(&tp, "tick").unwrap().is_empty());
}

#[test]
fn one_loop_and_one_ensures_give_three_obligations() {
    let tp = program(
        "/*@ ensures \\result == n; @*/
         uint16_t count(uint16_t n) {
             uint16_t i = 0;
             /*@ loop invariant i <= n; @*/
             while (i < n) { i = i + 1; }
             return i;
         }",
    );
    let obs = gen_obligations(&tp, "count").unwrap();
    assert_eq!(obs.len(), 3);
    assert!(matches!(
        obs[0].kind,
        ObligationKind::BehaviorEnsures { .. }
    ));
    assert!(matches!(
        obs[1].kind,
        ObligationKind::LoopInvariantInit { .. }
    ));
    assert!(matches!(
        obs[2].kind,
        ObligationKind::LoopInvariantPreserve { .. }
    ));

    let dc = DomainConfig::default().with_domain("n", Domain::Range([0, 50]));
    for v in check_function(&tp, "count", &dc).unwrap() {
        assert_eq!(v.status, Status::Valid, "{v:?}");
    }
}

#[test]
fn corpus_obligation_counts_follow_the_manifest() {
    let c = corpus::load_corpus().unwrap();
    for f in &c.manifest.functions {
        match f.obligations {
            Some(n) => assert_eq!(
                gen_obligations(&c.program, &f.name).unwrap().len(),
                n,
                "{}",
                f.name
            ),
            None => assert!(matches!(
                gen_obligations(&c.program, &f.name),
                Err(VerifyError::HardwareFunction { .. })
            )),
        }
    }
}

#[test]
fn setter_is_valid_and_counts_every_state() {
    let c = corpus::load_corpus().unwrap();
    let verdicts = check_function(&c.program, "cbit_set_work_cond", &c.domains).unwrap();
    assert_eq!(verdicts.len(), 6);
    assert!(
        verdicts.iter().all(|v| v.status == Status::Valid),
        "{verdicts:?}"
    );
    // new_cond × WorkCondition; gWorkCond is defined by the coupling
    let full = 65_536 * 4;
    assert_eq!(
        by_id(&verdicts, "cbit_set_work_cond::complete").states_checked,
        full
    );
    assert_eq!(
        by_id(&verdicts, "cbit_set_work_cond::disjoint").states_checked,
        full
    );
    // ensures are checked where their behavior applies
    assert_eq!(
        by_id(&verdicts, "cbit_set_work_cond::ensures::NoCommand::0").states_checked,
        4
    );
    assert_eq!(
        by_id(&verdicts, "cbit_set_work_cond::ensures::ModifyWC::0").states_checked,
        65_535
    );
    assert_eq!(
        by_id(&verdicts, "cbit_set_work_cond::ensures::KeepWC::0").states_checked,
        3 * 65_535
    );
}

#[test]
fn filtering_coupling_shrinks_the_state_count() {
    let tp = program(
        "//@ ghost uint16_t s = 0;
         //@ ghost uint16_t t = 0;
         /*@ behavior Low: assumes s < 5;
           @ behavior High: assumes s >= 5;
           @ behavior Equal: assumes s == t;
           @*/
         void f(void) { }",
    );
    let mut dc = DomainConfig::default()
        .with_domain("s", Domain::Range([0, 9]))
        .with_domain("t", Domain::Range([0, 9]));
    dc.coupling = vec!["t < s".into()];
    let (complete, disjoint) = check_behavior_sets(&tp, "f", &dc).unwrap();
    let admissible = (0..10)
        .flat_map(|s| (0..10).map(move |t| (s, t)))
        .filter(|(s, t)| t < s)
        .count() as u64;
    assert_eq!(admissible, 45);
    // Equal never applies under the filter, so both sets hold
    assert_eq!(
        (complete.status, disjoint.status),
        (Status::Valid, Status::Valid)
    );
    assert_eq!(complete.states_checked, admissible);
    assert_eq!(disjoint.states_checked, admissible);

    dc.coupling.clear();
    let (_, disjoint) = check_behavior_sets(&tp, "f", &dc).unwrap();
    assert_eq!(disjoint.status, Status::Failed);
}

#[test]
fn unbounded_real_quantifier_is_unknown() {
    let tp = program("/*@ ensures \\forall real r; r * 0.0 == 0.0; @*/\nvoid z(void) { }");
    let v = check_function(&tp, "z", &DomainConfig::default()).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].status, Status::Unknown);
    assert!(v[0].message.is_some());
}

#[test]
fn bounded_quantifier_is_decided() {
    let tp = program(
        "/*@ ensures \\forall integer i; 0 <= i < 10 ==> i * i >= i;
           @ ensures \\exists integer i; 0 <= i < 10 && i * i == 49;
           @*/
         void q(void) { }",
    );
    for v in check_function(&tp, "q", &DomainConfig::default()).unwrap() {
        assert_eq!(v.status, Status::Valid, "{v:?}");
    }
}

#[test]
fn frame_check_needs_the_qualified_module_variable() {
    let dc = corpus::default_domains().unwrap();
    let ghost_only = corpus::load_entry("variants/cbit_wc_assigns_ghost.mc").unwrap();
    let v = check_frame(&ghost_only, "cbit_set_work_cond", &dc).unwrap();
    assert_eq!(v.status, Status::Failed);
    assert!(
        v.message
            .as_deref()
            .unwrap_or_default()
            .contains("WorkCondition"),
        "{v:?}"
    );
    let ob = gen_obligations(&ghost_only, "cbit_set_work_cond")
        .unwrap()
        .into_iter()
        .find(|o| o.kind == ObligationKind::Frame)
        .unwrap();
    assert!(replay(&ghost_only, &ob, v.counterexample.as_ref().unwrap(), &dc).unwrap());

    let qualified = corpus::load_entry("variants/cbit_wc_assigns_qualified.mc").unwrap();
    assert_eq!(
        check_frame(&qualified, "cbit_set_work_cond", &dc)
            .unwrap()
            .status,
        Status::Valid
    );

    let no_assigns = corpus::load_entry("cbit_wc.mc").unwrap();
    assert!(matches!(
        check_frame(&no_assigns, "cbit_set_work_cond", &dc),
        Err(VerifyError::NoAssigns { .. })
    ));
}

#[test]
fn pure_function_with_nothing_assigned_keeps_its_frame() {
    let tp = program(
        "static uint16_t s = 3;
         /*@ assigns \\nothing; ensures \\result >= x; @*/
         int32_t add(uint16_t x) { int32_t t; t = x; return t + s; }",
    );
    let dc = DomainConfig::default()
        .with_domain("x", Domain::Range([0, 100]))
        .with_domain("s", Domain::Range([0, 5]));
    assert_eq!(check_frame(&tp, "add", &dc).unwrap().status, Status::Valid);
    assert!(check_function(&tp, "add", &dc)
        .unwrap()
        .iter()
        .all(|v| v.status == Status::Valid));
}

#[test]
fn identical_assumes_are_not_disjoint() {
    let tp = program(
        "/*@ behavior A: assumes x > 2;
           @ behavior B: assumes x > 2;
           @ behavior C: assumes x <= 2;
           @*/
         void f(uint16_t x) { }",
    );
    let dc = DomainConfig::default().with_domain("x", Domain::Range([0, 5]));
    let (complete, disjoint) = check_behavior_sets(&tp, "f", &dc).unwrap();
    assert_eq!(complete.status, Status::Valid);
    assert_eq!(disjoint.status, Status::Failed);
    assert_eq!(disjoint.counterexample.unwrap()["x"], int(3));
}

#[test]
fn behavior_sets_need_behaviors() {
    let tp = program("/*@ ensures \\result == 1; @*/\nuint16_t one(void) { return 1; }");
    assert!(matches!(
        check_behavior_sets(&tp, "one", &DomainConfig::default()),
        Err(VerifyError::NoBehaviors { .. })
    ));
}

const SETTER_BEHAVIORS: [&str; 3] = ["NoCommand", "ModifyWC", "KeepWC"];

/// The setter's behavior assumptions, written out independently.
fn setter_assumes(behavior: &str, new_cond: i64, g: i64) -> bool {
    match behavior {
        "NoCommand" => new_cond == 65_535,
        "ModifyWC" => g == 0 && new_cond != 65_535,
        "KeepWC" => g != 0 && new_cond != 65_535,
        _ => unreachable!(),
    }
}

/// Removes `behavior` (its header and clause lines) from the setter source.
fn without_behavior(text: &str, behavior: &str) -> String {
    let mut out = Vec::new();
    let mut skipping = false;
    for line in text.lines() {
        let body = line.trim_start().trim_start_matches('@').trim();
        if let Some(name) = body.strip_prefix("behavior ") {
            skipping = name.trim_end_matches(':') == behavior;
        } else if !body.starts_with("assumes")
            && !body.starts_with("ensures")
            && !body.starts_with('(')
            && !body.starts_with("(new_cond")
        {
            skipping = false;
        }
        if !skipping {
            out.push(line);
        }
    }
    out.join("\n")
}

#[test]
fn deleting_any_setter_behavior_breaks_completeness_as_the_oracle_predicts() {
    let new_conds = [0, 1, 2, 3, 65_534, 65_535];
    let conditions = [0, 2, 3, 65_535];
    let dc = corpus::default_domains()
        .unwrap()
        .with_domain("new_cond", values(&new_conds))
        .with_domain("cbit::WorkCondition", values(&conditions));
    let full = corpus::load_entry("cbit_wc.mc").unwrap();
    let (c, d) = check_behavior_sets(&full, "cbit_set_work_cond", &dc).unwrap();
    assert_eq!((c.status, d.status), (Status::Valid, Status::Valid));

    for removed in SETTER_BEHAVIORS {
        let tp = corpus_with("cbit_wc.mc", "cbit_wc.mc", |t| without_behavior(t, removed));
        let f = tp.function("cbit_set_work_cond").unwrap();
        assert_eq!(f.contract.as_ref().unwrap().behaviors.len(), 2, "{removed}");
        let (complete, disjoint) = check_behavior_sets(&tp, "cbit_set_work_cond", &dc).unwrap();

        let kept: Vec<&str> = SETTER_BEHAVIORS
            .iter()
            .copied()
            .filter(|b| *b != removed)
            .collect();
        let uncovered: Vec<(i64, i64)> = new_conds
            .iter()
            .flat_map(|&n| conditions.iter().map(move |&g| (n, g)))
            .filter(|&(n, g)| !kept.iter().any(|b| setter_assumes(b, n, g)))
            .collect();
        assert!(!uncovered.is_empty());
        assert_eq!(complete.status, Status::Failed, "{removed}");
        assert_eq!(disjoint.status, Status::Valid, "{removed}");
        let cex = complete.counterexample.unwrap();
        let witness = (
            cex["new_cond"].as_int().unwrap(),
            cex["gWorkCond"].as_int().unwrap(),
        );
        assert!(
            uncovered.contains(&witness),
            "{removed}: {witness:?} not in {uncovered:?}"
        );
        if removed == "NoCommand" {
            assert_eq!(witness.0, 65_535);
        }
    }
}

/// Builds `void f(uint16_t x)` over a ghost variable `s`, with one
/// behavior per box `[x0, x1] × [s0, s1]`.
fn boxed_behaviors(boxes: &[(i64, i64, i64, i64)]) -> TypedProgram {
    let mut src = String::from("//@ ghost uint16_t s = 0;\n/*@\n");
    for (i, (x0, x1, s0, s1)) in boxes.iter().enumerate() {
        src.push_str(&format!(
            "  @ behavior B{i}: assumes {x0} <= x <= {x1} && {s0} <= s <= {s1};\n"
        ));
    }
    src.push_str("  @*/\nvoid f(uint16_t x) { }\n");
    program(&src)
}

fn distinct_values() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::btree_set(0i64..12, 1..=8).prop_map(|s| s.into_iter().collect())
}

fn a_box() -> impl Strategy<Value = (i64, i64, i64, i64)> {
    (0i64..12, 0i64..12, 0i64..12, 0i64..12)
        .prop_map(|(a, b, c, d)| (a.min(b), a.max(b), c.min(d), c.max(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn behavior_sets_agree_with_brute_force(
        xs in distinct_values(),
        ss in distinct_values(),
        boxes in prop::collection::vec(a_box(), 1..5),
    ) {
        let tp = boxed_behaviors(&boxes);
        let dc = DomainConfig::default().with_domain("x", values(&xs)).with_domain("s", values(&ss));
        let (complete, disjoint) = check_behavior_sets(&tp, "f", &dc).unwrap();

        let hits = |x: i64, s: i64| boxes.iter().filter(|(x0, x1, s0, s1)| *x0 <= x && x <= *x1 && *s0 <= s && s <= *s1).count();
        let points: Vec<(i64, i64)> = xs.iter().flat_map(|&x| ss.iter().map(move |&s| (x, s))).collect();
        let gaps: Vec<_> = points.iter().copied().filter(|&(x, s)| hits(x, s) == 0).collect();
        let overlaps: Vec<_> = points.iter().copied().filter(|&(x, s)| hits(x, s) > 1).collect();

        for v in [&complete, &disjoint] {
            if v.status == Status::Valid {
                prop_assert_eq!(v.states_checked, points.len() as u64);
            }
        }
        prop_assert_eq!(complete.status == Status::Valid, gaps.is_empty());
        prop_assert_eq!(disjoint.status == Status::Valid, overlaps.is_empty());
        for (v, bad) in [(&complete, &gaps), (&disjoint, &overlaps)] {
            if let Some(cex) = &v.counterexample {
                let p = (cex["x"].as_int().unwrap(), cex["s"].as_int().unwrap());
                prop_assert!(bad.contains(&p));
                // the first violating point in domain order
                prop_assert_eq!(p, bad[0]);
            }
        }
    }

    #[test]
    fn shrinking_a_domain_never_invalidates(
        xs in distinct_values(),
        keep in prop::collection::vec(any::<bool>(), 8),
    ) {
        let tp = program(
            "/*@ requires x != 7;
               @ ensures \\result <= 3 * x;
               @ ensures \\result != 13;
               @ ensures \\result % 3 == 0;
               @*/
             uint16_t g(uint16_t x) { if (x > 3) { return 3 * x + 1; } return 3 * x; }",
        );
        let sub: Vec<i64> = xs.iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| *x).collect();
        prop_assume!(!sub.is_empty());
        let big = check_function(&tp, "g", &DomainConfig::default().with_domain("x", values(&xs))).unwrap();
        let small = check_function(&tp, "g", &DomainConfig::default().with_domain("x", values(&sub))).unwrap();
        for (b, s) in big.iter().zip(&small) {
            prop_assert_eq!(&b.obligation, &s.obligation);
            if b.status == Status::Valid {
                prop_assert_eq!(s.status, Status::Valid);
            }
        }
    }
}

#[test]
fn uncorrected_cold_clause_fails_after_a_latched_condition() {
    let dc = small_domains();
    let tp = corpus::load_entry("cbit_uncorrected.mc").unwrap();
    let verdicts = check_function(&tp, "cbit_check_temperature", &dc).unwrap();
    let cold = by_id(&verdicts, "cbit_check_temperature::ensures::TempOK::3");
    assert_eq!(cold.status, Status::Failed);
    let cex = cold.counterexample.as_ref().unwrap();
    assert_ne!(cex["gWorkCond"], int(0));
    assert_eq!(cex["gWorkCond"], cex["cbit::WorkCondition"]);
    let failed: Vec<_> = verdicts
        .iter()
        .filter(|v| v.status == Status::Failed)
        .collect();
    assert_eq!(failed.len(), 1, "{failed:?}");

    let corrected = corpus::load_entry("cbit.mc").unwrap();
    let verdicts = check_function(&corrected, "cbit_check_temperature", &dc).unwrap();
    assert_eq!(verdicts.len(), 12);
    assert!(
        verdicts.iter().all(|v| v.status == Status::Valid),
        "{verdicts:?}"
    );
}

#[test]
fn every_counterexample_replays() {
    let dc = small_domains();
    let tp = corpus::load_entry("cbit_uncorrected.mc").unwrap();
    let obs = gen_obligations(&tp, "cbit_check_temperature").unwrap();
    for ob in &obs {
        let v = check_obligation(&tp, ob, &dc).unwrap();
        if let Some(cex) = &v.counterexample {
            assert_eq!(v.status, Status::Failed);
            assert!(replay(&tp, ob, cex, &dc).unwrap(), "{}", ob.id);
            let mut partial = cex.clone();
            partial.remove("reading1");
            assert!(matches!(
                replay(&tp, ob, &partial, &dc),
                Err(VerifyError::IncompleteCounterexample { .. })
            ));
        } else {
            assert_eq!(v.status, Status::Valid, "{}", ob.id);
        }
    }
    // a point where the clause holds does not replay as a violation
    let cold = obs.iter().find(|o| o.id.ends_with("TempOK::3")).unwrap();
    let fine: BTreeMap<String, Value> = [
        ("reading1", 20),
        ("reading2", 20),
        ("cbit::WorkCondition", 0),
        ("cbit::ErrCnt", 0),
        ("cbit::ModuleTemp", 0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), int(v)))
    .collect();
    assert!(!replay(&tp, cold, &fine, &dc).unwrap());
}

#[test]
fn single_and_batched_checks_agree() {
    let dc = small_domains();
    let tp = corpus::load_entry("cbit_uncorrected.mc").unwrap();
    let batch = check_function(&tp, "cbit_check_temperature", &dc).unwrap();
    let single: Vec<Verdict> = gen_obligations(&tp, "cbit_check_temperature")
        .unwrap()
        .iter()
        .map(|ob| check_obligation(&tp, ob, &dc).unwrap())
        .collect();
    assert_eq!(batch, single);
}

#[test]
fn verdicts_do_not_depend_on_the_thread_count() {
    let dc = small_domains();
    let tp = corpus::load_entry("cbit_uncorrected.mc").unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| verify_program(&tp, &dc, None).unwrap().to_json())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn acquisition_is_valid_with_stubbed_adc() {
    let c = corpus::load_corpus().unwrap();
    let verdicts = check_function(&c.program, "acq_measure_temp", &c.domains).unwrap();
    assert_eq!(verdicts.len(), 7);
    assert!(
        verdicts.iter().all(|v| v.status == Status::Valid),
        "{verdicts:?}"
    );
}

#[test]
fn coverage_lint_finds_the_working_condition_gap() {
    let dc = small_domains();
    let tp = corpus::load_entry("cbit.mc").unwrap();
    let gaps = output_coverage(&tp, "cbit_check_temperature", &dc).unwrap();
    let names: Vec<&str> = gaps.iter().map(|g| g.output.as_str()).collect();
    assert!(names.contains(&"cbit::WorkCondition"), "{names:?}");
    assert!(!names.contains(&"\\result"));
    assert!(!names.contains(&"gerrcnt"));
    let wc = gaps
        .iter()
        .find(|g| g.output == "cbit::WorkCondition")
        .unwrap();
    assert_ne!(wc.witness["cbit::WorkCondition"], int(65_535));

    let covered = corpus::load_entry("cbit_covered.mc").unwrap();
    assert_eq!(
        output_coverage(&covered, "cbit_check_temperature", &dc).unwrap(),
        vec![]
    );
}

#[test]
fn oversized_domain_product_times_out_without_enumerating() {
    let mut dc = corpus::default_domains().unwrap();
    dc.max_states = 1000;
    let tp = corpus::load_entry("cbit_wc.mc").unwrap();
    for v in check_function(&tp, "cbit_set_work_cond", &dc).unwrap() {
        if v.obligation.ends_with("NoCommand::0") {
            continue;
        }
        assert_eq!(v.status, Status::Timeout, "{v:?}");
        assert_eq!(v.states_checked, 0);
        assert!(v.message.as_deref().unwrap().contains("max_states"));
    }
}

#[test]
fn configuration_errors_are_reported() {
    let tp = corpus::load_entry("cbit.mc").unwrap();
    let mut dc = corpus::default_domains().unwrap();
    dc.domains.remove("new_cond");
    assert!(matches!(
        check_function(&tp, "cbit_set_work_cond", &dc),
        Err(VerifyError::DomainMissing { ref name }) if name.contains("new_cond")
    ));

    let mut dc = corpus::default_domains().unwrap();
    dc.stubs.remove("adc_read");
    assert!(matches!(
        check_function(&tp, "acq_measure_temp", &dc),
        Err(VerifyError::StubMissing { ref name }) if name == "adc_read"
    ));

    let dc = corpus::default_domains().unwrap();
    assert!(matches!(
        check_function(&tp, "nope", &dc),
        Err(VerifyError::UnknownFunction { .. })
    ));
    assert!(matches!(
        check_function(&tp, "adc_read", &dc),
        Err(VerifyError::HardwareFunction { .. })
    ));

    for bad in [
        r#"{ "domains": { "x": { "range": [3, 1] } } }"#,
        r#"{ "domains": { "x": { "values": [] } } }"#,
        r#"{ "domains": { "x": { "values": [1, 1] } } }"#,
        r#"{ "domains": 7 }"#,
    ] {
        assert!(
            matches!(
                DomainConfig::from_json(bad),
                Err(VerifyError::Config { .. })
            ),
            "{bad}"
        );
    }
    let mut dc = corpus::default_domains().unwrap();
    dc.coupling.push("gWorkCond ==".into());
    assert!(matches!(
        check_function(&tp, "cbit_set_work_cond", &dc),
        Err(VerifyError::ExprParse { .. })
    ));
}

#[test]
fn empty_summary_is_all_zero() {
    let r = summarize(Vec::new(), Vec::new());
    assert_eq!(r.totals, Totals::default());
    assert!(r.functions.is_empty());
    assert_eq!(r.exit_code(true), 0);
}

#[test]
fn report_shows_hardware_functions_as_dashes() {
    let dc = small_domains();
    let tp = corpus::load_entry("cbit_uncorrected.mc").unwrap();
    let report = verify_program(&tp, &dc, None).unwrap();
    let hw = report
        .functions
        .iter()
        .find(|f| f.name == "adc_read")
        .unwrap();
    assert!(hw.hardware && hw.scheduled.is_none() && hw.valid.is_none());
    let text = report.to_text();
    let row = text.lines().find(|l| l.starts_with("adc_read")).unwrap();
    assert_eq!(
        row.split_whitespace().collect::<Vec<_>>(),
        ["adc_read", "-", "-", "-", "-", "-"]
    );
    let setter = text
        .lines()
        .find(|l| l.starts_with("cbit_set_work_cond"))
        .unwrap();
    assert_eq!(setter.split_whitespace().nth(1), Some("6"));

    assert_eq!(report.totals.functions, 4);
    assert_eq!(report.totals.scheduled, 6 + 12 + 7);
    assert_eq!(report.totals.failed, 1);
    assert_eq!(report.exit_code(false), 1);
    assert!(report
        .assumptions
        .iter()
        .any(|a| a == "coupling: gWorkCond == cbit::WorkCondition"));

    let back: Report = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_text(), text);
}

#[test]
fn only_one_function_can_be_verified() {
    let dc = corpus::default_domains().unwrap();
    let tp = corpus::load_entry("cbit.mc").unwrap();
    let report = verify_program(&tp, &dc, Some("cbit_set_work_cond")).unwrap();
    assert_eq!(report.functions.len(), 1);
    assert_eq!(report.totals.valid, 6);
    assert!(matches!(
        verify_program(&tp, &dc, Some("missing")),
        Err(VerifyError::UnknownFunction { .. })
    ));
}

#[test]
fn corpus_scenarios_pass() {
    let c = corpus::load_corpus().unwrap();
    assert_eq!(c.scenarios.len(), 3);
    for s in &c.scenarios {
        let r = run_scenario(&c.program, s, &c.domains).unwrap();
        assert!(r.passed(), "{}: {r:?}", s.name);
        assert_eq!(r.first_failure, None);
    }
}

#[test]
fn failed_expectation_is_reported_and_the_run_continues() {
    let c = corpus::load_corpus().unwrap();
    let s = Scenario::from_json(
        r#"{
          "name": "wrong guess",
          "steps": [
            { "call": "cbit_check_temperature", "inject": { "acq_measure_temp": { "temp1": 0, "temp2": 20 } },
              "expect": ["\\result == EC_TEMP"] },
            { "call": "cbit_set_work_cond", "args": [2], "expect": ["gWorkCond == NCD_TEMP_LOW"] }
          ]
        }"#,
    )
    .unwrap();
    let r = run_scenario(&c.program, &s, &c.domains).unwrap();
    assert!(!r.passed());
    assert_eq!(r.first_failure, Some(0));
    assert_eq!(r.steps.len(), 2);
    assert!(r.steps[1].passed());
    assert_eq!(r.final_state["gWorkCond"], int(2));
    assert_eq!(r.final_state["cbit::ErrCnt"], int(1));
}
