use minispec::corpus::{self, CorpusError, ASSETS};
use minispec::frontend::parse_logic_expr;
use minispec::frontend::resolve::resolve_external_expr;
use minispec::semantics::{eval_logic, Env, ModuleState, Value};

#[test]
fn corpus_matches_its_manifest() {
    let c = corpus::load_corpus().unwrap();
    assert_eq!(c.manifest.entry, "cbit.mc");
    let mut names: Vec<&str> = c
        .program
        .functions
        .iter()
        .map(|f| f.name.as_str())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "acq_measure_temp",
            "adc_read",
            "cbit_check_temperature",
            "cbit_set_work_cond"
        ]
    );
    let hardware: Vec<&str> = c
        .program
        .functions
        .iter()
        .filter(|f| f.hardware)
        .map(|f| f.name.as_str())
        .collect();
    assert_eq!(hardware, ["adc_read"]);
    assert_eq!(
        c.program.constant("NCD_NO_COMMAND").unwrap().value,
        Value::Int(65_535)
    );
    assert_eq!(
        c.program.constant("TEMP_FAIL").unwrap().value,
        Value::Int(5)
    );
    assert_eq!(c.scenarios.len(), 3);
}

#[test]
fn every_asset_is_listed_and_every_listed_file_is_embedded() {
    let m = corpus::manifest().unwrap();
    let embedded: Vec<&str> = ASSETS
        .iter()
        .map(|(p, _)| *p)
        .filter(|p| *p != "manifest.json")
        .collect();
    assert_eq!(embedded, m.files);
    assert!(matches!(
        corpus::load_entry("nope.mc"),
        Err(CorpusError::Load(_))
    ));
}

#[test]
fn every_entry_file_loads() {
    for entry in [
        "cbit.mc",
        "cbit_uncorrected.mc",
        "cbit_covered.mc",
        "variants/cbit_wc_assigns_ghost.mc",
        "variants/cbit_wc_assigns_qualified.mc",
        "acq.mc",
    ] {
        corpus::load_entry(entry).unwrap_or_else(|e| panic!("{entry}: {e}"));
    }
}

#[test]
fn average_rounds_toward_minus_infinity() {
    let tp = corpus::load_entry("cbit.mc").unwrap();
    let state = ModuleState::initial(&tp);
    let env = Env {
        state: &state.values,
        ..Env::empty(&tp.logic_defs)
    };
    for (a, b, mean) in [
        (20, 21, 20),
        (20, 20, 20),
        (-21, -20, -21),
        (-1, 0, -1),
        (124, 125, 124),
    ] {
        let text = format!("temp_average({a}, {b}) == {mean}");
        let e = resolve_external_expr(&tp, &parse_logic_expr(&text, "x").unwrap(), None).unwrap();
        assert_eq!(eval_logic(&e, &env).unwrap(), Value::Bool(true), "{text}");
    }
}

#[test]
fn code_table_is_strictly_decreasing() {
    let tp = corpus::load_entry("acq.mc").unwrap();
    let state = ModuleState::initial(&tp);
    let table = state
        .get(&tp, "acq::CodeTable")
        .unwrap()
        .as_array()
        .unwrap();
    let codes: Vec<i64> = table.iter().map(|v| v.as_int().unwrap()).collect();
    assert!(codes.windows(2).all(|w| w[0] > w[1]));
    assert_eq!((codes[0], codes[99]), (1218, 313));
}

/// Contract text that must appear in the corpus byte for byte.
const FROZEN: &[(&str, &str)] = &[
    (
        "cbit_wc.mc",
        r"/*@ 
  @ behavior NoCommand:
  @  assumes new_cond == NCD_NO_COMMAND;
  @  ensures gWorkCond == new_cond;
  @ behavior ModifyWC:
  @  assumes gWorkCond == NCD_IDLE_EMIT;
  @  assumes new_cond != NCD_NO_COMMAND;
  @  ensures gWorkCond == new_cond;
  @ behavior KeepWC:
  @  assumes ((gWorkCond != NCD_IDLE_EMIT) && 
  @           (new_cond != NCD_NO_COMMAND));
  @  ensures gWorkCond == \old(gWorkCond);
  @ complete behaviors;
  @ disjoint behaviors;
  @*/
void cbit_set_work_cond(uint16_t new_cond);",
    ),
    (
        "cbit_wc.mc",
        "  //@ ghost uint16_t gWorkCond = NCD_IDLE_EMIT; ",
    ),
    (
        "cbit_check.mc",
        r"  @ predicate A_TempReadFailTrans
  @    (integer t1, integer t2, integer cnt) = 
  @    (\abs(t1 - t2) > TEMP_FAIL) && ( cnt <= 2);
  @
  @ predicate A_TempReadFailPerm
  @    (integer t1, integer t2, integer cnt) = 
  @    (\abs(t1 - t2) > TEMP_FAIL) && ( cnt > 2);",
    ),
    (
        "cbit.mc",
        r"  @ behavior TempReadFailTrans:
  @  ensures A_TempReadFailTrans(T1,T2,\at(gerrcnt,Pre)) ==> 
  @            (gModuleTemp == \old(gModuleTemp));
  @  ensures A_TempReadFailTrans(T1,T2,\at(gerrcnt,Pre)) ==>  
  @            (gerrcnt == \old(gerrcnt) + 1);
  @  ensures  A_TempReadFailTrans(T1,T2,\at(gerrcnt,Pre)) ==> 
  @             (\result == EC_NO_ERROR);
  @
  @ behavior TempReadFailPerm:
  @  ensures A_TempReadFailPerm(T1,T2,\at(gerrcnt,Pre)) ==> 
  @            (gModuleTemp == 0);
  @  ensures A_TempReadFailPerm(T1,T2,\at(gerrcnt,Pre)) ==> 
  @            (gerrcnt == \old(gerrcnt));
  @  ensures A_TempReadFailPerm(T1,T2,\at(gerrcnt,Pre)) ==> 
  @            (\result == EC_TEMP);
  @
  @ behavior TempOK:
  @  ensures A_TempReadOK(T1,T2) ==> 
  @            (gModuleTemp == temp_average(T1,T2));
  @  ensures A_TempReadOK(T1,T2) ==> (\result == EC_NO_ERROR);
  @  ensures A_TempReadOK(T1,T2) ==> (gerrcnt == 0);",
    ),
    (
        "cbit.mc",
        r"  @ ensures A_TempReadFailTrans(T1,T2,\at(gerrcnt,Pre)) ||
  @    A_TempReadFailPerm(T1,T2,\at(gerrcnt,Pre)) ||
  @    A_TempReadOK(T1,T2);",
    ),
    (
        "cbit.mc",
        r"  @ ensures ! (( A_TempReadFailTrans(T1,T2,\at(gerrcnt,Pre)) && 
  @     A_TempReadFailPerm(T1,T2,\at(gerrcnt,Pre))) ||
  @    (A_TempReadFailTrans(T1,T2,\at(gerrcnt,Pre)) && 
  @     A_TempReadOK(T1,T2)) ||
  @    (A_TempReadFailPerm(T1,T2,\at(gerrcnt,Pre)) && 
  @     A_TempReadOK(T1,T2)));",
    ),
    (
        "cbit_uncorrected.mc",
        r"  @  ensures (A_TempReadOK(T1,T2) && TempTooCold(T1,T2)) ==> 
  @             (gWorkCond == NCD_TEMP_LOW);",
    ),
    (
        "cbit.mc",
        r"  @  ensures (A_TempReadOK(T1,T2) && TempTooCold(T1,T2) && 
  @           gWorkCond == NCD_IDLE_EMIT) ==> 
  @                (gWorkCond == NCD_TEMP_LOW);",
    ),
    ("acq.mc", "//@ ghost uint16_t D1, D2;"),
    (
        "acq.mc",
        r"/*@ logic real R(integer T) = 
  @       10000.0 *\exp(3988.0*(1.0/(T+273.15)-1.0/298.15));
  @
  @ logic real U(integer T) = (5.0*R(T))/(R(T)+5360.0);
  @
  @ logic integer D(integer T) = \floor(250.0*U(T)+0.5);
  @*/",
    ),
    (
        "acq.mc",
        r"  @ ensures D(*temp1) >= D1 > D(*temp1 + 1);
  @ ensures D(*temp2) >= D2 > D(*temp2 + 1);",
    ),
];

#[test]
fn contract_text_is_frozen() {
    for (file, fragment) in FROZEN {
        let text = corpus::asset(file).unwrap();
        assert!(text.contains(fragment), "{file} lacks:\n{fragment}");
    }
}

#[test]
fn frozen_clauses_are_the_parsed_clauses() {
    // the resolver keeps the source text of every clause; each ensures of
    // the temperature check must come from the frozen text
    let tp = corpus::load_entry("cbit.mc").unwrap();
    let f = tp.function("cbit_check_temperature").unwrap();
    let frozen: String = FROZEN
        .iter()
        .filter(|(file, _)| *file == "cbit.mc")
        .map(|(_, t)| normalize(t))
        .collect::<Vec<_>>()
        .join(" ");
    for b in &f.contract.as_ref().unwrap().behaviors {
        for e in &b.ensures {
            let text = normalize(&tp.span_text(&e.span).unwrap());
            assert!(frozen.contains(&text), "{text}");
        }
    }
}

/// Drops annotation margins and collapses whitespace.
fn normalize(s: &str) -> String {
    s.lines()
        .map(|l| l.trim_start().trim_start_matches('@'))
        .collect::<Vec<_>>()
        .join(" ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}
