use minispec::corpus::{self, ASSETS};
use minispec::frontend::ast::{CmpOp, ExprKind};
use minispec::frontend::pretty::pretty_print;
use minispec::frontend::typed::Type;
use minispec::frontend::{parse_logic_expr, parse_source, resolve, ResolveError};

fn typed(src: &str) -> Result<minispec::frontend::TypedProgram, ResolveError> {
    resolve(&parse_source(src, "t.mc").expect("parses"))
}

#[test]
fn every_corpus_file_round_trips_through_the_printer() {
    let mut checked = 0;
    for (path, text) in ASSETS.iter().filter(|(p, _)| p.ends_with(".mc")) {
        let mut a = parse_source(text, path).unwrap_or_else(|e| panic!("{path}: {e}"));
        let printed = pretty_print(&a);
        let mut b = parse_source(&printed, "printed.mc")
            .unwrap_or_else(|e| panic!("{path}: {e}\n{printed}"));
        a.clear_spans();
        b.clear_spans();
        assert_eq!(a, b, "{path} changed after printing:\n{printed}");
        checked += 1;
    }
    assert_eq!(checked, 10);
}

#[test]
fn setter_contract_has_three_behaviors_and_both_flags() {
    let p = parse_source(corpus::asset("cbit_wc.mc").unwrap(), "cbit_wc.mc").unwrap();
    let proto = p.functions.iter().find(|f| f.body.is_none()).unwrap();
    let c = proto.contract.as_ref().unwrap();
    let names: Vec<&str> = c.behaviors.iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["NoCommand", "ModifyWC", "KeepWC"]);
    assert!(c.complete_declared && c.disjoint_declared);
    assert!(c.assigns.is_none());
    assert_eq!(c.behaviors[1].assumes.len(), 2);
}

#[test]
fn empty_source_gives_an_empty_program() {
    assert!(parse_source("", "e.mc").unwrap().is_empty());
    assert!(
        parse_source("// nothing but a comment\n/* and another */", "e.mc")
            .unwrap()
            .is_empty()
    );
}

#[test]
fn dangling_operator_is_reported_at_the_operator() {
    let src = "/*@ behavior X: ensures \\result == @*/";
    let err = parse_source(src, "d.mc").unwrap_err();
    assert_eq!((err.span.line_start, err.span.col_start), (1, 33));
    assert_eq!(&src[32..34], "==");
}

#[test]
fn unterminated_annotation_block_is_an_error() {
    let err = parse_source("/*@ ensures \\result == 1;\nvoid f(void);", "u.mc").unwrap_err();
    assert_eq!(err.span.line_start, 1);
}

#[test]
fn diagnostics_point_into_the_source() {
    let bad = [
        "void f(void) { x = ; }",
        "uint16_t g(uint16_t a { return a; }",
        "/*@ ensures 1 < ; @*/ void f(void);",
        "void f(void) { while (1) }",
        "//@ ghost uint16_t g = ;",
    ];
    for src in bad {
        let err = parse_source(src, "bad.mc").unwrap_err();
        let line = src
            .lines()
            .nth(err.span.line_start as usize - 1)
            .expect("line inside the source");
        assert!(
            err.span.col_start >= 1 && err.span.col_start as usize <= line.len() + 1,
            "{src}: {err}"
        );
    }
}

#[test]
fn chained_comparison_keeps_every_operand() {
    let e = parse_logic_expr("D(*temp1) >= D1 > D(*temp1 + 1)", "x").unwrap();
    let ExprKind::Compare(items, ops) = &e.kind else {
        panic!("not a chain: {e:?}");
    };
    assert_eq!(items.len(), 3);
    assert_eq!(ops, &[CmpOp::Ge, CmpOp::Gt]);
}

const SETTER_WITH: &str = "
    module cbit;
    static uint16_t WorkCondition = 0;
    //@ ghost uint16_t gWorkCond = 0;
    /*@ ensures CLAUSE; @*/
    void set(uint16_t new_cond);
    void set(uint16_t new_cond) { WorkCondition = new_cond; }
";

#[test]
fn module_variable_is_invisible_in_a_contract() {
    let err = typed(&SETTER_WITH.replace("CLAUSE", "WorkCondition == new_cond")).unwrap_err();
    match err {
        ResolveError::UndefinedName { name, .. } => assert_eq!(name, "WorkCondition"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn ghost_variable_is_visible_in_a_contract() {
    let tp = typed(&SETTER_WITH.replace("CLAUSE", "gWorkCond == new_cond")).unwrap();
    let f = tp.function("set").unwrap();
    assert_eq!(f.contract.as_ref().unwrap().behaviors[0].ensures.len(), 1);
}

#[test]
fn real_literal_into_uint16_is_a_type_mismatch() {
    let err = typed("static uint16_t x = 0;\nvoid f(void) { x = 2.5; }").unwrap_err();
    assert!(matches!(err, ResolveError::TypeMismatch { .. }), "{err:?}");
}

#[test]
fn duplicate_names_are_rejected() {
    let err = typed("const uint16_t A = 1;\nconst uint16_t A = 2;").unwrap_err();
    assert!(matches!(err, ResolveError::DuplicateName { .. }), "{err:?}");
}

#[test]
fn qualified_assigns_target_resolves_to_the_module_variable() {
    let tp = corpus::load_entry("variants/cbit_wc_assigns_qualified.mc").unwrap();
    let f = tp.function("cbit_set_work_cond").unwrap();
    let assigns = f.contract.as_ref().unwrap().assigns.as_ref().unwrap();
    assert_eq!(assigns.len(), 2);
    let wc = tp.state_slot("cbit::WorkCondition").unwrap();
    assert!(assigns
        .iter()
        .any(|a| a.loc == minispec::frontend::typed::AssignLoc::State(wc)));
}

#[test]
fn resolution_is_deterministic() {
    let a = corpus::load_entry("cbit.mc").unwrap();
    let b = corpus::load_entry("cbit.mc").unwrap();
    assert_eq!(a, b);
}

#[test]
fn logic_integers_and_program_types_are_distinct() {
    let tp = corpus::load_entry("cbit.mc").unwrap();
    let d = tp.logic_defs.iter().find(|d| d.name == "D").unwrap();
    assert_eq!(d.return_type, Type::Integer);
    let wc = &tp.state_vars[tp.state_slot("cbit::WorkCondition").unwrap()];
    assert_eq!(wc.ty, Type::UInt16);
    assert!(!wc.ghost);
    let adc = &tp.state_vars[tp.state_slot("gADC").unwrap()];
    assert!(adc.ghost);
    assert!(matches!(adc.ty, Type::Array(_, 16)));
}

mod printer_properties {
    use minispec::frontend::ast::{
        BinOp, CmpOp, Expr, ExprKind, Label, Quantifier, TypeName, UnOp,
    };
    use minispec::frontend::pretty::expr_to_string;
    use minispec::frontend::{parse_logic_expr, Span};
    use proptest::prelude::*;

    fn e(kind: ExprKind) -> Expr {
        Expr::new(kind, Span::dummy())
    }

    fn leaf() -> impl Strategy<Value = Expr> {
        prop_oneof![
            (0i64..100_000).prop_map(|v| e(ExprKind::Int(v))),
            prop::sample::select(vec![0.5, 2.25e-3, 298.15, 1e10, 3988.0])
                .prop_map(|v| e(ExprKind::Real(v))),
            any::<bool>().prop_map(|b| e(ExprKind::Bool(b))),
            prop::sample::select(vec!["a", "temp1", "gWorkCond", "T"])
                .prop_map(|n| e(ExprKind::Name(n.into()))),
            Just(e(ExprKind::Qualified(
                "cbit".into(),
                "WorkCondition".into()
            ))),
            Just(e(ExprKind::Result)),
        ]
    }

    fn expr() -> impl Strategy<Value = Expr> {
        leaf().prop_recursive(4, 48, 3, |inner| {
            let b = |x: Expr| Box::new(x);
            prop_oneof![
                inner.clone().prop_map(move |x| e(ExprKind::Old(b(x)))),
                (
                    inner.clone(),
                    prop::sample::select(vec![Label::Pre, Label::Here])
                )
                    .prop_map(move |(x, l)| e(ExprKind::At(b(x), l))),
                (
                    prop::sample::select(vec![UnOp::Neg, UnOp::Not]),
                    inner.clone()
                )
                    .prop_map(move |(op, x)| e(ExprKind::Unary(op, b(x)))),
                (
                    prop::sample::select(vec![
                        BinOp::Add,
                        BinOp::Sub,
                        BinOp::Mul,
                        BinOp::Div,
                        BinOp::Mod,
                        BinOp::And,
                        BinOp::Or,
                        BinOp::Implies,
                        BinOp::Equiv
                    ]),
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(move |(op, x, y)| e(ExprKind::Binary(
                        op,
                        b(x),
                        b(y)
                    ))),
                prop::collection::vec(inner.clone(), 2..4).prop_flat_map(|items| {
                    let n = items.len() - 1;
                    let ops = prop::collection::vec(
                        prop::sample::select(vec![
                            CmpOp::Eq,
                            CmpOp::Ne,
                            CmpOp::Lt,
                            CmpOp::Le,
                            CmpOp::Gt,
                            CmpOp::Ge,
                        ]),
                        n,
                    );
                    (Just(items), ops).prop_map(|(items, ops)| e(ExprKind::Compare(items, ops)))
                }),
                (
                    prop::sample::select(vec!["D", "\\abs", "P"]),
                    prop::collection::vec(inner.clone(), 1..3)
                )
                    .prop_map(|(f, args)| e(ExprKind::Call(f.into(), args))),
                inner.clone().prop_map(move |i| e(ExprKind::Index(
                    b(e(ExprKind::Name("gADC".into()))),
                    b(i)
                ))),
                (
                    prop::sample::select(vec![
                        TypeName::UInt16,
                        TypeName::Int32,
                        TypeName::Integer
                    ]),
                    inner.clone()
                )
                    .prop_map(move |(t, x)| e(ExprKind::Cast(t, b(x)))),
                (
                    prop::sample::select(vec![Quantifier::Forall, Quantifier::Exists]),
                    inner
                )
                    .prop_map(move |(q, body)| e(ExprKind::Quant {
                        q,
                        ty: TypeName::Integer,
                        var: "i".into(),
                        body: b(body),
                    })),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_expressions_reparse_to_the_same_tree(x in expr()) {
            let text = expr_to_string(&x);
            let mut back = parse_logic_expr(&text, "p").map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
            back.clear_spans();
            prop_assert_eq!(back, x, "{}", text);
        }
    }
}
