//! Analysis tests against the worked determinacy and confluence examples.

use crate::analysis::{Analyzer, Outcome, ALL_PROPERTIES};
use crate::lts::space::Space;
use crate::syntax::ast::{Bounds, Program};
use crate::syntax::parser::{parse, Module};
use crate::syntax::types::typecheck;

fn load(src: &str) -> Module {
    let mut m = parse(src).unwrap_or_else(|es| panic!("parse errors: {es:?}"));
    typecheck(&mut m).unwrap_or_else(|es| panic!("type errors: {es:?}"));
    m
}

fn analyze(m: &Module, root: &Program) -> crate::analysis::Report {
    let mut sp = Space::new(&m.defs, &m.alphabet, Bounds::default());
    let (rid, _) = sp.intern_program(root).unwrap();
    let mut an = Analyzer::new(&mut sp, rid).unwrap();
    an.analyze_all(&ALL_PROPERTIES).unwrap()
}

fn result(report: &crate::analysis::Report, prop: &str) -> Option<bool> {
    report
        .verdicts
        .iter()
        .find(|v| v.property == prop)
        .map(|v| match v.outcome {
            Outcome::Holds => true,
            Outcome::Fails { .. } => false,
            Outcome::Inconclusive { .. } => panic!("inconclusive {prop}"),
        })
}

#[test]
fn nil_satisfies_everything() {
    let m = load("signal s : unit\ninput s : *\n0\n");
    let r = analyze(&m, &Program::Nil);
    for p in ALL_PROPERTIES {
        assert_eq!(result(&r, p), Some(true), "{p}");
    }
    assert!(r.contradictions.is_empty());
}

#[test]
fn omega_is_not_reactive() {
    let m = load("Om() = Om()\nOm()\n");
    let r = analyze(&m, m.root.as_ref().unwrap());
    assert_eq!(result(&r, "reactive"), Some(false));
    assert!(r.contradictions.is_empty());
    // The reactivity witness names the looping state.
    let w = r.verdicts.iter().find(|v| v.property == "reactive").unwrap();
    match &w.outcome {
        Outcome::Fails { witness } => assert!(witness.states[0].contains("Om")),
        other => panic!("unexpected {other:?}"),
    }
}

/// The looping internal choice: locally confluent but neither reactive
/// nor confluent nor determinate.
#[test]
fn looping_choice_profile() {
    let m = load(concat!(
        "signal s1 : unit\nsignal s2 : unit\n",
        "A() = emit s1 * + B()\n",
        "B() = emit s2 * + A()\n",
        "A()\n"
    ));
    let r = analyze(&m, m.root.as_ref().unwrap());
    assert_eq!(result(&r, "reactive"), Some(false), "not reactive");
    assert_eq!(result(&r, "locally_confluent"), Some(true), "locally confluent");
    assert_eq!(result(&r, "confluent"), Some(false), "not confluent");
    assert_eq!(result(&r, "determinate"), Some(false), "not determinate");
    assert_eq!(result(&r, "tau_inert"), Some(false));
    assert_eq!(result(&r, "strong_confluent"), Some(false));
    assert!(r.contradictions.is_empty(), "{:?}", r.contradictions);
}

/// Two distinct values competing for one receiver within an instant.
#[test]
fn competing_values_break_determinacy() {
    let m = load(concat!(
        "signal s : nat\nsignal t1 : unit\nsignal t2 : unit\n",
        "emit s 1 || emit s 2 || present s(x) { match x with 1 -> (emit t1 *) | _ -> (emit t2 *) } else 0\n"
    ));
    let r = analyze(&m, m.root.as_ref().unwrap());
    assert_eq!(result(&r, "reactive"), Some(true));
    assert_eq!(result(&r, "determinate"), Some(false));
    assert_eq!(result(&r, "confluent"), Some(false));
    assert_eq!(result(&r, "locally_confluent"), Some(false));
    assert_eq!(result(&r, "diamond"), Some(false));
    assert!(r.contradictions.is_empty(), "{:?}", r.contradictions);
}

/// Two values collected on one signal, with an order-sensitive
/// continuation: the next-instant diamond fails.
#[test]
fn order_sensitive_collection_breaks_next_diamond() {
    let m = load(concat!(
        "signal s : nat\nsignal t1 : unit\n",
        "B(l : List(nat)) = match l with 1 :: l2 -> (emit t1 *) | _ -> 0\n",
        "emit s 1 || emit s 2 || pause.B(!s)\n"
    ));
    let r = analyze(&m, m.root.as_ref().unwrap());
    assert_eq!(result(&r, "reactive"), Some(true));
    assert_eq!(result(&r, "diamond"), Some(false));
    assert_eq!(result(&r, "determinate"), Some(false));
    assert!(r.contradictions.is_empty(), "{:?}", r.contradictions);
}

/// Same collection shape but an order-insensitive continuation: all
/// determinacy properties hold.
#[test]
fn order_insensitive_collection_is_determinate() {
    let m = load(concat!(
        "signal s : nat\nsignal t1 : unit\n",
        "B(l : List(nat)) = emit t1 *\n",
        "emit s 1 || emit s 2 || pause.B(!s)\n"
    ));
    let r = analyze(&m, m.root.as_ref().unwrap());
    for p in ALL_PROPERTIES {
        assert_eq!(result(&r, p), Some(true), "{p}");
    }
    assert!(r.contradictions.is_empty());
}

#[test]
fn single_emission_is_determinate() {
    let m = load("signal s : nat\nemit s 1\n");
    let r = analyze(&m, m.root.as_ref().unwrap());
    assert_eq!(result(&r, "determinate"), Some(true));
    assert_eq!(result(&r, "confluent"), Some(true));
    assert_eq!(result(&r, "strong_confluent"), Some(true));
    assert!(r.contradictions.is_empty());
}

#[test]
fn server_client_all_hold() {
    let m = load(include_str!("../../tests/data/server_client.spi"));
    let r = analyze(&m, m.root.as_ref().unwrap());
    for p in ALL_PROPERTIES {
        assert_eq!(result(&r, p), Some(true), "{p}");
    }
    assert!(r.contradictions.is_empty(), "{:?}", r.contradictions);
}

#[test]
fn io_squares_close_on_corpus() {
    for src in [
        include_str!("../../tests/data/server_client.spi"),
        "signal s : nat\nsignal t1 : unit\nsignal t2 : unit\ninput s : 1\nemit s 1 || emit s 2 || present s(x) { match x with 1 -> (emit t1 *) | _ -> (emit t2 *) } else 0\n",
        "signal s : Sig(unit)\nsignal w : unit\ninput s : w\nA() = new t in (emit s t || present t(z) { 0 } else A())\nA()\n",
    ] {
        let m = load(src);
        let mut sp = Space::new(&m.defs, &m.alphabet, Bounds::default());
        let (rid, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
        let mut an = Analyzer::new(&mut sp, rid).unwrap();
        let fail = an.io_squares().unwrap();
        assert!(fail.is_none(), "{fail:?}");
    }
}

#[test]
fn tau_inertness_of_simple_unfolding() {
    let m = load("signal s : unit\nA() = emit s *\nA()\n");
    let r = analyze(&m, m.root.as_ref().unwrap());
    assert_eq!(result(&r, "tau_inert"), Some(true));
}
