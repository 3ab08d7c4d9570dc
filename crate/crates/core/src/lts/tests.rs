//! Transition derivation tests against the worked examples.

use crate::lts::action::{compatible, residual, Action, OutAction};
use crate::lts::space::{Mode, Space};
use crate::syntax::ast::{Bounds, Expr, Name, Program, Value};
use crate::syntax::canon::{canonicalize, par_with};
use crate::syntax::parser::{parse, Module};
use crate::syntax::subst::rename_program;
use crate::syntax::types::typecheck;

fn load(src: &str) -> Module {
    let mut m = parse(src).unwrap_or_else(|es| panic!("parse errors: {es:?}"));
    typecheck(&mut m).unwrap_or_else(|es| panic!("type errors: {es:?}"));
    m
}

fn space<'d>(m: &'d Module) -> Space<'d> {
    Space::new(&m.defs, &m.alphabet, Bounds::default())
}

#[test]
fn emission_persists_as_self_loop() {
    let m = load("signal s : unit\nemit s *\n");
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let es = sp.edges(root, Mode::Std).unwrap();
    let outs: Vec<_> = es
        .edges
        .iter()
        .filter(|e| matches!(e.action, Action::Out(_)))
        .collect();
    assert_eq!(outs.len(), 1);
    assert_eq!(outs[0].dst, root, "the emitter persists");
}

#[test]
fn extrusion_of_generated_name() {
    let m = load("signal s : Sig(unit)\nnew t in emit s t\n");
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let es = sp.edges(root, Mode::Std).unwrap();
    let outs: Vec<_> = es
        .edges
        .iter()
        .filter_map(|e| match &e.action {
            Action::Out(o) => Some((o.clone(), e.dst, e.extruded_slots.clone())),
            _ => None,
        })
        .collect();
    assert_eq!(outs.len(), 1);
    let (o, dst, slots) = &outs[0];
    assert_eq!(o.extruded.len(), 1);
    assert_eq!(slots, &vec![0u16]);
    assert!(matches!(o.value, Value::Sig(Name::Ext(_))));
    // Successor: the emitter with the name now free.
    let d = sp.state(*dst).clone();
    assert_eq!(d.nu, 0);
    assert_eq!(d.comps.len(), 1);
    assert!(matches!(d.comps[0], Program::Emit(Name::Free(_), _)));
}

#[test]
fn synchronization_consumes_present_not_emitter() {
    let m = load("signal s : nat\nA(x : nat) = 0\nemit s 3 || present s(x) { A(x) } else 0\n");
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let es = sp.edges(root, Mode::Std).unwrap();
    let taus: Vec<_> = es
        .edges
        .iter()
        .filter(|e| matches!(e.action, Action::Tau))
        .collect();
    assert_eq!(taus.len(), 1);
    let dst = sp.state(taus[0].dst).clone();
    // Emitter persists alongside the instantiated body.
    assert_eq!(dst.comps.len(), 2);
    assert!(dst
        .comps
        .iter()
        .any(|c| matches!(c, Program::Emit(..))));
    assert!(dst.comps.iter().any(|c| matches!(c, Program::Call(..))));
}

#[test]
fn input_rule_shape() {
    // Every input edge lands exactly on the source composed with the
    // received emission.
    let m = load("signal s : unit\ninput s : *\nA() = present s(x) { 0 } else A()\nA()\n");
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let info = sp.explore(root, Mode::Std).unwrap();
    assert!(info.complete);
    for id in &info.states {
        let es = sp.edges(*id, Mode::Std).unwrap();
        let src = sp.state(*id).clone();
        for e in &es.edges {
            if let Action::In { signal, value } = &e.action {
                let prog = par_with(&src, Program::Emit(*signal, value.as_expr()));
                let expect = canonicalize(&prog, &m.defs).unwrap();
                assert_eq!(&expect, sp.state(e.dst));
            }
        }
    }
}

#[test]
fn input_on_emitter_dedups() {
    let m = load("signal s : unit\ninput s : *\nemit s *\n");
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let es = sp.edges(root, Mode::Std).unwrap();
    let ins: Vec<_> = es
        .edges
        .iter()
        .filter(|e| matches!(e.action, Action::In { .. }))
        .collect();
    assert_eq!(ins.len(), 1);
    assert_eq!(ins[0].dst, root, "receiving what is already emitted changes nothing");
}

#[test]
fn nil_suspends_and_loops() {
    let m = load("signal s : unit\ninput s : *\n0\n");
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(&Program::Nil).unwrap();
    let es = sp.edges(root, Mode::Std).unwrap();
    assert!(es.suspended);
    let nexts: Vec<_> = es
        .edges
        .iter()
        .filter(|e| matches!(e.action, Action::Next))
        .collect();
    assert_eq!(nexts.len(), 1);
    assert_eq!(nexts[0].dst, root);
    assert!(es
        .edges
        .iter()
        .any(|e| matches!(e.action, Action::In { .. })));
}

#[test]
fn recursion_is_not_suspended() {
    let m = load("A() = A()\nA()\n");
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let es = sp.edges(root, Mode::Std).unwrap();
    assert!(!es.suspended);
    assert!(es.edges.iter().all(|e| !matches!(e.action, Action::Next)));
}

/// The two-emission example: after both receives the program suspends,
/// and the end of the instant offers exactly the two value orders.
#[test]
fn end_of_instant_collects_both_orders() {
    let m = load(concat!(
        "A(x : nat, y : nat) = 0\n",
        "B(l : List(nat)) = 0\n",
        "new s1, s2 in (emit s1 1 || emit s1 2 || ",
        "present s1(x) { present s1(y) { present s2(z) { A(x, y) } else B(!s1) } else 0 } else 0)\n"
    ));
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let info = sp.explore(root, Mode::Std).unwrap();
    assert!(info.complete && !info.v_overflow);

    let b = m.defs.interner.get("B").unwrap();
    let one = m.defs.interner.get("1").unwrap();
    let two = m.defs.interner.get("2").unwrap();
    let lit = |syms: [crate::syntax::symbols::Sym; 2]| {
        Value::list(syms.iter().map(|s| Value::Ctor(*s, vec![])))
    };
    let expected: Vec<_> = [[one, two], [two, one]]
        .into_iter()
        .map(|order| {
            canonicalize(&Program::Call(b, vec![lit(order).as_expr()]), &m.defs).unwrap()
        })
        .collect();
    assert_ne!(expected[0], expected[1]);

    let mut found_suspended = 0;
    for id in info.states.clone() {
        let es = sp.edges(id, Mode::Std).unwrap();
        if !es.suspended {
            assert!(es.edges.iter().all(|e| !matches!(e.action, Action::Next)));
            continue;
        }
        let nexts: Vec<_> = es
            .edges
            .iter()
            .filter(|e| matches!(e.action, Action::Next))
            .map(|e| sp.state(e.dst).clone())
            .collect();
        if nexts.len() == 2 {
            found_suspended += 1;
            assert!(expected.iter().all(|x| nexts.contains(x)));
        }
    }
    assert!(found_suspended >= 1, "the doubly-received suspension exists");
}

#[test]
fn emitter_resets_at_instant_end() {
    let m = load("signal s : nat\nemit s 1\n");
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let es = sp.edges(root, Mode::Std).unwrap();
    let nexts: Vec<_> = es
        .edges
        .iter()
        .filter(|e| matches!(e.action, Action::Next))
        .collect();
    assert_eq!(nexts.len(), 1);
    assert!(sp.state(nexts[0].dst).is_nil());
}

#[test]
fn internal_choice_gives_finite_tau_cycle() {
    // A = s̄1 ⊕ B, B = s̄2 ⊕ A: finite state space with an internal cycle.
    let m = load(concat!(
        "signal s1 : unit\nsignal s2 : unit\n",
        "A() = emit s1 * + B()\n",
        "B() = emit s2 * + A()\n",
        "A()\n"
    ));
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let info = sp.explore(root, Mode::Std).unwrap();
    assert!(info.complete, "state space closes despite unbounded unfolding");
    assert!(info.states.len() < 30);
    // A cycle exists: some state reaches itself through >=1 tau steps.
    let mut cyclic = false;
    for id in info.states.clone() {
        let mut reach = Vec::new();
        let es = sp.edges(id, Mode::Std).unwrap();
        let starts: Vec<u32> = es
            .edges
            .iter()
            .filter(|e| matches!(e.action, Action::Tau))
            .map(|e| e.dst)
            .collect();
        drop(es);
        let mut queue = starts;
        while let Some(s) = queue.pop() {
            if reach.contains(&s) {
                continue;
            }
            reach.push(s);
            let es = sp.edges(s, Mode::Std).unwrap();
            for e in &es.edges {
                if matches!(e.action, Action::Tau) {
                    queue.push(e.dst);
                }
            }
        }
        if reach.contains(&id) {
            cyclic = true;
            break;
        }
    }
    assert!(cyclic);
}

#[test]
fn server_client_explores_finitely() {
    let m = load(include_str!("../../tests/data/server_client.spi"));
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let info = sp.explore(root, Mode::Std).unwrap();
    assert!(info.complete && !info.v_overflow);
    // Regression value for the corpus system under its alphabet.
    assert!(info.states.len() > 5 && info.states.len() < 500, "{}", info.states.len());
}

#[test]
fn output_persistence_invariant() {
    let m = load(include_str!("../../tests/data/server_client.spi"));
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let info = sp.explore(root, Mode::Std).unwrap();
    for id in info.states.clone() {
        let src = sp.state(id).clone();
        let es = sp.edges(id, Mode::Std).unwrap();
        let outs: Vec<_> = es
            .edges
            .iter()
            .filter(|e| matches!(e.action, Action::Out(_)))
            .cloned()
            .collect();
        drop(es);
        for e in outs {
            let Action::Out(OutAction { extruded, .. }) = &e.action else {
                unreachable!()
            };
            let slots = &e.extruded_slots;
            let rename = |n: Name, d: u16| match n {
                Name::Idx(up, slot) if up == d => match slots.iter().position(|s| *s == slot) {
                    Some(k) => Name::Ext(extruded[k]),
                    None => n,
                },
                other => other,
            };
            let comps: Vec<Program> = src
                .comps
                .iter()
                .map(|c| rename_program(c, &rename, 0))
                .collect();
            let prog = if src.nu == 0 {
                Program::par(comps)
            } else {
                Program::New {
                    hints: vec![crate::syntax::symbols::Sym::CANON; src.nu as usize],
                    body: Box::new(Program::par(comps)),
                }
            };
            let freed = canonicalize(&prog, &m.defs).unwrap();
            assert_eq!(&freed, sp.state(e.dst), "emitter persists, binders freed");
        }
    }
}

#[test]
fn next_edges_only_from_suspended() {
    let m = load(include_str!("../../tests/data/server_client.spi"));
    let mut sp = space(&m);
    let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
    let info = sp.explore(root, Mode::Std).unwrap();
    for id in info.states.clone() {
        let es = sp.edges(id, Mode::Std).unwrap();
        if !es.suspended {
            assert!(es.edges.iter().all(|e| !matches!(e.action, Action::Next)));
        }
    }
}

#[test]
fn compatibility_and_residual() {
    let tau = Action::Tau;
    let next = Action::Next;
    let inp = Action::In {
        signal: Name::Free(crate::syntax::symbols::Sym(9)),
        value: Value::unit(),
    };
    let out = |ext: Vec<u32>| {
        Action::Out(OutAction {
            extruded: ext,
            signal: Name::Free(crate::syntax::symbols::Sym(9)),
            value: Value::unit(),
        })
    };
    assert!(!compatible(&next, &tau));
    assert!(compatible(&next, &next));
    assert!(compatible(&inp, &out(vec![])));

    assert_eq!(residual(&tau, &tau), Some(Action::Tau));
    assert_eq!(residual(&inp, &tau), Some(inp.clone()));
    assert_eq!(residual(&next, &tau), None);
    // ν t1,t2 s̄v ∖ ν t1 s̄'v' keeps only t2.
    let a = out(vec![1, 2]);
    let b = Action::Out(OutAction {
        extruded: vec![1],
        signal: Name::Free(crate::syntax::symbols::Sym(10)),
        value: Value::nil(),
    });
    match residual(&a, &b) {
        Some(Action::Out(o)) => assert_eq!(o.extruded, vec![2]),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(residual(&a, &a), Some(Action::Tau));
}

#[test]
fn exploration_is_deterministic() {
    let m = load(include_str!("../../tests/data/server_client.spi"));
    let run = || {
        let mut sp = space(&m);
        let (root, _) = sp.intern_program(m.root.as_ref().unwrap()).unwrap();
        let info = sp.explore(root, Mode::Std).unwrap();
        crate::lts::export::lts_to_json(&mut sp, &info, Mode::Std).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
}
