//! Unit tests for parsing, typing, evaluation and canonical forms.

use crate::syntax::ast::{Expr, Name, Pattern, Program, Type, Value};
use crate::syntax::canon::{canonicalize, struct_equiv};
use crate::syntax::eval::{eval_expr, match_value, EvalError};
use crate::syntax::parser::{parse, Module};
use crate::syntax::printer::{pretty_module, pretty_program};
use crate::syntax::subst::open_program;
use crate::syntax::types::typecheck;

fn load(src: &str) -> Module {
    let mut m = parse(src).unwrap_or_else(|es| panic!("parse errors: {es:?}"));
    typecheck(&mut m).unwrap_or_else(|es| panic!("type errors: {es:?}"));
    m
}

/// Parse two sources into one symbol space and return their roots.
fn load_pair(a: &str, b: &str) -> (Module, Program, Program) {
    let ma = load(a);
    let mb = load(b);
    crate::syntax::merge_modules(&ma, &mb).expect("merge")
}

fn load_unused(src: &str) -> Module {
    load(src)
}

#[test]
fn parse_nil() {
    let m = load("0\n");
    assert_eq!(m.root, Some(Program::Nil));
}

#[test]
fn parse_server_client_corpus() {
    let src = r#"
type request = req(Sig(answer), nat)
type answer = ans(nat)
signal s : request
signal t : answer
fun f(x) = ans(x)
Server(u : Sig(request)) = pause.Handle(u, !u)
Handle(u : Sig(request), l : List(request)) =
    match l with req(r, x) :: l2 -> (emit r f(x) || Handle(u, l2)) | _ -> Server(u)
Client(x : nat, u : Sig(request), v : Sig(answer)) =
    new r in (emit u req(r, x) || pause.Await(r, v))
Await(r : Sig(answer), v : Sig(answer)) = present r(y) { emit v y } else 0
Server(s) || Client(7, s, t)
"#;
    let m = load(src);
    assert_eq!(m.defs.threads.len(), 4);
    assert!(m.root.is_some());
    let f = m.defs.interner.get("f").unwrap();
    assert_eq!(m.defs.funs[&f].arity, 1);
    // The handler parameter takes the dereference type List(request).
    let handle = m.defs.interner.get("Handle").unwrap();
    let req = m.defs.interner.get("request").unwrap();
    assert_eq!(
        m.defs.threads[&handle].param_types[1],
        Type::list(Type::Data(req))
    );
}

#[test]
fn parse_error_positions() {
    let err = parse("emit\n").unwrap_err();
    assert_eq!(err[0].line, 1);
    let err = parse("signal s : nat\nemit s emit\n").unwrap_err();
    assert!(err[0].line == 2 && err[0].col > 1, "{:?}", err[0]);
}

#[test]
fn duplicate_thread_definition_rejected() {
    let err = parse("A() = 0\nA() = 0\n").unwrap_err();
    assert!(err.iter().any(|e| e.msg.contains("duplicate thread")));
}

#[test]
fn unknown_constructor_rejected() {
    let err = parse("signal s : nat\nemit s foo(1)\n").unwrap_err();
    assert!(err.iter().any(|e| e.msg.contains("unknown name 'foo'")));
}

#[test]
fn typecheck_emit_unit() {
    load("signal s : unit\nemit s *\n");
}

#[test]
fn typecheck_rejects_signal_as_unit() {
    let mut m = parse("signal s : unit\nemit s s\n").unwrap();
    let errs = typecheck(&mut m).unwrap_err();
    assert!(!errs.is_empty());
}

#[test]
fn typecheck_rejects_deref_misuse() {
    // !s has type List(nat); B expects it where a nat emission happens.
    let src = "signal s : nat\nsignal t : nat\nB(x : nat) = emit t x\npresent s(y) { 0 } else B(!s)\n";
    let mut m = parse(src).unwrap();
    assert!(typecheck(&mut m).is_err());
}

#[test]
fn match_value_basics() {
    let mut m = load("type pair = req(nat, nat)\n");
    let req = m.defs.interner.get("req").unwrap();
    let one = m.defs.interner.intern("1");
    let two = m.defs.interner.intern("2");
    let v = Value::list([
        Value::Ctor(req, vec![Value::Ctor(one, vec![]), Value::Ctor(two, vec![])]),
    ]);
    // pattern req(a, b) :: c
    let pat = Pattern::Ctor(
        crate::syntax::symbols::Sym::CONS,
        vec![
            Pattern::Ctor(req, vec![Pattern::Var(one), Pattern::Var(two)]),
            Pattern::Var(one),
        ],
    );
    let binds = match_value(&v, &pat).expect("matches");
    assert_eq!(binds.len(), 3);
    assert_eq!(binds[0], Value::Ctor(one, vec![]));
    assert_eq!(binds[2], Value::nil());
    // nil against cons fails
    assert!(match_value(&Value::nil(), &pat).is_none());
    // round trip: matching the pattern against its own instantiation
    // recovers the substitution
    let rebuilt = match_value(&v, &pat).unwrap();
    assert_eq!(rebuilt, binds);
}

#[test]
fn eval_append_function() {
    let src = "fun append(nil, l) = l\nfun append(h :: t, l) = h :: append(t, l)\n";
    let m = load(src);
    let app = m.defs.interner.get("append").unwrap();
    let one = m.defs.interner.get("1").map(Ok).unwrap_or_else(|| Err(())).ok();
    let _ = one;
    let mk = |d: &str, m: &Module| -> Value {
        Value::Ctor(m.defs.interner.get(d).unwrap_or(crate::syntax::symbols::Sym::NIL), vec![])
    };
    let _ = mk;
    let a = Value::list([Value::unit()]);
    let b = Value::list([Value::unit()]);
    let e = Expr::App(app, vec![a.as_expr(), b.as_expr()]);
    let v = eval_expr(&e, &m.defs).unwrap();
    assert_eq!(v, Value::list([Value::unit(), Value::unit()]));
}

#[test]
fn eval_is_deterministic() {
    let src = "fun pick(x) = 1\nfun pick2(x) = pick(pick(x))\n";
    let m = load(src);
    let f = m.defs.interner.get("pick2").unwrap();
    let e = Expr::App(f, vec![Expr::Ctor(m.defs.interner.get("1").unwrap(), vec![])]);
    let v1 = eval_expr(&e, &m.defs).unwrap();
    let v2 = eval_expr(&e, &m.defs).unwrap();
    assert_eq!(v1, v2);
}

#[test]
fn eval_fuel_exhaustion() {
    let src = "fun loop(x) = loop(x)\nsignal s : unit\n";
    let mut m = load(src);
    m.defs.fuel = 100;
    let f = m.defs.interner.get("loop").unwrap();
    let e = Expr::App(f, vec![Expr::Ctor(crate::syntax::symbols::Sym::STAR, vec![])]);
    assert!(matches!(
        eval_expr(&e, &m.defs),
        Err(EvalError::FuelExhausted { .. })
    ));
}

#[test]
fn eval_no_equation() {
    let src = "fun hd(h :: t) = h\n";
    let m = load(src);
    let f = m.defs.interner.get("hd").unwrap();
    let e = Expr::App(f, vec![Value::nil().as_expr()]);
    assert!(matches!(eval_expr(&e, &m.defs), Err(EvalError::NoEquation { .. })));
}

#[test]
fn substitute_into_emit() {
    let mut m = load("signal s : nat\nA(x : nat) = emit s x\n");
    let a = m.defs.interner.get("A").unwrap();
    let one = m.defs.interner.intern("1");
    let body = &m.defs.threads[&a].body;
    let opened = open_program(body, &[Value::Ctor(one, vec![])]);
    match opened {
        Program::Emit(_, Expr::Ctor(c, _)) => assert_eq!(c, one),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn substitution_avoids_capture() {
    // Substituting a free signal into a scope that generates a signal
    // cannot capture it: binders are indices, frees are symbols.
    let m = load("signal t : unit\nA(x : Sig(unit)) = new u in (emit x * || emit u *)\n");
    let a = m.defs.interner.get("A").unwrap();
    let t = m.defs.interner.get("t").unwrap();
    let body = &m.defs.threads[&a].body;
    let opened = open_program(body, &[Value::Sig(Name::Free(t))]);
    match &opened {
        Program::New { body, .. } => match body.as_ref() {
            Program::Par(l, r) => {
                assert!(matches!(**l, Program::Emit(Name::Free(s), _) if s == t));
                assert!(matches!(**r, Program::Emit(Name::Idx(0, 0), _)));
            }
            other => panic!("unexpected {other:?}"),
        },
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn canonical_dedups_emissions() {
    let m = load("signal s : unit\nemit s * || emit s *\n");
    let c = canonicalize(m.root.as_ref().unwrap(), &m.defs).unwrap();
    assert_eq!(c.comps.len(), 1);
}

#[test]
fn canonical_hoists_scope() {
    let a = load("signal s : unit\nA() = 0\nemit s * || new u in A()\n");
    let b = load("signal s : unit\nA() = 0\nnew u in (emit s * || A())\n");
    // u does not occur: both collapse to the same state without binders.
    let ca = canonicalize(a.root.as_ref().unwrap(), &a.defs).unwrap();
    let cb = canonicalize(b.root.as_ref().unwrap(), &b.defs).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(ca.nu, 0);
}

#[test]
fn canonical_evaluates_emissions() {
    let m = load("signal s : List(nat)\nfun append(nil, l) = l\nfun append(h :: t, l) = h :: append(t, l)\nemit s append([1], [2])\n");
    let c = canonicalize(m.root.as_ref().unwrap(), &m.defs).unwrap();
    match &c.comps[0] {
        Program::Emit(_, e) => {
            let v = e.as_value().expect("evaluated");
            let one = m.defs.interner.get("1").unwrap();
            let two = m.defs.interner.get("2").unwrap();
            assert_eq!(
                v,
                Value::list([Value::Ctor(one, vec![]), Value::Ctor(two, vec![])])
            );
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn struct_equiv_par_commutes() {
    let (m, ra, rb) = load_pair(
        "signal s : nat\nsignal t : nat\nemit s 1 || emit t 2\n",
        "signal s : nat\nsignal t : nat\nemit t 2 || emit s 1\n",
    );
    assert!(struct_equiv(&ra, &rb, &m.defs).unwrap());
}

#[test]
fn struct_equiv_emission_evaluation() {
    let (m, ra, rb) = load_pair(
        "signal s : nat\nfun id(x) = x\nemit s id(3)\n",
        "signal s : nat\nfun id(x) = x\nemit s 3\n",
    );
    assert!(struct_equiv(&ra, &rb, &m.defs).unwrap());
}

#[test]
fn struct_equiv_distinguishes_values() {
    let (m, ra, rb) = load_pair("signal s : nat\nemit s 1\n", "signal s : nat\nemit s 2\n");
    assert!(!struct_equiv(&ra, &rb, &m.defs).unwrap());
}

#[test]
fn guarded_emissions_not_evaluated() {
    // Structural equivalence only evaluates emissions in evaluation
    // position, not under guards.
    let src = "signal s : nat\nsignal t : unit\nfun id(x) = x\n";
    let a = load(&format!("{src}present t(x) {{ emit s id(3) }} else 0\n"));
    let b = load(&format!("{src}present t(x) {{ emit s 3 }} else 0\n"));
    assert!(!struct_equiv(a.root.as_ref().unwrap(), b.root.as_ref().unwrap(), &a.defs).unwrap());
}

#[test]
fn canonicalize_is_idempotent_on_corpus() {
    let srcs = [
        "signal s : unit\nemit s * || (new u in (emit u * || emit s *)) || 0\n",
        "signal s : nat\nA() = emit s 1 + emit s 2\nA()\n",
        "signal s : nat\nnew a, b in (emit s 1 || present a(x) { emit b x } else 0)\n",
    ];
    for src in srcs {
        let m = load(src);
        let c1 = canonicalize(m.root.as_ref().unwrap(), &m.defs).unwrap();
        let c2 = canonicalize(&c1.to_program(), &m.defs).unwrap();
        assert_eq!(c1, c2, "not idempotent for {src}");
    }
}

#[test]
fn canonical_insensitive_to_binder_order_and_alpha() {
    // One symbol space, two thread bodies: the same state written with
    // swapped binder order, renamed binders and reordered components.
    let m = load(concat!(
        "signal s : nat\nA(v : nat) = 0\n",
        "P1() = new a in new b in (emit s 1 || present a(x) { A(x) } else 0 || present b(y) { emit a 2 } else 0)\n",
        "P2() = new b in new a in (present b(q) { emit a 2 } else 0 || emit s 1 || present a(z) { A(z) } else 0)\n",
    ));
    let p1 = m.defs.interner.get("P1").unwrap();
    let p2 = m.defs.interner.get("P2").unwrap();
    let ca = canonicalize(&m.defs.threads[&p1].body, &m.defs).unwrap();
    let cb = canonicalize(&m.defs.threads[&p2].body, &m.defs).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn dead_private_emissions_are_collected() {
    let m = load("new c in (emit c 0 || emit c 1)\n");
    let c = canonicalize(m.root.as_ref().unwrap(), &m.defs).unwrap();
    assert!(c.is_nil());
    // but a present listening keeps them
    let m2 = load("A(x : nat) = 0\nnew c in (emit c 0 || emit c 1 || present c(x) { A(x) } else 0)\n");
    let c2 = canonicalize(m2.root.as_ref().unwrap(), &m2.defs).unwrap();
    assert_eq!(c2.nu, 1);
    assert_eq!(c2.comps.len(), 3);
}

#[test]
fn pretty_roundtrip_is_identity() {
    let srcs = [
        "signal s : nat\nsignal t : nat\nA(x : nat) = emit s x\nC(l : List(nat)) = 0\npresent s(v) { (A(v) || emit t 2) } else C(!s)\n",
        "type request = req(Sig(nat), nat)\nsignal s : request\nnew r in emit s req(r, 4)\n",
        "signal s : List(nat)\nemit s [1; 2; 3]\n",
        "A() = 0\npause.A()\n",
        "signal s : nat\nB() = 0\nmatch 1 :: [2] with h :: t -> (emit s h) | _ -> (B())\n",
    ];
    for src in srcs {
        let m = load(src);
        let printed = pretty_module(&m.defs, m.root.as_ref(), &m.alphabet);
        let m2 = parse(&printed).unwrap_or_else(|e| panic!("reparse of:\n{printed}\nfailed: {e:?}"));
        assert_eq!(m.root, m2.root, "roundtrip mismatch for:\n{printed}");
        for (name, def) in &m.defs.threads {
            let n2 = m2.defs.interner.get(m.defs.name(*name)).unwrap();
            assert_eq!(def.body, m2.defs.threads[&n2].body);
        }
    }
}

#[test]
fn choice_sugar_expands() {
    let m = load("signal s1 : unit\nsignal s2 : unit\nemit s1 * + emit s2 *\n");
    match m.root.as_ref().unwrap() {
        Program::New { hints, body } => {
            assert_eq!(hints.len(), 1);
            let mut count = 0;
            fn count_emits(p: &Program, n: &mut usize) {
                match p {
                    Program::Emit(..) => *n += 1,
                    Program::Par(a, b) => {
                        count_emits(a, n);
                        count_emits(b, n);
                    }
                    _ => {}
                }
            }
            count_emits(body, &mut count);
            assert_eq!(count, 2, "two competing constants");
        }
        other => panic!("choice did not expand to a restriction: {other:?}"),
    }
    let printed = pretty_program(m.root.as_ref().unwrap(), &m.defs);
    assert!(printed.contains("present"));
}

#[test]
fn multiple_roots_rejected() {
    let err = parse("0\n0\n").unwrap_err();
    assert!(err.iter().any(|e| e.msg.contains("multiple root")));
}
