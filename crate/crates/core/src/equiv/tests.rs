//! Bisimulation tests against the discriminating examples.

use crate::equiv::falsifier::{enumerate_contexts, find_distinguishing_context};
use crate::equiv::game::{Game, GameConfig, Variant, Verdict};
use crate::equiv::{bisim_programs, commitment, weak_susp};
use crate::lts::space::Space;
use crate::syntax::ast::{Bounds, Name, Program};
use crate::syntax::parser::{parse, Module};
use crate::syntax::types::typecheck;

fn load(src: &str) -> Module {
    let mut m = parse(src).unwrap_or_else(|es| panic!("parse errors: {es:?}"));
    typecheck(&mut m).unwrap_or_else(|es| panic!("type errors: {es:?}"));
    m
}

fn space<'d>(m: &'d Module) -> Space<'d> {
    Space::new(&m.defs, &m.alphabet, Bounds::default())
}

fn body(m: &Module, name: &str) -> Program {
    let sym = m.defs.interner.get(name).unwrap();
    m.defs.threads[&sym].body.clone()
}

fn check(
    m: &Module,
    p: &Program,
    q: &Program,
    variant: Variant,
    relaxed: bool,
) -> Verdict {
    let mut sp = space(m);
    let mut cfg = GameConfig::new(variant);
    cfg.relaxed_n = relaxed;
    bisim_programs(&mut sp, p, q, cfg).unwrap()
}

#[test]
fn identity_is_bisimilar() {
    let m = load("signal s : nat\ninput s : 1\nA() = present s(x) { emit s x } else A()\nA()\n");
    let p = m.root.clone().unwrap();
    for v in [Variant::Standard, Variant::WVariant, Variant::V1, Variant::V2, Variant::V3] {
        assert!(check(&m, &p, &p, v, false).is_equivalent(), "{v:?}");
    }
}

/// τ.A ⊕ τ.0 is bisimilar to 0: divergence is only partially observed.
#[test]
fn looping_choice_equals_nil() {
    let m = load("A() = TA() + TZ()\nTA() = A()\nTZ() = 0\n");
    let a = body(&m, "A");
    let _ = &a;
    let p = Program::Call(m.defs.interner.get("A").unwrap(), vec![]);
    let q = Program::Nil;
    assert!(check(&m, &p, &q, Variant::Standard, false).is_equivalent());
}

/// A pure loop is distinguished from 0: it never suspends, so it has no
/// next-instant move to offer.
#[test]
fn omega_distinguished_from_nil() {
    let m = load("Om() = Om()\n");
    let p = Program::Call(m.defs.interner.get("Om").unwrap(), vec![]);
    let v = check(&m, &p, &Program::Nil, Variant::Standard, false);
    assert!(v.is_distinguished(), "{v:?}");
}

const FOOTNOTE_SRC: &str = concat!(
    "signal s1 : unit\nsignal s2 : unit\n",
    "Choice() = emit s1 * + emit s2 *\n",
    "P() = pause.Choice()\n",
    "ChoiceQ() = emit s1 * + emit s2 *\n",
    "A(x : List(nat)) = match x with [0; 1] -> (ChoiceQ()) | _ -> (emit s1 *)\n",
    "Q() = new c in (pause.A(!c) || emit c 0 || emit c 1)\n",
);

/// The next-instant observer: with strict ⇒N the two programs differ,
/// because the second can commit to the value order before the instant
/// ends; allowing internal steps after N identifies them.
#[test]
fn footnote_pair_strict_vs_relaxed() {
    let m = load(FOOTNOTE_SRC);
    let p = Program::Call(m.defs.interner.get("P").unwrap(), vec![]);
    let q = Program::Call(m.defs.interner.get("Q").unwrap(), vec![]);
    let strict = check(&m, &p, &q, Variant::Standard, false);
    assert!(strict.is_distinguished(), "{strict:?}");
    let relaxed = check(&m, &p, &q, Variant::Standard, true);
    assert!(relaxed.is_equivalent(), "{relaxed:?}");
}

#[test]
fn relaxed_n_is_coarser() {
    // Anything equivalent under the strict game stays equivalent when
    // answers may continue internally after N.
    let m = load("A() = TA() + TZ()\nTA() = A()\nTZ() = 0\n");
    let p = Program::Call(m.defs.interner.get("A").unwrap(), vec![]);
    assert!(check(&m, &p, &Program::Nil, Variant::Standard, true).is_equivalent());
    assert!(check(&m, &Program::Nil, &Program::Nil, Variant::Standard, true).is_equivalent());
}

#[test]
fn variant_agreement_on_named_pairs() {
    let m = load(FOOTNOTE_SRC);
    let p = Program::Call(m.defs.interner.get("P").unwrap(), vec![]);
    let q = Program::Call(m.defs.interner.get("Q").unwrap(), vec![]);
    let variants = [Variant::Standard, Variant::WVariant, Variant::V1, Variant::V2, Variant::V3];
    let verdicts: Vec<bool> = variants
        .iter()
        .map(|v| check(&m, &p, &q, *v, false).is_equivalent())
        .collect();
    assert!(verdicts.iter().all(|b| *b == verdicts[0]), "{verdicts:?}");

    let m2 = load("signal s : unit\nA() = TA() + TZ()\nTA() = A()\nTZ() = 0\n");
    let p2 = Program::Call(m2.defs.interner.get("A").unwrap(), vec![]);
    let verdicts2: Vec<bool> = variants
        .iter()
        .map(|v| check(&m2, &p2, &Program::Nil, *v, false).is_equivalent())
        .collect();
    assert!(verdicts2.iter().all(|b| *b), "{verdicts2:?}");
}

#[test]
fn emission_copy_successor_is_structurally_equal() {
    // The receiving clause of the first variant rule system leaves a
    // copy of the emission; persistence makes the results coincide.
    let m = load("signal s : nat\nA(x : nat) = 0\nemit s 3 || present s(x) { A(x) } else 0\n");
    use crate::syntax::canon::canonicalize;
    use crate::syntax::eval::eval_expr;
    use crate::syntax::subst::open_program;
    let root = m.root.as_ref().unwrap();
    let c = canonicalize(root, &m.defs).unwrap();
    let (pi, pe) = c
        .comps
        .iter()
        .enumerate()
        .find_map(|(i, comp)| match comp {
            Program::Present { body, .. } => Some((i, body.clone())),
            _ => None,
        })
        .unwrap();
    let (sig, val) = c
        .comps
        .iter()
        .find_map(|comp| match comp {
            Program::Emit(s, e) => Some((*s, eval_expr(e, &m.defs).unwrap())),
            _ => None,
        })
        .unwrap();
    let plain = c.with_component_replaced(pi, open_program(&pe, &[val.clone()]));
    let copied = c.with_component_replaced(
        pi,
        Program::Par(
            Box::new(open_program(&pe, &[val.clone()])),
            Box::new(Program::Emit(sig, val.as_expr())),
        ),
    );
    assert_eq!(
        canonicalize(&plain, &m.defs).unwrap(),
        canonicalize(&copied, &m.defs).unwrap()
    );
}

#[test]
fn weak_suspension_examples() {
    let m = load("Om() = Om()\nA() = TA() + TZ()\nTA() = Om()\nTZ() = 0\n");
    let mut sp = space(&m);
    let (nil, _) = sp.intern_program(&Program::Nil).unwrap();
    assert_eq!(weak_susp(&mut sp, nil).unwrap(), Some(true));
    let (om, _) = sp
        .intern_program(&Program::Call(m.defs.interner.get("Om").unwrap(), vec![]))
        .unwrap();
    assert_eq!(weak_susp(&mut sp, om).unwrap(), Some(false));
    // τ.Ω ⊕ τ.0 may suspend on the 0 branch.
    let (a, _) = sp
        .intern_program(&Program::Call(m.defs.interner.get("A").unwrap(), vec![]))
        .unwrap();
    assert_eq!(weak_susp(&mut sp, a).unwrap(), Some(true));
}

#[test]
fn commitment_examples() {
    let m = load("signal s : Sig(unit)\nsignal w : unit\n");
    let mut sp = space(&m);
    let s = m.defs.interner.get("s").unwrap();
    let w = m.defs.interner.get("w").unwrap();
    let (e, _) = sp
        .intern_program(&Program::Emit(
            Name::Free(w),
            crate::syntax::ast::Expr::Ctor(crate::syntax::symbols::Sym::STAR, vec![]),
        ))
        .unwrap();
    assert_eq!(commitment(&mut sp, e).unwrap(), vec![Name::Free(w)]);
    let (nil, _) = sp.intern_program(&Program::Nil).unwrap();
    assert!(commitment(&mut sp, nil).unwrap().is_empty());
    // ν t (s̄t) commits on s while extruding t.
    let p = load("signal s : Sig(unit)\nnew t in emit s t\n");
    let _ = p;
    let prog = {
        let mut m2 = parse("signal s : Sig(unit)\nnew t in emit s t\n").unwrap();
        typecheck(&mut m2).unwrap();
        m2.root.unwrap()
    };
    let mut m3 = parse("signal s : Sig(unit)\nnew t in emit s t\n").unwrap();
    typecheck(&mut m3).unwrap();
    let mut sp3 = Space::new(&m3.defs, &m3.alphabet, Bounds::default());
    let _ = prog;
    let (nu, _) = sp3.intern_program(m3.root.as_ref().unwrap()).unwrap();
    let commits = commitment(&mut sp3, nu).unwrap();
    assert_eq!(commits, vec![Name::Free(m3.defs.interner.get("s").unwrap())]);
}

#[test]
fn falsifier_finds_hole_for_emit_vs_nil() {
    let m = load("signal s : unit\ninput s : *\nemit s *\n");
    let mut sp = space(&m);
    let contexts = enumerate_contexts(&[], &[], 0, 1, 7);
    let found = find_distinguishing_context(
        &mut sp,
        m.root.as_ref().unwrap(),
        &Program::Nil,
        &contexts,
        GameConfig::new(Variant::Standard),
    )
    .unwrap();
    assert!(found.is_some(), "the hole itself distinguishes");
    assert!(found.unwrap().ops.is_empty());
}

#[test]
fn falsifier_respects_congruence_for_equivalent_pair() {
    let m = load(concat!(
        "signal s : unit\nsignal t : unit\ninput s : *\n",
        "A() = TA() + TZ()\nTA() = A()\nTZ() = 0\n",
    ));
    let s = m.defs.interner.get("s").unwrap();
    let frag = Program::Emit(
        Name::Free(s),
        crate::syntax::ast::Expr::Ctor(crate::syntax::symbols::Sym::STAR, vec![]),
    );
    let t = m.defs.interner.get("t").unwrap();
    let contexts = enumerate_contexts(&[frag], &[s, t], 2, 12, 99);
    let p = Program::Call(m.defs.interner.get("A").unwrap(), vec![]);
    let mut sp = space(&m);
    let found = find_distinguishing_context(
        &mut sp,
        &p,
        &Program::Nil,
        &contexts,
        GameConfig::new(Variant::Standard),
    )
    .unwrap();
    assert!(found.is_none(), "no static context separates a bisimilar pair: {found:?}");
}

#[test]
fn distinguishing_witness_replays() {
    let m = load("Om() = Om()\n");
    let mut sp = space(&m);
    let p = Program::Call(m.defs.interner.get("Om").unwrap(), vec![]);
    let (rp, _) = sp.intern_program(&p).unwrap();
    let (rq, _) = sp.intern_program(&Program::Nil).unwrap();
    sp.explore(rp, crate::lts::space::Mode::Std).unwrap();
    sp.explore(rq, crate::lts::space::Mode::Std).unwrap();
    let mut game = Game::new(&mut sp, GameConfig::new(Variant::Standard));
    let root = game.run(rp, rq, Vec::new()).unwrap();
    assert!(!game.alive(root));

    // Replay: walk the kill chain, checking at each node that the
    // recorded challenge exists in the LTS and that every weak answer
    // the space offers appears among the recorded options.
    let mut frontier = vec![root];
    let mut steps = 0;
    while let Some(idx) = frontier.pop() {
        steps += 1;
        if steps > 64 {
            break;
        }
        let Some((side, action, target, options)) = game.kill_info(idx) else {
            continue;
        };
        let (p, q, sigma) = {
            let (a, b, s) = game.triple_state(idx);
            (a, b, s.clone())
        };
        let (src, other, dir_sigma) = match side {
            crate::equiv::game::Side::Left => (p, q, sigma.clone()),
            crate::equiv::game::Side::Right => {
                let inv: Vec<(u32, u32)> = sigma.iter().map(|(a, b)| (*b, *a)).collect();
                (q, p, inv)
            }
        };
        // The challenging move exists.
        let es = game.space.edges(src, crate::lts::space::Mode::Std).unwrap();
        assert!(
            es.edges.iter().any(|e| e.action == action && e.dst == target),
            "challenge must be a real edge"
        );
        drop(es);
        // Every weak answer is covered by an option.
        let answers = game
            .weak_answers(other, &action, &dir_sigma, crate::lts::space::Mode::Std)
            .unwrap();
        for (ans, _) in answers {
            let covered = options.iter().any(|opt| {
                opt.iter().any(|(tp, tq, _)| match side {
                    crate::equiv::game::Side::Left => *tq == ans,
                    crate::equiv::game::Side::Right => *tp == ans,
                })
            });
            assert!(covered, "an available answer was not considered");
        }
        // Recurse into one dead member of each option.
        let _ = options;
    }
    let verdict = game.verdict(root);
    assert!(verdict.is_distinguished());
}
