//! Property tests for the syntax layer: canonical forms, matching,
//! value ordering, and substitution/renaming interplay.

use proptest::prelude::*;
use spi_core::gen::{generate_pairs, GenConfig};
use spi_core::lts::space::{Mode, Space};
use spi_core::syntax::ast::{Bounds, Name, Pattern, Program, Value};
use spi_core::syntax::canon::{canonicalize, value_key};
use spi_core::syntax::eval::match_value;
use spi_core::syntax::subst::rename_program;
use spi_core::syntax::symbols::Sym;

#[test]
fn canonicalize_idempotent_on_generated_state_spaces() {
    // Idempotence quantified over every reachable state of a generated
    // corpus, not just over roots.
    let pairs = generate_pairs(GenConfig {
        seed: 90,
        count: 40,
        max_states: 12,
    });
    let mut states = 0usize;
    for pair in &pairs {
        let mut sp = Space::new(&pair.module.defs, &pair.module.alphabet, Bounds::default());
        let (rid, _) = sp.intern_program(&pair.left).unwrap();
        let info = sp.explore(rid, Mode::Std).unwrap();
        for id in info.states {
            let c = sp.state(id).clone();
            let again = canonicalize(&c.to_program(), &pair.module.defs).unwrap();
            assert_eq!(c, again, "{}", pair.source);
            states += 1;
        }
    }
    assert!(states >= 100, "covered {states} states");
}

#[test]
fn canonicalize_invariant_under_par_flip() {
    // Reorder parallel components in static positions only: structural
    // equivalence does not commute components under a guard.
    fn flip(p: &Program) -> Program {
        match p {
            Program::Par(a, b) => Program::Par(Box::new(flip(b)), Box::new(flip(a))),
            Program::New { hints, body } => Program::New {
                hints: hints.clone(),
                body: Box::new(flip(body)),
            },
            other => other.clone(),
        }
    }
    let pairs = generate_pairs(GenConfig {
        seed: 91,
        count: 30,
        max_states: 12,
    });
    for pair in &pairs {
        let body = &pair.module.defs.threads[&pair.module.defs.interner.get("P").unwrap()].body;
        let a = canonicalize(body, &pair.module.defs).unwrap();
        let b = canonicalize(&flip(body), &pair.module.defs).unwrap();
        assert_eq!(a, b, "{}", pair.source);
    }
}

#[test]
fn renaming_free_signals_commutes_with_canonicalization() {
    // Substituting one free signal for another (an injective renaming on
    // the examples used here) can be done before or after normalizing.
    let pairs = generate_pairs(GenConfig {
        seed: 92,
        count: 25,
        max_states: 12,
    });
    for pair in &pairs {
        let defs = &pair.module.defs;
        let a = defs.interner.get("a").unwrap();
        let b = defs.interner.get("b").unwrap();
        let swap = |n: Name, _d: u16| match n {
            Name::Free(s) if s == a => Name::Free(b),
            Name::Free(s) if s == b => Name::Free(a),
            other => other,
        };
        let body = &defs.threads[&defs.interner.get("P").unwrap()].body;
        let path1 = canonicalize(&rename_program(body, &swap, 0), defs).unwrap();
        let canon = canonicalize(body, defs).unwrap();
        let renamed_comps: Vec<Program> = canon
            .comps
            .iter()
            .map(|c| rename_program(c, &swap, 0))
            .collect();
        let rebuilt = spi_core::syntax::canon::CanonicalState {
            nu: canon.nu,
            comps: renamed_comps,
        };
        let path2 = canonicalize(&rebuilt.to_program(), defs).unwrap();
        assert_eq!(path1, path2, "{}", pair.source);
    }
}

fn arb_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::unit()),
        Just(Value::nil()),
        (0u32..3).prop_map(|i| Value::Sig(Name::Free(Sym(5 + i)))),
        (0u32..4).prop_map(|i| Value::Ctor(Sym(10 + i), vec![])),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Value::cons(a, b)),
            prop::collection::vec(inner, 1..3).prop_map(|vs| Value::Ctor(Sym(20), vs)),
        ]
    })
}

/// Derive the pattern refuting nothing: same shape with fresh variables
/// at a chosen depth.
fn generalize(v: &Value, budget: &mut u32) -> Pattern {
    if *budget > 0 {
        *budget -= 1;
        if *budget % 3 == 0 {
            return Pattern::Var(Sym::CANON);
        }
    }
    match v {
        Value::Sig(_) => Pattern::Var(Sym::CANON),
        Value::Ctor(c, args) => Pattern::Ctor(
            *c,
            args.iter().map(|a| generalize(a, budget)).collect(),
        ),
    }
}

fn instantiate(p: &Pattern, binds: &[Value], next: &mut usize) -> Value {
    match p {
        Pattern::Var(_) => {
            let v = binds[*next].clone();
            *next += 1;
            v
        }
        Pattern::Ctor(c, args) => Value::Ctor(
            *c,
            args.iter().map(|a| instantiate(a, binds, next)).collect(),
        ),
    }
}

proptest! {
    /// match(θp, p) = θ for linear patterns.
    #[test]
    fn match_round_trip(v in arb_value(), seed in 0u32..20) {
        let mut budget = seed;
        let p = generalize(&v, &mut budget);
        let binds = match_value(&v, &p).expect("pattern was generalized from the value");
        let mut next = 0usize;
        let rebuilt = instantiate(&p, &binds, &mut next);
        prop_assert_eq!(rebuilt, v);
    }

    /// The canonical value order is total and consistent with equality.
    #[test]
    fn value_order_total(a in arb_value(), b in arb_value()) {
        let defs = spi_core::syntax::ast::DefTable::new();
        let ka = value_key(&a, &defs);
        let kb = value_key(&b, &defs);
        prop_assert_eq!(a == b, ka == kb);
    }
}
