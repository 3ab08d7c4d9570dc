//! Cross-checking suites over generated programs: the five bisimulation
//! formulations must agree pairwise, and the determinacy/confluence
//! implications must hold on every reactive sample. These run with a
//! reduced sample count; the acceptance suite runs the full ones.

use spi_core::analysis::{Analyzer, Outcome, ALL_PROPERTIES};
use spi_core::equiv::game::{GameConfig, Variant};
use spi_core::equiv::bisim_programs;
use spi_core::gen::{generate_pairs, GenConfig};
use spi_core::lts::space::Space;
use spi_core::syntax::ast::Bounds;

fn bounds() -> Bounds {
    Bounds {
        max_states: 2_000,
        max_depth: 400,
        max_instants: 64,
        max_v_perms: 720,
    }
}

#[test]
fn variant_agreement_sample() {
    let pairs = generate_pairs(GenConfig {
        seed: 1011,
        count: 60,
        max_states: 12,
    });
    assert!(pairs.len() >= 60);
    let variants = [
        Variant::Standard,
        Variant::WVariant,
        Variant::V1,
        Variant::V2,
        Variant::V3,
    ];
    for (i, pair) in pairs.iter().enumerate() {
        let mut verdicts = Vec::new();
        for v in variants {
            let mut sp = Space::new(&pair.module.defs, &pair.module.alphabet, bounds());
            let verdict =
                bisim_programs(&mut sp, &pair.left, &pair.right, GameConfig::new(v)).unwrap();
            let eq = match verdict {
                spi_core::equiv::Verdict::Equivalent => true,
                spi_core::equiv::Verdict::Distinguished { .. } => false,
                spi_core::equiv::Verdict::Inconclusive { reason } => {
                    panic!("pair {i} inconclusive under {v:?}: {reason}\n{}", pair.source)
                }
            };
            verdicts.push(eq);
        }
        assert!(
            verdicts.iter().all(|b| *b == verdicts[0]),
            "pair {i} disagrees: {verdicts:?}\n{}",
            pair.source
        );
        if pair.expected_equivalent == Some(true) {
            assert!(
                verdicts[0],
                "pair {i} expected equivalent by construction\n{}",
                pair.source
            );
        }
    }
}

#[test]
fn theorem_cross_checks_on_reactive_sample() {
    let pairs = generate_pairs(GenConfig {
        seed: 2023,
        count: 60,
        max_states: 12,
    });
    let mut reactive_count = 0;
    for (i, pair) in pairs.iter().enumerate() {
        let mut sp = Space::new(&pair.module.defs, &pair.module.alphabet, bounds());
        let (rid, _) = sp.intern_program(&pair.left).unwrap();
        let mut an = Analyzer::new(&mut sp, rid).unwrap();
        let report = an.analyze_all(&ALL_PROPERTIES).unwrap();
        assert!(
            report.contradictions.is_empty(),
            "pair {i}: {:?}\n{}",
            report.contradictions,
            pair.source
        );
        let get = |name: &str| -> Option<bool> {
            report
                .verdicts
                .iter()
                .find(|v| v.property == name)
                .and_then(|v| match v.outcome {
                    Outcome::Holds => Some(true),
                    Outcome::Fails { .. } => Some(false),
                    Outcome::Inconclusive { .. } => None,
                })
        };
        if get("reactive") != Some(true) {
            continue;
        }
        reactive_count += 1;
        let det = get("determinate").expect("conclusive");
        let conf = get("confluent").expect("conclusive");
        let lconf = get("locally_confluent").expect("conclusive");
        let dia = get("diamond").expect("conclusive");
        let strong = get("strong_confluent").expect("conclusive");
        assert_eq!(det, conf, "pair {i}: determinate vs confluent\n{}", pair.source);
        assert_eq!(conf, lconf, "pair {i}: confluent vs locally confluent\n{}", pair.source);
        assert_eq!(lconf, dia, "pair {i}: local confluence vs diamond\n{}", pair.source);
        if strong {
            assert!(det, "pair {i}: strong confluence must imply determinacy\n{}", pair.source);
        }
    }
    assert!(reactive_count >= 20, "only {reactive_count} reactive samples");
}

#[test]
fn io_commutation_squares_on_generated() {
    let pairs = generate_pairs(GenConfig {
        seed: 3037,
        count: 25,
        max_states: 12,
    });
    for (i, pair) in pairs.iter().enumerate() {
        let mut sp = Space::new(&pair.module.defs, &pair.module.alphabet, bounds());
        let (rid, _) = sp.intern_program(&pair.left).unwrap();
        let mut an = Analyzer::new(&mut sp, rid).unwrap();
        let fail = an.io_squares().unwrap();
        assert!(fail.is_none(), "pair {i}: {fail:?}\n{}", pair.source);
    }
}

#[test]
fn bisimilarity_is_an_equivalence_on_samples() {
    // Reflexivity, symmetry and transitivity over a small set of
    // generated programs, using pairwise game verdicts.
    let pairs = generate_pairs(GenConfig {
        seed: 4049,
        count: 6,
        max_states: 10,
    });
    // Compare programs within one module only; use left and right roots.
    for pair in &pairs {
        let mut check = |p: &spi_core::syntax::ast::Program,
                         q: &spi_core::syntax::ast::Program|
         -> bool {
            let mut sp = Space::new(&pair.module.defs, &pair.module.alphabet, bounds());
            bisim_programs(&mut sp, p, q, GameConfig::new(Variant::Standard))
                .unwrap()
                .is_equivalent()
        };
        let pl = &pair.left;
        let pr = &pair.right;
        assert!(check(pl, pl), "reflexive");
        assert!(check(pr, pr), "reflexive");
        let lr = check(pl, pr);
        let rl = check(pr, pl);
        assert_eq!(lr, rl, "symmetric\n{}", pair.source);
    }
    // Transitivity: τ-pad twice and check the chain.
    let m = {
        let mut m = spi_core::syntax::parse(
            "signal a : nat\nA() = emit a 1\nB() = A()\nC() = B()\n",
        )
        .unwrap();
        spi_core::syntax::typecheck(&mut m).unwrap();
        m
    };
    let call = |n: &str| {
        spi_core::syntax::ast::Program::Call(m.defs.interner.get(n).unwrap(), vec![])
    };
    let mut check2 = |p: &spi_core::syntax::ast::Program, q: &spi_core::syntax::ast::Program| {
        let mut sp = Space::new(&m.defs, &m.alphabet, bounds());
        bisim_programs(&mut sp, p, q, GameConfig::new(Variant::Standard))
            .unwrap()
            .is_equivalent()
    };
    assert!(check2(&call("A"), &call("B")));
    assert!(check2(&call("B"), &call("C")));
    assert!(check2(&call("A"), &call("C")));
}

#[test]
fn input_closure_preserves_equivalence() {
    // If p ≈ q then p | s̄v ≈ q | s̄v for alphabet pairs.
    let pairs = generate_pairs(GenConfig {
        seed: 5051,
        count: 20,
        max_states: 10,
    });
    for pair in &pairs {
        if pair.expected_equivalent != Some(true) {
            continue;
        }
        for (sym, v) in pair.module.alphabet.pairs.clone() {
            let emit = spi_core::syntax::ast::Program::Emit(
                spi_core::syntax::ast::Name::Free(sym),
                v.as_expr(),
            );
            let pl = spi_core::syntax::ast::Program::Par(
                Box::new(pair.left.clone()),
                Box::new(emit.clone()),
            );
            let qr = spi_core::syntax::ast::Program::Par(
                Box::new(pair.right.clone()),
                Box::new(emit),
            );
            let mut sp = Space::new(&pair.module.defs, &pair.module.alphabet, bounds());
            let verdict =
                bisim_programs(&mut sp, &pl, &qr, GameConfig::new(Variant::Standard)).unwrap();
            assert!(verdict.is_equivalent(), "{}", pair.source);
        }
    }
}
