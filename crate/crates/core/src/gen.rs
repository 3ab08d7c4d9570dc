//! Seeded random program generation for the agreement and cross-check
//! suites. Programs are generated as source text over a fixed vocabulary
//! of two value-carrying signals, one signal-carrying signal and two
//! helper threads, then rejection-sampled down to small complete state
//! spaces.

use crate::lts::space::{Mode, Space};
use crate::syntax::ast::{Bounds, Program};
use crate::syntax::parser::{parse, Module};
use crate::syntax::types::typecheck;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub seed: u64,
    pub count: usize,
    /// Accept only programs whose complete state space is at most this
    /// large.
    pub max_states: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0x5eed,
            count: 200,
            max_states: 12,
        }
    }
}

/// A generated pair sharing one module: both roots are thread calls
/// inside it.
pub struct GeneratedPair {
    pub source: String,
    pub module: Module,
    pub left: Program,
    pub right: Program,
    /// The generator expects these to be weakly bisimilar (τ-padding or
    /// a self-choice of the left body).
    pub expected_equivalent: Option<bool>,
}

struct BodyGen<'r> {
    rng: &'r mut StdRng,
    /// Bound value variables in scope (their display names).
    vars: Vec<String>,
    counter: usize,
    allow_extrusion: bool,
}

impl<'r> BodyGen<'r> {
    fn fresh(&mut self, base: &str) -> String {
        self.counter += 1;
        format!("{base}{}", self.counter)
    }

    fn signal(&mut self) -> &'static str {
        if self.rng.gen_bool(0.5) {
            "a"
        } else {
            "b"
        }
    }

    fn value(&mut self) -> &'static str {
        if self.rng.gen_bool(0.5) {
            "0"
        } else {
            "1"
        }
    }

    fn cont(&mut self, depth: usize) -> String {
        if depth == 0 {
            return "0".into();
        }
        match self.rng.gen_range(0..4) {
            0 => "0".into(),
            1 => "K1()".into(),
            2 => "K2()".into(),
            _ => "0".into(),
        }
    }

    fn body(&mut self, size: usize) -> String {
        if size == 0 {
            return match self.rng.gen_range(0..3) {
                0 => "0".into(),
                1 => format!("emit {} {}", self.signal(), self.value()),
                _ => self.cont(1),
            };
        }
        match self.rng.gen_range(0..10) {
            0 => "0".into(),
            1 => format!("emit {} {}", self.signal(), self.value()),
            2 => {
                let l = self.body(size / 2);
                let r = self.body(size / 2);
                format!("({l} || {r})")
            }
            3 => {
                let sig = self.signal();
                let x = self.fresh("x");
                self.vars.push(x.clone());
                let inner = self.body(size - 1);
                self.vars.pop();
                let k = self.cont(size);
                format!("present {sig}({x}) {{ {inner} }} else {k}")
            }
            4 => {
                if let Some(v) = self.vars.last().cloned() {
                    let t = self.body(size / 2);
                    let e = self.body(size / 2);
                    format!("match {v} with 0 -> ({t}) | _ -> ({e})")
                } else {
                    self.body(size - 1)
                }
            }
            5 => format!("pause.{}", self.cont(size)),
            6 => {
                let l = self.body(size / 2);
                let r = self.body(size / 2);
                format!("({l} + {r})")
            }
            7 => {
                let c = self.fresh("p");
                let y = self.fresh("y");
                let inner = self.body(size.saturating_sub(2));
                format!("new {c} in (emit {c} 0 || present {c}({y}) {{ {inner} }} else 0)")
            }
            8 if self.allow_extrusion => {
                let r = self.fresh("r");
                let z = self.fresh("z");
                let inner = self.body(size.saturating_sub(2));
                format!("new {r} in (emit c {r} || present {r}({z}) {{ {inner} }} else 0)")
            }
            _ => self.cont(size),
        }
    }
}

fn alphabet_lines(rng: &mut StdRng) -> String {
    let options = ["input a : 0\n", "input a : 1\n", "input b : 0\n"];
    let n = rng.gen_range(0..=2usize);
    let mut chosen: Vec<&str> = Vec::new();
    while chosen.len() < n {
        let pick = options[rng.gen_range(0..options.len())];
        if !chosen.contains(&pick) {
            chosen.push(pick);
        }
    }
    chosen.sort();
    chosen.concat()
}

/// Generate one candidate source with threads `K1`, `K2`, `P`, `Q`.
fn candidate(rng: &mut StdRng) -> (String, Option<bool>) {
    let extrude = rng.gen_bool(0.25);
    let mut g = BodyGen {
        rng,
        vars: Vec::new(),
        counter: 0,
        allow_extrusion: extrude,
    };
    let k1 = g.body(2);
    let k2 = g.body(2);
    let p = g.body(4);
    let (q, expected) = match g.rng.gen_range(0..4) {
        // τ-padded copy: weakly equivalent by construction.
        0 => ("TQ()".to_string(), Some(true)),
        // Self-choice: resolves internally to the same body.
        1 => (format!("({p} + {p})"), Some(true)),
        // Independent body: no expectation.
        2 => (g.body(4), None),
        // Parallel self-composition: usually inequivalent.
        _ => (format!("({p} || {p})"), None),
    };
    let alphabet = alphabet_lines(g.rng);
    let src = format!(
        "signal a : nat\nsignal b : nat\nsignal c : Sig(nat)\n{alphabet}\
         K1() = {k1}\nK2() = {k2}\nTQ() = {p}\nP() = {p}\nQ() = {q}\n"
    );
    (src, expected)
}

/// Generate `cfg.count` accepted pairs. A candidate is accepted when it
/// parses, checks, and both sides explore completely (in both rule
/// systems) within `cfg.max_states` states.
pub fn generate_pairs(cfg: GenConfig) -> Vec<GeneratedPair> {
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    let mut attempts = 0usize;
    while out.len() < cfg.count && attempts < cfg.count * 400 {
        attempts += 1;
        let (src, expected) = candidate(&mut rng);
        let Ok(mut module) = parse(&src) else {
            continue;
        };
        if typecheck(&mut module).is_err() {
            continue;
        }
        let p = Program::Call(module.defs.interner.get("P").unwrap(), vec![]);
        let q = Program::Call(module.defs.interner.get("Q").unwrap(), vec![]);
        let small_bounds = Bounds {
            max_states: cfg.max_states * 4,
            max_depth: 200,
            max_instants: 32,
            max_v_perms: 64,
        };
        let mut ok = true;
        for mode in [Mode::Std, Mode::Alt] {
            let mut sp = Space::new(&module.defs, &module.alphabet, small_bounds);
            for root in [&p, &q] {
                let Ok((rid, _)) = sp.intern_program(root) else {
                    ok = false;
                    break;
                };
                match sp.explore(rid, mode) {
                    Ok(info) => {
                        if !info.complete || info.v_overflow || info.states.len() > cfg.max_states
                        {
                            ok = false;
                        }
                    }
                    Err(_) => ok = false,
                }
            }
            if !ok {
                break;
            }
        }
        if !ok {
            continue;
        }
        out.push(GeneratedPair {
            source: src,
            module,
            left: p,
            right: q,
            expected_equivalent: expected,
        });
    }
    out
}
