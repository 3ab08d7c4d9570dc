//! Bounded search for a static context distinguishing two bisimilar
//! candidates. Static contexts are built from the hole by parallel
//! composition with closed fragments and by restriction of free signals.
//! Finding no distinguishing context certifies nothing (contexts are
//! unbounded); finding one refutes an equivalence claim.

use crate::equiv::game::{Game, GameConfig, Verdict};
use crate::lts::space::{LtsError, Space, StateId};
use crate::syntax::ast::{DefTable, Name, Program};
use crate::syntax::printer::pretty_program;
use crate::syntax::subst::{rename_program, shift_program};
use crate::syntax::symbols::Sym;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A static context, outermost operation last.
#[derive(Debug, Clone)]
pub enum CtxOp {
    /// `C | P` for a closed fragment `P`.
    Par(Program),
    /// `ν s C` restricting a free signal.
    Nu(Sym),
}

#[derive(Debug, Clone)]
pub struct StaticContext {
    pub ops: Vec<CtxOp>,
}

impl StaticContext {
    pub fn hole() -> Self {
        StaticContext { ops: Vec::new() }
    }

    pub fn apply(&self, p: &Program) -> Program {
        let mut cur = p.clone();
        for op in &self.ops {
            match op {
                CtxOp::Par(frag) => {
                    cur = Program::Par(Box::new(cur), Box::new(frag.clone()));
                }
                CtxOp::Nu(sym) => {
                    let shifted = shift_program(&cur, 1, 0);
                    let bound = rename_program(
                        &shifted,
                        &|n, d| match n {
                            Name::Free(s) if s == *sym => Name::Idx(d, 0),
                            other => other,
                        },
                        0,
                    );
                    cur = Program::New {
                        hints: vec![*sym],
                        body: Box::new(bound),
                    };
                }
            }
        }
        cur
    }

    pub fn render(&self, defs: &DefTable) -> String {
        let mut out = String::from("[.]");
        for op in &self.ops {
            match op {
                CtxOp::Par(p) => out = format!("({out} || {})", pretty_program(p, defs)),
                CtxOp::Nu(s) => out = format!("new {} in {out}", defs.name(*s)),
            }
        }
        out
    }
}

/// Deterministically enumerate contexts up to `size_cap` operations over
/// the given fragments and restrictable signals, then shuffle with the
/// seed and truncate to `samples`.
pub fn enumerate_contexts(
    fragments: &[Program],
    signals: &[Sym],
    size_cap: usize,
    samples: usize,
    seed: u64,
) -> Vec<StaticContext> {
    let mut ops: Vec<CtxOp> = Vec::new();
    for f in fragments {
        ops.push(CtxOp::Par(f.clone()));
    }
    for s in signals {
        ops.push(CtxOp::Nu(*s));
    }
    let mut all: Vec<StaticContext> = vec![StaticContext::hole()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..size_cap {
        let mut next = Vec::new();
        for seq in &frontier {
            for i in 0..ops.len() {
                let mut s = seq.clone();
                s.push(i);
                all.push(StaticContext {
                    ops: s.iter().map(|j| ops[*j].clone()).collect(),
                });
                next.push(s);
                if all.len() > 50_000 {
                    break;
                }
            }
        }
        frontier = next;
        if all.len() > 50_000 {
            break;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    all.truncate(samples.max(1));
    all
}

/// Search the sampled contexts for one distinguishing the two programs.
/// Returns the first found, with the verdicts' witness discarded.
pub fn find_distinguishing_context(
    space: &mut Space,
    p: &Program,
    q: &Program,
    contexts: &[StaticContext],
    cfg: GameConfig,
) -> Result<Option<StaticContext>, LtsError> {
    for ctx in contexts {
        let cp = ctx.apply(p);
        let cq = ctx.apply(q);
        let (rp, _) = space.intern_program(&cp)?;
        let (rq, _) = space.intern_program(&cq)?;
        let verdict = run_pair(space, rp, rq, cfg)?;
        if verdict.is_distinguished() {
            return Ok(Some(ctx.clone()));
        }
    }
    Ok(None)
}

fn run_pair(
    space: &mut Space,
    p: StateId,
    q: StateId,
    cfg: GameConfig,
) -> Result<Verdict, LtsError> {
    let mut game = Game::new(space, cfg);
    let root = game.run(p, q, Vec::new())?;
    Ok(game.verdict(root))
}
