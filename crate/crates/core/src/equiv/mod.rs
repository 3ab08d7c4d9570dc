//! Weak labelled bisimulation checking, suspension and commitment
//! predicates, and a bounded distinguishing-context search.

pub mod falsifier;
pub mod game;

pub use falsifier::{enumerate_contexts, find_distinguishing_context, StaticContext};
pub use game::{Game, GameConfig, Sigma, Variant, Verdict, Witness};

use crate::lts::action::Action;
use crate::lts::space::{LtsError, Space, StateId};
use crate::syntax::ast::Name;

/// Identity correspondence over the extruded names of two states of the
/// same space, for comparisons between states sharing one history.
pub fn shared_sigma(space: &Space, a: StateId, b: StateId) -> Sigma {
    let mut s: Sigma = Vec::new();
    for e in space.exts_of(a) {
        s.push((*e, *e));
    }
    for e in space.exts_of(b) {
        if !s.contains(&(*e, *e)) {
            s.push((*e, *e));
        }
    }
    s.sort_unstable();
    s
}

/// Decide weak bisimilarity of two explored roots. The caller is
/// responsible for having checked that both explorations completed
/// within bounds; an unfinished pair graph still degrades to an
/// inconclusive verdict here.
pub fn bisim(
    space: &mut Space,
    p: StateId,
    q: StateId,
    cfg: GameConfig,
) -> Result<Verdict, LtsError> {
    let mut game = Game::new(space, cfg);
    let root = game.run(p, q, Vec::new())?;
    Ok(game.verdict(root))
}

/// Explore both programs and decide bisimilarity, degrading to an
/// inconclusive verdict when either exploration hits a bound.
pub fn bisim_programs(
    space: &mut Space,
    p: &crate::syntax::ast::Program,
    q: &crate::syntax::ast::Program,
    cfg: GameConfig,
) -> Result<Verdict, LtsError> {
    let (rp, _) = space.intern_program(p)?;
    let (rq, _) = space.intern_program(q)?;
    let mode = cfg.variant.mode();
    let ip = space.explore(rp, mode)?;
    let iq = space.explore(rq, mode)?;
    for info in [&ip, &iq] {
        if !info.complete {
            return Ok(Verdict::Inconclusive {
                reason: format!(
                    "state space truncated by {}",
                    info.truncated_by.unwrap_or("bounds")
                ),
            });
        }
        if info.v_overflow {
            return Ok(Verdict::Inconclusive {
                reason: "end-of-instant permutation cap exceeded".into(),
            });
        }
    }
    bisim(space, rp, rq, cfg)
}

/// Weak suspension: some internally reachable state is suspended.
/// `None` when the closure hit a bound.
pub fn weak_susp(space: &mut Space, p: StateId) -> Result<Option<bool>, LtsError> {
    let closure = match space.weak_tau(p) {
        Ok(c) => c,
        Err(LtsError::Bound(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    for s in closure.iter() {
        if space.suspended(*s, crate::lts::space::Mode::Std)? {
            return Ok(Some(true));
        }
    }
    Ok(Some(false))
}

/// Signals the state commits to emit on: subjects of its output actions.
pub fn commitment(space: &mut Space, p: StateId) -> Result<Vec<Name>, LtsError> {
    let es = space.edges(p, crate::lts::space::Mode::Std)?;
    let mut out: Vec<Name> = Vec::new();
    for e in &es.edges {
        if let Action::Out(o) = &e.action {
            if !out.contains(&o.signal) {
                out.push(o.signal);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests;
