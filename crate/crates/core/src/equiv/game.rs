//! Weak labelled bisimulation as a greatest-fixpoint game over state
//! pairs, with an explicit correspondence between the extruded names the
//! two sides have revealed to the environment.
//!
//! The relation is computed by refinement from the full relation: every
//! reachable pair starts alive, and a pair dies when one side has a
//! challenge no surviving answer can match. Distinguishing witnesses are
//! reconstructed from the refinement history.

use crate::lts::action::Action;
use crate::lts::space::{LtsError, Mode, Space, StateId};
use crate::syntax::ast::{Name, Program, Value};
use crate::syntax::canon::par_with;
use indexmap::IndexMap;
use serde::Serialize;

/// The bisimulation formulations this checker implements. `Standard` is
/// the reference game; the others re-derive the same relation from
/// modified rule systems or modified game clauses and exist to
/// cross-check the implementation against the characterisation results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Standard,
    /// Weak challenges on both sides.
    WVariant,
    /// Receiving present statements leave a copy of the emission.
    V1,
    /// Input rule removed; inputs received at presents; parallel
    /// emission closure required of the relation.
    V2,
    /// As V2, with a disjunctive input clause and a next-instant clause
    /// quantified over emission contexts.
    V3,
}

impl Variant {
    pub fn mode(self) -> Mode {
        match self {
            Variant::Standard | Variant::WVariant | Variant::V1 => Mode::Std,
            Variant::V2 | Variant::V3 => Mode::Alt,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GameConfig {
    pub variant: Variant,
    /// Allow internal steps after answering a next-instant challenge.
    pub relaxed_n: bool,
    /// Size bound for the emission contexts of the V3 next clause.
    pub emission_context_size: usize,
    pub max_triples: usize,
}

impl GameConfig {
    pub fn new(variant: Variant) -> Self {
        GameConfig {
            variant,
            relaxed_n: false,
            emission_context_size: 2,
            max_triples: 400_000,
        }
    }
}

/// Partial bijection between the extruded names of the two sides,
/// sorted by left component.
pub type Sigma = Vec<(u32, u32)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
struct Challenge {
    side: Side,
    action: Action,
    /// Target of the challenging move (same side as `side`).
    target: StateId,
    /// Disjunction of conjunctions of triples that must stay alive.
    options: Vec<Vec<usize>>,
}

struct Triple {
    p: StateId,
    q: StateId,
    sigma: Sigma,
    challenges: Option<Vec<Challenge>>,
    alive: bool,
    killed_by: Option<usize>,
}

pub struct Game<'s, 'd> {
    pub space: &'s mut Space<'d>,
    cfg: GameConfig,
    triples: IndexMap<(StateId, StateId, Sigma), usize>,
    data: Vec<Triple>,
    pub overflowed: bool,
    dirty: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub side: &'static str,
    pub action: String,
    pub from_left: String,
    pub from_right: String,
    pub challenge_target: String,
    /// Every candidate weak answer, each with the reason its residual
    /// pair fails (absent when the answer set is empty or the reason is
    /// the same pair again).
    pub answers: Vec<WitnessAnswer>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessAnswer {
    pub target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Box<Witness>>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Equivalent,
    Distinguished { witness: Witness },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }
    pub fn is_distinguished(&self) -> bool {
        matches!(self, Verdict::Distinguished { .. })
    }
}

fn sigma_insert(sigma: &mut Sigma, l: u32, r: u32) -> bool {
    for (a, b) in sigma.iter() {
        if *a == l || *b == r {
            return (*a, *b) == (l, r);
        }
    }
    sigma.push((l, r));
    sigma.sort_unstable();
    true
}

fn sigma_lookup(sigma: &Sigma, l: u32) -> Option<u32> {
    sigma.iter().find(|(a, _)| *a == l).map(|(_, b)| *b)
}

fn match_name(a: Name, b: Name, sigma: &Sigma, fresh: &[(u32, u32)]) -> bool {
    match (a, b) {
        (Name::Free(x), Name::Free(y)) => x == y,
        (Name::Ext(i), Name::Ext(j)) => {
            sigma_lookup(sigma, i) == Some(j)
                || fresh.iter().any(|(l, r)| (*l, *r) == (i, j))
        }
        _ => false,
    }
}

fn match_value(a: &Value, b: &Value, sigma: &Sigma, fresh: &[(u32, u32)]) -> bool {
    match (a, b) {
        (Value::Sig(x), Value::Sig(y)) => match_name(*x, *y, sigma, fresh),
        (Value::Ctor(c, xs), Value::Ctor(d, ys)) => {
            c == d
                && xs.len() == ys.len()
                && xs
                    .iter()
                    .zip(ys)
                    .all(|(x, y)| match_value(x, y, sigma, fresh))
        }
        _ => false,
    }
}

/// Match a challenge action against an answer action under the current
/// correspondence; on success returns the pairs of freshly extruded
/// names (challenge side first).
fn match_actions(ch: &Action, ans: &Action, sigma: &Sigma) -> Option<Vec<(u32, u32)>> {
    match (ch, ans) {
        (Action::Tau, Action::Tau) | (Action::Next, Action::Next) => Some(Vec::new()),
        (
            Action::In {
                signal: s1,
                value: v1,
            },
            Action::In {
                signal: s2,
                value: v2,
            },
        ) => {
            if s1 == s2 && v1 == v2 {
                Some(Vec::new())
            } else {
                None
            }
        }
        (Action::Out(a), Action::Out(b)) => {
            if a.extruded.len() != b.extruded.len() {
                return None;
            }
            let fresh: Vec<(u32, u32)> = a
                .extruded
                .iter()
                .copied()
                .zip(b.extruded.iter().copied())
                .collect();
            if !match_name(a.signal, b.signal, sigma, &fresh) {
                return None;
            }
            if !match_value(&a.value, &b.value, sigma, &fresh) {
                return None;
            }
            Some(fresh)
        }
        _ => None,
    }
}

fn invert(sigma: &Sigma) -> Sigma {
    let mut v: Sigma = sigma.iter().map(|(a, b)| (*b, *a)).collect();
    v.sort_unstable();
    v
}

impl<'s, 'd> Game<'s, 'd> {
    pub fn new(space: &'s mut Space<'d>, cfg: GameConfig) -> Self {
        Game {
            space,
            cfg,
            triples: IndexMap::new(),
            data: Vec::new(),
            overflowed: false,
            dirty: false,
        }
    }

    fn trim_sigma(&self, sigma: Sigma, p: StateId, q: StateId) -> Sigma {
        if sigma.is_empty() {
            return sigma;
        }
        let pe = self.space.exts_of(p);
        let qe = self.space.exts_of(q);
        sigma
            .into_iter()
            .filter(|(l, r)| pe.contains(l) || qe.contains(r))
            .collect()
    }

    pub fn intern_triple(&mut self, p: StateId, q: StateId, sigma: Sigma) -> usize {
        let sigma = self.trim_sigma(sigma, p, q);
        if let Some(i) = self.triples.get(&(p, q, sigma.clone())) {
            return *i;
        }
        let i = self.data.len();
        self.dirty = true;
        self.triples.insert((p, q, sigma.clone()), i);
        self.data.push(Triple {
            p,
            q,
            sigma,
            challenges: None,
            alive: true,
            killed_by: None,
        });
        i
    }

    /// All weak moves `t ⇒α t'` for non-internal α, plus the internal
    /// closure as `(τ, t')` pairs.
    pub fn weak_moves(&mut self, t: StateId, mode: Mode) -> Result<Vec<(Action, StateId)>, LtsError> {
        let mut out: Vec<(Action, StateId)> = Vec::new();
        for m in self.space.weak_tau(t)?.iter() {
            out.push((Action::Tau, *m));
        }
        let starts = self.space.weak_tau(t)?;
        for m in starts.iter() {
            let es = self.space.edges(*m, mode)?;
            let edges: Vec<_> = es
                .edges
                .iter()
                .filter(|e| !matches!(e.action, Action::Tau))
                .cloned()
                .collect();
            drop(es);
            for e in edges {
                match e.action {
                    Action::Next => {
                        let targets: Vec<StateId> = if self.cfg.relaxed_n {
                            self.space.weak_tau(e.dst)?.iter().copied().collect()
                        } else {
                            vec![e.dst]
                        };
                        for t2 in targets {
                            let mv = (Action::Next, t2);
                            if !out.contains(&mv) {
                                out.push(mv);
                            }
                        }
                    }
                    ref act => {
                        for t2 in self.space.weak_tau(e.dst)?.iter() {
                            let mv = (act.clone(), *t2);
                            if !out.contains(&mv) {
                                out.push(mv);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Weak answers to a challenge action, with the induced extruded-name
    /// pairs (challenge side first).
    pub fn weak_answers(
        &mut self,
        t: StateId,
        challenge: &Action,
        sigma: &Sigma,
        mode: Mode,
    ) -> Result<Vec<(StateId, Vec<(u32, u32)>)>, LtsError> {
        let mut out: Vec<(StateId, Vec<(u32, u32)>)> = Vec::new();
        match challenge {
            Action::Tau => {
                for m in self.space.weak_tau(t)?.iter() {
                    out.push((*m, Vec::new()));
                }
            }
            _ => {
                let starts: Vec<StateId> = self.space.weak_tau(t)?.iter().copied().collect();
                for m in starts {
                    let es = self.space.edges(m, mode)?;
                    let edges: Vec<_> = es.edges.clone();
                    drop(es);
                    for e in edges {
                        let Some(pairs) = match_actions(challenge, &e.action, sigma) else {
                            continue;
                        };
                        match challenge {
                            Action::Next => {
                                if self.cfg.relaxed_n {
                                    for t2 in self.space.weak_tau(e.dst)?.iter() {
                                        let item = (*t2, pairs.clone());
                                        if !out.contains(&item) {
                                            out.push(item);
                                        }
                                    }
                                } else {
                                    let item = (e.dst, pairs.clone());
                                    if !out.contains(&item) {
                                        out.push(item);
                                    }
                                }
                            }
                            _ => {
                                for t2 in self.space.weak_tau(e.dst)?.iter() {
                                    let item = (*t2, pairs.clone());
                                    if !out.contains(&item) {
                                        out.push(item);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn extend_sigma(&self, sigma: &Sigma, pairs: &[(u32, u32)], side: Side) -> Option<Sigma> {
        let mut s = sigma.clone();
        for (c, a) in pairs {
            let (l, r) = match side {
                Side::Left => (*c, *a),
                Side::Right => (*a, *c),
            };
            if !sigma_insert(&mut s, l, r) {
                return None;
            }
        }
        Some(s)
    }

    fn build_challenges(&mut self, idx: usize) -> Result<Vec<Challenge>, LtsError> {
        let (p, q, sigma) = {
            let t = &self.data[idx];
            (t.p, t.q, t.sigma.clone())
        };
        let mode = self.cfg.variant.mode();
        let mut out: Vec<Challenge> = Vec::new();

        for side in [Side::Left, Side::Right] {
            let (src, other, dir_sigma) = match side {
                Side::Left => (p, q, sigma.clone()),
                Side::Right => (q, p, invert(&sigma)),
            };

            // Challenge moves.
            let moves: Vec<(Action, StateId)> = if self.cfg.variant == Variant::WVariant {
                self.weak_moves(src, mode)?
            } else {
                let es = self.space.edges(src, mode)?;
                es.edges.iter().map(|e| (e.action.clone(), e.dst)).collect()
            };

            for (act, tgt) in moves {
                if self.cfg.variant == Variant::V2 && matches!(act, Action::In { .. }) {
                    // In this formulation the input clause is replaced
                    // wholesale by the closure under parallel emissions.
                    continue;
                }
                if self.cfg.variant == Variant::V3 && matches!(act, Action::Next) {
                    // Subsumed by the emission-context clause with the
                    // empty context.
                    continue;
                }
                let mut options: Vec<Vec<usize>> = Vec::new();
                if self.cfg.variant == Variant::V3 {
                    if let Action::In { signal, value } = &act {
                        // Disjunctive input clause: answer with a weak
                        // input, or answer internally and absorb the
                        // emission.
                        for (ans, pairs) in
                            self.weak_answers(other, &act, &dir_sigma, mode)?
                        {
                            if let Some(s2) = self.extend_sigma(&sigma, &pairs, side) {
                                let (np, nq) = orient(side, tgt, ans);
                                let child = self.intern_triple(np, nq, s2);
                                options.push(vec![child]);
                            }
                        }
                        let taus: Vec<StateId> =
                            self.space.weak_tau(other)?.iter().copied().collect();
                        for qt in taus {
                            let prog = par_with(
                                self.space.state(qt),
                                Program::Emit(*signal, value.as_expr()),
                            );
                            let (absorbed, _) = self.space.intern_program(&prog)?;
                            let (np, nq) = orient(side, tgt, absorbed);
                            let child = self.intern_triple(np, nq, sigma.clone());
                            options.push(vec![child]);
                        }
                        out.push(Challenge {
                            side,
                            action: act,
                            target: tgt,
                            options,
                        });
                        continue;
                    }
                }
                for (ans, pairs) in self.weak_answers(other, &act, &dir_sigma, mode)? {
                    if let Some(s2) = self.extend_sigma(&sigma, &pairs, side) {
                        let (np, nq) = orient(side, tgt, ans);
                        let child = self.intern_triple(np, nq, s2);
                        options.push(vec![child]);
                    }
                }
                out.push(Challenge {
                    side,
                    action: act,
                    target: tgt,
                    options,
                });
            }

            // V3 next-instant clause over emission contexts.
            if self.cfg.variant == Variant::V3 {
                let contexts = self.emission_contexts();
                for ctx in contexts {
                    let p_s = self.with_context(src, &ctx)?;
                    let q_s = self.with_context(other, &ctx)?;
                    let pn_edges: Vec<StateId> = {
                        let es = self.space.edges(p_s, mode)?;
                        es.edges
                            .iter()
                            .filter(|e| matches!(e.action, Action::Next))
                            .map(|e| e.dst)
                            .collect()
                    };
                    for p_next in pn_edges {
                        let mut options: Vec<Vec<usize>> = Vec::new();
                        let mids: Vec<StateId> =
                            self.space.weak_tau(q_s)?.iter().copied().collect();
                        for mid in mids {
                            let nexts: Vec<StateId> = {
                                let es = self.space.edges(mid, mode)?;
                                es.edges
                                    .iter()
                                    .filter(|e| matches!(e.action, Action::Next))
                                    .map(|e| e.dst)
                                    .collect()
                            };
                            for qn in nexts {
                                let (a1, b1) = orient(side, p_s, mid);
                                let pre = self.intern_triple(a1, b1, sigma.clone());
                                let (a2, b2) = orient(side, p_next, qn);
                                let post = self.intern_triple(a2, b2, sigma.clone());
                                options.push(vec![pre, post]);
                            }
                        }
                        out.push(Challenge {
                            side,
                            action: Action::Next,
                            target: p_next,
                            options,
                        });
                    }
                }
            }
        }

        // V2 closure under parallel emissions from the alphabet.
        if self.cfg.variant == Variant::V2 {
            for (sym, v) in self.space.alphabet.clone() {
                let emit = Program::Emit(Name::Free(sym), v.as_expr());
                let p2 = {
                    let prog = par_with(self.space.state(p), emit.clone());
                    self.space.intern_program(&prog)?.0
                };
                let q2 = {
                    let prog = par_with(self.space.state(q), emit);
                    self.space.intern_program(&prog)?.0
                };
                let child = self.intern_triple(p2, q2, sigma.clone());
                out.push(Challenge {
                    side: Side::Left,
                    action: Action::In {
                        signal: Name::Free(sym),
                        value: v,
                    },
                    target: p2,
                    options: vec![vec![child]],
                });
            }
        }

        Ok(out)
    }

    /// Emission contexts `s̄1v1 | ... | s̄nvn` over the alphabet, as index
    /// sets (duplicates collapse structurally), smallest first, including
    /// the empty context.
    fn emission_contexts(&self) -> Vec<Vec<usize>> {
        let n = self.space.alphabet.len();
        let cap = self.cfg.emission_context_size;
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..cap {
            let mut next = Vec::new();
            for ctx in &frontier {
                let start = ctx.last().map(|l| l + 1).unwrap_or(0);
                for i in start..n {
                    let mut c = ctx.clone();
                    c.push(i);
                    out.push(c.clone());
                    next.push(c);
                }
            }
            frontier = next;
        }
        out
    }

    fn with_context(&mut self, t: StateId, ctx: &[usize]) -> Result<StateId, LtsError> {
        if ctx.is_empty() {
            return Ok(t);
        }
        let emissions: Vec<Program> = ctx
            .iter()
            .map(|i| {
                let (sym, v) = &self.space.alphabet[*i];
                Program::Emit(Name::Free(*sym), v.as_expr())
            })
            .collect();
        let prog = par_with(self.space.state(t), Program::par(emissions));
        Ok(self.space.intern_program(&prog)?.0)
    }

    /// Explore the triple graph from a root and run refinement to the
    /// greatest fixpoint. Returns the root index.
    pub fn run(&mut self, p: StateId, q: StateId, sigma: Sigma) -> Result<usize, LtsError> {
        let root = self.intern_triple(p, q, sigma);
        let mut queue = vec![root];
        while let Some(i) = queue.pop() {
            if self.data[i].challenges.is_some() {
                continue;
            }
            if self.data.len() > self.cfg.max_triples {
                self.overflowed = true;
                return Ok(root);
            }
            let chs = self.build_challenges(i)?;
            for ch in &chs {
                for opt in &ch.options {
                    for t in opt {
                        if self.data[*t].challenges.is_none() {
                            queue.push(*t);
                        }
                    }
                }
            }
            self.data[i].challenges = Some(chs);
        }
        if self.dirty {
            self.refine();
            self.dirty = false;
        }
        Ok(root)
    }

    fn refine(&mut self) {
        loop {
            let mut changed = false;
            for i in 0..self.data.len() {
                if !self.data[i].alive {
                    continue;
                }
                let Some(chs) = &self.data[i].challenges else {
                    continue;
                };
                let mut killer: Option<usize> = None;
                for (ci, ch) in chs.iter().enumerate() {
                    let answered = ch
                        .options
                        .iter()
                        .any(|opt| opt.iter().all(|t| self.data[*t].alive));
                    if !answered {
                        killer = Some(ci);
                        break;
                    }
                }
                if let Some(ci) = killer {
                    self.data[i].alive = false;
                    self.data[i].killed_by = Some(ci);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    pub fn alive(&self, idx: usize) -> bool {
        self.data[idx].alive
    }

    pub fn verdict(&self, root: usize) -> Verdict {
        if self.overflowed {
            return Verdict::Inconclusive {
                reason: "pair-graph bound exceeded".into(),
            };
        }
        if self.data[root].alive {
            Verdict::Equivalent
        } else {
            Verdict::Distinguished {
                witness: self.witness(root, 24),
            }
        }
    }

    /// Reconstruct the failing challenge tree for a dead triple.
    pub fn witness(&self, idx: usize, depth: usize) -> Witness {
        let t = &self.data[idx];
        let defs = self.space.defs;
        let render = |s: StateId| self.space.state(s).render(defs);
        let ci = t.killed_by.unwrap_or(0);
        let chs = t.challenges.as_ref();
        let ch = chs.and_then(|c| c.get(ci));
        match ch {
            Some(ch) => {
                let mut answers = Vec::new();
                for opt in &ch.options {
                    let dead = opt.iter().find(|x| !self.data[**x].alive);
                    let target = opt
                        .first()
                        .map(|x| {
                            let d = &self.data[*x];
                            match ch.side {
                                Side::Left => render(d.q),
                                Side::Right => render(d.p),
                            }
                        })
                        .unwrap_or_default();
                    let failure = dead.and_then(|d| {
                        if depth == 0 {
                            None
                        } else {
                            Some(Box::new(self.witness(*d, depth - 1)))
                        }
                    });
                    answers.push(WitnessAnswer { target, failure });
                }
                Witness {
                    side: match ch.side {
                        Side::Left => "left",
                        Side::Right => "right",
                    },
                    action: ch.action.render(defs),
                    from_left: render(t.p),
                    from_right: render(t.q),
                    challenge_target: render(ch.target),
                    answers,
                }
            }
            None => Witness {
                side: "left",
                action: "τ".into(),
                from_left: render(t.p),
                from_right: render(t.q),
                challenge_target: String::new(),
                answers: Vec::new(),
            },
        }
    }

    /// The challenge that killed a dead triple, for replay checking:
    /// (side, action, challenge target, answer-option triples).
    pub fn kill_info(
        &self,
        idx: usize,
    ) -> Option<(Side, Action, StateId, Vec<Vec<(StateId, StateId, Sigma)>>)> {
        let t = &self.data[idx];
        if t.alive {
            return None;
        }
        let chs = t.challenges.as_ref()?;
        let ch = chs.get(t.killed_by?)?;
        let opts = ch
            .options
            .iter()
            .map(|opt| {
                opt.iter()
                    .map(|i| {
                        let d = &self.data[*i];
                        (d.p, d.q, d.sigma.clone())
                    })
                    .collect()
            })
            .collect();
        Some((ch.side, ch.action.clone(), ch.target, opts))
    }

    pub fn triple_state(&self, idx: usize) -> (StateId, StateId, &Sigma) {
        let t = &self.data[idx];
        (t.p, t.q, &t.sigma)
    }

    pub fn triple_count(&self) -> usize {
        self.data.len()
    }
}

/// Expose action matching for the square checks of the analysis module.
pub fn match_actions_public(ch: &Action, ans: &Action, sigma: &Sigma) -> Option<Vec<(u32, u32)>> {
    match_actions(ch, ans, sigma)
}

fn orient(side: Side, challenge_target: StateId, answer_target: StateId) -> (StateId, StateId) {
    match side {
        Side::Left => (challenge_target, answer_target),
        Side::Right => (answer_target, challenge_target),
    }
}
