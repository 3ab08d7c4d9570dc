//! Verdict-producing analyses over explored transition systems:
//! reactivity, τ-inertness, determinacy, confluence, local confluence,
//! the same-action diamond condition and strong commutation.
//!
//! Every verdict is relative to the input alphabet and the exploration
//! bounds; a verdict that would be "holds" on a truncated system is
//! downgraded to inconclusive. Equivalence queries between states of the
//! analysed system share one bisimulation game with memoized pairs.

use crate::equiv::game::{Game, GameConfig, Variant};
use crate::equiv::shared_sigma;
use crate::lts::action::{Action, OutAction};
use crate::lts::space::{Edge, LtsError, LtsInfo, Mode, Space, StateId};
use crate::syntax::ast::Name;
use crate::syntax::canon::CanonicalState;
use crate::syntax::subst::rename_value;
use indexmap::{IndexMap, IndexSet};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FailWitness {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Outcome {
    Holds,
    Fails { witness: FailWitness },
    Inconclusive { reason: String },
}

impl Outcome {
    pub fn holds(&self) -> bool {
        matches!(self, Outcome::Holds)
    }
    pub fn fails(&self) -> bool {
        matches!(self, Outcome::Fails { .. })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisVerdict {
    pub property: String,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub alphabet: Vec<(String, String)>,
    pub states: usize,
    pub complete: bool,
    pub verdicts: Vec<AnalysisVerdict>,
    /// Implications among the properties that failed to line up; any
    /// entry indicates a bug in this tool, not in the analysed program.
    pub contradictions: Vec<String>,
}

pub const ALL_PROPERTIES: [&str; 7] = [
    "reactive",
    "tau_inert",
    "determinate",
    "confluent",
    "locally_confluent",
    "diamond",
    "strong_confluent",
];

pub struct Analyzer<'s, 'd> {
    pub game: Game<'s, 'd>,
    pub lts: LtsInfo,
    equiv_cache: IndexMap<(StateId, StateId, crate::equiv::Sigma), bool>,
    product_cap: usize,
}

impl<'s, 'd> Analyzer<'s, 'd> {
    /// Explore the root and set up the shared equivalence game.
    pub fn new(space: &'s mut Space<'d>, root: StateId) -> Result<Self, LtsError> {
        let lts = space.explore(root, Mode::Std)?;
        let game = Game::new(space, GameConfig::new(Variant::Standard));
        Ok(Analyzer {
            game,
            lts,
            equiv_cache: IndexMap::new(),
            product_cap: 300_000,
        })
    }

    fn incomplete_reason(&self) -> Option<String> {
        if !self.lts.complete {
            return Some(format!(
                "state space truncated by {}",
                self.lts.truncated_by.unwrap_or("bounds")
            ));
        }
        if self.lts.v_overflow {
            return Some("end-of-instant permutation cap exceeded".into());
        }
        None
    }

    fn render(&self, s: StateId) -> String {
        self.game.space.state(s).render(self.game.space.defs)
    }

    /// Standard-bisimilarity of two states of the analysed system, under
    /// the identity correspondence on their shared environment names.
    pub fn equivalent(&mut self, a: StateId, b: StateId) -> Result<bool, LtsError> {
        let sigma = shared_sigma(self.game.space, a, b);
        self.equivalent_with(a, b, sigma)
    }

    /// Standard-bisimilarity under an explicit correspondence between
    /// the environment names of the two sides.
    pub fn equivalent_with(
        &mut self,
        a: StateId,
        b: StateId,
        sigma: crate::equiv::Sigma,
    ) -> Result<bool, LtsError> {
        let (x, y, s) = if a <= b {
            (a, b, sigma)
        } else {
            (b, a, invert_sigma(&sigma))
        };
        if let Some(r) = self.equiv_cache.get(&(x, y, s.clone())) {
            return Ok(*r);
        }
        let root = self.game.run(x, y, s.clone())?;
        if self.game.overflowed {
            return Err(LtsError::Bound("pair-graph bound exceeded"));
        }
        let r = self.game.alive(root);
        self.equiv_cache.insert((x, y, s), r);
        Ok(r)
    }

    /// Reactivity: no reachable cycle in the internal-step subgraph.
    pub fn reactivity(&mut self) -> Result<AnalysisVerdict, LtsError> {
        if let Some(reason) = self.incomplete_reason() {
            return Ok(verdict("reactive", Outcome::Inconclusive { reason }));
        }
        // Iterative three-colour DFS over τ-edges.
        let mut color: IndexMap<StateId, u8> = IndexMap::new();
        for s in self.lts.states.clone() {
            if color.get(&s).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(StateId, usize)> = vec![(s, 0)];
            let mut path: Vec<StateId> = Vec::new();
            while let Some((node, idx)) = stack.pop() {
                if idx == 0 {
                    color.insert(node, 1);
                    path.push(node);
                }
                let taus: Vec<StateId> = {
                    let es = self.game.space.edges(node, Mode::Std)?;
                    es.edges
                        .iter()
                        .filter(|e| matches!(e.action, Action::Tau))
                        .map(|e| e.dst)
                        .collect()
                };
                if idx < taus.len() {
                    stack.push((node, idx + 1));
                    let next = taus[idx];
                    match color.get(&next).copied().unwrap_or(0) {
                        0 => stack.push((next, 0)),
                        1 => {
                            // Cycle: slice the current path from `next`.
                            let start = path.iter().position(|p| *p == next).unwrap_or(0);
                            let cycle: Vec<String> =
                                path[start..].iter().map(|p| self.render(*p)).collect();
                            return Ok(verdict(
                                "reactive",
                                Outcome::Fails {
                                    witness: FailWitness {
                                        states: cycle,
                                        actions: vec!["τ".into()],
                                        note: "internal-step cycle: some derivative has a non-terminating instant".into(),
                                    },
                                },
                            ));
                        }
                        _ => {}
                    }
                } else {
                    color.insert(node, 2);
                    path.pop();
                }
            }
        }
        Ok(verdict("reactive", Outcome::Holds))
    }

    /// τ-inertness: every internal step preserves bisimilarity.
    pub fn tau_inert(&mut self) -> Result<AnalysisVerdict, LtsError> {
        if let Some(reason) = self.incomplete_reason() {
            return Ok(verdict("tau_inert", Outcome::Inconclusive { reason }));
        }
        for s in self.lts.states.clone() {
            let taus: Vec<StateId> = {
                let es = self.game.space.edges(s, Mode::Std)?;
                es.edges
                    .iter()
                    .filter(|e| matches!(e.action, Action::Tau))
                    .map(|e| e.dst)
                    .collect()
            };
            for d in taus {
                if !self.equivalent(s, d)? {
                    return Ok(verdict(
                        "tau_inert",
                        Outcome::Fails {
                            witness: FailWitness {
                                states: vec![self.render(s), self.render(d)],
                                actions: vec!["τ".into()],
                                note: "an internal step changes the behaviour".into(),
                            },
                        },
                    ));
                }
            }
        }
        Ok(verdict("tau_inert", Outcome::Holds))
    }

    /// Determinacy: equal non-internal interaction sequences lead to
    /// bisimilar states, checked on the product of the system with
    /// itself.
    pub fn determinate(&mut self, max_len: usize) -> Result<AnalysisVerdict, LtsError> {
        if let Some(reason) = self.incomplete_reason() {
            return Ok(verdict("determinate", Outcome::Inconclusive { reason }));
        }
        let root = self.lts.root;
        let mut seen: IndexSet<(StateId, StateId, crate::equiv::Sigma)> = IndexSet::new();
        let mut queue: Vec<(StateId, StateId, crate::equiv::Sigma, usize, Vec<String>)> =
            Vec::new();

        let closure: Vec<StateId> = self.game.space.weak_tau(root)?.iter().copied().collect();
        for (i, a) in closure.iter().enumerate() {
            for b in closure.iter().skip(i) {
                let sigma = shared_sigma(self.game.space, *a, *b);
                if seen.insert((*a, *b, sigma.clone())) {
                    queue.push((*a, *b, sigma, 0, Vec::new()));
                }
            }
        }

        while let Some((a, b, sigma, len, trail)) = queue.pop() {
            if !self.equivalent_with(a, b, sigma.clone())? {
                let mut actions = trail.clone();
                if actions.is_empty() {
                    actions.push("ε".into());
                }
                return Ok(verdict(
                    "determinate",
                    Outcome::Fails {
                        witness: FailWitness {
                            states: vec![self.render(a), self.render(b)],
                            actions,
                            note: "the same interaction sequence reaches inequivalent states"
                                .into(),
                        },
                    },
                ));
            }
            if len >= max_len {
                continue;
            }
            if seen.len() > self.product_cap {
                return Ok(verdict(
                    "determinate",
                    Outcome::Inconclusive {
                        reason: "product construction exceeded its bound".into(),
                    },
                ));
            }
            let moves = self.game.weak_moves(a, Mode::Std)?;
            for (act, a2) in moves {
                if matches!(act, Action::Tau) {
                    continue;
                }
                let answers = self.game.weak_answers(b, &act, &sigma, Mode::Std)?;
                for (b2, pairs) in answers {
                    let mut s2 = sigma.clone();
                    let mut ok = true;
                    for (l, r) in &pairs {
                        if !insert_pair(&mut s2, *l, *r) {
                            ok = false;
                            break;
                        }
                    }
                    if !ok {
                        continue;
                    }
                    s2.retain(|(l, r)| {
                        self.game.space.exts_of(a2).contains(l)
                            || self.game.space.exts_of(b2).contains(r)
                    });
                    s2.sort_unstable();
                    let key = if a2 <= b2 {
                        (a2, b2, s2.clone())
                    } else {
                        (b2, a2, invert_sigma(&s2))
                    };
                    if seen.insert(key.clone()) {
                        let mut t2 = trail.clone();
                        t2.push(act.render(self.game.space.defs));
                        queue.push((key.0, key.1, key.2, len + 1, t2));
                    }
                }
            }
        }
        Ok(verdict("determinate", Outcome::Holds))
    }

    /// Confluence (weak challenges). Diamonds involving inputs or
    /// outputs close structurally (checked by [`Analyzer::io_squares`]),
    /// so the search reduces to internal and next-instant pairs.
    pub fn confluent(&mut self) -> Result<AnalysisVerdict, LtsError> {
        self.diamonds("confluent", true)
    }

    /// Local confluence (strong challenges, weak closures).
    pub fn locally_confluent(&mut self) -> Result<AnalysisVerdict, LtsError> {
        let squares = self.io_squares()?;
        if let Some(w) = squares {
            return Ok(verdict("locally_confluent", Outcome::Fails { witness: w }));
        }
        let mut v = self.diamonds("locally_confluent", false)?;
        v.property = "locally_confluent".into();
        Ok(v)
    }

    /// The reduced two-diamond condition: same-action τ/τ and N/N strong
    /// pairs close up to internal steps and bisimilarity.
    pub fn diamond(&mut self) -> Result<AnalysisVerdict, LtsError> {
        let mut v = self.diamonds("diamond", false)?;
        v.property = "diamond".into();
        Ok(v)
    }

    fn diamonds(&mut self, property: &str, weak_challenges: bool) -> Result<AnalysisVerdict, LtsError> {
        if let Some(reason) = self.incomplete_reason() {
            return Ok(verdict(property, Outcome::Inconclusive { reason }));
        }
        for q in self.lts.states.clone() {
            for kind in [Action::Tau, Action::Next] {
                let targets: Vec<StateId> = if weak_challenges {
                    match kind {
                        Action::Tau => self.game.space.weak_tau(q)?.iter().copied().collect(),
                        _ => {
                            // ⇒N = internal closure then one N step.
                            let mut out = Vec::new();
                            for m in self.game.space.weak_tau(q)?.iter() {
                                let es = self.game.space.edges(*m, Mode::Std)?;
                                for e in &es.edges {
                                    if matches!(e.action, Action::Next) && !out.contains(&e.dst) {
                                        out.push(e.dst);
                                    }
                                }
                            }
                            out
                        }
                    }
                } else {
                    let es = self.game.space.edges(q, Mode::Std)?;
                    es.edges
                        .iter()
                        .filter(|e| e.action.kind() == kind.kind())
                        .map(|e| e.dst)
                        .collect()
                };
                for (i, q1) in targets.iter().enumerate() {
                    for q2 in targets.iter().skip(i + 1) {
                        if !self.tau_joinable(*q1, *q2)? {
                            return Ok(verdict(
                                property,
                                Outcome::Fails {
                                    witness: FailWitness {
                                        states: vec![
                                            self.render(q),
                                            self.render(*q1),
                                            self.render(*q2),
                                        ],
                                        actions: vec![
                                            kind.render(self.game.space.defs),
                                            kind.render(self.game.space.defs),
                                        ],
                                        note:
                                            "two equal-action successors cannot be joined up to bisimilarity"
                                                .into(),
                                    },
                                },
                            ));
                        }
                    }
                }
            }
        }
        Ok(verdict(property, Outcome::Holds))
    }

    /// Do the τ-closures of the two states contain bisimilar members?
    fn tau_joinable(&mut self, a: StateId, b: StateId) -> Result<bool, LtsError> {
        let ca: Vec<StateId> = self.game.space.weak_tau(a)?.iter().copied().collect();
        let cb: Vec<StateId> = self.game.space.weak_tau(b)?.iter().copied().collect();
        for x in &ca {
            for y in &cb {
                if self.equivalent(*x, *y)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Strong commutation: τ/τ pairs close in at most one step to a
    /// common state, and all N/N successor pairs are bisimilar.
    pub fn strong_confluent(&mut self) -> Result<AnalysisVerdict, LtsError> {
        if let Some(reason) = self.incomplete_reason() {
            return Ok(verdict("strong_confluent", Outcome::Inconclusive { reason }));
        }
        for q in self.lts.states.clone() {
            let (taus, nexts): (Vec<StateId>, Vec<StateId>) = {
                let es = self.game.space.edges(q, Mode::Std)?;
                (
                    es.edges
                        .iter()
                        .filter(|e| matches!(e.action, Action::Tau))
                        .map(|e| e.dst)
                        .collect(),
                    es.edges
                        .iter()
                        .filter(|e| matches!(e.action, Action::Next))
                        .map(|e| e.dst)
                        .collect(),
                )
            };
            for (i, q1) in taus.iter().enumerate() {
                for q2 in taus.iter().skip(i + 1) {
                    if !self.one_step_join(*q1, *q2)? {
                        return Ok(verdict(
                            "strong_confluent",
                            Outcome::Fails {
                                witness: FailWitness {
                                    states: vec![self.render(q), self.render(*q1), self.render(*q2)],
                                    actions: vec!["τ".into(), "τ".into()],
                                    note: "internal successors admit no one-step join".into(),
                                },
                            },
                        ));
                    }
                }
            }
            for (i, q1) in nexts.iter().enumerate() {
                for q2 in nexts.iter().skip(i + 1) {
                    if !self.equivalent(*q1, *q2)? {
                        return Ok(verdict(
                            "strong_confluent",
                            Outcome::Fails {
                                witness: FailWitness {
                                    states: vec![self.render(q), self.render(*q1), self.render(*q2)],
                                    actions: vec!["N".into(), "N".into()],
                                    note: "two next-instant successors differ".into(),
                                },
                            },
                        ));
                    }
                }
            }
        }
        Ok(verdict("strong_confluent", Outcome::Holds))
    }

    fn one_step_join(&mut self, a: StateId, b: StateId) -> Result<bool, LtsError> {
        let opts = |game: &mut Game, s: StateId| -> Result<Vec<StateId>, LtsError> {
            let mut v = vec![s];
            let es = game.space.edges(s, Mode::Std)?;
            for e in &es.edges {
                if matches!(e.action, Action::Tau) && !v.contains(&e.dst) {
                    v.push(e.dst);
                }
            }
            Ok(v)
        };
        let va = opts(&mut self.game, a)?;
        let vb = opts(&mut self.game, b)?;
        Ok(va.iter().any(|x| vb.contains(x)))
    }

    /// Check the input/output commutation squares at every state: for
    /// every pair of strong edges where at least one is an input or an
    /// output (and neither is a next-instant step), the completing edges
    /// exist and the corners agree structurally up to the pairing of
    /// freshly extruded names. A failure indicates a broken rule
    /// implementation rather than a property of the analysed program.
    pub fn io_squares(&mut self) -> Result<Option<FailWitness>, LtsError> {
        for q in self.lts.states.clone() {
            let edges: Vec<Edge> = {
                let es = self.game.space.edges(q, Mode::Std)?;
                es.edges.clone()
            };
            for (i, e1) in edges.iter().enumerate() {
                for e2 in edges.iter().skip(i + 1) {
                    let io = |a: &Action| matches!(a, Action::In { .. } | Action::Out(_));
                    if matches!(e1.action, Action::Next) || matches!(e2.action, Action::Next) {
                        continue;
                    }
                    if !io(&e1.action) && !io(&e2.action) {
                        continue;
                    }
                    if e1.action == e2.action {
                        continue;
                    }
                    if !self.square_closes(q, e1, e2)? || !self.square_closes(q, e2, e1)? {
                        return Ok(Some(FailWitness {
                            states: vec![self.render(q)],
                            actions: vec![
                                e1.action.render(self.game.space.defs),
                                e2.action.render(self.game.space.defs),
                            ],
                            note: "input/output commutation square does not close".into(),
                        }));
                    }
                }
            }
        }
        Ok(None)
    }

    /// After `e1`, can `e2`'s residual still fire from `e1.dst` and land
    /// on a state structurally equal (modulo extrusion pairing) to some
    /// state reached by firing the pair in the other order?
    fn square_closes(&mut self, _q: StateId, e1: &Edge, e2: &Edge) -> Result<bool, LtsError> {
        let expected = translate_after(e2, e1);
        let candidates: Vec<Edge> = {
            let es = self.game.space.edges(e1.dst, Mode::Std)?;
            es.edges.clone()
        };
        // Identity correspondence over names already known.
        let sigma_id: crate::equiv::Sigma = self
            .game
            .space
            .exts_of(e1.dst)
            .iter()
            .map(|e| (*e, *e))
            .collect();
        for cand in &candidates {
            let Some(pairs) = action_matches_template(&expected, &cand.action, &sigma_id) else {
                continue;
            };
            // Corner from the other order: e2 then the residual of e1.
            let expected_back = translate_after(e1, e2);
            let back_candidates: Vec<Edge> = {
                let es = self.game.space.edges(e2.dst, Mode::Std)?;
                es.edges.clone()
            };
            let sigma_id2: crate::equiv::Sigma = self
                .game
                .space
                .exts_of(e2.dst)
                .iter()
                .map(|e| (*e, *e))
                .collect();
            for back in &back_candidates {
                let Some(pairs_back) = action_matches_template(&expected_back, &back.action, &sigma_id2)
                else {
                    continue;
                };
                // Pair the corner states' names slot-wise: along path 1
                // (e1;cand) and path 2 (e2;back), each slot of q extruded
                // by either action has one id per path.
                let mut rename: Vec<(u32, u32)> = Vec::new();
                let mut consistent = true;
                let add = |l: u32, r: u32, rename: &mut Vec<(u32, u32)>| {
                    if let Some((_, r0)) = rename.iter().find(|(a, _)| *a == l) {
                        if *r0 != r {
                            return false;
                        }
                        return true;
                    }
                    rename.push((l, r));
                    true
                };
                for (k, slot) in e1.extruded_slots.iter().enumerate() {
                    let id1 = out_ext_ids(&e1.action)[k];
                    // Path 2: e2 may extrude this slot itself, otherwise
                    // `back` extrudes it.
                    let id2 = match e2.extruded_slots.iter().position(|s| s == slot) {
                        Some(j) => out_ext_ids(&e2.action)[j],
                        None => {
                            // Matched freshly by `pairs_back`: template id
                            // was e1's id.
                            match pairs_back.iter().find(|(t, _)| *t == id1) {
                                Some((_, c)) => *c,
                                None => {
                                    consistent = false;
                                    break;
                                }
                            }
                        }
                    };
                    if !add(id1, id2, &mut rename) {
                        consistent = false;
                        break;
                    }
                }
                if consistent {
                    for (k, slot) in e2.extruded_slots.iter().enumerate() {
                        let id2 = out_ext_ids(&e2.action)[k];
                        let id1 = match e1.extruded_slots.iter().position(|s| s == slot) {
                            Some(j) => out_ext_ids(&e1.action)[j],
                            None => match pairs.iter().find(|(t, _)| *t == id2) {
                                Some((_, c)) => *c,
                                None => {
                                    consistent = false;
                                    break;
                                }
                            },
                        };
                        if !add(id1, id2, &mut rename) {
                            consistent = false;
                            break;
                        }
                    }
                }
                if !consistent {
                    continue;
                }
                if self.states_equal_mod(cand.dst, back.dst, &rename)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Structural equality after renaming the left state's extruded
    /// names through the pairing.
    fn states_equal_mod(
        &mut self,
        left: StateId,
        right: StateId,
        rename: &[(u32, u32)],
    ) -> Result<bool, LtsError> {
        if rename.iter().all(|(l, r)| l == r) {
            return Ok(left == right);
        }
        let ls = self.game.space.state(left).clone();
        let f = |n: Name, _d: u16| match n {
            Name::Ext(i) => match rename.iter().find(|(l, _)| *l == i) {
                Some((_, r)) => Name::Ext(*r),
                None => n,
            },
            other => other,
        };
        let comps: Vec<_> = ls
            .comps
            .iter()
            .map(|c| crate::syntax::subst::rename_program(c, &f, 0))
            .collect();
        let prog = CanonicalState {
            nu: ls.nu,
            comps,
        }
        .to_program();
        let (renamed, _) = self.game.space.intern_program(&prog)?;
        Ok(renamed == right)
    }

    /// Run every analysis and cross-validate the theorem-level
    /// implications among the verdicts.
    pub fn analyze_all(&mut self, properties: &[&str]) -> Result<Report, LtsError> {
        let mut verdicts: Vec<AnalysisVerdict> = Vec::new();
        for p in properties {
            let v = match *p {
                "reactive" => self.reactivity()?,
                "tau_inert" => self.tau_inert()?,
                "determinate" => self.determinate(64)?,
                "confluent" => self.confluent()?,
                "locally_confluent" => self.locally_confluent()?,
                "diamond" => self.diamond()?,
                "strong_confluent" => self.strong_confluent()?,
                other => verdict(other, Outcome::Inconclusive {
                    reason: "unknown property".into(),
                }),
            };
            verdicts.push(v);
        }

        let get = |name: &str, vs: &[AnalysisVerdict]| -> Option<bool> {
            vs.iter().find(|v| v.property == name).and_then(|v| match v.outcome {
                Outcome::Holds => Some(true),
                Outcome::Fails { .. } => Some(false),
                Outcome::Inconclusive { .. } => None,
            })
        };
        let mut contradictions = Vec::new();
        let reactive = get("reactive", &verdicts);
        let tau_inert = get("tau_inert", &verdicts);
        let det = get("determinate", &verdicts);
        let conf = get("confluent", &verdicts);
        let lconf = get("locally_confluent", &verdicts);
        let diamond = get("diamond", &verdicts);
        let strong = get("strong_confluent", &verdicts);
        let implies = |a: Option<bool>, b: Option<bool>| !matches!((a, b), (Some(true), Some(false)));
        if !implies(conf, tau_inert) {
            contradictions.push("confluent but not tau-inert".into());
        }
        if !implies(conf, det) {
            contradictions.push("confluent but not determinate".into());
        }
        if !implies(det, conf) {
            contradictions.push("determinate but not confluent".into());
        }
        if reactive == Some(true) {
            if !implies(lconf, conf) {
                contradictions.push("reactive and locally confluent but not confluent".into());
            }
            if !implies(diamond, lconf) || !implies(lconf, diamond) {
                contradictions.push("diamond condition and local confluence disagree".into());
            }
        }
        if !implies(strong, det) {
            contradictions.push("strongly confluent but not determinate".into());
        }

        let alphabet = self
            .game
            .space
            .alphabet
            .iter()
            .map(|(s, v)| {
                (
                    self.game.space.defs.name(*s).to_string(),
                    crate::syntax::printer::pretty_value(v, self.game.space.defs),
                )
            })
            .collect();
        Ok(Report {
            alphabet,
            states: self.lts.states.len(),
            complete: self.lts.complete && !self.lts.v_overflow,
            verdicts,
            contradictions,
        })
    }
}

fn verdict(property: &str, outcome: Outcome) -> AnalysisVerdict {
    AnalysisVerdict {
        property: property.to_string(),
        outcome,
    }
}

fn insert_pair(sigma: &mut crate::equiv::Sigma, l: u32, r: u32) -> bool {
    for (a, b) in sigma.iter() {
        if *a == l || *b == r {
            return (*a, *b) == (l, r);
        }
    }
    sigma.push((l, r));
    sigma.sort_unstable();
    true
}

fn invert_sigma(s: &crate::equiv::Sigma) -> crate::equiv::Sigma {
    let mut v: crate::equiv::Sigma = s.iter().map(|(a, b)| (*b, *a)).collect();
    v.sort_unstable();
    v
}

fn out_ext_ids(a: &Action) -> &[u32] {
    match a {
        Action::Out(o) => &o.extruded,
        _ => &[],
    }
}

/// Express `later`'s action in the coordinates of `first.dst`: names the
/// first action extruded are substituted into the template, and the
/// still-bound extrusions keep `later`'s ids as fresh-match placeholders.
fn translate_after(later: &Edge, first: &Edge) -> Action {
    match &later.action {
        Action::Out(o) => {
            let shared: Vec<(u32, u32)> = later
                .extruded_slots
                .iter()
                .enumerate()
                .filter_map(|(k, slot)| {
                    first
                        .extruded_slots
                        .iter()
                        .position(|s| s == slot)
                        .map(|j| (o.extruded[k], out_ext_ids(&first.action)[j]))
                })
                .collect();
            let value = rename_value(
                &o.value,
                &|n, _| match n {
                    Name::Ext(i) => match shared.iter().find(|(l, _)| *l == i) {
                        Some((_, r)) => Name::Ext(*r),
                        None => n,
                    },
                    other => other,
                },
                0,
            );
            let remaining: Vec<u32> = o
                .extruded
                .iter()
                .copied()
                .filter(|id| !shared.iter().any(|(l, _)| l == id))
                .collect();
            Action::Out(OutAction {
                extruded: remaining,
                signal: o.signal,
                value,
            })
        }
        other => other.clone(),
    }
}

/// Match a translated template against a candidate action: like the
/// game's matching, with the template's remaining extrusions paired
/// freshly. Returns the fresh pairs (template id, candidate id).
fn action_matches_template(
    template: &Action,
    candidate: &Action,
    sigma_id: &crate::equiv::Sigma,
) -> Option<Vec<(u32, u32)>> {
    crate::equiv::game::match_actions_public(template, candidate, sigma_id)
}

#[cfg(test)]
mod tests;
