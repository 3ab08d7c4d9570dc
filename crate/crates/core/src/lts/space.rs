//! The explored state space: canonical states interned to dense ids,
//! with per-state edge sets derived on demand.
//!
//! Two rule systems share the space. `Mode::Std` is the reference
//! transition system: environment inputs are unconditional (`P --sv-->
//! P | s̄v`). `Mode::Alt` is the modified system used by the variant
//! bisimulations of the characterisation results: the input rule is
//! removed and a present statement receives directly, leaving a copy of
//! the emission (`s(x).P,K --sv--> [v/x]P | s̄v`). Internal, output and
//! next-instant edges coincide between the two and are shared.

use crate::lts::action::{Action, OutAction};
use crate::syntax::ast::{Alphabet, Bounds, Continuation, DefTable, Expr, Name, Program, Rexp, Value};
use crate::syntax::canon::{canonicalize_full, par_with, value_key, CanonicalState, SlotMap};
use crate::syntax::eval::{eval_expr, eval_exprs, match_value, EvalError};
use crate::syntax::subst::{open_program, rename_program, rename_value};
use crate::syntax::symbols::Sym;
use indexmap::{IndexMap, IndexSet};
use std::sync::Arc;
use thiserror::Error;

pub type StateId = u32;

#[derive(Debug, Error)]
pub enum LtsError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("exploration bound exceeded: {0}")]
    Bound(&'static str),
    #[error("unknown thread identifier in state")]
    UnknownThread,
}

/// A strong edge. `extruded_slots` records which source-prefix slots an
/// output extruded, and `slot_map` where every source-prefix slot ended
/// up in the destination prefix; both are needed to chase residuals
/// through diamonds without guessing name correspondences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub action: Action,
    pub dst: StateId,
    pub extruded_slots: Vec<u16>,
    pub slot_map: SlotMap,
}

#[derive(Debug)]
pub struct EdgeSet {
    pub edges: Vec<Edge>,
    /// No internal step is derivable: the precondition of the
    /// next-instant rule.
    pub suspended: bool,
    /// The end-of-instant enumeration was truncated by the permutation
    /// cap; verdicts over this state are inconclusive.
    pub v_overflow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Std,
    Alt,
}

/// Result of a bounded exploration.
#[derive(Debug, Clone)]
pub struct LtsInfo {
    pub root: StateId,
    /// Reachable states in breadth-first discovery order.
    pub states: Vec<StateId>,
    pub complete: bool,
    pub v_overflow: bool,
    pub truncated_by: Option<&'static str>,
}

pub struct Space<'d> {
    pub defs: &'d DefTable,
    /// Deduplicated, deterministically ordered input closure.
    pub alphabet: Vec<(Sym, Value)>,
    pub bounds: Bounds,
    states: IndexSet<CanonicalState>,
    std_edges: Vec<Option<Arc<EdgeSet>>>,
    alt_edges: Vec<Option<Arc<EdgeSet>>>,
    weak_tau_cache: Vec<Option<Arc<Vec<StateId>>>>,
    ext_names: Vec<Arc<Vec<u32>>>,
    next_ext: u32,
}

impl<'d> Space<'d> {
    pub fn new(defs: &'d DefTable, alphabet: &Alphabet, bounds: Bounds) -> Self {
        let mut pairs: Vec<(Sym, Value)> = Vec::new();
        for (s, v) in &alphabet.pairs {
            if !pairs.contains(&(*s, v.clone())) {
                pairs.push((*s, v.clone()));
            }
        }
        pairs.sort_by(|a, b| {
            let ka = (defs.name(a.0).to_string(), value_key(&a.1, defs));
            let kb = (defs.name(b.0).to_string(), value_key(&b.1, defs));
            ka.cmp(&kb)
        });
        Space {
            defs,
            alphabet: pairs,
            bounds,
            states: IndexSet::new(),
            std_edges: Vec::new(),
            alt_edges: Vec::new(),
            weak_tau_cache: Vec::new(),
            ext_names: Vec::new(),
            next_ext: 0,
        }
    }

    pub fn state(&self, id: StateId) -> &CanonicalState {
        self.states.get_index(id as usize).expect("state id in range")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn exts_of(&self, id: StateId) -> &[u32] {
        &self.ext_names[id as usize]
    }

    pub fn intern_state(&mut self, state: CanonicalState) -> StateId {
        let (idx, fresh) = self.states.insert_full(state);
        if fresh {
            let exts = self.states.get_index(idx).unwrap().ext_names();
            self.std_edges.push(None);
            self.alt_edges.push(None);
            self.weak_tau_cache.push(None);
            self.ext_names.push(Arc::new(exts));
        }
        idx as StateId
    }

    /// Canonicalize and intern a program, returning the new id and the
    /// fate of the program's outermost binder frame.
    pub fn intern_program(&mut self, p: &Program) -> Result<(StateId, SlotMap), EvalError> {
        let (state, map) = canonicalize_full(p, self.defs)?;
        Ok((self.intern_state(state), map))
    }

    pub fn edges(&mut self, id: StateId, mode: Mode) -> Result<Arc<EdgeSet>, LtsError> {
        let cached = match mode {
            Mode::Std => self.std_edges[id as usize].clone(),
            Mode::Alt => self.alt_edges[id as usize].clone(),
        };
        if let Some(es) = cached {
            return Ok(es);
        }
        let es = match mode {
            Mode::Std => Arc::new(self.derive_std(id)?),
            Mode::Alt => {
                let std = self.edges(id, Mode::Std)?;
                Arc::new(self.derive_alt(id, &std)?)
            }
        };
        match mode {
            Mode::Std => self.std_edges[id as usize] = Some(es.clone()),
            Mode::Alt => self.alt_edges[id as usize] = Some(es.clone()),
        }
        Ok(es)
    }

    pub fn suspended(&mut self, id: StateId, mode: Mode) -> Result<bool, LtsError> {
        Ok(self.edges(id, mode)?.suspended)
    }

    fn derive_std(&mut self, id: StateId) -> Result<EdgeSet, LtsError> {
        let state = self.state(id).clone();
        let mut edges: Vec<Edge> = Vec::new();
        let mut has_tau = false;

        for (i, comp) in state.comps.iter().enumerate() {
            match comp {
                Program::Call(a, es) => {
                    let def = self
                        .defs
                        .threads
                        .get(a)
                        .ok_or(LtsError::UnknownThread)?
                        .clone();
                    let vals = eval_exprs(es, self.defs)?;
                    let body = open_program(&def.body, &vals);
                    self.push_tau(&state, i, body, &mut edges)?;
                    has_tau = true;
                }
                Program::MatchSig {
                    left,
                    right,
                    then_br,
                    else_br,
                } => {
                    let taken = if left == right { then_br } else { else_br };
                    self.push_tau(&state, i, (**taken).clone(), &mut edges)?;
                    has_tau = true;
                }
                Program::MatchVal {
                    subject,
                    pattern,
                    then_br,
                    else_br,
                } => {
                    let v = eval_expr(subject, self.defs)?;
                    let next = match match_value(&v, pattern) {
                        Some(binds) => open_program(then_br, &binds),
                        None => (**else_br).clone(),
                    };
                    self.push_tau(&state, i, next, &mut edges)?;
                    has_tau = true;
                }
                Program::Emit(subject, e) => {
                    if !matches!(subject, Name::Idx(..)) {
                        let value = match e.as_value() {
                            Some(v) => v,
                            None => eval_expr(e, self.defs)?,
                        };
                        self.push_out(&state, *subject, value, &mut edges)?;
                    }
                }
                Program::Present { signal, body, .. } => {
                    // Synchronization with a persisting emission: the
                    // emitter stays, the present consumes the value.
                    for (j, other) in state.comps.iter().enumerate() {
                        if i == j {
                            continue;
                        }
                        if let Program::Emit(sub2, e2) = other {
                            if sub2 == signal {
                                let v2 = match e2.as_value() {
                                    Some(v) => v,
                                    None => eval_expr(e2, self.defs)?,
                                };
                                let receiver = open_program(body, &[v2]);
                                self.push_tau(&state, i, receiver, &mut edges)?;
                                has_tau = true;
                            }
                        }
                    }
                }
                Program::Nil | Program::New { .. } | Program::Par(..) => {
                    debug_assert!(false, "non-canonical component in state");
                }
            }
        }

        // Environment inputs: any alphabet pair, from any state.
        for (sym, v) in self.alphabet.clone() {
            let prog = par_with(&state, Program::Emit(Name::Free(sym), v.as_expr()));
            let (dst, slot_map) = self.intern_program(&prog)?;
            let edge = Edge {
                action: Action::In {
                    signal: Name::Free(sym),
                    value: v,
                },
                dst,
                extruded_slots: Vec::new(),
                slot_map,
            };
            if !edges.contains(&edge) {
                edges.push(edge);
            }
        }

        let mut v_overflow = false;
        if !has_tau {
            self.push_next(&state, &mut edges, &mut v_overflow)?;
        }

        Ok(EdgeSet {
            edges,
            suspended: !has_tau,
            v_overflow,
        })
    }

    /// Variant rule system: identical except for inputs, which fire only
    /// at a present statement and leave a copy of the received emission.
    fn derive_alt(&mut self, id: StateId, std: &EdgeSet) -> Result<EdgeSet, LtsError> {
        let state = self.state(id).clone();
        let mut edges: Vec<Edge> = std
            .edges
            .iter()
            .filter(|e| !matches!(e.action, Action::In { .. }))
            .cloned()
            .collect();
        for (i, comp) in state.comps.iter().enumerate() {
            if let Program::Present { signal, body, .. } = comp {
                if let Name::Free(fs) = signal {
                    for (sym, v) in self.alphabet.clone() {
                        if sym != *fs {
                            continue;
                        }
                        let receiver = Program::Par(
                            Box::new(open_program(body, &[v.clone()])),
                            Box::new(Program::Emit(*signal, v.as_expr())),
                        );
                        let prog = state.with_component_replaced(i, receiver);
                        let (dst, slot_map) = self.intern_program(&prog)?;
                        let edge = Edge {
                            action: Action::In {
                                signal: *signal,
                                value: v,
                            },
                            dst,
                            extruded_slots: Vec::new(),
                            slot_map,
                        };
                        if !edges.contains(&edge) {
                            edges.push(edge);
                        }
                    }
                }
            }
        }
        Ok(EdgeSet {
            edges,
            suspended: std.suspended,
            v_overflow: std.v_overflow,
        })
    }

    fn push_tau(
        &mut self,
        state: &CanonicalState,
        comp: usize,
        replacement: Program,
        edges: &mut Vec<Edge>,
    ) -> Result<(), EvalError> {
        let prog = state.with_component_replaced(comp, replacement);
        let (dst, slot_map) = self.intern_program(&prog)?;
        let edge = Edge {
            action: Action::Tau,
            dst,
            extruded_slots: Vec::new(),
            slot_map,
        };
        if !edges.contains(&edge) {
            edges.push(edge);
        }
        Ok(())
    }

    /// Emission action. The emitter persists; generated names occurring
    /// in the value are extruded, i.e. turned into fresh environment
    /// names and removed from the prefix.
    fn push_out(
        &mut self,
        state: &CanonicalState,
        subject: Name,
        value: Value,
        edges: &mut Vec<Edge>,
    ) -> Result<(), EvalError> {
        let mut names = Vec::new();
        value.names(&mut names);
        let slots: Vec<u16> = names
            .iter()
            .filter_map(|n| match n {
                Name::Idx(0, slot) => Some(*slot),
                _ => None,
            })
            .collect();

        if slots.is_empty() {
            // Nothing extruded: the successor is the state itself.
            let dst_prog = state.to_program();
            let (dst, slot_map) = self.intern_program(&dst_prog)?;
            let edge = Edge {
                action: Action::Out(OutAction {
                    extruded: Vec::new(),
                    signal: subject,
                    value,
                }),
                dst,
                extruded_slots: Vec::new(),
                slot_map,
            };
            if !edges.contains(&edge) {
                edges.push(edge);
            }
            return Ok(());
        }

        // Deduplicate identical action shapes before allocating ids: two
        // emitters цannot be identical (collapsed), so each call yields
        // one edge.
        let ids: Vec<u32> = (0..slots.len() as u32)
            .map(|k| self.next_ext + k)
            .collect();
        self.next_ext += slots.len() as u32;
        let rename = |n: Name, d: u16| match n {
            Name::Idx(up, slot) if up == d => match slots.iter().position(|s| *s == slot) {
                Some(k) => Name::Ext(ids[k]),
                None => n,
            },
            other => other,
        };
        let action_value = rename_value(&value, &rename, 0);
        let comps: Vec<Program> = state
            .comps
            .iter()
            .map(|c| rename_program(c, &rename, 0))
            .collect();
        let prog = if state.nu == 0 {
            Program::par(comps)
        } else {
            Program::New {
                hints: vec![Sym::CANON; state.nu as usize],
                body: Box::new(Program::par(comps)),
            }
        };
        let (dst, slot_map) = self.intern_program(&prog)?;
        let edge = Edge {
            action: Action::Out(OutAction {
                extruded: ids,
                signal: subject,
                value: action_value,
            }),
            dst,
            extruded_slots: slots,
            slot_map,
        };
        edges.push(edge);
        Ok(())
    }

    /// End-of-instant derivation: collect the emission map, enumerate
    /// representing lists (all per-signal permutations up to the cap),
    /// reset emitters and start continuations.
    fn push_next(
        &mut self,
        state: &CanonicalState,
        edges: &mut Vec<Edge>,
        v_overflow: &mut bool,
    ) -> Result<(), EvalError> {
        let mut emap: IndexMap<Name, Vec<Value>> = IndexMap::new();
        for comp in &state.comps {
            if let Program::Emit(sub, e) = comp {
                let v = match e.as_value() {
                    Some(v) => v,
                    None => eval_expr(e, self.defs)?,
                };
                let entry = emap.entry(*sub).or_default();
                if !entry.contains(&v) {
                    entry.push(v);
                }
            }
        }
        for vs in emap.values_mut() {
            vs.sort_by(|a, b| value_key(a, self.defs).cmp(&value_key(b, self.defs)));
        }

        // All admissible collections share this emission map; only the
        // listing order per signal varies.
        let per_signal_perms: Vec<Vec<Vec<usize>>> = emap
            .values()
            .map(|vs| permutations(vs.len(), self.bounds.max_v_perms))
            .collect();
        let mut total: usize = 1;
        for p in &per_signal_perms {
            total = total.saturating_mul(p.len());
        }
        if total > self.bounds.max_v_perms {
            *v_overflow = true;
        }
        let limit = total.min(self.bounds.max_v_perms);

        let signals: Vec<Name> = emap.keys().copied().collect();
        let mut combo = vec![0usize; signals.len()];
        for _ in 0..limit.max(1) {
            // Build the collection for this combination.
            let mut collect: IndexMap<Name, Value> = IndexMap::new();
            for (k, sig) in signals.iter().enumerate() {
                let base = &emap[sig];
                let perm = &per_signal_perms[k][combo[k]];
                let listed = Value::list(perm.iter().map(|i| base[*i].clone()));
                collect.insert(*sig, listed);
            }

            let mut comps: Vec<Program> = Vec::new();
            for comp in &state.comps {
                match comp {
                    Program::Emit(..) => {}
                    Program::Present { signal, els, .. } => {
                        debug_assert!(
                            !emap.contains_key(signal),
                            "present on an emitted signal cannot be suspended"
                        );
                        match els {
                            Continuation::Halt => {}
                            Continuation::Call(a, rexps) => {
                                let args: Vec<Expr> =
                                    rexps.iter().map(|r| resolve_deref(r, &collect)).collect();
                                comps.push(Program::Call(*a, args));
                            }
                        }
                    }
                    other => {
                        debug_assert!(false, "suspended state holds only emits and presents: {other:?}");
                    }
                }
            }
            let prog = if state.nu == 0 {
                Program::par(comps)
            } else {
                Program::New {
                    hints: vec![Sym::CANON; state.nu as usize],
                    body: Box::new(Program::par(comps)),
                }
            };
            let (dst, slot_map) = self.intern_program(&prog)?;
            let edge = Edge {
                action: Action::Next,
                dst,
                extruded_slots: Vec::new(),
                slot_map,
            };
            if !edges.contains(&edge) {
                edges.push(edge);
            }

            // Advance the mixed-radix combination counter.
            let mut k = 0usize;
            while k < combo.len() {
                combo[k] += 1;
                if combo[k] < per_signal_perms[k].len() {
                    break;
                }
                combo[k] = 0;
                k += 1;
            }
            if combo.iter().all(|c| *c == 0) && !signals.is_empty() {
                break;
            }
            if signals.is_empty() {
                break;
            }
        }
        Ok(())
    }

    /// Breadth-first exploration from a root within the bounds.
    pub fn explore(&mut self, root: StateId, mode: Mode) -> Result<LtsInfo, LtsError> {
        let mut info = LtsInfo {
            root,
            states: vec![root],
            complete: true,
            v_overflow: false,
            truncated_by: None,
        };
        let mut meta: IndexMap<StateId, (usize, usize)> = IndexMap::new();
        meta.insert(root, (0, 0));
        let mut queue: std::collections::VecDeque<StateId> = [root].into();
        while let Some(id) = queue.pop_front() {
            let (depth, instant) = meta[&id];
            if depth >= self.bounds.max_depth {
                info.complete = false;
                info.truncated_by = Some("max depth");
                continue;
            }
            if instant > self.bounds.max_instants {
                info.complete = false;
                info.truncated_by = Some("max instants");
                continue;
            }
            let es = self.edges(id, mode)?;
            if es.v_overflow {
                info.v_overflow = true;
            }
            for e in &es.edges {
                let nd = depth + 1;
                let ni = instant + usize::from(e.action.is_next());
                match meta.get_mut(&e.dst) {
                    Some(m) => {
                        if nd < m.0 {
                            m.0 = nd;
                        }
                        if ni < m.1 {
                            m.1 = ni;
                        }
                    }
                    None => {
                        if meta.len() >= self.bounds.max_states {
                            info.complete = false;
                            info.truncated_by = Some("max states");
                            continue;
                        }
                        meta.insert(e.dst, (nd, ni));
                        info.states.push(e.dst);
                        queue.push_back(e.dst);
                    }
                }
            }
        }
        Ok(info)
    }

    /// Reflexive-transitive closure over internal steps, as a sorted set.
    pub fn weak_tau(&mut self, id: StateId) -> Result<Arc<Vec<StateId>>, LtsError> {
        if let Some(c) = &self.weak_tau_cache[id as usize] {
            return Ok(c.clone());
        }
        let mut seen: IndexSet<StateId> = IndexSet::new();
        seen.insert(id);
        let mut queue = vec![id];
        while let Some(s) = queue.pop() {
            if seen.len() > self.bounds.max_states {
                return Err(LtsError::Bound("tau closure exceeded max states"));
            }
            let es = self.edges(s, Mode::Std)?;
            for e in &es.edges {
                if matches!(e.action, Action::Tau) && seen.insert(e.dst) {
                    queue.push(e.dst);
                }
            }
        }
        let mut v: Vec<StateId> = seen.into_iter().collect();
        v.sort_unstable();
        let arc = Arc::new(v);
        self.weak_tau_cache[id as usize] = Some(arc.clone());
        Ok(arc)
    }
}

/// Replace one rexp's dereferences with the collected lists.
fn resolve_deref(r: &Rexp, collect: &IndexMap<Name, Value>) -> Expr {
    match r {
        Rexp::Deref(n) => match collect.get(n) {
            Some(v) => v.as_expr(),
            None => Value::nil().as_expr(),
        },
        Rexp::Var(n) => Expr::Var(*n),
        Rexp::Ctor(c, rs) => Expr::Ctor(*c, rs.iter().map(|r| resolve_deref(r, collect)).collect()),
        Rexp::App(f, rs) => Expr::App(*f, rs.iter().map(|r| resolve_deref(r, collect)).collect()),
    }
}

/// Lexicographic permutations of `0..n`, truncated at `cap`.
fn permutations(n: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    loop {
        out.push(items.clone());
        if out.len() >= cap.max(1) {
            break;
        }
        // next_permutation
        if n < 2 {
            break;
        }
        let mut i = n - 1;
        while i > 0 && items[i - 1] >= items[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while items[j] <= items[i - 1] {
            j -= 1;
        }
        items.swap(i - 1, j);
        items[i..].reverse();
    }
    out
}

impl CanonicalState {
    /// Rebuild the state as a program with component `i` replaced.
    pub fn with_component_replaced(&self, i: usize, replacement: Program) -> Program {
        let mut comps: Vec<Program> = Vec::with_capacity(self.comps.len());
        for (j, c) in self.comps.iter().enumerate() {
            if j == i {
                comps.push(replacement.clone());
            } else {
                comps.push(c.clone());
            }
        }
        let body = Program::par(comps);
        if self.nu == 0 {
            body
        } else {
            Program::New {
                hints: vec![Sym::CANON; self.nu as usize],
                body: Box::new(body),
            }
        }
    }
}
