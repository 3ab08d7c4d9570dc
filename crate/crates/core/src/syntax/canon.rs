//! Canonical forms modulo structural equivalence.
//!
//! A [`CanonicalState`] is a program normalized into a hoisted name
//! prefix plus a sorted list of parallel components. The normalization
//! implements the structural-equivalence clauses (closure under static
//! contexts, associativity/commutativity of parallel composition, scope
//! extrusion across parallel, duplicate-emission collapse, evaluation of
//! emitted expressions) together with three semantics-preserving
//! extensions required for finite state identity: terminated components
//! are erased, generated signals that occur nowhere are dropped, and
//! emissions on generated signals that no residual term can ever observe
//! are collected.
//!
//! Bound-name indices are canonical: binder hints are erased and the
//! prefix ordering is the one minimizing the rendered form, so two
//! alpha-equivalent or structurally equivalent programs normalize to
//! identical values.

use crate::syntax::ast::{DefTable, Expr, Name, Pattern, Program, Rexp, Value};
use crate::syntax::eval::{eval_expr, EvalError};
use crate::syntax::printer::Printer;
use crate::syntax::subst::{rename_program, shift_program};
use crate::syntax::symbols::Sym;

/// Program in canonical form: `nu` hoisted generated signals (one frame,
/// referenced from components as slots) over sorted parallel components.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalState {
    pub nu: u16,
    pub comps: Vec<Program>,
}

/// Fate of the slots of the outermost frame of the input program:
/// `Some(new_slot)` if the binder survived, `None` if it was collected
/// or extruded away before canonicalization.
pub type SlotMap = Vec<Option<u16>>;

impl CanonicalState {
    pub fn nil() -> Self {
        CanonicalState {
            nu: 0,
            comps: Vec::new(),
        }
    }

    pub fn is_nil(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn to_program(&self) -> Program {
        let body = Program::par(self.comps.iter().cloned());
        if self.nu == 0 {
            body
        } else {
            Program::New {
                hints: vec![Sym::CANON; self.nu as usize],
                body: Box::new(body),
            }
        }
    }

    /// Extruded / environment-known names occurring in the state.
    pub fn ext_names(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for c in &self.comps {
            collect_exts(c, &mut out);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Human-readable rendering with positional binder names.
    pub fn render(&self, defs: &DefTable) -> String {
        let spine: Vec<String> = (0..self.nu).map(|i| format!("s{i}")).collect();
        let mut out = String::new();
        if self.nu > 0 {
            out.push_str("new ");
            out.push_str(&spine.join(", "));
            out.push_str(" in ");
        }
        if self.comps.is_empty() {
            out.push('0');
            return out;
        }
        let mut pr = Printer::positional(defs, spine);
        for (i, c) in self.comps.iter().enumerate() {
            if i > 0 {
                out.push_str(" || ");
            }
            let needs_parens = matches!(c, Program::MatchVal { .. } | Program::New { .. });
            if needs_parens && self.comps.len() > 1 {
                out.push('(');
            }
            pr.program(c, &mut out);
            if needs_parens && self.comps.len() > 1 {
                out.push(')');
            }
        }
        out
    }
}

struct FrameInfo {
    base: u16,
}

/// Normalize a program to its canonical state.
pub fn canonicalize(p: &Program, defs: &DefTable) -> Result<CanonicalState, EvalError> {
    Ok(canonicalize_full(p, defs)?.0)
}

/// Normalize and also report where each slot of the outermost `New`
/// frame of `p` ended up (empty map when `p` is not a `New`).
pub fn canonicalize_full(
    p: &Program,
    defs: &DefTable,
) -> Result<(CanonicalState, SlotMap), EvalError> {
    let first_frame = match p {
        Program::New { hints, .. } => hints.len() as u16,
        _ => 0,
    };

    // Step 1: hoist every parallel-spine binder into one prefix frame
    // and flatten parallel composition.
    let mut comps = Vec::new();
    let mut total: u16 = 0;
    let mut stack: Vec<FrameInfo> = Vec::new();
    flatten(p, &mut stack, &mut total, &mut comps);
    debug_assert!(stack.is_empty());

    // Step 2: evaluate emitted expressions at the spine.
    for c in comps.iter_mut() {
        if let Program::Emit(s, e) = c {
            let v = eval_expr(e, defs)?;
            *c = Program::Emit(*s, v.as_expr());
        }
    }

    // Step 3: collapse duplicate emissions.
    let mut seen: Vec<Program> = Vec::new();
    comps.retain(|c| {
        if matches!(c, Program::Emit(..)) {
            if seen.contains(c) {
                return false;
            }
            seen.push(c.clone());
        }
        true
    });

    // Step 4: collect garbage emissions on generated signals. A slot is
    // collectable when its every occurrence lies inside an emission whose
    // subject is itself a collectable slot: such emissions can never
    // synchronize, extrude, or be dereferenced.
    let mut live_map: Vec<Option<u16>> = (0..total).map(|i| Some(i)).collect();
    if total > 0 {
        let mut garbage = vec![true; total as usize];
        loop {
            let mut changed = false;
            for c in &comps {
                let confined_subject = match c {
                    Program::Emit(Name::Idx(0, g), _) => garbage.get(*g as usize).copied(),
                    _ => None,
                };
                if confined_subject == Some(true) {
                    continue;
                }
                let mut slots = Vec::new();
                collect_spine_slots(c, 0, &mut slots);
                for s in slots {
                    if garbage[s as usize] {
                        garbage[s as usize] = false;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        comps.retain(|c| match c {
            Program::Emit(Name::Idx(0, g), _) => !garbage[*g as usize],
            _ => true,
        });

        // Drop unused binders and renumber the survivors.
        let mut used = vec![false; total as usize];
        for c in &comps {
            let mut slots = Vec::new();
            collect_spine_slots(c, 0, &mut slots);
            for s in slots {
                used[s as usize] = true;
            }
        }
        let mut next = 0u16;
        for i in 0..total as usize {
            if used[i] {
                live_map[i] = Some(next);
                next += 1;
            } else {
                live_map[i] = None;
            }
        }
        if next != total {
            let map = live_map.clone();
            comps = comps
                .iter()
                .map(|c| {
                    rename_program(
                        c,
                        &|n, d| match n {
                            Name::Idx(up, slot) if up == d => {
                                Name::Idx(d, map[slot as usize].expect("renaming a dropped slot"))
                            }
                            other => other,
                        },
                        0,
                    )
                })
                .collect();
            total = next;
        }
    }

    // Step 5: erase binder hints so identity is alpha-insensitive.
    for c in comps.iter_mut() {
        *c = erase_hints(c);
    }

    // Step 6: choose the prefix ordering minimizing the rendered form,
    // then sort components.
    let perm = best_permutation(total, &comps);
    if let Some(perm) = &perm {
        comps = comps
            .iter()
            .map(|c| {
                rename_program(
                    c,
                    &|n, d| match n {
                        Name::Idx(up, slot) if up == d => Name::Idx(d, perm[slot as usize]),
                        other => other,
                    },
                    0,
                )
            })
            .collect();
        for entry in live_map.iter_mut() {
            if let Some(s) = entry {
                *s = perm[*s as usize];
            }
        }
    }
    let mut keyed: Vec<(String, Program)> = comps
        .into_iter()
        .map(|c| (struct_key(&c), c))
        .collect();
    keyed.sort();
    let comps: Vec<Program> = keyed.into_iter().map(|(_, c)| c).collect();

    live_map.truncate(first_frame as usize);
    Ok((CanonicalState { nu: total, comps }, live_map))
}

/// Structural equivalence: identical canonical forms.
pub fn struct_equiv(p: &Program, q: &Program, defs: &DefTable) -> Result<bool, EvalError> {
    Ok(canonicalize(p, defs)? == canonicalize(q, defs)?)
}

fn flatten(p: &Program, stack: &mut Vec<FrameInfo>, total: &mut u16, comps: &mut Vec<Program>) {
    match p {
        Program::Nil => {}
        Program::Par(a, b) => {
            flatten(a, stack, total, comps);
            flatten(b, stack, total, comps);
        }
        Program::New { hints, body } => {
            stack.push(FrameInfo { base: *total });
            *total += hints.len() as u16;
            flatten(body, stack, total, comps);
            stack.pop();
        }
        other => comps.push(rebase(other, stack)),
    }
}

/// Rewrite a component extracted at some spine depth so that all its
/// spine references address one merged prefix frame.
fn rebase(p: &Program, stack: &[FrameInfo]) -> Program {
    rename_program(
        p,
        &|n, d| match n {
            Name::Idx(up, slot) if up >= d => {
                let outward = (up - d) as usize;
                debug_assert!(outward < stack.len(), "reference escapes the term");
                let frame = &stack[stack.len() - 1 - outward];
                Name::Idx(d, frame.base + slot)
            }
            other => other,
        },
        0,
    )
}

fn collect_spine_slots(p: &Program, _depth: u16, out: &mut Vec<u16>) {
    visit_names(p, 0, &mut |n, d| {
        if let Name::Idx(up, slot) = n {
            if up == d {
                out.push(slot);
            }
            debug_assert!(up <= d, "component reference escapes the spine frame");
        }
    });
}

fn collect_exts(p: &Program, out: &mut Vec<u32>) {
    visit_names(p, 0, &mut |n, _| {
        if let Name::Ext(i) = n {
            out.push(i);
        }
    });
}

/// Visit every name occurrence of a program with its local frame depth.
pub fn visit_names(p: &Program, depth: u16, f: &mut impl FnMut(Name, u16)) {
    match p {
        Program::Nil => {}
        Program::Call(_, es) => {
            for e in es {
                visit_expr_names(e, depth, f);
            }
        }
        Program::Emit(s, e) => {
            f(*s, depth);
            visit_expr_names(e, depth, f);
        }
        Program::Present {
            signal, body, els, ..
        } => {
            f(*signal, depth);
            visit_names(body, depth + 1, f);
            if let crate::syntax::ast::Continuation::Call(_, rs) = els {
                for r in rs {
                    visit_rexp_names(r, depth, f);
                }
            }
        }
        Program::MatchSig {
            left,
            right,
            then_br,
            else_br,
        } => {
            f(*left, depth);
            f(*right, depth);
            visit_names(then_br, depth, f);
            visit_names(else_br, depth, f);
        }
        Program::MatchVal {
            subject,
            then_br,
            else_br,
            ..
        } => {
            visit_expr_names(subject, depth, f);
            visit_names(then_br, depth + 1, f);
            visit_names(else_br, depth, f);
        }
        Program::New { body, .. } => visit_names(body, depth + 1, f),
        Program::Par(a, b) => {
            visit_names(a, depth, f);
            visit_names(b, depth, f);
        }
    }
}

fn visit_expr_names(e: &Expr, depth: u16, f: &mut impl FnMut(Name, u16)) {
    match e {
        Expr::Var(n) => f(*n, depth),
        Expr::Ctor(_, es) | Expr::App(_, es) => {
            for e in es {
                visit_expr_names(e, depth, f);
            }
        }
    }
}

fn visit_rexp_names(r: &Rexp, depth: u16, f: &mut impl FnMut(Name, u16)) {
    match r {
        Rexp::Deref(n) | Rexp::Var(n) => f(*n, depth),
        Rexp::Ctor(_, rs) | Rexp::App(_, rs) => {
            for r in rs {
                visit_rexp_names(r, depth, f);
            }
        }
    }
}

pub fn erase_hints(p: &Program) -> Program {
    match p {
        Program::Nil => Program::Nil,
        Program::Call(a, es) => Program::Call(*a, es.clone()),
        Program::Emit(s, e) => Program::Emit(*s, e.clone()),
        Program::Present {
            signal, body, els, ..
        } => Program::Present {
            signal: *signal,
            hint: Sym::CANON,
            body: Box::new(erase_hints(body)),
            els: els.clone(),
        },
        Program::MatchSig {
            left,
            right,
            then_br,
            else_br,
        } => Program::MatchSig {
            left: *left,
            right: *right,
            then_br: Box::new(erase_hints(then_br)),
            else_br: Box::new(erase_hints(else_br)),
        },
        Program::MatchVal {
            subject,
            pattern,
            then_br,
            else_br,
        } => Program::MatchVal {
            subject: subject.clone(),
            pattern: erase_pattern_hints(pattern),
            then_br: Box::new(erase_hints(then_br)),
            else_br: Box::new(erase_hints(else_br)),
        },
        Program::New { hints, body } => Program::New {
            hints: vec![Sym::CANON; hints.len()],
            body: Box::new(erase_hints(body)),
        },
        Program::Par(a, b) => Program::Par(Box::new(erase_hints(a)), Box::new(erase_hints(b))),
    }
}

fn erase_pattern_hints(p: &Pattern) -> Pattern {
    match p {
        Pattern::Var(_) => Pattern::Var(Sym::CANON),
        Pattern::Ctor(c, args) => Pattern::Ctor(*c, args.iter().map(erase_pattern_hints).collect()),
    }
}

/// Exhaustive search for the slot permutation minimizing the rendered,
/// sorted component list. `None` means identity. Beyond 7 binders the
/// search is skipped and the discovery order kept, which is still
/// deterministic for any fixed input term.
fn best_permutation(total: u16, comps: &[Program]) -> Option<Vec<u16>> {
    if total <= 1 {
        return None;
    }
    if total > 7 {
        return None;
    }
    let mut best: Option<(String, Vec<u16>)> = None;
    let mut perm: Vec<u16> = (0..total).collect();
    permute(&mut perm, 0, &mut |perm| {
        let mut keys: Vec<String> = comps
            .iter()
            .map(|c| struct_key_perm(c, Some(perm)))
            .collect();
        keys.sort();
        let joined = keys.join("\u{1}");
        match &best {
            Some((b, _)) if *b <= joined => {}
            _ => best = Some((joined, perm.to_vec())),
        }
    });
    let (_, perm) = best?;
    if perm.iter().enumerate().all(|(i, p)| i as u16 == *p) {
        None
    } else {
        // Invert: perm lists old slots in new order; we need old -> new.
        let mut map = vec![0u16; perm.len()];
        for (new_slot, old_slot) in perm.iter().enumerate() {
            map[*old_slot as usize] = new_slot as u16;
        }
        Some(map)
    }
}

fn permute(items: &mut [u16], k: usize, visit: &mut impl FnMut(&[u16])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Unambiguous structural rendering used as the canonical sort key.
/// Injective on hint-erased terms.
pub fn struct_key(p: &Program) -> String {
    struct_key_perm(p, None)
}

fn struct_key_perm(p: &Program, perm: Option<&[u16]>) -> String {
    let mut out = String::new();
    key_program(p, 0, perm, &mut out);
    out
}

fn key_name(n: Name, depth: u16, perm: Option<&[u16]>, out: &mut String) {
    match n {
        Name::Free(s) => {
            out.push('f');
            out.push_str(&s.0.to_string());
        }
        Name::Ext(i) => {
            out.push('e');
            out.push_str(&i.to_string());
        }
        Name::Idx(up, slot) => {
            let slot = if up == depth {
                match perm {
                    Some(p) => {
                        // `perm` lists old slots in candidate order; the
                        // rendered index is the candidate position.
                        p.iter().position(|s| *s == slot).unwrap() as u16
                    }
                    None => slot,
                }
            } else {
                slot
            };
            out.push('#');
            out.push_str(&up.to_string());
            out.push('.');
            out.push_str(&slot.to_string());
        }
    }
}

fn key_program(p: &Program, depth: u16, perm: Option<&[u16]>, out: &mut String) {
    match p {
        Program::Nil => out.push('0'),
        Program::Call(a, es) => {
            out.push('C');
            out.push_str(&a.0.to_string());
            out.push('(');
            for e in es {
                key_expr(e, depth, perm, out);
                out.push(',');
            }
            out.push(')');
        }
        Program::Emit(s, e) => {
            out.push('E');
            key_name(*s, depth, perm, out);
            out.push('(');
            key_expr(e, depth, perm, out);
            out.push(')');
        }
        Program::Present {
            signal, body, els, ..
        } => {
            out.push('P');
            key_name(*signal, depth, perm, out);
            out.push('{');
            key_program(body, depth + 1, perm, out);
            out.push('}');
            match els {
                crate::syntax::ast::Continuation::Halt => out.push('0'),
                crate::syntax::ast::Continuation::Call(a, rs) => {
                    out.push('K');
                    out.push_str(&a.0.to_string());
                    out.push('(');
                    for r in rs {
                        key_rexp(r, depth, perm, out);
                        out.push(',');
                    }
                    out.push(')');
                }
            }
        }
        Program::MatchSig {
            left,
            right,
            then_br,
            else_br,
        } => {
            out.push('S');
            key_name(*left, depth, perm, out);
            out.push('=');
            key_name(*right, depth, perm, out);
            out.push('{');
            key_program(then_br, depth, perm, out);
            out.push(';');
            key_program(else_br, depth, perm, out);
            out.push('}');
        }
        Program::MatchVal {
            subject,
            pattern,
            then_br,
            else_br,
        } => {
            out.push('M');
            key_expr(subject, depth, perm, out);
            out.push('~');
            key_pattern(pattern, out);
            out.push('{');
            key_program(then_br, depth + 1, perm, out);
            out.push(';');
            key_program(else_br, depth, perm, out);
            out.push('}');
        }
        Program::New { hints, body } => {
            out.push('N');
            out.push_str(&hints.len().to_string());
            out.push('{');
            key_program(body, depth + 1, perm, out);
            out.push('}');
        }
        Program::Par(a, b) => {
            out.push('|');
            out.push('(');
            key_program(a, depth, perm, out);
            out.push(';');
            key_program(b, depth, perm, out);
            out.push(')');
        }
    }
}

fn key_expr(e: &Expr, depth: u16, perm: Option<&[u16]>, out: &mut String) {
    match e {
        Expr::Var(n) => key_name(*n, depth, perm, out),
        Expr::Ctor(c, es) => {
            out.push('c');
            out.push_str(&c.0.to_string());
            out.push('(');
            for e in es {
                key_expr(e, depth, perm, out);
                out.push(',');
            }
            out.push(')');
        }
        Expr::App(f, es) => {
            out.push('a');
            out.push_str(&f.0.to_string());
            out.push('(');
            for e in es {
                key_expr(e, depth, perm, out);
                out.push(',');
            }
            out.push(')');
        }
    }
}

fn key_rexp(r: &Rexp, depth: u16, perm: Option<&[u16]>, out: &mut String) {
    match r {
        Rexp::Deref(n) => {
            out.push('!');
            key_name(*n, depth, perm, out);
        }
        Rexp::Var(n) => key_name(*n, depth, perm, out),
        Rexp::Ctor(c, rs) => {
            out.push('c');
            out.push_str(&c.0.to_string());
            out.push('(');
            for r in rs {
                key_rexp(r, depth, perm, out);
                out.push(',');
            }
            out.push(')');
        }
        Rexp::App(f, rs) => {
            out.push('a');
            out.push_str(&f.0.to_string());
            out.push('(');
            for r in rs {
                key_rexp(r, depth, perm, out);
                out.push(',');
            }
            out.push(')');
        }
    }
}

fn key_pattern(p: &Pattern, out: &mut String) {
    match p {
        Pattern::Var(_) => out.push('_'),
        Pattern::Ctor(c, args) => {
            out.push('c');
            out.push_str(&c.0.to_string());
            out.push('(');
            for a in args {
                key_pattern(a, out);
                out.push(',');
            }
            out.push(')');
        }
    }
}

/// Total order on values used for deterministic listings: constructor
/// name lexicographic then arguments, signal names by kind then index.
pub fn value_key(v: &Value, defs: &DefTable) -> String {
    let mut out = String::new();
    value_key_into(v, defs, &mut out);
    out
}

fn value_key_into(v: &Value, defs: &DefTable, out: &mut String) {
    match v {
        Value::Sig(Name::Idx(up, slot)) => out.push_str(&format!("0:{up}.{slot}")),
        Value::Sig(Name::Free(s)) => {
            out.push_str("1:");
            out.push_str(defs.name(*s));
        }
        Value::Sig(Name::Ext(i)) => out.push_str(&format!("2:{i:08}")),
        Value::Ctor(c, args) => {
            out.push_str("3:");
            out.push_str(defs.name(*c));
            out.push('(');
            for a in args {
                value_key_into(a, defs, out);
                out.push(',');
            }
            out.push(')');
        }
    }
}

/// Build `state | extra` as a program, shifting `extra` under the prefix.
pub fn par_with(state: &CanonicalState, extra: Program) -> Program {
    if state.nu == 0 {
        match state.comps.len() {
            0 => extra,
            _ => Program::Par(
                Box::new(Program::par(state.comps.iter().cloned())),
                Box::new(extra),
            ),
        }
    } else {
        let shifted = shift_program(&extra, 1, 0);
        let body = Program::Par(
            Box::new(Program::par(state.comps.iter().cloned())),
            Box::new(shifted),
        );
        Program::New {
            hints: vec![Sym::CANON; state.nu as usize],
            body: Box::new(body),
        }
    }
}
