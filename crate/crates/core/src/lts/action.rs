//! Relevant actions of the labelled transition system, with the
//! compatibility predicate and residual operation used by the
//! confluence diamonds.

use crate::syntax::ast::{DefTable, Name, Value};
use crate::syntax::printer::Printer;
use serde::Serialize;

/// A relevant action: internal step, emission (with the generated names
/// it extrudes), environment input, or the move to the next instant.
/// Auxiliary actions (`s?v` and the end-of-instant collection) exist
/// only inside the derivation of these and never label an edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Tau,
    Out(OutAction),
    In { signal: Name, value: Value },
    Next,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutAction {
    /// Freshly extruded names, ordered by first occurrence in the value.
    /// Invariant: distinct, occur in `value`, differ from `signal`.
    pub extruded: Vec<u32>,
    pub signal: Name,
    pub value: Value,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Tau => ActionKind::Tau,
            Action::Out(_) => ActionKind::Out,
            Action::In { .. } => ActionKind::In,
            Action::Next => ActionKind::Next,
        }
    }

    pub fn is_next(&self) -> bool {
        matches!(self, Action::Next)
    }

    /// Paper-style rendering: `τ`, `ν t⃗ s̄v`, `sv`, `N`.
    pub fn render(&self, defs: &DefTable) -> String {
        match self {
            Action::Tau => "τ".to_string(),
            Action::Next => "N".to_string(),
            Action::In { signal, value } => {
                let mut pr = Printer::positional(defs, Vec::new());
                let mut v = String::new();
                pr.value(value, &mut v);
                format!("{}{}", render_name(*signal, defs), v)
            }
            Action::Out(o) => {
                let mut pr = Printer::positional(defs, Vec::new());
                let mut v = String::new();
                pr.value(&o.value, &mut v);
                let prefix = if o.extruded.is_empty() {
                    String::new()
                } else {
                    format!(
                        "ν {} ",
                        o.extruded
                            .iter()
                            .map(|e| format!("~e{e}"))
                            .collect::<Vec<_>>()
                            .join(",")
                    )
                };
                format!("{}{}\u{0304}{}", prefix, render_name(o.signal, defs), v)
            }
        }
    }
}

fn render_name(n: Name, defs: &DefTable) -> String {
    match n {
        Name::Free(s) => defs.name(s).to_string(),
        Name::Ext(i) => format!("~e{i}"),
        Name::Idx(up, slot) => format!("#{up}.{slot}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Tau,
    Out,
    In,
    Next,
}

/// Action compatibility: the next-instant action is compatible only with
/// itself; everything else is compatible with everything else.
pub fn compatible(a: &Action, b: &Action) -> bool {
    match (a.is_next(), b.is_next()) {
        (true, true) => true,
        (false, false) => true,
        _ => false,
    }
}

/// Action residual `a ∖ b`: what remains of `a` once `b` has happened.
/// Defined only for compatible actions. Equal actions leave `τ`; an
/// emission loses the names the other emission already extruded;
/// anything else is unaffected.
pub fn residual(a: &Action, b: &Action) -> Option<Action> {
    if !compatible(a, b) {
        return None;
    }
    if a == b {
        return Some(Action::Tau);
    }
    match (a, b) {
        (Action::Out(oa), Action::Out(ob)) => {
            let remaining: Vec<u32> = oa
                .extruded
                .iter()
                .copied()
                .filter(|t| !ob.extruded.contains(t))
                .collect();
            Some(Action::Out(OutAction {
                extruded: remaining,
                signal: oa.signal,
                value: oa.value.clone(),
            }))
        }
        _ => Some(a.clone()),
    }
}
