//! Stable serialization of explored transition systems.
//!
//! Output is byte-identical across runs for the same input, bounds and
//! alphabet: states are numbered in breadth-first discovery order and
//! every collection is emitted in a fixed order.

use crate::lts::action::Action;
use crate::lts::space::{LtsInfo, Mode, Space};
use crate::syntax::ast::{DefTable, Name, Value};
use crate::syntax::printer::Printer;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Serialize)]
struct JsonLts {
    format: &'static str,
    root: usize,
    complete: bool,
    v_perm_overflow: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncated_by: Option<&'static str>,
    alphabet: Vec<JsonInput>,
    states: Vec<JsonState>,
    edges: Vec<JsonEdge>,
}

#[derive(Serialize)]
struct JsonInput {
    signal: String,
    value: String,
}

#[derive(Serialize)]
struct JsonState {
    id: usize,
    term: String,
}

#[derive(Serialize)]
struct JsonEdge {
    src: usize,
    action: JsonAction,
    dst: usize,
}

#[derive(Serialize)]
struct JsonAction {
    kind: &'static str,
    extruded: Vec<String>,
    signal: Option<String>,
    value: Option<String>,
}

fn render_value(v: &Value, defs: &DefTable) -> String {
    let mut pr = Printer::positional(defs, Vec::new());
    let mut out = String::new();
    pr.value(v, &mut out);
    out
}

fn render_name(n: Name, defs: &DefTable) -> String {
    match n {
        Name::Free(s) => defs.name(s).to_string(),
        Name::Ext(i) => format!("~e{i}"),
        Name::Idx(up, slot) => format!("#{up}.{slot}"),
    }
}

fn json_action(a: &Action, defs: &DefTable) -> JsonAction {
    match a {
        Action::Tau => JsonAction {
            kind: "tau",
            extruded: vec![],
            signal: None,
            value: None,
        },
        Action::Next => JsonAction {
            kind: "next",
            extruded: vec![],
            signal: None,
            value: None,
        },
        Action::In { signal, value } => JsonAction {
            kind: "in",
            extruded: vec![],
            signal: Some(render_name(*signal, defs)),
            value: Some(render_value(value, defs)),
        },
        Action::Out(o) => JsonAction {
            kind: "out",
            extruded: o.extruded.iter().map(|e| format!("~e{e}")).collect(),
            signal: Some(render_name(o.signal, defs)),
            value: Some(render_value(&o.value, defs)),
        },
    }
}

/// Serialize the reachable part of the space as JSON with dense
/// breadth-first ids.
pub fn lts_to_json(space: &mut Space, info: &LtsInfo, mode: Mode) -> Result<String, crate::lts::space::LtsError> {
    let mut dense: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, s) in info.states.iter().enumerate() {
        dense.insert(*s, i);
    }
    let mut states = Vec::new();
    let mut edges = Vec::new();
    for (i, sid) in info.states.iter().enumerate() {
        let term = space.state(*sid).render(space.defs);
        states.push(JsonState { id: i, term });
        let es = space.edges(*sid, mode)?;
        for e in &es.edges {
            if let Some(dst) = dense.get(&e.dst) {
                edges.push(JsonEdge {
                    src: i,
                    action: json_action(&e.action, space.defs),
                    dst: *dst,
                });
            }
        }
    }
    let alphabet = space
        .alphabet
        .iter()
        .map(|(s, v)| JsonInput {
            signal: space.defs.name(*s).to_string(),
            value: render_value(v, space.defs),
        })
        .collect();
    let doc = JsonLts {
        format: "spi-lts/1",
        root: dense[&info.root],
        complete: info.complete,
        v_perm_overflow: info.v_overflow,
        truncated_by: info.truncated_by,
        alphabet,
        states,
        edges,
    };
    Ok(serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
}

/// Graphviz rendering with action labels in the paper's notation.
pub fn lts_to_dot(space: &mut Space, info: &LtsInfo, mode: Mode) -> Result<String, crate::lts::space::LtsError> {
    let mut dense: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, s) in info.states.iter().enumerate() {
        dense.insert(*s, i);
    }
    let mut out = String::from("digraph lts {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n");
    for (i, sid) in info.states.iter().enumerate() {
        let term = space.state(*sid).render(space.defs);
        let shape = if *sid == info.root { ", penwidth=2" } else { "" };
        out.push_str(&format!(
            "  n{} [label=\"{}: {}\"{}];\n",
            i,
            i,
            escape(&term),
            shape
        ));
    }
    for (i, sid) in info.states.iter().enumerate() {
        let es = space.edges(*sid, mode)?;
        for e in &es.edges {
            if let Some(dst) = dense.get(&e.dst) {
                out.push_str(&format!(
                    "  n{} -> n{} [label=\"{}\"];\n",
                    i,
                    dst,
                    escape(&e.action.render(space.defs))
                ));
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
