//! Deterministic text snapshots of models and registries.
//!
//! One node per line: `depth<TAB>kind<TAB>name<TAB>payload<TAB>referee-path`.
//! Ids never appear, so two states built in different orders compare equal
//! when their structure, bindings and mappings agree.

use std::fmt::Write;

use super::{ContextId, Model, NodeId, NodeRef, Payload, Workspace};
use crate::rules::Mapping;

/// Human-facing path of a node: dot-separated names from the model root.
/// Unnamed nodes use `#index`; library nodes start with `@lib`, stubs are
/// rendered as `@stub(model:path)`.
pub fn node_path(ws: &Workspace, r: NodeRef) -> String {
    let Ok(m) = ws.model(r.model) else {
        return format!("?{r}");
    };
    let Some(node) = m.get(r.node) else {
        return format!("?{r}");
    };
    if let Payload::Stub(t) = &node.payload {
        let fm = ws
            .model(t.foreign.model)
            .map(|m| m.name.clone())
            .unwrap_or_default();
        return format!("@stub({}:{})", fm, node_path(ws, t.foreign));
    }
    let mut segments = Vec::new();
    let mut cur = r.node;
    while let Some(parent) = m.parent(cur) {
        segments.push(segment(m, parent, cur));
        cur = parent;
    }
    segments.reverse();
    if cur == m.root {
        segments.join(".")
    } else {
        let top = m.get(cur).and_then(|n| n.name.clone()).unwrap_or_default();
        let mut s = format!("@lib.{top}");
        for seg in segments {
            s.push('.');
            s.push_str(&seg);
        }
        s
    }
}

fn segment(m: &Model, parent: NodeId, id: NodeId) -> String {
    match m.get(id).and_then(|n| n.name.clone()) {
        Some(name) if m.get(id).is_some_and(|n| n.kind.is_declaration()) => name,
        _ => {
            let idx = m
                .children(parent)
                .iter()
                .position(|c| *c == id)
                .unwrap_or(0);
            format!("#{idx}")
        }
    }
}

pub fn qualified_path(ws: &Workspace, r: NodeRef) -> String {
    let model = ws.model(r.model).map(|m| m.name.as_str()).unwrap_or("?");
    format!("{}:{}", model, node_path(ws, r))
}

pub fn context_path(ws: &Workspace, ctx: ContextId) -> String {
    match ctx {
        ContextId::Global => "global".to_string(),
        ContextId::Decl(r) => qualified_path(ws, r),
    }
}

pub fn payload_text(ws: &Workspace, payload: &Payload) -> String {
    match payload {
        Payload::None => "-".into(),
        Payload::Str(s) => format!("{s:?}"),
        Payload::Num(n) => format!("num:{n}"),
        Payload::Op(op) => format!("op:{op}"),
        Payload::Static(true) => "static".into(),
        Payload::Static(false) => "instance".into(),
        Payload::Stub(t) => format!("stub:{}->{}", t.shape, qualified_path(ws, t.foreign)),
    }
}

fn write_tree(ws: &Workspace, m: &Model, id: NodeId, depth: usize, out: &mut String) {
    let Some(n) = m.get(id) else { return };
    let referee = n
        .referee
        .map(|d| node_path(ws, NodeRef::new(m.id, d)))
        .unwrap_or_else(|| "-".into());
    let _ = writeln!(
        out,
        "{depth}\t{}\t{}\t{}\t{}",
        n.kind,
        n.name.as_deref().unwrap_or("-"),
        payload_text(ws, &n.payload),
        referee
    );
    for c in &n.children {
        write_tree(ws, m, *c, depth + 1, out);
    }
}

/// Snapshot of one model: user tree, then library region, then stubs
/// (sorted, since at most one stub exists per foreign declaration).
pub fn model_snapshot(ws: &Workspace, model: &Model) -> String {
    let mut out = format!("model {} {}\n", model.name, model.dialect);
    write_tree(ws, model, model.root, 0, &mut out);
    for lib in &model.library {
        out.push_str("library\n");
        write_tree(ws, model, *lib, 0, &mut out);
    }
    let mut stubs: Vec<String> = model
        .stubs
        .iter()
        .map(|stub| {
            let mut block = String::from("stub\n");
            write_tree(ws, model, *stub, 0, &mut block);
            block
        })
        .collect();
    stubs.sort();
    stubs.into_iter().for_each(|b| out.push_str(&b));
    out
}

pub fn mapping_line(ws: &Workspace, m: &Mapping) -> String {
    format!(
        "mapping {} => {} @ {} [{:?}]",
        qualified_path(ws, m.source),
        qualified_path(ws, m.target),
        context_path(ws, m.scope),
        m.origin
    )
}

/// Snapshot of every model plus the mapping registry (sorted, so registration
/// order does not matter).
pub fn workspace_snapshot(ws: &Workspace) -> String {
    let mut out = String::new();
    for m in ws.models() {
        out.push_str(&model_snapshot(ws, m));
    }
    let mut lines: Vec<String> = ws.mappings().iter().map(|m| mapping_line(ws, m)).collect();
    lines.sort();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Recursive comparison of kinds, names, payloads and child order.
pub fn structurally_equal(a: &Model, an: NodeId, b: &Model, bn: NodeId) -> bool {
    match (a.get(an), b.get(bn)) {
        (Some(x), Some(y)) => {
            x.kind == y.kind
                && x.name == y.name
                && x.payload == y.payload
                && x.children.len() == y.children.len()
                && x.children
                    .iter()
                    .zip(&y.children)
                    .all(|(c, d)| structurally_equal(a, *c, b, *d))
        }
        _ => false,
    }
}
