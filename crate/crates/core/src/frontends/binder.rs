//! Name binding for freshly parsed models.
//!
//! Resolution is directed by the shape a reference expects. Lexical scopes
//! are searched outward from the reference, then the library region.

use std::collections::BTreeMap;

use super::UnboundName;
use crate::meta_model::{Model, NodeId, NodeKind, Shape};

pub(crate) fn bind(model: &mut Model, hints: &BTreeMap<NodeId, String>) -> Vec<UnboundName> {
    let refs: Vec<NodeId> = model
        .subtree(model.root)
        .into_iter()
        .filter(|id| model.kind(*id).is_some_and(NodeKind::is_reference))
        .collect();
    let (invocations, plain): (Vec<NodeId>, Vec<NodeId>) = refs
        .into_iter()
        .partition(|id| model.kind(*id) == Some(NodeKind::MethodInvocation));
    let mut unbound = Vec::new();
    // Receivers are plain references, so bind those first.
    for id in plain.into_iter().chain(invocations) {
        let node = model.get(id).expect("listed above");
        let name = node.name.clone().unwrap_or_default();
        let found = match node.kind {
            NodeKind::MethodInvocation => resolve_method(model, id, &name),
            NodeKind::VariableAccess => match hints.get(&id) {
                Some(q) => {
                    find_class(model, q).and_then(|c| member(model, c, &name, Shape::Variable))
                }
                None => resolve_lexical(model, id, &name, Shape::Variable),
            },
            NodeKind::TypeReference => resolve_type(model, id, &name),
            _ => resolve_lexical(model, id, &name, Shape::Callable),
        };
        match found {
            Some(d) => model.set_referee(id, Some(d)).expect("node exists"),
            None => unbound.push(UnboundName { node: id, name }),
        }
    }
    unbound
}

fn named(model: &Model, id: NodeId, name: &str, shape: Shape) -> bool {
    model
        .get(id)
        .is_some_and(|n| n.kind.shape() == Some(shape) && n.name.as_deref() == Some(name))
}

fn member(model: &Model, owner: NodeId, name: &str, shape: Shape) -> Option<NodeId> {
    model
        .children(owner)
        .iter()
        .copied()
        .find(|c| named(model, *c, name, shape))
}

fn is_callable(kind: NodeKind) -> bool {
    matches!(
        kind,
        NodeKind::Method | NodeKind::SubProcedure | NodeKind::Function
    )
}

fn resolve_lexical(model: &Model, from: NodeId, name: &str, shape: Shape) -> Option<NodeId> {
    let mut cur = model.parent(from);
    while let Some(scope) = cur {
        let kind = model.kind(scope)?;
        let hit = if is_callable(kind) {
            model
                .subtree(scope)
                .into_iter()
                .skip(1)
                .find(|d| named(model, *d, name, shape))
        } else if kind == NodeKind::Project {
            member(model, scope, name, shape).or_else(|| {
                model
                    .children(scope)
                    .iter()
                    .find_map(|c| member(model, *c, name, shape))
            })
        } else {
            member(model, scope, name, shape)
        };
        if hit.is_some() {
            return hit;
        }
        cur = model.parent(scope);
    }
    model
        .library()
        .iter()
        .copied()
        .find(|l| named(model, *l, name, shape))
}

/// A user class anywhere in the tree, else a library class or type.
fn find_class(model: &Model, name: &str) -> Option<NodeId> {
    model
        .subtree(model.root)
        .into_iter()
        .find(|id| {
            model
                .get(*id)
                .is_some_and(|n| n.kind == NodeKind::Class && n.name.as_deref() == Some(name))
        })
        .or_else(|| {
            model
                .library()
                .iter()
                .copied()
                .find(|l| named(model, *l, name, Shape::Type))
        })
}

fn resolve_type(model: &Model, from: NodeId, name: &str) -> Option<NodeId> {
    resolve_lexical(model, from, name, Shape::Type).or_else(|| find_class(model, name))
}

fn enclosing_class(model: &Model, mut id: NodeId) -> Option<NodeId> {
    while let Some(p) = model.parent(id) {
        if model.kind(p) == Some(NodeKind::Class) {
            return Some(p);
        }
        id = p;
    }
    None
}

/// Class named by the declared type of a variable.
fn class_of_variable(model: &Model, var: NodeId) -> Option<NodeId> {
    model.children(var).iter().find_map(|c| {
        let n = model.get(*c)?;
        if n.kind != NodeKind::TypeReference {
            return None;
        }
        let t = n.referee?;
        (model.kind(t) == Some(NodeKind::Class)).then_some(t)
    })
}

fn resolve_method(model: &Model, id: NodeId, name: &str) -> Option<NodeId> {
    let receiver = model.children(id).first().copied();
    let owner = receiver.and_then(|r| {
        let n = model.get(r)?;
        match n.kind {
            NodeKind::ThisReceiver => enclosing_class(model, id),
            NodeKind::TypeReference => n
                .referee
                .filter(|t| model.kind(*t) == Some(NodeKind::Class)),
            NodeKind::VariableAccess => n.referee.and_then(|v| class_of_variable(model, v)),
            _ => None,
        }
    });
    if let Some(owner) = owner {
        return member(model, owner, name, Shape::Callable);
    }
    // Receiver type unknown: accept a unique method of that name.
    let candidates: Vec<NodeId> = model
        .subtree(model.root)
        .into_iter()
        .chain(model.library().iter().flat_map(|l| model.subtree(*l)))
        .filter(|d| named(model, *d, name, Shape::Callable))
        .filter(|d| model.parent(*d).and_then(|p| model.kind(p)) == Some(NodeKind::Class))
        .collect();
    match candidates.as_slice() {
        [only] => Some(*only),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use crate::frontends::{parse, parse_source};
    use crate::meta_model::{Dialect, NodeKind};

    fn referee_name(
        model: &crate::meta_model::Model,
        kind: NodeKind,
        name: &str,
    ) -> Option<String> {
        let n = model
            .nodes()
            .find(|n| n.kind == kind && n.name.as_deref() == Some(name))?;
        model.get(n.referee?)?.name.clone()
    }

    #[test]
    fn proc_locals_shadow_globals_and_library_is_last() {
        let p = parse_source(
            "src",
            "Dim x As String\nSub s(x As Integer)\nCall MsgBox(x)\nEnd Sub\n",
        )
        .unwrap();
        assert!(p.unbound.is_empty());
        let access = p
            .model
            .nodes()
            .find(|n| n.kind == NodeKind::VariableAccess)
            .unwrap();
        let decl = p.model.get(access.referee.unwrap()).unwrap();
        assert_eq!(decl.kind, NodeKind::Parameter);
        let call = p
            .model
            .nodes()
            .find(|n| n.kind == NodeKind::FunctionInvocation)
            .unwrap();
        assert!(p.model.in_library(call.referee.unwrap()));
    }

    #[test]
    fn routines_of_other_modules_are_visible() {
        let p = parse_source(
            "src",
            "Module A\nSub f()\nCall g()\nEnd Sub\nEnd Module\nModule B\nSub g()\nEnd Sub\nEnd Module\n",
        )
        .unwrap();
        assert!(p.unbound.is_empty());
    }

    #[test]
    fn method_receivers() {
        let p = parse(
            Dialect::MiniOO,
            "oo",
            "class A { static int n; B b; void f() { this.g(); A.h(); b.k(); Logger.log(A.n); } void g() {} static void h() {} }\nclass B { void k() {} }",
        )
        .unwrap();
        assert!(p.unbound.is_empty(), "{:?}", p.unbound);
        assert_eq!(
            referee_name(&p.model, NodeKind::MethodInvocation, "k").as_deref(),
            Some("k")
        );
        assert_eq!(
            referee_name(&p.model, NodeKind::VariableAccess, "n").as_deref(),
            Some("n")
        );
    }

    #[test]
    fn unknown_names_are_reported_not_fatal() {
        let p = parse_source("src", "Sub s()\nCall Foo()\nEnd Sub\n").unwrap();
        assert_eq!(p.unbound.len(), 1);
        assert_eq!(p.unbound[0].name, "Foo");
    }
}
