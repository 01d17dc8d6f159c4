use super::dialect::DialectSpec;
use super::{Violation, ViolationReason};
use crate::meta_model::{Model, NodeKind};

/// Every node of the user tree that would not compile in the model's
/// dialect. An empty result means the model is exportable.
pub fn validate(model: &Model) -> Vec<Violation> {
    let spec = DialectSpec::get(model.dialect);
    let mut out = Vec::new();
    let mut push = |node, reason| out.push(Violation { node, reason });
    let mut seen_package = false;
    for id in model.subtree(model.root) {
        let n = model.get(id).expect("subtree lists live nodes");
        let parent_kind = n.parent.and_then(|p| model.kind(p));
        let misplaced = match parent_kind {
            Some(pk) => !spec.allows_child(pk, n.kind),
            None => id != model.root,
        };
        // Classes after a package would be read back into that package.
        let after_package =
            parent_kind == Some(NodeKind::Project) && n.kind == NodeKind::Class && seen_package;
        if parent_kind == Some(NodeKind::Project) && n.kind == NodeKind::Package {
            seen_package = spec.dialect == crate::meta_model::Dialect::MiniOO;
        }
        let bad_invocation = n.kind == NodeKind::MethodInvocation && n.children.is_empty();
        if !spec.is_legal_kind(n.kind) || misplaced || after_package || bad_invocation {
            push(id, ViolationReason::IllegalKindForDialect);
        }
        if let Some(op) = n.payload.operator() {
            if !spec.is_legal_operator(op) {
                push(id, ViolationReason::IllegalOperator);
            }
        }
        if n.kind.is_reference() {
            match n.referee.and_then(|r| model.get(r)) {
                None => push(id, ViolationReason::UnresolvedReference),
                Some(d) if d.kind == NodeKind::StubDeclaration => {
                    push(id, ViolationReason::ReferenceToStub)
                }
                Some(_) => {}
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontends::{parse, parse_source};
    use crate::meta_model::{Dialect, Payload};

    #[test]
    fn function_invocation_is_illegal_in_oo() {
        let mut p = parse(Dialect::MiniOO, "oo", "class A { void f() { } }").unwrap();
        let f = p
            .model
            .nodes()
            .find(|n| n.kind == NodeKind::Method)
            .unwrap()
            .id;
        let stmt = p
            .model
            .add_node(f, NodeKind::ExpressionStatement, None, Payload::None)
            .unwrap();
        let call = p
            .model
            .add_node(
                stmt,
                NodeKind::FunctionInvocation,
                Some("f".into()),
                Payload::None,
            )
            .unwrap();
        p.model.set_referee(call, Some(f)).unwrap();
        let v = validate(&p.model);
        assert_eq!(
            v,
            vec![Violation {
                node: call,
                reason: ViolationReason::IllegalKindForDialect
            }]
        );
    }

    #[test]
    fn ampersand_is_illegal_in_oo() {
        let mut p = parse(Dialect::MiniOO, "oo", "class A { void f() { } }").unwrap();
        let f = p
            .model
            .nodes()
            .find(|n| n.kind == NodeKind::Method)
            .unwrap()
            .id;
        let ret = p
            .model
            .add_node(f, NodeKind::Return, None, Payload::None)
            .unwrap();
        let op = p
            .model
            .add_node(
                ret,
                NodeKind::BinaryOperation,
                None,
                Payload::Op("&".into()),
            )
            .unwrap();
        for s in ["a", "b"] {
            p.model
                .add_node(op, NodeKind::StringLiteral, None, Payload::Str(s.into()))
                .unwrap();
        }
        let reasons: Vec<ViolationReason> =
            validate(&p.model).into_iter().map(|v| v.reason).collect();
        assert_eq!(reasons, vec![ViolationReason::IllegalOperator]);
    }

    #[test]
    fn legal_skeletons_are_clean() {
        let p = parse(
            Dialect::MiniOO,
            "oo",
            "package MyPackage;\nclass MyDestination {\n  static void log(String msg) {\n  }\n}\n",
        )
        .unwrap();
        assert!(validate(&p.model).is_empty());
        let p = parse_source(
            "src",
            "Dim name As String\nSub showName()\nCall MsgBox(\"Ms \" & name)\nEnd Sub\n",
        )
        .unwrap();
        assert!(validate(&p.model).is_empty());
    }

    #[test]
    fn unknown_types_are_unresolved() {
        let p = parse(Dialect::MiniOO, "oo", "class A { void f(Missing m) { } }").unwrap();
        let reasons: Vec<ViolationReason> =
            validate(&p.model).into_iter().map(|v| v.reason).collect();
        assert_eq!(reasons, vec![ViolationReason::UnresolvedReference]);
    }
}
