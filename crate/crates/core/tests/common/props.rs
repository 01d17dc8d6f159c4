use std::collections::BTreeMap;

use super::gen::{Program, Step, MAP_SOURCES, MAP_TARGETS, OO_TARGET, SCOPES};
use migra_core::builtin_rules::instantiate;
use migra_core::engine::{resolve_path, Directive, DirectiveResult, Engine, EngineError};
use migra_core::meta_model::{
    workspace_snapshot, ContextId, Dialect, NodeKind, NodeRef, Payload, Workspace,
};
use migra_core::rules::{
    AdaptEnv, Adapter, AdaptiveRule, LookupMode, Mapping, Migrator, ProductiveRule, Rule,
    RuleDescriptor, RuleError, RuleFamily,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

fn install(e: &mut Engine, name: &str, params: &[(&str, &str)], ctx: ContextId) {
    let params: BTreeMap<String, String> = params
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    e.install(instantiate(name, &params).unwrap(), ctx).unwrap();
}

/// Source program plus the two-class MiniOO target, with one rule set that
/// covers every construct the generator emits.
pub fn session(p: &Program) -> Engine {
    let mut e = Engine::new();
    e.load(Dialect::MiniProc, "src", &p.text()).unwrap();
    let oo = e.load(Dialect::MiniOO, "oo", OO_TARGET).unwrap();
    let root = ContextId::Decl(e.ws.root(oo).unwrap());
    install(&mut e, "AnyCopy", &[], ContextId::Global);
    for r in [
        "CopyAsStaticMethod",
        "FunctionToMethod",
        "GlobalToAttribute",
        "SimpleRename",
        "RenameAdaptToStaticReceiver",
    ] {
        install(&mut e, r, &[], root);
    }
    install(
        &mut e,
        "CopyReplaceOperator",
        &[("OtD", "&"), ("OtR", "+")],
        root,
    );
    install(
        &mut e,
        "CopyReplaceOperator",
        &[("OtD", "="), ("OtR", "==")],
        root,
    );
    e
}

pub fn path(e: &Engine, p: &str) -> NodeRef {
    resolve_path(&e.ws, p).unwrap_or_else(|| panic!("no node at {p}"))
}

pub fn declarations(p: &Program) -> Vec<String> {
    let mut out: Vec<String> = (0..p.routines.len())
        .map(|i| format!("src:Main.{}", p.routine_name(i)))
        .collect();
    out.extend((0..p.globals.len()).map(|i| format!("src:Main.g{i}")));
    out
}

pub fn run(e: &mut Engine, p: &Program, step: &Step) -> Result<DirectiveResult, EngineError> {
    match *step {
        Step::Produce { decl, class } => {
            let decls = declarations(p);
            let source = path(e, &decls[decl % decls.len()]);
            let target = path(e, ["oo:P.A", "oo:P.B"][class % 2]);
            e.produce(source, target, LookupMode::Automatic, None)
        }
        Step::Map { lib, target, scope } => {
            let lib = lib % MAP_SOURCES.len();
            let targets = MAP_TARGETS[lib];
            let (s, t) = (
                path(e, MAP_SOURCES[lib]),
                path(e, targets[target % targets.len()]),
            );
            let scope = ContextId::Decl(path(e, SCOPES[scope % SCOPES.len()]));
            e.map(s, t, scope, None)
        }
        Step::Rollback => e.rollback_last().map(|_| DirectiveResult::default()),
    }
}

fn expected_failure(err: &EngineError) -> bool {
    matches!(
        err,
        EngineError::RuleApplicationFailed {
            error: RuleError::DuplicateMember { .. },
            ..
        }
    )
}

/// Every stub still has a reference pointing at it and every model is
/// internally consistent.
pub fn census(ws: &Workspace) -> Result<(), TestCaseError> {
    for m in ws.models() {
        m.check_integrity()
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        for stub in ws.stubs(m.id) {
            prop_assert!(
                !ws.incoming(stub).is_empty(),
                "stub without incoming references survived"
            );
        }
    }
    Ok(())
}

pub fn rollback_restores_snapshots(p: &Program, steps: &[Step]) -> Result<(), TestCaseError> {
    let mut e = session(p);
    let initial = workspace_snapshot(&e.ws);
    let mut before_each: Vec<String> = Vec::new();
    for step in steps {
        let before = workspace_snapshot(&e.ws);
        match step {
            Step::Rollback => match before_each.pop() {
                Some(expected) => {
                    e.rollback_last().unwrap();
                    prop_assert_eq!(workspace_snapshot(&e.ws), expected);
                }
                None => prop_assert!(matches!(
                    e.rollback_last(),
                    Err(EngineError::NothingToRollBack)
                )),
            },
            _ => match run(&mut e, p, step) {
                Ok(_) => before_each.push(before),
                Err(err) => {
                    prop_assert!(expected_failure(&err), "unexpected error {:?}", err);
                    prop_assert_eq!(workspace_snapshot(&e.ws), before);
                }
            },
        }
        census(&e.ws)?;
    }
    while e.rollback_last().is_ok() {}
    prop_assert_eq!(workspace_snapshot(&e.ws), initial);
    Ok(())
}

/// Productive rule that edits the target and then fails.
struct FailingCopy {
    desc: RuleDescriptor,
    kind: NodeKind,
}

impl ProductiveRule for FailingCopy {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, ws: &Workspace, source: NodeRef, _target: NodeRef) -> bool {
        ws.kind(source) == Some(self.kind)
    }

    fn apply(
        &self,
        cx: &mut dyn Migrator,
        source: NodeRef,
        target: NodeRef,
    ) -> Result<NodeRef, RuleError> {
        let n = cx.workspace_mut().add_node(
            target,
            NodeKind::StringLiteral,
            None,
            Payload::Str("x".into()),
        )?;
        cx.workspace_mut().set_origin(n, Some(source))?;
        Err(RuleError::Failed("injected".into()))
    }
}

/// Adaptive rule that rewires the reference and then fails.
struct FailingAdapt {
    desc: RuleDescriptor,
}

impl AdaptiveRule for FailingAdapt {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, env: &AdaptEnv<'_>, reference: NodeRef, mapping: Option<&Mapping>) -> bool {
        mapping.is_some() && env.ws.kind(reference) == Some(NodeKind::FunctionInvocation)
    }

    fn apply(
        &self,
        cx: &mut dyn Adapter,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError> {
        let target = mapping.expect("condition").target;
        cx.workspace_mut().set_referee(reference, None)?;
        cx.workspace_mut()
            .set_name(reference, Some(format!("{target}")))?;
        Err(RuleError::Failed("injected".into()))
    }
}

pub const INJECT_KINDS: &[NodeKind] = &[
    NodeKind::ExpressionStatement,
    NodeKind::FunctionInvocation,
    NodeKind::BinaryOperation,
    NodeKind::StringLiteral,
    NodeKind::VariableAccess,
    NodeKind::IfStatement,
    NodeKind::Parameter,
    NodeKind::TypeReference,
];

fn subtree_has(e: &Engine, root: NodeRef, kind: NodeKind) -> bool {
    let m = e.ws.model(root.model).unwrap();
    m.subtree(root.node)
        .into_iter()
        .any(|n| m.get(n).map(|n| n.kind) == Some(kind))
}

/// A productive rule failing at a node of `kind` aborts the whole produce.
pub fn failing_productive_rule(
    p: &Program,
    prefix: &[Step],
    decl: usize,
    kind: NodeKind,
) -> Result<(), TestCaseError> {
    let mut e = session(p);
    for step in prefix {
        let _ = run(&mut e, p, step);
    }
    let class = path(&e, "oo:P.A");
    e.install(
        Rule::productive(FailingCopy {
            desc: RuleDescriptor::new("FailingCopy", RuleFamily::Productive),
            kind,
        }),
        ContextId::Decl(class),
    )
    .unwrap();
    let decls = declarations(p);
    let source = path(&e, &decls[decl % decls.len()]);
    let before = workspace_snapshot(&e.ws);
    let depth = e.transactions().len();
    match e.produce(source, class, LookupMode::Automatic, None) {
        Err(EngineError::RuleApplicationFailed { rule, error }) => {
            if rule == "FailingCopy" {
                prop_assert!(subtree_has(&e, source, kind));
                prop_assert_eq!(error, RuleError::Failed("injected".into()));
            } else {
                let duplicate = matches!(error, RuleError::DuplicateMember { .. });
                prop_assert!(duplicate);
            }
            prop_assert_eq!(workspace_snapshot(&e.ws), before);
            prop_assert_eq!(e.transactions().len(), depth);
        }
        Ok(_) => prop_assert!(!subtree_has(&e, source, kind)),
        Err(other) => prop_assert!(false, "unexpected {:?}", other),
    }
    Ok(())
}

/// An adaptive rule failing mid-map aborts the whole map.
pub fn failing_adaptive_rule(p: &Program, decl: usize, lib: usize) -> Result<(), TestCaseError> {
    let mut e = session(p);
    let decls = declarations(p);
    let source = path(&e, &decls[decl % decls.len()]);
    let class = path(&e, "oo:P.A");
    e.produce(source, class, LookupMode::Automatic, None)
        .unwrap();
    e.install(
        Rule::adaptive(FailingAdapt {
            desc: RuleDescriptor::new("FailingAdapt", RuleFamily::Adaptive),
        }),
        ContextId::Decl(class),
    )
    .unwrap();
    let before = workspace_snapshot(&e.ws);
    let (s, t) = (path(&e, MAP_SOURCES[lib]), path(&e, MAP_TARGETS[lib][0]));
    let waiting = e
        .unresolved_report(ContextId::Decl(class))
        .into_iter()
        .any(|row| row.foreign == s);
    match e.map(s, t, ContextId::Decl(class), None) {
        Err(EngineError::RuleApplicationFailed { rule, .. }) => {
            prop_assert!(waiting);
            prop_assert_eq!(rule, "FailingAdapt");
            prop_assert_eq!(workspace_snapshot(&e.ws), before);
        }
        Ok(r) => prop_assert!(!waiting || r.adapted.is_empty() && lib >= 4),
        Err(other) => prop_assert!(false, "unexpected {:?}", other),
    }
    Ok(())
}

/// Produce then map equals map then produce.
pub fn produce_and_map_commute(p: &Program, produce: Step, map: Step) -> Result<(), TestCaseError> {
    let mut retro = session(p);
    let a1 = run(&mut retro, p, &produce).is_ok();
    let a2 = run(&mut retro, p, &map).is_ok();

    let mut pro = session(p);
    let b1 = run(&mut pro, p, &map).is_ok();
    let b2 = run(&mut pro, p, &produce).is_ok();

    prop_assert_eq!((a1, a2), (b2, b1));
    prop_assert_eq!(workspace_snapshot(&retro.ws), workspace_snapshot(&pro.ws));
    Ok(())
}

/// Repeating every map on the stack adapts nothing and keeps the stubs.
pub fn maps_are_idempotent(p: &Program, steps: &[Step]) -> Result<(), TestCaseError> {
    let mut e = session(p);
    for step in steps {
        let _ = run(&mut e, p, step);
    }
    let maps: Vec<(NodeRef, NodeRef, ContextId)> = e
        .transactions()
        .iter()
        .filter_map(|t| match t.directive {
            Directive::Map {
                source,
                target,
                scope,
            } => Some((source, target, scope)),
            Directive::Produce { .. } => None,
        })
        .collect();
    for (s, t, scope) in maps {
        let stubs_before: usize = e.ws.models().map(|m| e.ws.stubs(m.id).len()).sum();
        let r = e.map(s, t, scope, None).unwrap();
        prop_assert!(r.adapted.is_empty());
        let stubs_after: usize = e.ws.models().map(|m| e.ws.stubs(m.id).len()).sum();
        prop_assert_eq!(stubs_before, stubs_after);
        census(&e.ws)?;
    }
    Ok(())
}

/// AnyCopy produces a node of any kind with its name.
pub fn any_copy_accepts(kind: NodeKind, name: &str) -> Result<(), TestCaseError> {
    let mut e = Engine::new();
    let src = e.load(Dialect::MiniProc, "src", "").unwrap();
    let oo = e.load(Dialect::MiniOO, "oo", "").unwrap();
    let src_root = e.ws.root(src).unwrap();
    let node =
        e.ws.add_node(src_root, kind, Some(name.to_string()), Payload::None)
            .unwrap();
    install(&mut e, "AnyCopy", &[], ContextId::Global);
    let r = e
        .produce(node, e.ws.root(oo).unwrap(), LookupMode::Automatic, None)
        .unwrap();
    let produced = e.ws.node(r.produced.unwrap()).unwrap();
    prop_assert_eq!(produced.kind, kind);
    prop_assert_eq!(produced.name.as_deref(), Some(name));
    Ok(())
}
