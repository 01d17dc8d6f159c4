mod common;

use common::showname;
use migra_core::builtin_rules::{MemberRule, RenameAdaptToStaticReceiver, SimpleRename};
use migra_core::meta_model::{ContextId, NodeRef, Workspace};
use migra_core::rules::{
    mappings_for, stub_of_reference, AdaptEnv, Adapter, AdaptiveRule, Mapping, MappingOrigin, Rule,
    RuleDescriptor, RuleError, RuleFamily,
};
use proptest::prelude::*;

#[test]
fn class_installation_shadows_project_installation() {
    let mut s = showname();
    let class = s.path("oo:MyPackage.MyDestination");
    s.engine
        .install(
            Rule::productive(MemberRule::copy_as_static_method(true)),
            ContextId::Decl(class),
        )
        .unwrap();
    let src = s.path("src:Main.showName");
    let rules = s.engine.applicable_rules(src, class).unwrap();
    assert_eq!(rules[0].0, "CopyAsStaticMethod(overwrite=true)");
    assert_eq!(rules[1].0, "CopyAsStaticMethod");
    assert_eq!(rules[2].0, "AnyCopy");

    let r = s.produce("src:Main.showName", "oo:MyPackage.MyDestination");
    assert!(r
        .log
        .iter()
        .any(|l| l.starts_with("apply CopyAsStaticMethod(overwrite=true): src:Main.showName ")));
}

#[test]
fn depth_beats_recency() {
    let mut s = showname();
    let class = s.path("oo:MyPackage.MyDestination");
    let root = s.oo_root();
    s.engine
        .install(
            Rule::productive(MemberRule::copy_as_static_method(true)),
            ContextId::Decl(class),
        )
        .unwrap();
    // Installed later, but at an outer context.
    s.engine
        .install(
            Rule::productive(MemberRule::copy_as_static_method(false)),
            ContextId::Decl(root),
        )
        .unwrap();
    let rules = s
        .engine
        .applicable_rules(s.path("src:Main.showName"), class)
        .unwrap();
    assert_eq!(rules[0].0, "CopyAsStaticMethod(overwrite=true)");
}

#[test]
fn rules_outside_the_chain_are_invisible() {
    let mut s = showname();
    let log = s.path("oo:MyPackage.MyDestination.log");
    s.engine
        .install(
            Rule::productive(MemberRule::copy_as_static_method(true)),
            ContextId::Decl(log),
        )
        .unwrap();
    let rules = s
        .engine
        .applicable_rules(
            s.path("src:Main.showName"),
            s.path("oo:MyPackage.MyDestination"),
        )
        .unwrap();
    assert!(rules
        .iter()
        .all(|(l, _)| l != "CopyAsStaticMethod(overwrite=true)"));
}

#[test]
fn installing_at_a_non_declaration_fails() {
    let mut s = showname();
    let statement = s.path("src:Main.showName.#0");
    let err = s
        .engine
        .install(
            Rule::adaptive(SimpleRename::new()),
            ContextId::Decl(statement),
        )
        .unwrap_err();
    assert!(matches!(
        err,
        migra_core::engine::EngineError::Rule(RuleError::UnknownContext(_))
    ));
}

/// Positive for any stub-bound reference; records nothing, changes nothing.
struct AlwaysPositive {
    desc: RuleDescriptor,
}

impl AdaptiveRule for AlwaysPositive {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(
        &self,
        _env: &AdaptEnv<'_>,
        _reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> bool {
        mapping.is_some()
    }

    fn apply(
        &self,
        _cx: &mut dyn Adapter,
        reference: NodeRef,
        _mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError> {
        Err(RuleError::Failed(format!("should not run on {reference}")))
    }
}

#[test]
fn first_positive_adaptive_rule_fires_and_only_it() {
    let mut s = showname();
    let root = s.oo_root();
    let class = s.path("oo:MyPackage.MyDestination");
    // Outer and older: would fail if it ran.
    s.engine
        .install(
            Rule::adaptive(AlwaysPositive {
                desc: RuleDescriptor::new("AlwaysPositive", RuleFamily::Adaptive),
            }),
            ContextId::Global,
        )
        .unwrap();
    // Innermost but negative for a function invocation.
    s.engine
        .install(Rule::adaptive(SimpleRename::new()), ContextId::Decl(class))
        .unwrap();
    s.engine
        .install(
            Rule::adaptive(RenameAdaptToStaticReceiver::new()),
            ContextId::Decl(root),
        )
        .unwrap();
    s.produce("src:Main.showName", "oo:MyPackage.MyDestination");

    let call = s.path("oo:MyPackage.MyDestination.showName.#1.#0");
    let log = s.path("oo:MyPackage.MyDestination.log");
    let msgbox = s.path("src:@lib.MsgBox");
    let mapping = Mapping {
        id: migra_core::rules::MappingId(99),
        source: msgbox,
        target: log,
        scope: ContextId::Decl(class),
        origin: MappingOrigin::UserDirective,
    };
    let env = AdaptEnv {
        ws: &s.engine.ws,
        chooser_available: false,
    };
    // Oracle: walk the visible installations and keep the first whose
    // condition holds.
    let visible = s
        .engine
        .rules
        .visible(&s.engine.ws, call, RuleFamily::Adaptive)
        .unwrap();
    let expected = visible
        .iter()
        .find(|i| match &i.rule {
            Rule::Adaptive(r) => r.condition(&env, call, Some(&mapping)),
            Rule::Productive(_) => false,
        })
        .map(|i| i.id);
    let found = s
        .engine
        .rules
        .lookup_adaptive(&env, call, &mapping)
        .unwrap()
        .map(|i| i.id);
    assert_eq!(found, expected);
    assert_eq!(
        s.engine.rules.get(found.unwrap()).unwrap().rule.name(),
        "RenameAdaptToStaticReceiver"
    );

    let r = s.map(
        "src:@lib.MsgBox",
        "oo:MyPackage.MyDestination.log",
        "oo:MyPackage.MyDestination",
    );
    let adapt_lines: Vec<&String> = r.log.iter().filter(|l| l.starts_with("adapt ")).collect();
    assert_eq!(adapt_lines.len(), 1);
    assert!(adapt_lines[0].starts_with("adapt RenameAdaptToStaticReceiver:"));
}

/// Number of proper ancestors, computed by walking parents.
fn depth(ws: &Workspace, ctx: ContextId) -> usize {
    match ctx {
        ContextId::Global => 0,
        ContextId::Decl(r) => {
            let mut d = 1;
            let mut cur = r;
            while let Some(p) = ws.parent(cur) {
                d += 1;
                cur = p;
            }
            d
        }
    }
}

const SCOPES: &[&str] = &[
    "oo:",
    "oo:MyPackage",
    "oo:MyPackage.MyDestination",
    "oo:MyPackage.MyDestination.showName",
    "oo:MyPackage.MyDestination.log",
];

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn mappings_are_ordered_most_concrete_first(scopes in prop::collection::vec(0..SCOPES.len(), 1..6)) {
        let mut s = showname();
        s.produce("src:Main.showName", "oo:MyPackage.MyDestination");
        let call = s.path("oo:MyPackage.MyDestination.showName.#1.#0");
        let msgbox = s.path("src:@lib.MsgBox");
        let targets = [s.path("oo:MyPackage.MyDestination.log"), s.path("oo:@lib.Logger.log")];
        for (i, sc) in scopes.iter().enumerate() {
            let scope = ContextId::Decl(s.path(SCOPES[*sc]));
            s.engine.ws.register_mapping(msgbox, targets[i % 2], scope, MappingOrigin::UserDirective).unwrap();
        }
        prop_assert!(stub_of_reference(&s.engine.ws, call).is_some());
        let got = mappings_for(&s.engine.ws, call).unwrap();

        // Oracle: keep scopes enclosing the call (log's scope does not),
        // deeper first, newer first.
        let ws = &s.engine.ws;
        let m = ws.model(call.model).unwrap();
        let mut expected: Vec<Mapping> = ws
            .mappings()
            .iter()
            .filter(|mp| mp.source == msgbox)
            .filter(|mp| mp.scope.node().is_some_and(|n| m.is_ancestor_or_self(n.node, call.node)))
            .cloned()
            .collect();
        expected.sort_by(|a, b| depth(ws, b.scope).cmp(&depth(ws, a.scope)).then(b.id.cmp(&a.id)));
        prop_assert_eq!(got, expected);
    }
}
