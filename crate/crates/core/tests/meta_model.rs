mod common;

use common::showname_models;
use migra_core::meta_model::{
    model_snapshot, node_path, structurally_equal, workspace_snapshot, ContextId, MetaError,
    NodeKind, Payload, Shape,
};
use migra_core::rules::{MappingOrigin, RuleError};

#[test]
fn parsed_show_name_has_the_expected_shape() {
    let s = showname_models();
    let ws = &s.engine.ws;
    let module = s.path("src:Main");
    let kinds: Vec<NodeKind> = ws
        .children(module)
        .iter()
        .map(|c| ws.kind(*c).unwrap())
        .collect();
    assert_eq!(
        kinds,
        vec![NodeKind::VariableDeclaration, NodeKind::SubProcedure]
    );

    let call = s.path("src:Main.showName.#0.#0");
    assert_eq!(ws.kind(call), Some(NodeKind::FunctionInvocation));
    assert_eq!(
        ws.node(call).unwrap().referee,
        Some(s.path("src:@lib.MsgBox").node)
    );
    let op = s.path("src:Main.showName.#0.#0.#0");
    assert_eq!(ws.node(op).unwrap().payload, Payload::Op("&".into()));
    let access = s.path("src:Main.showName.#0.#0.#0.#1");
    assert_eq!(
        ws.node(access).unwrap().referee,
        Some(s.path("src:Main.name").node)
    );
    assert_eq!(ws.incoming(s.path("src:Main.name")), vec![access]);
}

#[test]
fn context_chain_runs_innermost_to_global() {
    let s = showname_models();
    let call = s.path("src:Main.showName.#0.#0");
    let chain = s.engine.ws.context_chain(call).unwrap();
    assert_eq!(
        chain,
        vec![
            ContextId::Decl(s.path("src:Main.showName")),
            ContextId::Decl(s.path("src:Main")),
            ContextId::Decl(s.path("src:")),
            ContextId::Global,
        ]
    );
}

#[test]
fn stubs_are_unique_per_foreign_declaration() {
    let mut s = showname_models();
    let msgbox = s.path("src:@lib.MsgBox");
    let a = s
        .engine
        .ws
        .make_stub(s.oo, msgbox, Shape::Callable)
        .unwrap();
    let b = s
        .engine
        .ws
        .make_stub(s.oo, msgbox, Shape::Callable)
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(s.engine.ws.stubs(s.oo), vec![a]);
    assert_eq!(node_path(&s.engine.ws, a), "@stub(src:@lib.MsgBox)");
    let stub = s.engine.ws.node(a).unwrap();
    assert_eq!(stub.kind, NodeKind::StubDeclaration);
    assert_eq!(stub.payload.stub().unwrap().shape, Shape::Callable);
}

#[test]
fn stubs_need_a_foreign_declaration() {
    let mut s = showname_models();
    let literal = s.path("src:Main.showName.#0.#0.#0.#0");
    assert!(matches!(
        s.engine.ws.make_stub(s.oo, literal, Shape::Variable),
        Err(MetaError::ForeignNotDeclaration(_))
    ));
    let name = s.path("src:Main.name");
    assert!(matches!(
        s.engine.ws.make_stub(s.src, name, Shape::Variable),
        Err(MetaError::StubInSameModel(_))
    ));
}

#[test]
fn mapping_registration_checks_its_arguments() {
    let mut s = showname_models();
    let msgbox = s.path("src:@lib.MsgBox");
    let log = s.path("oo:MyPackage.MyDestination.log");
    let class = ContextId::Decl(s.path("oo:MyPackage.MyDestination"));
    let literal = s.path("src:Main.showName.#0.#0.#0.#0");
    let ws = &mut s.engine.ws;

    let id = ws
        .register_mapping(msgbox, log, class, MappingOrigin::UserDirective)
        .unwrap();
    assert_eq!(
        ws.register_mapping(msgbox, log, class, MappingOrigin::UserDirective)
            .unwrap(),
        id
    );
    assert_eq!(ws.mappings().len(), 1);
    assert!(matches!(
        ws.register_mapping(literal, log, class, MappingOrigin::UserDirective),
        Err(RuleError::NotDeclaration(_))
    ));
    assert!(matches!(
        ws.register_mapping(msgbox, log, ContextId::Global, MappingOrigin::UserDirective),
        Err(RuleError::ScopeModelMismatch { .. })
    ));
    let source_scope = ContextId::Decl(s.path("src:Main"));
    assert!(matches!(
        s.engine
            .ws
            .register_mapping(msgbox, log, source_scope, MappingOrigin::UserDirective),
        Err(RuleError::ScopeModelMismatch { .. })
    ));
}

#[test]
fn journal_undo_restores_every_kind_of_edit() {
    let mut s = showname_models();
    let before = workspace_snapshot(&s.engine.ws);
    let class = s.path("oo:MyPackage.MyDestination");
    let log = s.path("oo:MyPackage.MyDestination.log");
    let show = s.path("src:Main.showName");
    let msgbox = s.path("src:@lib.MsgBox");
    let ws = &mut s.engine.ws;

    let mark = ws.start_recording();
    let copy = ws.deep_copy(show, class).unwrap();
    let stub = ws.make_stub(class.model, msgbox, Shape::Callable).unwrap();
    let call = ws.children(ws.children(copy)[0])[0];
    ws.set_referee(call, Some(stub.node)).unwrap();
    ws.set_name(copy, Some("renamed".into())).unwrap();
    ws.set_payload(copy, Payload::Static(true)).unwrap();
    ws.move_node(copy, class, 0).unwrap();
    ws.remove_subtree(log).unwrap();
    ws.register_mapping(
        msgbox,
        copy,
        ContextId::Decl(class),
        MappingOrigin::ProduceAuto,
    )
    .unwrap();
    ws.add_library_root(
        class.model,
        NodeKind::Class,
        Some("Extra".into()),
        Payload::None,
    )
    .unwrap();
    assert_ne!(workspace_snapshot(ws), before);

    let journal = ws.take_journal(mark);
    ws.undo(journal);
    ws.stop_recording();
    assert_eq!(workspace_snapshot(ws), before);
    for m in ws.models() {
        m.check_integrity().unwrap();
    }
}

#[test]
fn deep_copy_is_structurally_equal_and_unbound() {
    let mut s = showname_models();
    let show = s.path("src:Main.showName");
    let class = s.path("oo:MyPackage.MyDestination");
    let copy = s.engine.ws.deep_copy(show, class).unwrap();
    let ws = &s.engine.ws;
    assert!(structurally_equal(
        ws.model(s.src).unwrap(),
        show.node,
        ws.model(s.oo).unwrap(),
        copy.node
    ));
    let m = ws.model(s.oo).unwrap();
    for id in m.subtree(copy.node) {
        let n = m.get(id).unwrap();
        assert!(n.origin.is_some());
        assert!(n.referee.is_none());
    }
}

#[test]
fn moving_under_a_descendant_is_rejected() {
    let mut s = showname_models();
    let module = s.path("src:Main");
    let show = s.path("src:Main.showName");
    let snapshot = model_snapshot(&s.engine.ws, s.engine.ws.model(s.src).unwrap());
    assert!(matches!(
        s.engine.ws.move_node(module, show, 0),
        Err(MetaError::Cycle(_))
    ));
    assert_eq!(
        model_snapshot(&s.engine.ws, s.engine.ws.model(s.src).unwrap()),
        snapshot
    );
}
