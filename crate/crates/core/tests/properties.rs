mod common;

use common::gen;
use common::gen::Step;
use common::props::{self, INJECT_KINDS};
use migra_core::meta_model::NodeKind;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn rollback_restores_snapshots(p in gen::program(), steps in prop::collection::vec(gen::step(), 1..8)) {
        props::rollback_restores_snapshots(&p, &steps)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn failing_productive_rule_leaves_state_unchanged(
        p in gen::program(),
        prefix in prop::collection::vec(gen::step(), 0..4),
        decl in 0..8usize,
        kind in prop::sample::select(INJECT_KINDS),
    ) {
        props::failing_productive_rule(&p, &prefix, decl, kind)?;
    }

    #[test]
    fn failing_adaptive_rule_leaves_state_unchanged(p in gen::program(), decl in 0..8usize, lib in 0..4usize) {
        props::failing_adaptive_rule(&p, decl, lib)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn produce_and_map_commute(
        p in gen::program(),
        decl in 0..8usize,
        class in 0..2usize,
        lib in 0..8usize,
        target in 0..2usize,
        scope in 0..3usize,
    ) {
        props::produce_and_map_commute(&p, Step::Produce { decl, class }, Step::Map { lib, target, scope })?;
    }

    #[test]
    fn maps_on_the_stack_are_idempotent(p in gen::program(), steps in prop::collection::vec(gen::step(), 1..8)) {
        props::maps_are_idempotent(&p, &steps)?;
    }

    #[test]
    fn any_copy_accepts_every_kind(kind in prop::sample::select(NodeKind::ALL), name in "[a-z]{1,6}") {
        prop_assume!(!matches!(kind, NodeKind::StubDeclaration | NodeKind::Project));
        props::any_copy_accepts(kind, &name)?;
    }
}
