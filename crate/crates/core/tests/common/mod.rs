#![allow(dead_code)]

pub mod gen;
pub mod props;

use std::collections::BTreeMap;

use migra_core::builtin_rules::instantiate;
use migra_core::engine::{resolve_path, DirectiveResult, Engine};
use migra_core::meta_model::{ContextId, Dialect, ModelId, NodeRef};
use migra_core::rules::{InstallationId, LookupMode};

pub const SHOWNAME_SOURCE: &str = include_str!("../../fixtures/showname/source.mproc");
pub const SHOWNAME_TARGET: &str = include_str!("../../fixtures/showname/target.moo");
pub const SHOWNAME_GOLDEN: &str = include_str!("../../fixtures/showname/golden.moo");

pub struct Scenario {
    pub engine: Engine,
    pub src: ModelId,
    pub oo: ModelId,
}

impl Scenario {
    pub fn path(&self, p: &str) -> NodeRef {
        resolve_path(&self.engine.ws, p).unwrap_or_else(|| panic!("no node at {p}"))
    }

    pub fn oo_root(&self) -> NodeRef {
        self.engine.ws.root(self.oo).unwrap()
    }

    pub fn install(
        &mut self,
        name: &str,
        params: &[(&str, &str)],
        ctx: ContextId,
    ) -> InstallationId {
        let params: BTreeMap<String, String> = params
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        self.engine
            .install(instantiate(name, &params).unwrap(), ctx)
            .unwrap()
    }

    pub fn produce(&mut self, source: &str, target: &str) -> DirectiveResult {
        let (s, t) = (self.path(source), self.path(target));
        self.engine
            .produce(s, t, LookupMode::Automatic, None)
            .unwrap()
    }

    pub fn map(&mut self, source: &str, target: &str, scope: &str) -> DirectiveResult {
        let (s, t, c) = (self.path(source), self.path(target), self.path(scope));
        self.engine.map(s, t, ContextId::Decl(c), None).unwrap()
    }

    pub fn stub_count(&self) -> usize {
        self.engine.ws.stubs(self.oo).len()
    }

    pub fn auto_mappings(&self) -> usize {
        self.engine
            .ws
            .mappings()
            .iter()
            .filter(|m| m.origin == migra_core::rules::MappingOrigin::ProduceAuto)
            .count()
    }
}

/// Source and target models loaded, no rules installed.
pub fn showname_models() -> Scenario {
    let mut engine = Engine::new();
    let src = engine
        .load(Dialect::MiniProc, "src", SHOWNAME_SOURCE)
        .unwrap();
    let oo = engine.load(Dialect::MiniOO, "oo", SHOWNAME_TARGET).unwrap();
    Scenario { engine, src, oo }
}

/// The worked example's rule installation: AnyCopy globally, the others at
/// the target project root.
pub fn showname() -> Scenario {
    let mut s = showname_models();
    let root = ContextId::Decl(s.oo_root());
    s.install("AnyCopy", &[], ContextId::Global);
    s.install("CopyAsStaticMethod", &[], root);
    s.install("CopyReplaceOperator", &[("OtD", "&"), ("OtR", "+")], root);
    s.install("RenameAdaptToStaticReceiver", &[], root);
    s
}

/// Completes the worked example after the first produce: MsgBox to log, the
/// String type table entry, then `name` produced as an attribute.
pub fn finish_showname(s: &mut Scenario) {
    let root = ContextId::Decl(s.oo_root());
    s.map(
        "src:@lib.MsgBox",
        "oo:MyPackage.MyDestination.log",
        "oo:MyPackage.MyDestination",
    );
    s.map("src:@lib.String", "oo:@lib.String", "oo:");
    s.install("GlobalToAttribute", &[], root);
    s.install("SimpleRename", &[], root);
    s.produce("src:Main.name", "oo:MyPackage.MyDestination");
}
