use crate::frontends::dialect::{library_type, DialectSpec};
use crate::meta_model::{NodeKind, NodeRef, Payload, Workspace};
use crate::rules::{Migrator, ProductiveRule, RuleDescriptor, RuleError, RuleFamily};

/// Default rule: same kind, name and payload; children migrated by the engine.
#[derive(Debug, Clone)]
pub struct AnyCopy {
    desc: RuleDescriptor,
}

impl AnyCopy {
    pub fn new() -> Self {
        Self {
            desc: RuleDescriptor::new("AnyCopy", RuleFamily::Productive),
        }
    }
}

impl Default for AnyCopy {
    fn default() -> Self {
        Self::new()
    }
}

impl ProductiveRule for AnyCopy {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, _ws: &Workspace, _source: NodeRef, _target: NodeRef) -> bool {
        true
    }

    fn apply(
        &self,
        cx: &mut dyn Migrator,
        source: NodeRef,
        target: NodeRef,
    ) -> Result<NodeRef, RuleError> {
        let src = cx.workspace().node(source)?.clone();
        let ws = cx.workspace_mut();
        let copy = ws.add_node(target, src.kind, src.name, src.payload)?;
        ws.set_origin(copy, Some(source))?;
        cx.migrate_children(source, copy)?;
        Ok(copy)
    }
}

/// Binary operation whose operator `detect` is replaced by `replace`.
#[derive(Debug, Clone)]
pub struct CopyReplaceOperator {
    desc: RuleDescriptor,
    detect: String,
    replace: String,
}

impl CopyReplaceOperator {
    pub fn new(detect: &str, replace: &str) -> Self {
        Self {
            desc: RuleDescriptor::new("CopyReplaceOperator", RuleFamily::Productive)
                .with_param("OtD", detect)
                .with_param("OtR", replace),
            detect: detect.to_string(),
            replace: replace.to_string(),
        }
    }
}

impl ProductiveRule for CopyReplaceOperator {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, ws: &Workspace, source: NodeRef, _target: NodeRef) -> bool {
        ws.get(source).is_some_and(|n| {
            n.kind == NodeKind::BinaryOperation
                && n.payload.operator() == Some(self.detect.as_str())
        })
    }

    fn apply(
        &self,
        cx: &mut dyn Migrator,
        source: NodeRef,
        target: NodeRef,
    ) -> Result<NodeRef, RuleError> {
        let ws = cx.workspace_mut();
        let op = ws.add_node(
            target,
            NodeKind::BinaryOperation,
            None,
            Payload::Op(self.replace.clone()),
        )?;
        ws.set_origin(op, Some(source))?;
        cx.migrate_children(source, op)?;
        Ok(op)
    }
}

/// What a [`MemberRule`] accepts and creates.
#[derive(Debug, Clone, Copy)]
struct MemberShape {
    source: NodeKind,
    /// Required kind of the source's parent, if any.
    source_parent: Option<NodeKind>,
    targets: &'static [NodeKind],
    produced: NodeKind,
    payload: Option<bool>,
    void_return: bool,
}

/// Productive rules turning a procedural member into an object-oriented
/// one: same name, new kind, children migrated underneath.
#[derive(Debug, Clone)]
pub struct MemberRule {
    desc: RuleDescriptor,
    shape: MemberShape,
    overwrite: bool,
}

impl MemberRule {
    fn build(name: &str, shape: MemberShape, overwrite: bool) -> Self {
        let mut desc = RuleDescriptor::new(name, RuleFamily::Productive);
        if overwrite {
            desc = desc.with_param("overwrite", "true");
        }
        Self {
            desc,
            shape,
            overwrite,
        }
    }

    /// Sub-procedure into a class: static method returning void.
    pub fn copy_as_static_method(overwrite: bool) -> Self {
        Self::build(
            "CopyAsStaticMethod",
            MemberShape {
                source: NodeKind::SubProcedure,
                source_parent: None,
                targets: &[NodeKind::Class],
                produced: NodeKind::Method,
                payload: Some(true),
                void_return: true,
            },
            overwrite,
        )
    }

    /// Function into a class: static method keeping its return type.
    pub fn function_to_method(overwrite: bool) -> Self {
        Self::build(
            "FunctionToMethod",
            MemberShape {
                source: NodeKind::Function,
                source_parent: None,
                targets: &[NodeKind::Class],
                produced: NodeKind::Method,
                payload: Some(true),
                void_return: false,
            },
            overwrite,
        )
    }

    /// Module into a package or project: class of the same name.
    pub fn module_to_class(overwrite: bool) -> Self {
        Self::build(
            "ModuleToClass",
            MemberShape {
                source: NodeKind::Module,
                source_parent: None,
                targets: &[NodeKind::Package, NodeKind::Project],
                produced: NodeKind::Class,
                payload: None,
                void_return: false,
            },
            overwrite,
        )
    }

    /// Module-level variable into a class: static attribute.
    pub fn global_to_attribute(overwrite: bool) -> Self {
        Self::build(
            "GlobalToAttribute",
            MemberShape {
                source: NodeKind::VariableDeclaration,
                source_parent: Some(NodeKind::Module),
                targets: &[NodeKind::Class],
                produced: NodeKind::AttributeDeclaration,
                payload: Some(true),
                void_return: false,
            },
            overwrite,
        )
    }
}

impl ProductiveRule for MemberRule {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, ws: &Workspace, source: NodeRef, target: NodeRef) -> bool {
        let s = &self.shape;
        ws.kind(source) == Some(s.source)
            && s.source_parent
                .is_none_or(|pk| ws.parent(source).and_then(|p| ws.kind(p)) == Some(pk))
            && ws.kind(target).is_some_and(|k| s.targets.contains(&k))
    }

    fn apply(
        &self,
        cx: &mut dyn Migrator,
        source: NodeRef,
        target: NodeRef,
    ) -> Result<NodeRef, RuleError> {
        let name = cx.workspace().node(source)?.name.clone();
        let ws = cx.workspace_mut();
        if let Some(n) = &name {
            if let Some(existing) = ws.model(target.model)?.find_child(target.node, n) {
                if !self.overwrite {
                    return Err(RuleError::DuplicateMember { name: n.clone() });
                }
                ws.remove_subtree(NodeRef::new(target.model, existing))?;
            }
        }
        let payload = match self.shape.payload {
            Some(flag) => Payload::Static(flag),
            None => Payload::None,
        };
        let produced = ws.add_node(target, self.shape.produced, name, payload)?;
        ws.set_origin(produced, Some(source))?;
        if self.shape.void_return {
            let model = ws.model(target.model)?;
            let void = DialectSpec::get(model.dialect)
                .void_type
                .and_then(|v| library_type(model, v).map(|id| (v, id)));
            if let Some((v, id)) = void {
                let tref = ws.add_node(
                    produced,
                    NodeKind::TypeReference,
                    Some(v.to_string()),
                    Payload::None,
                )?;
                ws.set_referee(tref, Some(id))?;
            }
        }
        cx.migrate_children(source, produced)?;
        Ok(produced)
    }
}
