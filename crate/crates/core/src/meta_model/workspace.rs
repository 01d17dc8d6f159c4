use super::{
    AsgNode, ContextId, MetaError, Model, ModelId, NodeId, NodeKind, NodeRef, Payload, Shape,
    StubTarget,
};
use crate::rules::{Mapping, MappingId, MappingOrigin, RuleError};

/// Inverse operations recorded while a directive runs. Each entry holds a
/// before-image; replaying them newest-first restores the prior state.
#[derive(Debug, Clone, PartialEq)]
pub enum UndoEntry {
    Node {
        model: ModelId,
        id: NodeId,
        before: Option<AsgNode>,
    },
    NextId {
        model: ModelId,
        before: u32,
    },
    Library {
        model: ModelId,
        before: Vec<NodeId>,
    },
    Stubs {
        model: ModelId,
        before: Vec<NodeId>,
    },
    MappingPushed {
        next_before: u64,
    },
}

/// All models of a migration session plus the mapping registry.
///
/// Every mutation goes through this type so that it can be journaled while a
/// directive is running.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    models: Vec<Model>,
    mappings: Vec<Mapping>,
    next_mapping: u64,
    journal: Vec<UndoEntry>,
    recording: bool,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_model(&mut self, mut model: Model) -> ModelId {
        let id = ModelId(self.models.len() as u32);
        model.id = id;
        self.models.push(model);
        id
    }

    pub fn models(&self) -> impl Iterator<Item = &Model> {
        self.models.iter()
    }

    pub fn model(&self, id: ModelId) -> Result<&Model, MetaError> {
        self.models
            .get(id.0 as usize)
            .ok_or(MetaError::UnknownModel(id))
    }

    fn model_mut(&mut self, id: ModelId) -> Result<&mut Model, MetaError> {
        self.models
            .get_mut(id.0 as usize)
            .ok_or(MetaError::UnknownModel(id))
    }

    pub fn model_by_name(&self, name: &str) -> Option<&Model> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn node(&self, r: NodeRef) -> Result<&AsgNode, MetaError> {
        self.model(r.model)?
            .get(r.node)
            .ok_or(MetaError::UnknownNode(r))
    }

    pub fn get(&self, r: NodeRef) -> Option<&AsgNode> {
        self.node(r).ok()
    }

    pub fn exists(&self, r: NodeRef) -> bool {
        self.get(r).is_some()
    }

    pub fn kind(&self, r: NodeRef) -> Option<NodeKind> {
        self.get(r).map(|n| n.kind)
    }

    pub fn children(&self, r: NodeRef) -> Vec<NodeRef> {
        self.get(r)
            .map(|n| {
                n.children
                    .iter()
                    .map(|c| NodeRef::new(r.model, *c))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn parent(&self, r: NodeRef) -> Option<NodeRef> {
        self.get(r)
            .and_then(|n| n.parent)
            .map(|p| NodeRef::new(r.model, p))
    }

    pub fn is_declaration(&self, r: NodeRef) -> bool {
        self.kind(r).is_some_and(NodeKind::is_declaration)
    }

    pub fn root(&self, model: ModelId) -> Result<NodeRef, MetaError> {
        Ok(NodeRef::new(model, self.model(model)?.root))
    }

    /// Shape of a declaration, looking through stub payloads.
    pub fn shape_of(&self, r: NodeRef) -> Option<Shape> {
        let n = self.get(r)?;
        match &n.payload {
            Payload::Stub(t) => Some(t.shape),
            _ => n.kind.shape(),
        }
    }

    /// Enclosing declarations innermost-first (the node itself when it is a
    /// declaration), ending with the model root and then the global root.
    pub fn context_chain(&self, r: NodeRef) -> Result<Vec<ContextId>, MetaError> {
        let model = self.model(r.model)?;
        model.node(r.node)?;
        let mut chain = Vec::new();
        let mut cur = Some(r.node);
        while let Some(id) = cur {
            let n = model.node(id)?;
            if n.kind.is_declaration() && id != model.root {
                chain.push(ContextId::Decl(NodeRef::new(r.model, id)));
            }
            cur = n.parent;
        }
        chain.push(ContextId::Decl(NodeRef::new(r.model, model.root)));
        chain.push(ContextId::Global);
        Ok(chain)
    }

    pub fn context_exists(&self, ctx: ContextId) -> bool {
        match ctx {
            ContextId::Global => true,
            ContextId::Decl(r) => self.is_declaration(r),
        }
    }

    /// Innermost declaration context enclosing `r` (itself if a declaration).
    pub fn nearest_context(&self, r: NodeRef) -> Result<ContextId, MetaError> {
        Ok(self.context_chain(r)?[0])
    }

    // ---- journal ----------------------------------------------------------

    pub fn start_recording(&mut self) -> usize {
        self.recording = true;
        self.journal.len()
    }

    pub fn stop_recording(&mut self) {
        self.recording = false;
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    /// Removes and returns every entry recorded since `mark`.
    pub fn take_journal(&mut self, mark: usize) -> Vec<UndoEntry> {
        self.journal.split_off(mark.min(self.journal.len()))
    }

    /// Replays inverse entries newest-first.
    pub fn undo(&mut self, entries: Vec<UndoEntry>) {
        let was = self.recording;
        self.recording = false;
        for entry in entries.into_iter().rev() {
            match entry {
                UndoEntry::Node { model, id, before } => {
                    let m = &mut self.models[model.0 as usize];
                    match before {
                        Some(node) => m.put(node),
                        None => {
                            m.take(id);
                        }
                    }
                }
                UndoEntry::NextId { model, before } => {
                    self.models[model.0 as usize].next_id = before;
                }
                UndoEntry::Library { model, before } => {
                    self.models[model.0 as usize].library = before;
                }
                UndoEntry::Stubs { model, before } => {
                    self.models[model.0 as usize].stubs = before;
                }
                UndoEntry::MappingPushed { next_before } => {
                    self.mappings.pop();
                    self.next_mapping = next_before;
                }
            }
        }
        self.recording = was;
    }

    fn record_node(&mut self, model: ModelId, id: NodeId) {
        if self.recording {
            let before = self.models[model.0 as usize].get(id).cloned();
            self.journal.push(UndoEntry::Node { model, id, before });
        }
    }

    fn record_next_id(&mut self, model: ModelId) {
        if self.recording {
            let before = self.models[model.0 as usize].next_id;
            self.journal.push(UndoEntry::NextId { model, before });
        }
    }

    // ---- mutations ----------------------------------------------------------

    pub fn add_node(
        &mut self,
        parent: NodeRef,
        kind: NodeKind,
        name: Option<String>,
        payload: Payload,
    ) -> Result<NodeRef, MetaError> {
        let len = self.model(parent.model)?.children(parent.node).len();
        self.insert_node(parent, len, kind, name, payload)
    }

    pub fn insert_node(
        &mut self,
        parent: NodeRef,
        index: usize,
        kind: NodeKind,
        name: Option<String>,
        payload: Payload,
    ) -> Result<NodeRef, MetaError> {
        let m = self.model(parent.model)?;
        if !m.contains(parent.node) {
            return Err(MetaError::UnknownParent(parent.node));
        }
        let fresh = NodeId(m.next_id);
        self.record_next_id(parent.model);
        self.record_node(parent.model, parent.node);
        self.record_node(parent.model, fresh);
        let id =
            self.model_mut(parent.model)?
                .insert_node(parent.node, index, kind, name, payload)?;
        debug_assert_eq!(id, fresh);
        Ok(NodeRef::new(parent.model, id))
    }

    /// Applies `f` to the node after recording its before-image.
    pub fn edit_node(&mut self, r: NodeRef, f: impl FnOnce(&mut AsgNode)) -> Result<(), MetaError> {
        self.node(r)?;
        self.record_node(r.model, r.node);
        let node = self
            .model_mut(r.model)?
            .node_mut(r.node)
            .ok_or(MetaError::UnknownNode(r))?;
        f(node);
        Ok(())
    }

    pub fn set_name(&mut self, r: NodeRef, name: Option<String>) -> Result<(), MetaError> {
        self.edit_node(r, |n| n.name = name)
    }

    pub fn set_payload(&mut self, r: NodeRef, payload: Payload) -> Result<(), MetaError> {
        self.edit_node(r, |n| n.payload = payload)
    }

    pub fn set_origin(&mut self, r: NodeRef, origin: Option<NodeRef>) -> Result<(), MetaError> {
        self.edit_node(r, |n| n.origin = origin)
    }

    /// Binds a reference to a declaration (or stub) of its own model.
    pub fn set_referee(&mut self, r: NodeRef, referee: Option<NodeId>) -> Result<(), MetaError> {
        let n = self.node(r)?;
        if !n.kind.is_reference() {
            return Err(MetaError::NotAReference(r));
        }
        if let Some(d) = referee {
            let ok = self
                .model(r.model)?
                .get(d)
                .is_some_and(|d| d.kind.is_declaration());
            if !ok {
                return Err(MetaError::BadReferee {
                    model: r.model,
                    referee: d,
                });
            }
        }
        self.edit_node(r, |n| n.referee = referee)
    }

    /// Detaches `r` from its parent and deletes its whole subtree.
    pub fn remove_subtree(&mut self, r: NodeRef) -> Result<(), MetaError> {
        let ids = self.model(r.model)?.subtree(r.node);
        if ids.is_empty() {
            return Err(MetaError::UnknownNode(r));
        }
        if let Some(p) = self.parent(r) {
            self.edit_node(p, |n| n.children.retain(|c| *c != r.node))?;
        }
        for id in ids {
            self.record_node(r.model, id);
            self.model_mut(r.model)?.take(id);
        }
        Ok(())
    }

    /// Moves `r` (with its subtree) under `new_parent` at `index`.
    pub fn move_node(
        &mut self,
        r: NodeRef,
        new_parent: NodeRef,
        index: usize,
    ) -> Result<(), MetaError> {
        if r.model != new_parent.model {
            return Err(MetaError::UnknownParent(new_parent.node));
        }
        let m = self.model(r.model)?;
        m.node(r.node)?;
        if !m.contains(new_parent.node) {
            return Err(MetaError::UnknownParent(new_parent.node));
        }
        if m.is_ancestor_or_self(r.node, new_parent.node) {
            return Err(MetaError::Cycle(r));
        }
        if let Some(p) = self.parent(r) {
            self.edit_node(p, |n| n.children.retain(|c| *c != r.node))?;
        }
        self.edit_node(new_parent, |n| {
            let i = index.min(n.children.len());
            n.children.insert(i, r.node);
        })?;
        self.edit_node(r, |n| n.parent = Some(new_parent.node))
    }

    /// Structural copy of the subtree at `source` under `target_parent`. Kinds,
    /// names, payloads and child order are preserved; referees are left empty
    /// and each copied node remembers its origin.
    pub fn deep_copy(
        &mut self,
        source: NodeRef,
        target_parent: NodeRef,
    ) -> Result<NodeRef, MetaError> {
        let src = self.node(source)?.clone();
        let copy = self.add_node(
            target_parent,
            src.kind,
            src.name.clone(),
            src.payload.clone(),
        )?;
        self.set_origin(copy, Some(source))?;
        for child in src.children {
            self.deep_copy(NodeRef::new(source.model, child), copy)?;
        }
        Ok(copy)
    }

    /// Returns the stub in `host` leading to `foreign`, creating it if needed.
    pub fn make_stub(
        &mut self,
        host: ModelId,
        foreign: NodeRef,
        shape: Shape,
    ) -> Result<NodeRef, MetaError> {
        let f = self.node(foreign)?;
        if !f.kind.is_declaration() {
            return Err(MetaError::ForeignNotDeclaration(foreign));
        }
        if foreign.model == host {
            return Err(MetaError::StubInSameModel(foreign));
        }
        if let Some(existing) = self.stub_for(host, foreign) {
            return Ok(existing);
        }
        let name = f.name.clone();
        let payload = Payload::Stub(StubTarget { foreign, shape });
        let m = self.model(host)?;
        let before = m.stubs.clone();
        let fresh = NodeId(m.next_id);
        if self.recording {
            self.journal.push(UndoEntry::Stubs {
                model: host,
                before,
            });
        }
        self.record_next_id(host);
        self.record_node(host, fresh);
        let id = self.model_mut(host)?.add_stub_raw(name, payload);
        Ok(NodeRef::new(host, id))
    }

    pub fn stub_for(&self, host: ModelId, foreign: NodeRef) -> Option<NodeRef> {
        let m = self.model(host).ok()?;
        m.stubs
            .iter()
            .copied()
            .find(|s| {
                m.get(*s)
                    .and_then(|n| n.payload.stub())
                    .is_some_and(|t| t.foreign == foreign)
            })
            .map(|s| NodeRef::new(host, s))
    }

    pub fn stubs(&self, model: ModelId) -> Vec<NodeRef> {
        self.model(model)
            .map(|m| m.stubs.iter().map(|s| NodeRef::new(model, *s)).collect())
            .unwrap_or_default()
    }

    pub fn remove_stub(&mut self, stub: NodeRef) -> Result<(), MetaError> {
        let m = self.model(stub.model)?;
        if !m.stubs.contains(&stub.node) {
            return Err(MetaError::UnknownNode(stub));
        }
        let before = m.stubs.clone();
        if self.recording {
            self.journal.push(UndoEntry::Stubs {
                model: stub.model,
                before,
            });
        }
        self.record_node(stub.model, stub.node);
        let m = self.model_mut(stub.model)?;
        m.stubs.retain(|s| *s != stub.node);
        m.take(stub.node);
        Ok(())
    }

    /// Adds a library tree root during a directive (e.g. wrapper skeletons
    /// that must live outside the user tree).
    pub fn add_library_root(
        &mut self,
        model: ModelId,
        kind: NodeKind,
        name: Option<String>,
        payload: Payload,
    ) -> Result<NodeRef, MetaError> {
        let m = self.model(model)?;
        let before = m.library.clone();
        let fresh = NodeId(m.next_id);
        if self.recording {
            self.journal.push(UndoEntry::Library { model, before });
        }
        self.record_next_id(model);
        self.record_node(model, fresh);
        let id = self.model_mut(model)?.add_library_root(kind, name, payload);
        Ok(NodeRef::new(model, id))
    }

    /// Reference nodes of `model` bound to `decl`.
    pub fn incoming(&self, decl: NodeRef) -> Vec<NodeRef> {
        self.model(decl.model)
            .map(|m| {
                m.incoming(decl.node)
                    .into_iter()
                    .map(|id| NodeRef::new(decl.model, id))
                    .collect()
            })
            .unwrap_or_default()
    }

    // ---- mappings -----------------------------------------------------------

    pub fn mappings(&self) -> &[Mapping] {
        &self.mappings
    }

    pub fn mapping(&self, id: MappingId) -> Option<&Mapping> {
        self.mappings.iter().find(|m| m.id == id)
    }

    /// Stores a mapping at its scope. Registering the same (source, target,
    /// scope) triple again returns the existing id.
    pub fn register_mapping(
        &mut self,
        source: NodeRef,
        target: NodeRef,
        scope: ContextId,
        origin: MappingOrigin,
    ) -> Result<MappingId, RuleError> {
        for decl in [source, target] {
            let n = self.node(decl)?;
            if !n.kind.is_declaration() {
                return Err(RuleError::NotDeclaration(decl));
            }
        }
        match scope {
            ContextId::Decl(s) if s.model == target.model => {
                if !self.is_declaration(s) {
                    return Err(RuleError::UnknownContext(scope));
                }
            }
            _ => return Err(RuleError::ScopeModelMismatch { scope, target }),
        }
        if let Some(m) = self
            .mappings
            .iter()
            .find(|m| m.source == source && m.target == target && m.scope == scope)
        {
            return Ok(m.id);
        }
        let id = MappingId(self.next_mapping);
        if self.recording {
            self.journal.push(UndoEntry::MappingPushed {
                next_before: self.next_mapping,
            });
        }
        self.next_mapping += 1;
        self.mappings.push(Mapping {
            id,
            source,
            target,
            scope,
            origin,
        });
        Ok(id)
    }
}
