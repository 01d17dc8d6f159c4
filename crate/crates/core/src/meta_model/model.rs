use std::collections::BTreeMap;

use super::{AsgNode, Dialect, MetaError, ModelId, NodeId, NodeKind, Payload};

/// One application's graph: a user tree rooted at a `Project` declaration plus
/// a library region holding definition-less catalog declarations and stubs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub id: ModelId,
    /// Human-facing alias, also the name of the project root.
    pub name: String,
    pub dialect: Dialect,
    pub root: NodeId,
    pub(crate) nodes: BTreeMap<NodeId, AsgNode>,
    /// Roots of library trees (primitive types, routines, library classes).
    pub(crate) library: Vec<NodeId>,
    pub(crate) stubs: Vec<NodeId>,
    pub(crate) next_id: u32,
}

impl Model {
    pub fn new(name: impl Into<String>, dialect: Dialect) -> Self {
        let name = name.into();
        let root = NodeId(0);
        let mut nodes = BTreeMap::new();
        nodes.insert(
            root,
            AsgNode::new(root, NodeKind::Project, Some(name.clone()), Payload::None),
        );
        Self {
            id: ModelId(u32::MAX),
            name,
            dialect,
            root,
            nodes,
            library: Vec::new(),
            stubs: Vec::new(),
            next_id: 1,
        }
    }

    pub fn get(&self, id: NodeId) -> Option<&AsgNode> {
        self.nodes.get(&id)
    }

    pub fn node(&self, id: NodeId) -> Result<&AsgNode, MetaError> {
        self.nodes
            .get(&id)
            .ok_or(MetaError::UnknownNode(super::NodeRef::new(self.id, id)))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &AsgNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn library(&self) -> &[NodeId] {
        &self.library
    }

    pub fn stubs(&self) -> &[NodeId] {
        &self.stubs
    }

    pub fn kind(&self, id: NodeId) -> Option<NodeKind> {
        self.get(id).map(|n| n.kind)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        self.get(id).map(|n| n.children.as_slice()).unwrap_or(&[])
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.get(id).and_then(|n| n.parent)
    }

    /// Topmost ancestor (the project root for user nodes, a library root otherwise).
    pub fn top(&self, mut id: NodeId) -> NodeId {
        while let Some(p) = self.parent(id) {
            id = p;
        }
        id
    }

    pub fn in_user_tree(&self, id: NodeId) -> bool {
        self.contains(id) && self.top(id) == self.root
    }

    pub fn in_library(&self, id: NodeId) -> bool {
        self.contains(id) && self.library.contains(&self.top(id))
    }

    pub fn is_ancestor_or_self(&self, ancestor: NodeId, mut id: NodeId) -> bool {
        loop {
            if id == ancestor {
                return true;
            }
            match self.parent(id) {
                Some(p) => id = p,
                None => return false,
            }
        }
    }

    /// Pre-order ids of the subtree rooted at `id`.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if let Some(node) = self.get(n) {
                out.push(n);
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    /// Declaration children of `id` named `name`.
    pub fn find_child(&self, id: NodeId, name: &str) -> Option<NodeId> {
        self.children(id).iter().copied().find(|c| {
            self.get(*c)
                .is_some_and(|n| n.kind.is_declaration() && n.name.as_deref() == Some(name))
        })
    }

    pub fn find_library(&self, name: &str) -> Option<NodeId> {
        self.library
            .iter()
            .copied()
            .find(|c| self.get(*c).and_then(|n| n.name.as_deref()) == Some(name))
    }

    /// Referencing nodes whose referee is `decl`.
    pub fn incoming(&self, decl: NodeId) -> Vec<NodeId> {
        self.nodes
            .values()
            .filter(|n| n.referee == Some(decl))
            .map(|n| n.id)
            .collect()
    }

    fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Appends a new node under `parent`. Used by frontends while building a
    /// model; the workspace wraps the same operation with journaling.
    pub fn add_node(
        &mut self,
        parent: NodeId,
        kind: NodeKind,
        name: Option<String>,
        payload: Payload,
    ) -> Result<NodeId, MetaError> {
        let len = self.children(parent).len();
        self.insert_node(parent, len, kind, name, payload)
    }

    pub fn insert_node(
        &mut self,
        parent: NodeId,
        index: usize,
        kind: NodeKind,
        name: Option<String>,
        payload: Payload,
    ) -> Result<NodeId, MetaError> {
        if !self.contains(parent) {
            return Err(MetaError::UnknownParent(parent));
        }
        let id = self.fresh();
        let mut node = AsgNode::new(id, kind, name, payload);
        node.parent = Some(parent);
        self.nodes.insert(id, node);
        let p = self.nodes.get_mut(&parent).expect("checked above");
        let index = index.min(p.children.len());
        p.children.insert(index, id);
        Ok(id)
    }

    /// Adds a parentless node to the library region.
    pub fn add_library_root(
        &mut self,
        kind: NodeKind,
        name: Option<String>,
        payload: Payload,
    ) -> NodeId {
        let id = self.fresh();
        self.nodes.insert(id, AsgNode::new(id, kind, name, payload));
        self.library.push(id);
        id
    }

    pub(crate) fn add_stub_raw(&mut self, name: Option<String>, payload: Payload) -> NodeId {
        let id = self.fresh();
        self.nodes.insert(
            id,
            AsgNode::new(id, NodeKind::StubDeclaration, name, payload),
        );
        self.stubs.push(id);
        id
    }

    pub fn set_referee(&mut self, id: NodeId, referee: Option<NodeId>) -> Result<(), MetaError> {
        let node = self
            .nodes
            .get_mut(&id)
            .ok_or(MetaError::UnknownNode(super::NodeRef::new(self.id, id)))?;
        node.referee = referee;
        Ok(())
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut AsgNode> {
        self.nodes.get_mut(&id)
    }

    pub(crate) fn put(&mut self, node: AsgNode) {
        self.nodes.insert(node.id, node);
    }

    pub(crate) fn take(&mut self, id: NodeId) -> Option<AsgNode> {
        self.nodes.remove(&id)
    }

    /// Full-scan integrity check: parent/child edges agree, every node other
    /// than roots has a parent, and referees resolve inside this model.
    pub fn check_integrity(&self) -> Result<(), String> {
        for node in self.nodes.values() {
            for c in &node.children {
                let child = self
                    .get(*c)
                    .ok_or_else(|| format!("{:?} lists missing child {:?}", node.id, c))?;
                if child.parent != Some(node.id) {
                    return Err(format!("{:?} has inconsistent parent", c));
                }
            }
            match node.parent {
                Some(p) => {
                    let parent = self
                        .get(p)
                        .ok_or_else(|| format!("{:?} has missing parent", node.id))?;
                    if parent.children.iter().filter(|c| **c == node.id).count() != 1 {
                        return Err(format!("{:?} not listed exactly once by parent", node.id));
                    }
                }
                None => {
                    let is_root = node.id == self.root
                        || self.library.contains(&node.id)
                        || self.stubs.contains(&node.id);
                    if !is_root {
                        return Err(format!("{:?} is orphaned", node.id));
                    }
                }
            }
            if let Some(r) = node.referee {
                if !node.kind.is_reference() {
                    return Err(format!(
                        "{:?} is not a reference but has a referee",
                        node.id
                    ));
                }
                match self.get(r) {
                    Some(d) if d.kind.is_declaration() => {}
                    _ => {
                        return Err(format!(
                            "{:?} referee {:?} is not a local declaration",
                            node.id, r
                        ))
                    }
                }
            }
        }
        // cycles: every node must reach a root within len steps
        for node in self.nodes.values() {
            let mut cur = node.id;
            let mut steps = 0;
            while let Some(p) = self.parent(cur) {
                cur = p;
                steps += 1;
                if steps > self.nodes.len() {
                    return Err(format!("cycle through {:?}", node.id));
                }
            }
        }
        Ok(())
    }
}
