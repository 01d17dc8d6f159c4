use serde::{Deserialize, Serialize};

use super::RuleError;
use crate::meta_model::{ContextId, NodeRef, StubTarget, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MappingId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MappingOrigin {
    UserDirective,
    ProduceAuto,
}

/// Scoped semantic equivalence: within `scope`, uses of `source` stand for
/// `target`. Ids grow with registration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    pub id: MappingId,
    pub source: NodeRef,
    pub target: NodeRef,
    pub scope: ContextId,
    pub origin: MappingOrigin,
}

/// The stub a reference currently points to, with its target.
pub fn stub_of_reference(ws: &Workspace, reference: NodeRef) -> Option<(NodeRef, StubTarget)> {
    let node = ws.get(reference)?;
    let stub = NodeRef::new(reference.model, node.referee?);
    let target = ws.get(stub)?.payload.stub()?;
    Some((stub, target))
}

/// Every mapping that may adapt a stub-bound reference: same source as the
/// stub's foreign declaration, scope on the reference's context chain.
/// Deepest scope first; within one scope the newest mapping first.
pub fn mappings_for(ws: &Workspace, reference: NodeRef) -> Result<Vec<Mapping>, RuleError> {
    let (_, target) =
        stub_of_reference(ws, reference).ok_or(RuleError::NotStubReference(reference))?;
    let chain = ws.context_chain(reference)?;
    let mut found: Vec<(usize, &Mapping)> = ws
        .mappings()
        .iter()
        .filter(|m| m.source == target.foreign && ws.exists(m.target))
        .filter_map(|m| {
            chain
                .iter()
                .position(|c| *c == m.scope)
                .map(|depth| (depth, m))
        })
        .collect();
    found.sort_by(|(da, a), (db, b)| da.cmp(db).then(b.id.cmp(&a.id)));
    Ok(found.into_iter().map(|(_, m)| m.clone()).collect())
}
