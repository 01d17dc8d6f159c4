//! Heterogeneous unified abstract semantic graph.
//!
//! Every dialect is represented with the same node vocabulary. A node is
//! exactly one of declaration, reference or grammatical; references point at
//! declarations of their own model, and stubs are the only bridge to another
//! model.

mod model;
mod snapshot;
mod workspace;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::Model;
pub use snapshot::{
    context_path, mapping_line, model_snapshot, node_path, payload_text, qualified_path,
    structurally_equal, workspace_snapshot,
};
pub use workspace::{UndoEntry, Workspace};

/// Identifier of a model inside a [`Workspace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelId(pub u32);

/// Node identifier, unique only within its model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Cross-model address of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub model: ModelId,
    pub node: NodeId,
}

impl NodeRef {
    pub fn new(model: ModelId, node: NodeId) -> Self {
        Self { model, node }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}#{}", self.model.0, self.node.0)
    }
}

/// A scope for rule installation and mapping validity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContextId {
    /// The root above every model.
    Global,
    /// A declaration node.
    Decl(NodeRef),
}

impl ContextId {
    pub fn model(&self) -> Option<ModelId> {
        match self {
            ContextId::Global => None,
            ContextId::Decl(r) => Some(r.model),
        }
    }

    pub fn node(&self) -> Option<NodeRef> {
        match self {
            ContextId::Global => None,
            ContextId::Decl(r) => Some(*r),
        }
    }
}

impl fmt::Display for ContextId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextId::Global => f.write_str("global"),
            ContextId::Decl(r) => r.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dialect {
    MiniProc,
    MiniOO,
    MiniScript,
}

impl Dialect {
    pub const ALL: [Dialect; 3] = [Dialect::MiniProc, Dialect::MiniOO, Dialect::MiniScript];

    pub fn name(self) -> &'static str {
        match self {
            Dialect::MiniProc => "MiniProc",
            Dialect::MiniOO => "MiniOO",
            Dialect::MiniScript => "MiniScript",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Dialect::MiniProc => "mproc",
            Dialect::MiniOO => "moo",
            Dialect::MiniScript => "mscript",
        }
    }

    pub fn from_name(name: &str) -> Option<Dialect> {
        Dialect::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(name) || d.extension() == name)
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three families of the node taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Declaration,
    Reference,
    Grammatical,
}

/// What a declaration looks like to the references using it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shape {
    Callable,
    Variable,
    Type,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Callable => "callable",
            Shape::Variable => "variable",
            Shape::Type => "type",
        })
    }
}

macro_rules! node_kinds {
    ($($kind:ident => $cat:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum NodeKind {
            $($kind),*
        }

        impl NodeKind {
            pub const ALL: &'static [NodeKind] = &[$(NodeKind::$kind),*];

            pub fn category(self) -> Category {
                match self {
                    $(NodeKind::$kind => Category::$cat),*
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $(NodeKind::$kind => stringify!($kind)),*
                }
            }
        }
    };
}

node_kinds! {
    Project => Declaration,
    Package => Declaration,
    Module => Declaration,
    Class => Declaration,
    Method => Declaration,
    SubProcedure => Declaration,
    Function => Declaration,
    VariableDeclaration => Declaration,
    AttributeDeclaration => Declaration,
    Parameter => Declaration,
    PrimitiveTypeDeclaration => Declaration,
    LibraryRoutineDeclaration => Declaration,
    StubDeclaration => Declaration,
    MethodInvocation => Reference,
    FunctionInvocation => Reference,
    VariableAccess => Reference,
    TypeReference => Reference,
    ExpressionStatement => Grammatical,
    BinaryOperation => Grammatical,
    StringLiteral => Grammatical,
    NumberLiteral => Grammatical,
    IfStatement => Grammatical,
    ElseIfClause => Grammatical,
    Block => Grammatical,
    Assignment => Grammatical,
    Return => Grammatical,
    ThisReceiver => Grammatical,
}

impl NodeKind {
    pub fn is_declaration(self) -> bool {
        self.category() == Category::Declaration
    }

    pub fn is_reference(self) -> bool {
        self.category() == Category::Reference
    }

    /// Shape of a declaration kind. Stubs carry their shape in the payload.
    pub fn shape(self) -> Option<Shape> {
        use NodeKind::*;
        match self {
            Method | SubProcedure | Function | LibraryRoutineDeclaration => Some(Shape::Callable),
            VariableDeclaration | AttributeDeclaration | Parameter => Some(Shape::Variable),
            PrimitiveTypeDeclaration | Class | Module => Some(Shape::Type),
            _ => None,
        }
    }

    /// Shape a reference kind expects of its referee.
    pub fn expected_shape(self) -> Option<Shape> {
        use NodeKind::*;
        match self {
            MethodInvocation | FunctionInvocation => Some(Shape::Callable),
            VariableAccess => Some(Shape::Variable),
            TypeReference => Some(Shape::Type),
            _ => None,
        }
    }

    pub fn from_name(name: &str) -> Option<NodeKind> {
        NodeKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a stub leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StubTarget {
    pub foreign: NodeRef,
    pub shape: Shape,
}

/// Kind-specific scalar data.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Payload {
    #[default]
    None,
    /// String literal value, unescaped.
    Str(String),
    /// Number literal as written.
    Num(String),
    /// Binary operator symbol.
    Op(String),
    /// Member flag for methods, attributes and library routines.
    Static(bool),
    Stub(StubTarget),
}

impl Payload {
    pub fn is_static(&self) -> bool {
        matches!(self, Payload::Static(true))
    }

    pub fn operator(&self) -> Option<&str> {
        match self {
            Payload::Op(op) => Some(op),
            _ => None,
        }
    }

    pub fn stub(&self) -> Option<StubTarget> {
        match self {
            Payload::Stub(t) => Some(*t),
            _ => None,
        }
    }
}

/// One node of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsgNode {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Declared name for declarations; the identifier as written for references.
    pub name: Option<String>,
    pub payload: Payload,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    /// Same-model declaration this reference resolves to.
    pub referee: Option<NodeId>,
    /// Source node this node was produced from, if any.
    pub origin: Option<NodeRef>,
}

impl AsgNode {
    pub fn new(id: NodeId, kind: NodeKind, name: Option<String>, payload: Payload) -> Self {
        Self {
            id,
            kind,
            name,
            payload,
            children: Vec::new(),
            parent: None,
            referee: None,
            origin: None,
        }
    }

    pub fn name_or_empty(&self) -> &str {
        self.name.as_deref().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaError {
    #[error("unknown model {0:?}")]
    UnknownModel(ModelId),
    #[error("unknown parent node {0:?}")]
    UnknownParent(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeRef),
    #[error("node {0} is not a declaration")]
    ForeignNotDeclaration(NodeRef),
    #[error("stub target {0} lives in the host model")]
    StubInSameModel(NodeRef),
    #[error("node {0} is not a reference")]
    NotAReference(NodeRef),
    #[error("referee {referee:?} is not a declaration of model {model:?}")]
    BadReferee { model: ModelId, referee: NodeId },
    #[error("moving {0} would create a cycle")]
    Cycle(NodeRef),
}
