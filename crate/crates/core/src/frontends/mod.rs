//! Parsers, printers and per-dialect legality checks for the three
//! mini-dialects: MiniProc (procedural, line oriented), MiniOO (Java-like)
//! and MiniScript (TypeScript-like).

mod binder;
mod curly_syntax;
pub mod dialect;
mod lexer;
mod printer;
mod proc_syntax;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meta_model::{Dialect, Model, NodeId, NodeKind, Payload};

pub use dialect::{CatalogEntry, DialectSpec};
pub use printer::{print_model, print_node};
pub use validate::validate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationReason {
    IllegalKindForDialect,
    IllegalOperator,
    UnresolvedReference,
    ReferenceToStub,
}

impl fmt::Display for ViolationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A node that would not compile in its model's dialect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node: NodeId,
    pub reason: ViolationReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("model is not exportable ({} violations)", .0.len())]
    NotExportable(Vec<Violation>),
}

/// An identifier use the binder could not resolve. The reference stays in the
/// model with an empty referee.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnboundName {
    pub node: NodeId,
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub model: Model,
    pub unbound: Vec<UnboundName>,
}

/// Parses `text` as a complete program of `dialect` into a fresh model named
/// `name`, with the dialect's library catalog loaded and names bound.
pub fn parse(dialect: Dialect, name: &str, text: &str) -> Result<Parsed, ParseError> {
    let mut model = Model::new(name, dialect);
    dialect::load_catalog(&mut model);
    let trees = match dialect {
        Dialect::MiniProc => proc_syntax::parse(text)?,
        Dialect::MiniOO | Dialect::MiniScript => curly_syntax::parse(dialect, text)?,
    };
    let mut hints = BTreeMap::new();
    let root = model.root;
    for t in &trees {
        emit(&mut model, root, t, &mut hints);
    }
    let unbound = binder::bind(&mut model, &hints);
    Ok(Parsed { model, unbound })
}

/// MiniProc source program.
pub fn parse_source(name: &str, text: &str) -> Result<Parsed, ParseError> {
    parse(Dialect::MiniProc, name, text)
}

/// Skeleton of a MiniOO or MiniScript target (bodies optional).
pub fn parse_target_skeleton(
    dialect: Dialect,
    name: &str,
    text: &str,
) -> Result<Parsed, ParseError> {
    parse(dialect, name, text)
}

/// Parser output before insertion into a model.
#[derive(Debug, Clone)]
pub(crate) struct Tree {
    pub kind: NodeKind,
    pub name: Option<String>,
    pub payload: Payload,
    pub children: Vec<Tree>,
    /// Qualifier written before a variable access (`A.b`), used for binding.
    pub qualifier: Option<String>,
}

impl Tree {
    pub fn new(kind: NodeKind) -> Self {
        Self {
            kind,
            name: None,
            payload: Payload::None,
            children: Vec::new(),
            qualifier: None,
        }
    }

    pub fn named(kind: NodeKind, name: impl Into<String>) -> Self {
        let mut t = Self::new(kind);
        t.name = Some(name.into());
        t
    }

    pub fn payload(mut self, payload: Payload) -> Self {
        self.payload = payload;
        self
    }

    pub fn child(mut self, c: Tree) -> Self {
        self.children.push(c);
        self
    }

    pub fn type_ref(name: impl Into<String>) -> Self {
        Self::named(NodeKind::TypeReference, name)
    }

    pub fn binary(op: &str, lhs: Tree, rhs: Tree) -> Self {
        Self::new(NodeKind::BinaryOperation)
            .payload(Payload::Op(op.to_string()))
            .child(lhs)
            .child(rhs)
    }
}

fn emit(model: &mut Model, parent: NodeId, t: &Tree, hints: &mut BTreeMap<NodeId, String>) {
    let id = model
        .add_node(parent, t.kind, t.name.clone(), t.payload.clone())
        .expect("parent was just created");
    if let Some(q) = &t.qualifier {
        hints.insert(id, q.clone());
    }
    for c in &t.children {
        emit(model, id, c, hints);
    }
}
