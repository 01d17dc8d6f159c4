//! Typing ontology: per-dialect legality of node kinds, operators and
//! placements, plus the library catalog preloaded into every model.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use crate::meta_model::{Dialect, Model, NodeId, NodeKind, Payload, Shape};

/// One definition-less library declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: String,
    pub shape: Shape,
    /// Library class owning a routine, if any.
    pub owner: Option<String>,
    pub is_static: bool,
    pub returns: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DialectSpec {
    pub dialect: Dialect,
    pub legal_kinds: BTreeSet<NodeKind>,
    pub legal_operators: BTreeSet<&'static str>,
    pub catalog: Vec<CatalogEntry>,
    /// Type accepting any value (the target of `Variant`-like mappings).
    pub top_type: &'static str,
    pub void_type: Option<&'static str>,
}

const PROC_CATALOG: &str = include_str!("../../fixtures/catalog_miniproc.txt");
const OO_CATALOG: &str = include_str!("../../fixtures/catalog_minioo.txt");
const SCRIPT_CATALOG: &str = include_str!("../../fixtures/catalog_miniscript.txt");

const COMMON_KINDS: &[NodeKind] = &[
    NodeKind::Project,
    NodeKind::VariableDeclaration,
    NodeKind::Parameter,
    NodeKind::PrimitiveTypeDeclaration,
    NodeKind::LibraryRoutineDeclaration,
    NodeKind::VariableAccess,
    NodeKind::TypeReference,
    NodeKind::ExpressionStatement,
    NodeKind::BinaryOperation,
    NodeKind::StringLiteral,
    NodeKind::NumberLiteral,
    NodeKind::IfStatement,
    NodeKind::ElseIfClause,
    NodeKind::Block,
    NodeKind::Assignment,
    NodeKind::Return,
];

const PROC_KINDS: &[NodeKind] = &[
    NodeKind::Module,
    NodeKind::SubProcedure,
    NodeKind::Function,
    NodeKind::FunctionInvocation,
];

const OO_KINDS: &[NodeKind] = &[
    NodeKind::Package,
    NodeKind::Class,
    NodeKind::Method,
    NodeKind::AttributeDeclaration,
    NodeKind::MethodInvocation,
    NodeKind::ThisReceiver,
];

const PROC_OPERATORS: &[&str] = &["&", "+", "-", "*", "/", "=", "<>", "<", ">", "<=", ">="];
const OO_OPERATORS: &[&str] = &["+", "-", "*", "/", "==", "!=", "<", ">", "<=", ">="];

impl DialectSpec {
    pub fn get(dialect: Dialect) -> &'static DialectSpec {
        static SPECS: OnceLock<[DialectSpec; 3]> = OnceLock::new();
        let specs = SPECS.get_or_init(|| {
            [
                build(
                    Dialect::MiniProc,
                    PROC_KINDS,
                    PROC_OPERATORS,
                    PROC_CATALOG,
                    "Variant",
                    None,
                ),
                build(
                    Dialect::MiniOO,
                    OO_KINDS,
                    OO_OPERATORS,
                    OO_CATALOG,
                    "Object",
                    Some("void"),
                ),
                build(
                    Dialect::MiniScript,
                    OO_KINDS,
                    OO_OPERATORS,
                    SCRIPT_CATALOG,
                    "any",
                    Some("void"),
                ),
            ]
        });
        match dialect {
            Dialect::MiniProc => &specs[0],
            Dialect::MiniOO => &specs[1],
            Dialect::MiniScript => &specs[2],
        }
    }

    pub fn is_legal_kind(&self, kind: NodeKind) -> bool {
        self.legal_kinds.contains(&kind)
    }

    pub fn is_legal_operator(&self, op: &str) -> bool {
        self.legal_operators.contains(op)
    }

    pub fn is_object_oriented(&self) -> bool {
        self.dialect != Dialect::MiniProc
    }

    /// Whether `child` may appear directly under `parent` in this dialect.
    pub fn allows_child(&self, parent: NodeKind, child: NodeKind) -> bool {
        use NodeKind::*;
        let oo = self.is_object_oriented();
        match parent {
            Project if oo => matches!(child, Package | Class),
            Project => child == Module,
            Package => child == Class,
            Module => matches!(child, VariableDeclaration | SubProcedure | Function),
            Class => matches!(child, Method | AttributeDeclaration),
            Method | SubProcedure | Function => {
                child == Parameter || child == TypeReference || is_statement(child)
            }
            VariableDeclaration | AttributeDeclaration | Parameter => child == TypeReference,
            Block => is_statement(child),
            ExpressionStatement | BinaryOperation | FunctionInvocation | Return => {
                is_expression(child)
            }
            MethodInvocation => {
                is_expression(child) || matches!(child, TypeReference | ThisReceiver)
            }
            Assignment | IfStatement | ElseIfClause => {
                is_expression(child) || matches!(child, Block | ElseIfClause)
            }
            _ => false,
        }
    }
}

pub fn is_statement(kind: NodeKind) -> bool {
    use NodeKind::*;
    matches!(
        kind,
        ExpressionStatement | Assignment | IfStatement | Return | VariableDeclaration
    )
}

pub fn is_expression(kind: NodeKind) -> bool {
    use NodeKind::*;
    matches!(
        kind,
        StringLiteral
            | NumberLiteral
            | VariableAccess
            | FunctionInvocation
            | MethodInvocation
            | BinaryOperation
    )
}

fn build(
    dialect: Dialect,
    kinds: &[NodeKind],
    operators: &[&'static str],
    catalog: &str,
    top_type: &'static str,
    void_type: Option<&'static str>,
) -> DialectSpec {
    DialectSpec {
        dialect,
        legal_kinds: COMMON_KINDS.iter().chain(kinds).copied().collect(),
        legal_operators: operators.iter().copied().collect(),
        catalog: parse_catalog(catalog),
        top_type,
        void_type,
    }
}

/// Parses the catalog fixture format:
/// `type <Name>` or `routine [Owner.]<name> [static] [: <ReturnType>]`.
pub fn parse_catalog(text: &str) -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (head, returns) = match line.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r.trim().to_string())),
            None => (line, None),
        };
        let mut words = head.split_whitespace();
        let kind = words.next().unwrap_or_default();
        let Some(qualified) = words.next() else {
            continue;
        };
        let is_static = words.any(|w| w == "static");
        let (owner, name) = match qualified.split_once('.') {
            Some((o, n)) => (Some(o.to_string()), n.to_string()),
            None => (None, qualified.to_string()),
        };
        let shape = match kind {
            "type" => Shape::Type,
            "routine" => Shape::Callable,
            "variable" => Shape::Variable,
            _ => continue,
        };
        out.push(CatalogEntry {
            name,
            shape,
            owner,
            is_static,
            returns,
        });
    }
    out
}

/// Installs the dialect catalog into the library region of `model`.
pub fn load_catalog(model: &mut Model) {
    let spec = DialectSpec::get(model.dialect);
    let mut pending_returns: Vec<(NodeId, String)> = Vec::new();
    for entry in &spec.catalog {
        match entry.shape {
            Shape::Type => {
                model.add_library_root(
                    NodeKind::PrimitiveTypeDeclaration,
                    Some(entry.name.clone()),
                    Payload::None,
                );
            }
            Shape::Callable | Shape::Variable => {
                let kind = if entry.shape == Shape::Callable {
                    NodeKind::LibraryRoutineDeclaration
                } else {
                    NodeKind::VariableDeclaration
                };
                let payload = if spec.is_object_oriented() {
                    Payload::Static(entry.is_static)
                } else {
                    Payload::None
                };
                let id = match &entry.owner {
                    Some(owner) => {
                        let class = match model.find_library(owner) {
                            Some(c) => c,
                            None => model.add_library_root(
                                NodeKind::Class,
                                Some(owner.clone()),
                                Payload::None,
                            ),
                        };
                        model
                            .add_node(class, kind, Some(entry.name.clone()), payload)
                            .expect("library class exists")
                    }
                    None => model.add_library_root(kind, Some(entry.name.clone()), payload),
                };
                if let Some(ret) = &entry.returns {
                    pending_returns.push((id, ret.clone()));
                }
            }
        }
    }
    for (id, ret) in pending_returns {
        let tref = model
            .add_node(
                id,
                NodeKind::TypeReference,
                Some(ret.clone()),
                Payload::None,
            )
            .expect("routine exists");
        let ty = model.library().iter().copied().find(|l| {
            model.get(*l).is_some_and(|n| {
                n.kind == NodeKind::PrimitiveTypeDeclaration && n.name.as_deref() == Some(&ret)
            })
        });
        let _ = model.set_referee(tref, ty);
    }
}

/// Library type declaration of `model` called `name`.
pub fn library_type(model: &Model, name: &str) -> Option<NodeId> {
    model.library().iter().copied().find(|l| {
        model
            .get(*l)
            .is_some_and(|n| n.kind.shape() == Some(Shape::Type) && n.name.as_deref() == Some(name))
    })
}
