//! A migration session: the engine plus aliases, a directive log and the
//! registry of pending choices.
//!
//! Models are loaded under their alias, so declaration paths such as
//! `oo:MyPackage.MyDestination` address them directly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use migra_core::builtin_rules::{instantiate, CatalogError};
use migra_core::engine::{resolve_path, DirectiveResult, Engine, EngineError, TxnId};
use migra_core::frontends::{self, ParseError, ViolationReason};
use migra_core::meta_model::{
    context_path, mapping_line, node_path, payload_text, qualified_path, ContextId, Dialect,
    MetaError, ModelId, NodeId, NodeKind, NodeRef, Workspace,
};
use migra_core::rules::{
    stub_of_reference, ChoiceInterrupt, LookupMode, MappingOrigin, Question, RuleFamily,
    ScriptedChooser,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::{Manifest, MappingSpec, RuleSpec};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("{alias}: {error}")]
    Parse { alias: String, error: ParseError },
    #[error("no node at `{0}`")]
    UnknownPath(String),
    #[error("no node {1} in `{0}`")]
    UnknownNode(String, u32),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown dialect `{0}`")]
    UnknownDialect(String),
    #[error("model alias `{0}` is used twice")]
    DuplicateAlias(String),
    #[error("unknown lookup mode `{0}`")]
    UnknownMode(String),
    #[error("choice token `{0}` is unknown or stale")]
    StaleToken(String),
    #[error("cannot read {path}: {error}")]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
}

impl From<MetaError> for SessionError {
    fn from(e: MetaError) -> Self {
        SessionError::Engine(EngineError::Meta(e))
    }
}

impl SessionError {
    /// Stable name carried by API error bodies and reports.
    pub fn name(&self) -> &'static str {
        match self {
            SessionError::Engine(e) => e.name(),
            SessionError::Catalog(_) => "CatalogError",
            SessionError::Parse { .. } => "ParseError",
            SessionError::UnknownPath(_) => "UnknownPath",
            SessionError::UnknownNode(..) => "UnknownNode",
            SessionError::UnknownModel(_) => "UnknownModel",
            SessionError::UnknownDialect(_) => "UnknownDialect",
            SessionError::DuplicateAlias(_) => "DuplicateAlias",
            SessionError::UnknownMode(_) => "UnknownMode",
            SessionError::StaleToken(_) => "StaleToken",
            SessionError::Io { .. } => "IoError",
        }
    }
}

/// A node as seen by clients: alias, id and declaration path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeView {
    pub model: String,
    pub id: u32,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectiveView {
    pub txn: Option<u64>,
    pub produced: Option<NodeView>,
    pub created: Vec<NodeView>,
    pub mappings: Vec<String>,
    pub stubs_created: Vec<NodeView>,
    pub stubs_removed: usize,
    pub adapted: Vec<NodeView>,
    pub unresolved: Vec<NodeView>,
    pub lookups: usize,
    pub log: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Applied(DirectiveView),
    /// The directive needs an answer; nothing was applied.
    Pending {
        token: String,
        question: Question,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "directive", rename_all = "snake_case")]
pub enum Request {
    Produce {
        source: String,
        target: String,
        #[serde(default)]
        mode: LookupMode,
    },
    Map {
        source: String,
        target: String,
        scope: String,
    },
}

impl Request {
    pub fn describe(&self) -> String {
        match self {
            Request::Produce {
                source,
                target,
                mode,
            } => format!("produce {source} -> {target} [{mode:?}]"),
            Request::Map {
                source,
                target,
                scope,
            } => format!("map {source} -> {target} @ {scope}"),
        }
    }
}

#[derive(Debug, Clone)]
struct PendingChoice {
    request: Request,
    answers: Vec<usize>,
    version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub ok: bool,
    pub directive: String,
    pub lines: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub alias: String,
    pub dialect: String,
    pub nodes: usize,
    pub stubs: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Badges {
    /// The node is a reference bound to a stub.
    pub stub_referencing: bool,
    /// The node itself has a validation violation.
    pub violation: bool,
    /// References bound to stubs in this subtree.
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: u32,
    pub kind: String,
    pub name: Option<String>,
    pub payload: String,
    pub referee: Option<String>,
    pub badges: Badges,
    pub children: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiModelTree {
    pub alias: String,
    pub dialect: String,
    pub root: TreeNode,
    pub stubs: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleView {
    pub label: String,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulesView {
    pub productive: Vec<RuleView>,
    pub adaptive: Vec<RuleView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedView {
    pub reference: NodeView,
    pub foreign: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextView {
    pub context: String,
    pub mappings: Vec<String>,
    pub unresolved: Vec<UnresolvedView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportView {
    pub alias: String,
    pub text: String,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Default)]
pub struct Session {
    pub id: String,
    pub engine: Engine,
    pub default_mode: LookupMode,
    log: Vec<LogEntry>,
    pending: BTreeMap<String, PendingChoice>,
    next_token: u64,
    /// Bumped by every state change; pending tokens from older versions are stale.
    version: u64,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Session {
            id: id.into(),
            ..Session::default()
        }
    }

    /// Loads the manifest's models, installs its rules and applies its
    /// fixture mappings as map directives.
    pub fn from_manifest(manifest: &Manifest) -> Result<Self, SessionError> {
        let mut s = Session::new("main");
        for m in &manifest.models {
            let text = match &m.file {
                Some(path) => read(path)?,
                None => String::new(),
            };
            s.load_model(&m.alias, &m.dialect, &text)?;
        }
        s.apply_rules_and_mappings(&manifest.rules, &manifest.mappings)?;
        Ok(s)
    }

    pub fn apply_rules_and_mappings(
        &mut self,
        rules: &[RuleSpec],
        mappings: &[MappingSpec],
    ) -> Result<(), SessionError> {
        for r in rules {
            self.install(&r.name, &r.params, &r.context)?;
        }
        for m in mappings {
            let request = Request::Map {
                source: m.source.clone(),
                target: m.target.clone(),
                scope: m.scope.clone(),
            };
            self.directive(request, Vec::new())?;
        }
        Ok(())
    }

    pub fn load_model(
        &mut self,
        alias: &str,
        dialect: &str,
        text: &str,
    ) -> Result<ModelId, SessionError> {
        if self.engine.ws.model_by_name(alias).is_some() {
            return Err(SessionError::DuplicateAlias(alias.into()));
        }
        let d = Dialect::from_name(dialect)
            .ok_or_else(|| SessionError::UnknownDialect(dialect.into()))?;
        let id = self.engine.load(d, alias, text).map_err(|e| match e {
            EngineError::Parse(error) => SessionError::Parse {
                alias: alias.into(),
                error,
            },
            other => other.into(),
        })?;
        self.version += 1;
        Ok(id)
    }

    pub fn model_id(&self, alias: &str) -> Result<ModelId, SessionError> {
        self.engine
            .ws
            .model_by_name(alias)
            .map(|m| m.id)
            .ok_or_else(|| SessionError::UnknownModel(alias.into()))
    }

    pub fn resolve(&self, path: &str) -> Result<NodeRef, SessionError> {
        resolve_path(&self.engine.ws, path).ok_or_else(|| SessionError::UnknownPath(path.into()))
    }

    pub fn context(&self, path: &str) -> Result<ContextId, SessionError> {
        if path == "global" {
            Ok(ContextId::Global)
        } else {
            Ok(ContextId::Decl(self.resolve(path)?))
        }
    }

    pub fn install(
        &mut self,
        rule: &str,
        params: &BTreeMap<String, String>,
        context: &str,
    ) -> Result<(), SessionError> {
        let ctx = self.context(context)?;
        let rule = instantiate(rule, params)?;
        let label = rule.descriptor().label();
        self.engine.install(rule, ctx)?;
        self.version += 1;
        info!("installed {label} @ {context}");
        Ok(())
    }

    pub fn view(&self, r: NodeRef) -> NodeView {
        NodeView {
            model: self
                .engine
                .ws
                .model(r.model)
                .map(|m| m.name.clone())
                .unwrap_or_default(),
            id: r.node.0,
            path: qualified_path(&self.engine.ws, r),
        }
    }

    fn directive_view(&self, r: &DirectiveResult) -> DirectiveView {
        let ws = &self.engine.ws;
        let live = |v: &[NodeRef]| -> Vec<NodeView> {
            v.iter()
                .filter(|n| ws.exists(**n))
                .map(|n| self.view(*n))
                .collect()
        };
        DirectiveView {
            txn: r.txn.map(|t| t.0),
            produced: r.produced.map(|p| self.view(p)),
            created: live(&r.created),
            mappings: r
                .mappings
                .iter()
                .filter_map(|id| ws.mapping(*id))
                .map(|m| mapping_line(ws, m))
                .collect(),
            stubs_created: live(&r.stubs_created),
            stubs_removed: r.stubs_removed.len(),
            adapted: live(&r.adapted),
            unresolved: live(&r.unresolved),
            lookups: r.lookups,
            log: r.log.clone(),
        }
    }

    /// Runs `request` with `answers` for its choices. A choice without an
    /// answer yields a pending token and leaves the state unchanged.
    pub fn directive(
        &mut self,
        request: Request,
        answers: Vec<usize>,
    ) -> Result<Outcome, SessionError> {
        let mut chooser = ScriptedChooser::new(answers.clone());
        let result = match &request {
            Request::Produce {
                source,
                target,
                mode,
            } => {
                let (s, t) = (self.resolve(source)?, self.resolve(target)?);
                let chooser = mode
                    .needs_chooser()
                    .then_some(&mut chooser as &mut dyn migra_core::rules::Chooser);
                self.engine.produce(s, t, *mode, chooser)
            }
            Request::Map {
                source,
                target,
                scope,
            } => {
                let (s, t, c) = (
                    self.resolve(source)?,
                    self.resolve(target)?,
                    self.context(scope)?,
                );
                self.engine.map(s, t, c, Some(&mut chooser))
            }
        };
        match result {
            Ok(r) => {
                self.version += 1;
                let view = self.directive_view(&r);
                self.push_log(true, request.describe(), view.log.clone(), None);
                Ok(Outcome::Applied(view))
            }
            Err(EngineError::Choice(ChoiceInterrupt::Pending(question))) => {
                let token = format!("c{}", self.next_token);
                self.next_token += 1;
                self.pending.insert(
                    token.clone(),
                    PendingChoice {
                        request,
                        answers,
                        version: self.version,
                    },
                );
                Ok(Outcome::Pending { token, question })
            }
            Err(e) => {
                let e = SessionError::from(e);
                let mut lines = Vec::new();
                if let SessionError::Engine(EngineError::RuleApplicationFailed { rule, .. }) = &e {
                    lines.push(format!("failed {rule}"));
                }
                self.push_log(
                    false,
                    request.describe(),
                    lines,
                    Some(format!("{}: {e}", e.name())),
                );
                Err(e)
            }
        }
    }

    /// Continues a pending directive with one more answer, or abandons it
    /// when `answer` is `None`.
    pub fn answer(
        &mut self,
        token: &str,
        answer: Option<usize>,
    ) -> Result<Option<Outcome>, SessionError> {
        let pending = self
            .pending
            .remove(token)
            .filter(|p| p.version == self.version)
            .ok_or_else(|| SessionError::StaleToken(token.into()))?;
        let Some(a) = answer else {
            self.push_log(
                false,
                pending.request.describe(),
                Vec::new(),
                Some("Cancelled".into()),
            );
            return Ok(None);
        };
        let mut answers = pending.answers;
        answers.push(a);
        self.directive(pending.request, answers).map(Some)
    }

    pub fn rollback(&mut self, txn: Option<u64>) -> Result<u64, SessionError> {
        let t = match txn {
            Some(id) => self.engine.rollback(TxnId(id)),
            None => self.engine.rollback_last(),
        };
        match t {
            Ok(t) => {
                self.version += 1;
                self.push_log(true, format!("rollback {}", t.id.0), Vec::new(), None);
                Ok(t.id.0)
            }
            Err(e) => {
                let e = SessionError::from(e);
                self.push_log(
                    false,
                    "rollback".into(),
                    Vec::new(),
                    Some(format!("{}: {e}", e.name())),
                );
                Err(e)
            }
        }
    }

    pub fn export(&mut self, alias: &str, dir: Option<&Path>) -> Result<ExportView, SessionError> {
        let id = self.model_id(alias)?;
        let text = self.engine.export_text(id)?;
        let path = match dir {
            Some(d) => Some(self.engine.export(id, d)?),
            None => None,
        };
        self.push_log(true, format!("export {alias}"), Vec::new(), None);
        Ok(ExportView {
            alias: alias.into(),
            text,
            path,
        })
    }

    fn push_log(&mut self, ok: bool, directive: String, lines: Vec<String>, error: Option<String>) {
        let seq = self.log.len() as u64;
        self.log.push(LogEntry {
            seq,
            ok,
            directive,
            lines,
            error,
        });
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn models(&self) -> Vec<ModelSummary> {
        self.engine
            .ws
            .models()
            .map(|m| ModelSummary {
                alias: m.name.clone(),
                dialect: m.dialect.name().into(),
                nodes: m.subtree(m.root).len(),
                stubs: m.stubs().len(),
                violations: frontends::validate(m).len(),
            })
            .collect()
    }

    pub fn tree(&self, alias: &str) -> Result<ApiModelTree, SessionError> {
        let id = self.model_id(alias)?;
        let ws = &self.engine.ws;
        let m = ws.model(id)?;
        let violations: Vec<NodeId> = frontends::validate(m)
            .into_iter()
            .filter(|v| v.reason != ViolationReason::ReferenceToStub)
            .map(|v| v.node)
            .collect();
        let root = tree_node(ws, id, m.root, &violations);
        let stubs = m
            .stubs()
            .iter()
            .map(|s| tree_node(ws, id, *s, &violations))
            .collect();
        Ok(ApiModelTree {
            alias: alias.into(),
            dialect: m.dialect.name().into(),
            root,
            stubs,
        })
    }

    pub fn node_source(&self, alias: &str, node: u32) -> Result<String, SessionError> {
        let id = self.model_id(alias)?;
        let m = self.engine.ws.model(id)?;
        if m.get(NodeId(node)).is_none() {
            return Err(SessionError::UnknownNode(alias.into(), node));
        }
        Ok(frontends::print_node(m, NodeId(node)))
    }

    /// Productive rules applicable to (`source`, `target`) and adaptive rules
    /// visible from `target`.
    pub fn rules(&self, source: &str, target: &str) -> Result<RulesView, SessionError> {
        let (s, t) = (self.resolve(source)?, self.resolve(target)?);
        let conv = |v: Vec<(String, String)>| {
            v.into_iter()
                .map(|(label, context)| RuleView { label, context })
                .collect()
        };
        Ok(RulesView {
            productive: conv(self.engine.applicable_rules(s, t)?),
            adaptive: conv(self.engine.visible_adaptive_rules(t)?),
        })
    }

    /// Every installation, in installation order.
    pub fn installations(&self) -> Vec<RuleView> {
        self.engine
            .rules
            .installations()
            .iter()
            .map(|i| RuleView {
                label: i.rule.descriptor().label(),
                context: context_path(&self.engine.ws, i.context),
            })
            .collect()
    }

    /// Mappings visible from `context` and the unresolved references below it.
    pub fn context_view(&self, context: &str) -> Result<ContextView, SessionError> {
        let ctx = self.context(context)?;
        let ws = &self.engine.ws;
        let visible: Vec<ContextId> = match ctx {
            ContextId::Global => vec![ContextId::Global],
            ContextId::Decl(r) => ws.context_chain(r).map_err(EngineError::from)?,
        };
        let mappings = ws
            .mappings()
            .iter()
            .filter(|m| ctx == ContextId::Global || visible.contains(&m.scope))
            .map(|m| mapping_line(ws, m))
            .collect();
        let unresolved = self
            .engine
            .unresolved_report(ctx)
            .into_iter()
            .map(|row| UnresolvedView {
                reference: self.view(row.reference),
                foreign: row.foreign_path,
            })
            .collect();
        Ok(ContextView {
            context: context.into(),
            mappings,
            unresolved,
        })
    }

    pub fn stub_count(&self, alias: &str) -> Result<usize, SessionError> {
        Ok(self.engine.ws.stubs(self.model_id(alias)?).len())
    }

    pub fn auto_mapping_count(&self) -> usize {
        self.engine
            .ws
            .mappings()
            .iter()
            .filter(|m| m.origin == MappingOrigin::ProduceAuto)
            .count()
    }

    pub fn adaptive_rule_names(&self) -> Vec<String> {
        self.engine
            .rules
            .installations()
            .iter()
            .filter(|i| i.rule.family() == RuleFamily::Adaptive)
            .map(|i| i.rule.name().to_string())
            .collect()
    }
}

fn read(path: &Path) -> Result<String, SessionError> {
    std::fs::read_to_string(path).map_err(|error| SessionError::Io {
        path: path.to_path_buf(),
        error,
    })
}

fn tree_node(ws: &Workspace, model: ModelId, id: NodeId, violations: &[NodeId]) -> TreeNode {
    let r = NodeRef::new(model, id);
    let n = ws.node(r).expect("walking existing nodes");
    let children: Vec<TreeNode> = n
        .children
        .iter()
        .map(|c| tree_node(ws, model, *c, violations))
        .collect();
    let stub_referencing = stub_of_reference(ws, r).is_some();
    let unresolved =
        usize::from(stub_referencing) + children.iter().map(|c| c.badges.unresolved).sum::<usize>();
    TreeNode {
        id: id.0,
        kind: n.kind.name().into(),
        name: n.name.clone(),
        payload: payload_text(ws, &n.payload),
        referee: n
            .referee
            .filter(|_| n.kind != NodeKind::StubDeclaration)
            .map(|t| node_path(ws, NodeRef::new(model, t))),
        badges: Badges {
            stub_referencing,
            violation: violations.contains(&id),
            unresolved,
        },
        children,
    }
}
