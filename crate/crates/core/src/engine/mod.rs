//! Directive execution: produce, map, rollback and export.
//!
//! Each directive runs inside a transaction. The workspace journals every
//! mutation while the directive runs; a failure replays the journal backwards
//! at once, and a successful directive keeps its journal on a LIFO stack so
//! that the user can roll it back later.

mod run;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontends::{self, ExportError, ParseError, Violation};
use crate::meta_model::{
    context_path, node_path, qualified_path, ContextId, Dialect, MetaError, ModelId, NodeId,
    NodeRef, UndoEntry, Workspace,
};
use crate::rules::{
    stub_of_reference, ChoiceInterrupt, Chooser, InstallationId, LookupMode, MappingId,
    MappingOrigin, Rule, RuleError, RuleFamily, RuleRegistry,
};
use run::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TxnId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Directive {
    Produce {
        source: NodeRef,
        target: NodeRef,
        mode: LookupMode,
    },
    Map {
        source: NodeRef,
        target: NodeRef,
        scope: ContextId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxnStatus {
    Applied,
    RolledBack,
}

#[derive(Debug, Clone)]
pub struct Transaction {
    pub id: TxnId,
    pub directive: Directive,
    journal: Vec<UndoEntry>,
    pub status: TxnStatus,
}

/// What a directive did, for immediate inspection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectiveResult {
    pub txn: Option<TxnId>,
    /// Root of the produced subtree (produce only).
    pub produced: Option<NodeRef>,
    /// New nodes of the user trees, stubs excluded.
    pub created: Vec<NodeRef>,
    pub mappings: Vec<MappingId>,
    /// Stubs created by the directive that are still alive.
    pub stubs_created: Vec<NodeRef>,
    /// Adapted references as they stand after adaptation.
    pub adapted: Vec<NodeRef>,
    pub stubs_removed: Vec<NodeRef>,
    /// References still waiting on a stub after the directive.
    pub unresolved: Vec<NodeRef>,
    /// Productive lookups performed (one per rule application).
    pub lookups: usize,
    pub log: Vec<String>,
}

/// One line of the unresolved-reference census.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedRow {
    pub reference: NodeRef,
    pub stub: NodeRef,
    pub foreign: NodeRef,
    pub foreign_path: String,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("{0} and {1} live in the same model")]
    SameModel(NodeRef, NodeRef),
    #[error("target context {0} is not a declaration")]
    TargetNotDeclaration(NodeRef),
    #[error("rule {rule} failed: {error}")]
    RuleApplicationFailed { rule: String, error: RuleError },
    #[error("choice interrupted: {0}")]
    Choice(ChoiceInterrupt),
    #[error("transaction {0:?} is not the most recent applied directive")]
    NotTopOfStack(TxnId),
    #[error("no directive to roll back")]
    NothingToRollBack,
    #[error("model has {} violations", .0.len())]
    NotExportable(Vec<Violation>),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("i/o error on {path}: {error}")]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
}

impl EngineError {
    /// Stable name used in reports and API error bodies.
    pub fn name(&self) -> &'static str {
        match self {
            EngineError::Meta(_) => "MetaError",
            EngineError::Rule(RuleError::NoRuleFound) => "NoRuleFound",
            EngineError::Rule(RuleError::ChooserRequired) => "ChooserRequired",
            EngineError::Rule(RuleError::ScopeModelMismatch { .. }) => "ScopeModelMismatch",
            EngineError::Rule(RuleError::UnknownContext(_)) => "UnknownContext",
            EngineError::Rule(RuleError::NotDeclaration(_)) => "NotDeclaration",
            EngineError::Rule(_) => "RuleError",
            EngineError::SameModel(..) => "SameModel",
            EngineError::TargetNotDeclaration(_) => "TargetNotDeclaration",
            EngineError::RuleApplicationFailed { .. } => "RuleApplicationFailed",
            EngineError::Choice(ChoiceInterrupt::Cancelled) => "Cancelled",
            EngineError::Choice(ChoiceInterrupt::Pending(_)) => "ChoicePending",
            EngineError::NotTopOfStack(_) => "NotTopOfStack",
            EngineError::NothingToRollBack => "NothingToRollBack",
            EngineError::NotExportable(_) => "NotExportable",
            EngineError::Parse(_) => "ParseError",
            EngineError::Io { .. } => "IoError",
        }
    }
}

impl From<ExportError> for EngineError {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::NotExportable(v) => EngineError::NotExportable(v),
        }
    }
}

/// A migration session's models, rules and directive history.
#[derive(Debug, Default)]
pub struct Engine {
    pub ws: Workspace,
    pub rules: RuleRegistry,
    stack: Vec<Transaction>,
    next_txn: u64,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `text` and adds it as a new model named `name`.
    pub fn load(
        &mut self,
        dialect: Dialect,
        name: &str,
        text: &str,
    ) -> Result<ModelId, EngineError> {
        let parsed = frontends::parse(dialect, name, text)?;
        for u in &parsed.unbound {
            info!("{name}: unbound name `{}`", u.name);
        }
        Ok(self.ws.add_model(parsed.model))
    }

    pub fn install(
        &mut self,
        rule: Rule,
        context: ContextId,
    ) -> Result<InstallationId, EngineError> {
        Ok(self.rules.install(&self.ws, rule, context)?)
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.stack
    }

    pub fn last_transaction(&self) -> Option<TxnId> {
        self.stack.last().map(|t| t.id)
    }

    fn begin(&mut self) -> (usize, Vec<(ModelId, u32)>) {
        let mark = self.ws.start_recording();
        let fresh = self
            .ws
            .models()
            .map(|m| (m.id, m.nodes().map(|n| n.id.0 + 1).max().unwrap_or(0)))
            .collect();
        (mark, fresh)
    }

    fn abort(&mut self, mark: usize) {
        let journal = self.ws.take_journal(mark);
        self.ws.undo(journal);
        self.ws.stop_recording();
    }

    fn commit(&mut self, mark: usize, directive: Directive) -> TxnId {
        let journal = self.ws.take_journal(mark);
        self.ws.stop_recording();
        let id = TxnId(self.next_txn);
        self.next_txn += 1;
        self.stack.push(Transaction {
            id,
            directive,
            journal,
            status: TxnStatus::Applied,
        });
        id
    }

    fn run_error(err: RuleError, failure: Option<(String, RuleError)>) -> EngineError {
        match (err, failure) {
            (RuleError::Choice(c), _) => EngineError::Choice(c),
            (_, Some((rule, error))) => EngineError::RuleApplicationFailed { rule, error },
            (err, None) => EngineError::Rule(err),
        }
    }

    /// Migrates `source` into the target context `target`.
    pub fn produce(
        &mut self,
        source: NodeRef,
        target: NodeRef,
        mode: LookupMode,
        chooser: Option<&mut dyn Chooser>,
    ) -> Result<DirectiveResult, EngineError> {
        self.ws.node(source)?;
        if !self.ws.is_declaration(target) {
            self.ws.node(target)?;
            return Err(EngineError::TargetNotDeclaration(target));
        }
        if source.model == target.model {
            return Err(EngineError::SameModel(source, target));
        }
        if mode.needs_chooser() && chooser.is_none() {
            return Err(RuleError::ChooserRequired.into());
        }
        let (mark, fresh) = self.begin();
        let stubs_before: BTreeSet<NodeRef> = self.ws.stubs(target.model).into_iter().collect();
        let mut run = Run::new(&mut self.ws, &self.rules, chooser, mode);
        run.auto_scope = Some(ContextId::Decl(target));
        run.log.push(format!(
            "produce {} -> {} [{:?}]",
            qualified_path(run.ws, source),
            qualified_path(run.ws, target),
            mode
        ));
        let outcome = produce_steps(&mut run, source, target, &fresh);
        let (lookups, mappings, adapted, log, failure) =
            (run.lookups, run.mappings, run.adapted, run.log, run.failure);
        match outcome {
            Ok(produced) => {
                let mut result = DirectiveResult {
                    produced: Some(produced),
                    lookups,
                    mappings,
                    adapted: adapted.into_iter().filter(|r| self.ws.exists(*r)).collect(),
                    log,
                    ..Default::default()
                };
                self.summarize(&mut result, &fresh, &stubs_before, target.model);
                let txn = self.commit(
                    mark,
                    Directive::Produce {
                        source,
                        target,
                        mode,
                    },
                );
                result.txn = Some(txn);
                Ok(result)
            }
            Err(e) => {
                self.abort(mark);
                Err(Self::run_error(e, failure))
            }
        }
    }

    /// Declares `source` equivalent to `target` within `scope` and adapts the
    /// references waiting on `source` there.
    pub fn map(
        &mut self,
        source: NodeRef,
        target: NodeRef,
        scope: ContextId,
        chooser: Option<&mut dyn Chooser>,
    ) -> Result<DirectiveResult, EngineError> {
        for d in [source, target] {
            if !self.ws.is_declaration(d) {
                self.ws.node(d)?;
                return Err(RuleError::NotDeclaration(d).into());
            }
        }
        if source.model == target.model {
            return Err(EngineError::SameModel(source, target));
        }
        let (mark, fresh) = self.begin();
        let stubs_before: BTreeSet<NodeRef> = self.ws.stubs(target.model).into_iter().collect();
        let mut run = Run::new(&mut self.ws, &self.rules, chooser, LookupMode::Automatic);
        let outcome = map_steps(&mut run, source, target, scope);
        let (mappings, adapted, log, failure) = (run.mappings, run.adapted, run.log, run.failure);
        match outcome {
            Ok(()) => {
                let mut result = DirectiveResult {
                    mappings,
                    adapted: adapted.into_iter().filter(|r| self.ws.exists(*r)).collect(),
                    log,
                    ..Default::default()
                };
                self.summarize(&mut result, &fresh, &stubs_before, target.model);
                let txn = self.commit(
                    mark,
                    Directive::Map {
                        source,
                        target,
                        scope,
                    },
                );
                result.txn = Some(txn);
                Ok(result)
            }
            Err(e) => {
                self.abort(mark);
                Err(Self::run_error(e, failure))
            }
        }
    }

    fn summarize(
        &self,
        result: &mut DirectiveResult,
        fresh: &[(ModelId, u32)],
        stubs_before: &BTreeSet<NodeRef>,
        target_model: ModelId,
    ) {
        for (model, first) in fresh {
            let Ok(m) = self.ws.model(*model) else {
                continue;
            };
            let stubs: BTreeSet<NodeId> = m.stubs().iter().copied().collect();
            for n in m.nodes() {
                if n.id.0 >= *first && !stubs.contains(&n.id) {
                    result.created.push(NodeRef::new(*model, n.id));
                }
            }
        }
        let stubs_after: BTreeSet<NodeRef> = self.ws.stubs(target_model).into_iter().collect();
        result.stubs_created = stubs_after.difference(stubs_before).copied().collect();
        result.stubs_removed = stubs_before.difference(&stubs_after).copied().collect();
        result.unresolved = self
            .unresolved_report(ContextId::Global)
            .into_iter()
            .filter(|row| row.reference.model == target_model)
            .map(|row| row.reference)
            .collect();
    }

    /// Undoes the most recent applied directive.
    pub fn rollback(&mut self, txn: TxnId) -> Result<Transaction, EngineError> {
        match self.stack.last() {
            Some(top) if top.id == txn => {}
            _ => return Err(EngineError::NotTopOfStack(txn)),
        }
        let mut t = self.stack.pop().expect("checked above");
        self.ws.undo(std::mem::take(&mut t.journal));
        t.status = TxnStatus::RolledBack;
        info!("rolled back {:?}", t.id);
        Ok(t)
    }

    pub fn rollback_last(&mut self) -> Result<Transaction, EngineError> {
        let id = self
            .last_transaction()
            .ok_or(EngineError::NothingToRollBack)?;
        self.rollback(id)
    }

    /// References under `context` (every model for the global context) that
    /// point to stubs.
    pub fn unresolved_report(&self, context: ContextId) -> Vec<UnresolvedRow> {
        let mut rows = Vec::new();
        for m in self.ws.models() {
            let root = match context {
                ContextId::Global => m.root,
                ContextId::Decl(r) if r.model == m.id => r.node,
                ContextId::Decl(_) => continue,
            };
            for id in m.subtree(root) {
                let r = NodeRef::new(m.id, id);
                if let Some((stub, target)) = stub_of_reference(&self.ws, r) {
                    rows.push(UnresolvedRow {
                        reference: r,
                        stub,
                        foreign: target.foreign,
                        foreign_path: qualified_path(&self.ws, target.foreign),
                    });
                }
            }
        }
        rows
    }

    /// Source text of a model; fails when the model has violations.
    pub fn export_text(&self, model: ModelId) -> Result<String, EngineError> {
        Ok(frontends::print_model(self.ws.model(model)?)?)
    }

    /// Writes `<dir>/<model name>.<extension>` and returns its path.
    pub fn export(&self, model: ModelId, dir: &Path) -> Result<PathBuf, EngineError> {
        let text = self.export_text(model)?;
        let m = self.ws.model(model)?;
        let path = dir.join(format!("{}.{}", m.name, m.dialect.extension()));
        std::fs::create_dir_all(dir).map_err(|error| EngineError::Io {
            path: dir.to_path_buf(),
            error,
        })?;
        std::fs::write(&path, text).map_err(|error| EngineError::Io {
            path: path.clone(),
            error,
        })?;
        info!("exported {}", path.display());
        Ok(path)
    }

    /// Productive installations applicable to (`source`, `target`), in
    /// lookup order, as `(label, context path)`.
    pub fn applicable_rules(
        &self,
        source: NodeRef,
        target: NodeRef,
    ) -> Result<Vec<(String, String)>, EngineError> {
        Ok(self
            .rules
            .productive_candidates(&self.ws, source, target)?
            .into_iter()
            .map(|i| {
                (
                    i.rule.descriptor().label(),
                    context_path(&self.ws, i.context),
                )
            })
            .collect())
    }

    /// Adaptive installations visible from `node`, in lookup order.
    pub fn visible_adaptive_rules(
        &self,
        node: NodeRef,
    ) -> Result<Vec<(String, String)>, EngineError> {
        Ok(self
            .rules
            .visible(&self.ws, node, RuleFamily::Adaptive)?
            .into_iter()
            .map(|i| {
                (
                    i.rule.descriptor().label(),
                    context_path(&self.ws, i.context),
                )
            })
            .collect())
    }

    /// Resolves `model:dot.path` (or `model:` for the project root).
    pub fn resolve_path(&self, path: &str) -> Option<NodeRef> {
        resolve_path(&self.ws, path)
    }
}

/// Resolves `model:dot.path`. Segments name declarations; `#i` picks the
/// i-th child; a leading `@lib.` segment searches the library region.
pub fn resolve_path(ws: &Workspace, path: &str) -> Option<NodeRef> {
    let (model, rest) = path.split_once(':')?;
    let m = ws.model_by_name(model)?;
    let mut segments = rest.split('.').filter(|s| !s.is_empty()).peekable();
    let mut cur = if segments.peek() == Some(&"@lib") {
        segments.next();
        m.find_library(segments.next()?)?
    } else {
        m.root
    };
    for seg in segments {
        cur = match seg.strip_prefix('#') {
            Some(i) => *m.children(cur).get(i.parse::<usize>().ok()?)?,
            None => m.find_child(cur, seg)?,
        };
    }
    Some(NodeRef::new(m.id, cur))
}

/// Steps of a produce: recursive rule application, reference fixing through
/// stubs and the adaptive phase for mappings registered on the way.
fn produce_steps(
    run: &mut Run<'_, '_>,
    source: NodeRef,
    target: NodeRef,
    fresh: &[(ModelId, u32)],
) -> Result<NodeRef, RuleError> {
    use crate::rules::Migrator;
    let produced = run.migrate(source, target)?;

    // Reference fixing: every new, unbound reference of the target model is
    // bound to a stub for the declaration its origin referred to, then adapted.
    let first = fresh
        .iter()
        .find(|(m, _)| *m == target.model)
        .map(|(_, f)| *f)
        .unwrap_or(0);
    let pending: Vec<NodeRef> = {
        let m = run.ws.model(target.model)?;
        m.nodes()
            .filter(|n| {
                n.id.0 >= first
                    && n.kind.is_reference()
                    && n.referee.is_none()
                    && m.in_user_tree(n.id)
            })
            .map(|n| NodeRef::new(target.model, n.id))
            .collect()
    };
    for r in pending {
        let Some(node) = run.ws.get(r) else { continue };
        if node.referee.is_some() {
            continue;
        }
        let Some(origin) = node.origin else { continue };
        let Some(foreign_id) = run.ws.get(origin).and_then(|o| o.referee) else {
            run.log.push(format!(
                "unbound {} (origin has no referee)",
                qualified_path(run.ws, r)
            ));
            continue;
        };
        let foreign = NodeRef::new(origin.model, foreign_id);
        if foreign.model == r.model {
            run.ws.set_referee(r, Some(foreign.node))?;
            continue;
        }
        let shape = match run.ws.kind(r).and_then(|k| k.expected_shape()) {
            Some(s) => s,
            None => continue,
        };
        let existed = run.ws.stub_for(r.model, foreign).is_some();
        let stub = run.ws.make_stub(r.model, foreign, shape)?;
        run.ws.set_referee(r, Some(stub.node))?;
        if !existed {
            run.log.push(format!(
                "stub {} for {}",
                node_path(run.ws, stub),
                qualified_path(run.ws, r)
            ));
        }
        run.adapt(r, true)?;
    }

    // Mappings registered by this produce also apply retroactively.
    let ids = run.mappings.clone();
    for id in ids {
        let Some(m) = run.ws.mapping(id).cloned() else {
            continue;
        };
        if m.origin == MappingOrigin::ProduceAuto {
            run.adaptive_phase(&m)?;
        }
    }
    sweep(run, target.model)?;
    Ok(produced)
}

fn map_steps(
    run: &mut Run<'_, '_>,
    source: NodeRef,
    target: NodeRef,
    scope: ContextId,
) -> Result<(), RuleError> {
    run.log.push(format!(
        "map {} => {} @ {}",
        qualified_path(run.ws, source),
        qualified_path(run.ws, target),
        context_path(run.ws, scope)
    ));
    let id = run
        .ws
        .register_mapping(source, target, scope, MappingOrigin::UserDirective)?;
    run.mappings.push(id);
    let mapping = run.ws.mapping(id).cloned().expect("just registered");
    let left = run.adaptive_phase(&mapping)?;
    for r in left {
        run.log.push(format!(
            "no adaptive rule for {}",
            qualified_path(run.ws, r)
        ));
    }
    sweep(run, target.model)
}

/// Removes every stub of `model` that no reference points to any more.
fn sweep(run: &mut Run<'_, '_>, model: ModelId) -> Result<(), RuleError> {
    for stub in run.ws.stubs(model) {
        if run.ws.incoming(stub).is_empty() {
            run.log.push(format!("sweep {}", node_path(run.ws, stub)));
            run.ws.remove_stub(stub)?;
        }
    }
    Ok(())
}
