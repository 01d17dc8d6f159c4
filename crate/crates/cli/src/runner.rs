//! Headless replay of directive scripts and batch corpus migration.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use migra_core::frontends;
use migra_core::meta_model::{qualified_path, Dialect, NodeKind, NodeRef};
use serde::Serialize;

use crate::manifest::{CorpusSpec, Manifest};
use crate::script::{self, Command, Expectation};
use crate::session::{Outcome, Request, Session, SessionError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineReport {
    pub line: usize,
    pub text: String,
    pub ok: bool,
    /// Error name and message, or a short summary of the result.
    pub message: String,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelCensus {
    pub alias: String,
    pub stubs: usize,
    pub unresolved: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScriptReport {
    pub script: String,
    pub lines: Vec<LineReport>,
    pub census: Vec<ModelCensus>,
    pub exports: Vec<(String, String)>,
}

impl ScriptReport {
    pub fn ok(&self) -> bool {
        self.lines.iter().all(|l| l.ok)
    }

    pub fn export(&self, alias: &str) -> Option<&str> {
        self.exports
            .iter()
            .find(|(a, _)| a == alias)
            .map(|(_, t)| t.as_str())
    }
}

impl fmt::Display for ScriptReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            let tag = if l.ok { "ok" } else { "FAILED" };
            writeln!(
                f,
                "{}:{}: {tag}: {} ({})",
                self.script, l.line, l.text, l.message
            )?;
            for d in &l.details {
                writeln!(f, "    {d}")?;
            }
        }
        writeln!(f, "census:")?;
        for c in &self.census {
            writeln!(
                f,
                "  {}: {} stubs, {} unresolved references, {} violations",
                c.alias, c.stubs, c.unresolved, c.violations
            )?;
        }
        Ok(())
    }
}

fn census(session: &Session) -> Vec<ModelCensus> {
    let ws = &session.engine.ws;
    session
        .models()
        .into_iter()
        .map(|m| {
            let id = session.model_id(&m.alias).expect("listed model");
            let model = ws.model(id).expect("listed model");
            let unresolved = frontends::validate(model)
                .iter()
                .filter(|v| v.reason == frontends::ViolationReason::ReferenceToStub)
                .count();
            ModelCensus {
                alias: m.alias,
                stubs: m.stubs,
                unresolved,
                violations: m.violations,
            }
        })
        .collect()
}

/// Replays `text` against `session`, stopping at the first failed command.
/// Exports are written to `export_dir` when given.
pub fn run_script(
    session: &mut Session,
    name: &str,
    text: &str,
    export_dir: Option<&Path>,
) -> ScriptReport {
    let mut report = ScriptReport {
        script: name.to_string(),
        lines: Vec::new(),
        census: Vec::new(),
        exports: Vec::new(),
    };
    match script::parse(text) {
        Err(e) => report.lines.push(LineReport {
            line: e.line,
            text: String::new(),
            ok: false,
            message: format!("ScriptError: {}", e.message),
            details: Vec::new(),
        }),
        Ok(lines) => {
            let mut answers = Vec::new();
            for line in lines {
                let (ok, message, details) = match run_command(
                    session,
                    &line.command,
                    &mut answers,
                    export_dir,
                    &mut report,
                ) {
                    Ok((message, details)) => (true, message, details),
                    Err(message) => (false, message, Vec::new()),
                };
                report.lines.push(LineReport {
                    line: line.number,
                    text: line.text,
                    ok,
                    message,
                    details,
                });
                if !ok {
                    break;
                }
            }
        }
    }
    report.census = census(session);
    report
}

type CommandResult = Result<(String, Vec<String>), String>;

fn err(e: SessionError) -> String {
    format!("{}: {e}", e.name())
}

fn run_command(
    session: &mut Session,
    command: &Command,
    answers: &mut Vec<usize>,
    export_dir: Option<&Path>,
    report: &mut ScriptReport,
) -> CommandResult {
    match command {
        Command::Install {
            rule,
            params,
            context,
        } => {
            session.install(rule, params, context).map_err(err)?;
            Ok(("installed".into(), Vec::new()))
        }
        Command::Produce {
            source,
            target,
            mode,
        } => {
            let request = Request::Produce {
                source: source.clone(),
                target: target.clone(),
                mode: mode.unwrap_or(session.default_mode),
            };
            directive(session, request, std::mem::take(answers))
        }
        Command::Map {
            source,
            target,
            scope,
        } => {
            let request = Request::Map {
                source: source.clone(),
                target: target.clone(),
                scope: scope.clone(),
            };
            directive(session, request, std::mem::take(answers))
        }
        Command::Choose(a) => {
            answers.extend(a);
            Ok((format!("{} answers queued", answers.len()), Vec::new()))
        }
        Command::Rollback => {
            let txn = session.rollback(None).map_err(err)?;
            Ok((format!("rolled back transaction {txn}"), Vec::new()))
        }
        Command::Export(alias) => {
            let view = session.export(alias, export_dir).map_err(err)?;
            let message = match &view.path {
                Some(p) => format!("wrote {}", p.display()),
                None => format!("{} lines", view.text.lines().count()),
            };
            report.exports.push((view.alias, view.text));
            Ok((message, Vec::new()))
        }
        Command::Report(context) => {
            let view = session
                .context_view(context.as_deref().unwrap_or("global"))
                .map_err(err)?;
            let mut details: Vec<String> = view.mappings.clone();
            details.extend(
                view.unresolved
                    .iter()
                    .map(|u| format!("unresolved {} -> {}", u.reference.path, u.foreign)),
            );
            Ok((
                format!(
                    "{} mappings, {} unresolved",
                    view.mappings.len(),
                    view.unresolved.len()
                ),
                details,
            ))
        }
        Command::Expect(e) => {
            let (what, expected, actual) = match e {
                Expectation::Stubs { alias, count } => (
                    format!("stubs in {alias}"),
                    *count,
                    session.stub_count(alias).map_err(err)?,
                ),
                Expectation::AutoMappings(n) => (
                    "auto mappings".to_string(),
                    *n,
                    session.auto_mapping_count(),
                ),
                Expectation::Unresolved(n) => (
                    "unresolved references".to_string(),
                    *n,
                    census(session).iter().map(|c| c.unresolved).sum(),
                ),
            };
            if expected == actual {
                Ok((format!("{what} = {actual}"), Vec::new()))
            } else {
                Err(format!(
                    "ExpectationFailed: expected {expected} {what}, found {actual}"
                ))
            }
        }
    }
}

fn directive(session: &mut Session, request: Request, answers: Vec<usize>) -> CommandResult {
    match session.directive(request, answers).map_err(err)? {
        Outcome::Applied(view) => {
            let message = format!(
                "transaction {}: {} created, {} stubs, {} adapted",
                view.txn.map_or_else(|| "-".into(), |t| t.to_string()),
                view.created.len(),
                view.stubs_created.len(),
                view.adapted.len()
            );
            Ok((message, view.log))
        }
        Outcome::Pending { question, .. } => Err(format!(
            "ChoicePending: {} [{}]; add a `choose` line",
            question.prompt,
            question.options.join(", ")
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnippetReport {
    pub name: String,
    /// Every library element the snippet uses has a fixture mapping.
    pub fully_mapped: bool,
    pub unmapped: Vec<String>,
    pub stubs: usize,
    pub violations: usize,
    pub exported: bool,
    pub reparsed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusReport {
    pub dialect: String,
    pub autowrap: bool,
    pub snippets: Vec<SnippetReport>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CorpusReport {
    pub fn exported(&self) -> usize {
        self.snippets.iter().filter(|s| s.exported).count()
    }

    /// Every exported file reads back in its dialect.
    pub fn all_exports_reparse(&self) -> bool {
        self.snippets.iter().all(|s| !s.exported || s.reparsed)
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.snippets {
            writeln!(
                f,
                "{:<28} {:<8} stubs={:<2} violations={:<2} exported={:<5} reparsed={:<5}{}",
                s.name,
                if s.fully_mapped { "mapped" } else { "unmapped" },
                s.stubs,
                s.violations,
                s.exported,
                s.reparsed,
                s.error
                    .as_ref()
                    .map(|e| format!(" {e}"))
                    .unwrap_or_default()
            )?;
        }
        writeln!(
            f,
            "{}: {}/{} exported, autowrap={}, {:.2?}",
            self.dialect,
            self.exported(),
            self.snippets.len(),
            self.autowrap,
            self.elapsed
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("manifest has no [corpus] table")]
    NoCorpus,
    #[error("cannot read {path}: {error}")]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
    #[error(transparent)]
    Session(#[from] SessionError),
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|error| CorpusError::Io {
        path: path.to_path_buf(),
        error,
    })
}

/// Snippet files (`*.mproc`) of the corpus directory, sorted by name.
pub fn corpus_files(spec: &CorpusSpec) -> Result<Vec<PathBuf>, CorpusError> {
    let entries = std::fs::read_dir(&spec.dir).map_err(|error| CorpusError::Io {
        path: spec.dir.clone(),
        error,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .is_some_and(|e| e == Dialect::MiniProc.extension())
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Migrates every snippet into a fresh target with the manifest's rules and
/// mappings, optionally with Autowrap installed globally, then exports,
/// reparses and validates the result.
pub fn run_corpus(
    manifest: &Manifest,
    autowrap: bool,
    export_dir: Option<&Path>,
) -> Result<CorpusReport, CorpusError> {
    let start = Instant::now();
    let spec = manifest.corpus.as_ref().ok_or(CorpusError::NoCorpus)?;
    let skeleton = match &spec.skeleton {
        Some(p) => read(p)?,
        None => String::new(),
    };
    let mut snippets = Vec::new();
    for file in corpus_files(spec)? {
        let name = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = read(&file)?;
        let mut session = Session::new(name.clone());
        session.load_model("src", "MiniProc", &text)?;
        session.load_model("tgt", &spec.target_dialect, &skeleton)?;
        session.apply_rules_and_mappings(&manifest.rules, &manifest.mappings)?;
        if autowrap {
            session.install("Autowrap", &Default::default(), "global")?;
        }
        snippets.push(migrate_snippet(&mut session, &name, export_dir));
    }
    Ok(CorpusReport {
        dialect: spec.target_dialect.clone(),
        autowrap,
        snippets,
        elapsed: start.elapsed(),
    })
}

/// Library elements used by the source model that no mapping covers.
fn unmapped_library_uses(session: &Session) -> Vec<String> {
    let ws = &session.engine.ws;
    let src = session.model_id("src").expect("corpus source loaded");
    let m = ws.model(src).expect("corpus source loaded");
    let mapped: BTreeSet<NodeRef> = ws.mappings().iter().map(|mp| mp.source).collect();
    let mut out = BTreeSet::new();
    for id in m.subtree(m.root) {
        let n = m.get(id).expect("live node");
        let Some(referee) = n.referee.filter(|_| n.kind.is_reference()) else {
            continue;
        };
        let r = NodeRef::new(src, referee);
        let path = qualified_path(ws, r);
        if path.starts_with("src:@lib.") && !mapped.contains(&r) {
            out.insert(path);
        }
    }
    out.into_iter().collect()
}

fn migrate_snippet(session: &mut Session, name: &str, export_dir: Option<&Path>) -> SnippetReport {
    let unmapped = unmapped_library_uses(session);
    let mut report = SnippetReport {
        name: name.to_string(),
        fully_mapped: unmapped.is_empty(),
        unmapped,
        stubs: 0,
        violations: 0,
        exported: false,
        reparsed: false,
        error: None,
    };
    let ws = &session.engine.ws;
    let src = session.model_id("src").expect("corpus source loaded");
    let m = ws.model(src).expect("corpus source loaded");
    let modules: Vec<String> = m
        .get(m.root)
        .map(|r| r.children.clone())
        .unwrap_or_default()
        .into_iter()
        .filter(|c| m.kind(*c) == Some(NodeKind::Module))
        .map(|c| qualified_path(ws, NodeRef::new(src, c)))
        .collect();
    for module in modules {
        let request = Request::Produce {
            source: module,
            target: "tgt:".into(),
            mode: Default::default(),
        };
        if let Err(e) = session.directive(request, Vec::new()) {
            report.error = Some(err(e));
        }
    }
    let tgt = session.model_id("tgt").expect("corpus target loaded");
    let model = session.engine.ws.model(tgt).expect("corpus target loaded");
    report.stubs = model.stubs().len();
    report.violations = frontends::validate(model).len();
    let dialect = model.dialect;
    match session.export("tgt", None) {
        Ok(view) => {
            report.exported = true;
            match frontends::parse(dialect, "reparse", &view.text) {
                Ok(p) if p.unbound.is_empty() => report.reparsed = true,
                Ok(p) => {
                    report.error = Some(format!("reparse left {} unbound names", p.unbound.len()))
                }
                Err(e) => report.error = Some(format!("ParseError: {e}")),
            }
            if let Some(dir) = export_dir {
                let path = dir.join(format!("{name}.{}", dialect.extension()));
                if let Err(e) = std::fs::write(&path, &view.text) {
                    report.error = Some(format!("IoError: {}: {e}", path.display()));
                }
            }
        }
        Err(e) if report.error.is_none() => report.error = Some(err(e)),
        Err(_) => {}
    }
    report
}
