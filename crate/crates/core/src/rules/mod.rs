//! Scoped rule and mapping registries and the two lookup algorithms.
//!
//! Productive rules are looked up once per migrated source node, walking the
//! target's context chain innermost-first. Adaptive rules are looked up with a
//! double lookup: first the mappings visible from a reference (most concrete
//! first), then, for each mapping in order, the adaptive rules visible from
//! the reference.

mod mapping;
mod registry;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meta_model::{ContextId, MetaError, NodeRef, Workspace};

pub use mapping::{mappings_for, stub_of_reference, Mapping, MappingId, MappingOrigin};
pub use registry::{InstallationId, RuleInstallation, RuleRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleFamily {
    Productive,
    Adaptive,
}

/// Declarative description of a rule instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDescriptor {
    pub name: String,
    pub family: RuleFamily,
    pub params: BTreeMap<String, String>,
}

impl RuleDescriptor {
    pub fn new(name: impl Into<String>, family: RuleFamily) -> Self {
        Self {
            name: name.into(),
            family,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// `Name(k=v, ...)`, or just the name without parameters.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            self.name.clone()
        } else {
            let params: Vec<String> = self
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            format!("{}({})", self.name, params.join(", "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum LookupMode {
    /// First positive rule wins.
    #[default]
    Automatic,
    /// The user picks among all positive rules for the directive's root.
    MultipleChoice,
    /// The user picks at every productive lookup.
    Debug,
}

impl LookupMode {
    pub fn from_name(s: &str) -> Option<LookupMode> {
        match s.to_ascii_lowercase().as_str() {
            "auto" | "automatic" => Some(LookupMode::Automatic),
            "choice" | "multiplechoice" | "multiple-choice" => Some(LookupMode::MultipleChoice),
            "debug" => Some(LookupMode::Debug),
            _ => None,
        }
    }

    pub fn needs_chooser(self) -> bool {
        self != LookupMode::Automatic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuestionTopic {
    Rule,
    Argument,
}

/// A prompt put to the user through a [`Chooser`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub topic: QuestionTopic,
    pub prompt: String,
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ChoiceInterrupt {
    #[error("choice cancelled")]
    Cancelled,
    /// No answer is available yet; the directive must be replayed once the
    /// client answers.
    #[error("choice pending: {}", .0.prompt)]
    Pending(Question),
}

/// Callback answering rule and argument choices.
pub trait Chooser {
    fn choose(&mut self, question: &Question) -> Result<usize, ChoiceInterrupt>;
}

impl<F> Chooser for F
where
    F: FnMut(&Question) -> Result<usize, ChoiceInterrupt>,
{
    fn choose(&mut self, question: &Question) -> Result<usize, ChoiceInterrupt> {
        self(question)
    }
}

/// Answers questions from a fixed list; reports `Pending` once exhausted.
#[derive(Debug, Clone, Default)]
pub struct ScriptedChooser {
    answers: Vec<usize>,
    next: usize,
    pub asked: Vec<Question>,
}

impl ScriptedChooser {
    pub fn new(answers: Vec<usize>) -> Self {
        Self {
            answers,
            next: 0,
            asked: Vec::new(),
        }
    }

    pub fn answered(&self) -> usize {
        self.next
    }
}

impl Chooser for ScriptedChooser {
    fn choose(&mut self, question: &Question) -> Result<usize, ChoiceInterrupt> {
        self.asked.push(question.clone());
        match self.answers.get(self.next) {
            Some(&a) if a < question.options.len() => {
                self.next += 1;
                Ok(a)
            }
            Some(_) => Err(ChoiceInterrupt::Cancelled),
            None => Err(ChoiceInterrupt::Pending(question.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error("unknown context {0}")]
    UnknownContext(ContextId),
    #[error("mapping scope {scope} is not in the model of target {target}")]
    ScopeModelMismatch { scope: ContextId, target: NodeRef },
    #[error("{0} is not a declaration")]
    NotDeclaration(NodeRef),
    #[error("no productive rule found")]
    NoRuleFound,
    #[error("a chooser is required")]
    ChooserRequired,
    #[error("duplicate member `{name}`")]
    DuplicateMember { name: String },
    #[error("reference {0} does not point to a stub")]
    NotStubReference(NodeRef),
    #[error("condition of {0} does not hold")]
    ConditionFailed(String),
    #[error(transparent)]
    Choice(#[from] ChoiceInterrupt),
    #[error("{0}")]
    Failed(String),
}

/// Engine services offered to a productive rule while it runs.
pub trait Migrator {
    fn workspace(&self) -> &Workspace;
    fn workspace_mut(&mut self) -> &mut Workspace;
    /// Hands `source` back to the engine to be migrated under `target`.
    fn migrate(&mut self, source: NodeRef, target: NodeRef) -> Result<NodeRef, RuleError>;

    fn migrate_children(
        &mut self,
        source: NodeRef,
        target: NodeRef,
    ) -> Result<Vec<NodeRef>, RuleError> {
        let children = self.workspace().children(source);
        children
            .into_iter()
            .map(|c| self.migrate(c, target))
            .collect()
    }
}

/// Read-only view handed to adaptive conditions.
pub struct AdaptEnv<'a> {
    pub ws: &'a Workspace,
    pub chooser_available: bool,
}

/// Engine services offered to an adaptive rule while it runs.
pub trait Adapter {
    fn workspace(&self) -> &Workspace;
    fn workspace_mut(&mut self) -> &mut Workspace;
    fn chooser_available(&self) -> bool;
    fn choose(&mut self, question: &Question) -> Result<usize, RuleError>;
    /// Registers a produce-origin mapping.
    fn register_auto_mapping(
        &mut self,
        source: NodeRef,
        target: NodeRef,
        scope: ContextId,
    ) -> Result<MappingId, RuleError>;
    /// Runs the regular adaptive lookup for `reference` against `mapping`.
    /// Returns the adapted reference when a rule fired.
    fn adapt_with(
        &mut self,
        reference: NodeRef,
        mapping: &Mapping,
    ) -> Result<Option<NodeRef>, RuleError>;
}

pub trait ProductiveRule: Send + Sync {
    fn descriptor(&self) -> &RuleDescriptor;
    /// Side-effect free.
    fn condition(&self, ws: &Workspace, source: NodeRef, target: NodeRef) -> bool;
    /// Creates the migrated version of `source` under `target`; returns the
    /// produced node.
    fn apply(
        &self,
        cx: &mut dyn Migrator,
        source: NodeRef,
        target: NodeRef,
    ) -> Result<NodeRef, RuleError>;
}

pub trait AdaptiveRule: Send + Sync {
    fn descriptor(&self) -> &RuleDescriptor;
    /// Side-effect free. `mapping` is `None` only for fallback rules tested
    /// when no mapping applies to the reference.
    fn condition(&self, env: &AdaptEnv<'_>, reference: NodeRef, mapping: Option<&Mapping>) -> bool;
    /// Adapts the reference; returns the node now standing for it.
    fn apply(
        &self,
        cx: &mut dyn Adapter,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError>;
}

#[derive(Clone)]
pub enum Rule {
    Productive(Arc<dyn ProductiveRule>),
    Adaptive(Arc<dyn AdaptiveRule>),
}

impl Rule {
    pub fn productive(rule: impl ProductiveRule + 'static) -> Self {
        Rule::Productive(Arc::new(rule))
    }

    pub fn adaptive(rule: impl AdaptiveRule + 'static) -> Self {
        Rule::Adaptive(Arc::new(rule))
    }

    pub fn descriptor(&self) -> &RuleDescriptor {
        match self {
            Rule::Productive(r) => r.descriptor(),
            Rule::Adaptive(r) => r.descriptor(),
        }
    }

    pub fn name(&self) -> &str {
        &self.descriptor().name
    }

    pub fn family(&self) -> RuleFamily {
        match self {
            Rule::Productive(_) => RuleFamily::Productive,
            Rule::Adaptive(_) => RuleFamily::Adaptive,
        }
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({})", self.family(), self.descriptor().label())
    }
}
