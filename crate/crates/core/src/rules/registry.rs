use serde::{Deserialize, Serialize};

use super::{
    AdaptEnv, Chooser, LookupMode, Mapping, Question, QuestionTopic, Rule, RuleError, RuleFamily,
};
use crate::meta_model::{context_path, node_path, ContextId, NodeRef, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstallationId(pub u64);

/// A rule installed at a context. The same rule may be installed at several
/// contexts; each installation is distinct.
#[derive(Debug, Clone)]
pub struct RuleInstallation {
    pub id: InstallationId,
    pub rule: Rule,
    pub context: ContextId,
    pub seq: u64,
}

#[derive(Debug, Clone, Default)]
pub struct RuleRegistry {
    installations: Vec<RuleInstallation>,
    next_seq: u64,
}

impl RuleRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn install(
        &mut self,
        ws: &Workspace,
        rule: Rule,
        context: ContextId,
    ) -> Result<InstallationId, RuleError> {
        if !ws.context_exists(context) {
            return Err(RuleError::UnknownContext(context));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let id = InstallationId(seq);
        self.installations.push(RuleInstallation {
            id,
            rule,
            context,
            seq,
        });
        Ok(id)
    }

    pub fn uninstall(&mut self, id: InstallationId) -> bool {
        let before = self.installations.len();
        self.installations.retain(|i| i.id != id);
        before != self.installations.len()
    }

    pub fn installations(&self) -> &[RuleInstallation] {
        &self.installations
    }

    pub fn get(&self, id: InstallationId) -> Option<&RuleInstallation> {
        self.installations.iter().find(|i| i.id == id)
    }

    /// Installations of `family` visible from `chain`, innermost context
    /// first and newest installation first within a context.
    fn along(&self, chain: &[ContextId], family: RuleFamily) -> Vec<&RuleInstallation> {
        let mut out = Vec::new();
        for ctx in chain {
            let mut here: Vec<&RuleInstallation> = self
                .installations
                .iter()
                .filter(|i| i.context == *ctx && i.rule.family() == family)
                .collect();
            here.sort_by_key(|i| std::cmp::Reverse(i.seq));
            out.extend(here);
        }
        out
    }

    /// Every installation visible from `node`, in lookup order.
    pub fn visible(
        &self,
        ws: &Workspace,
        node: NodeRef,
        family: RuleFamily,
    ) -> Result<Vec<&RuleInstallation>, RuleError> {
        let chain = ws.context_chain(node)?;
        Ok(self.along(&chain, family))
    }

    /// All productive installations whose condition accepts migrating
    /// `source` under `target`, in lookup order.
    pub fn productive_candidates(
        &self,
        ws: &Workspace,
        source: NodeRef,
        target: NodeRef,
    ) -> Result<Vec<&RuleInstallation>, RuleError> {
        let chain = ws.context_chain(target)?;
        Ok(self
            .along(&chain, RuleFamily::Productive)
            .into_iter()
            .filter(|i| match &i.rule {
                Rule::Productive(r) => r.condition(ws, source, target),
                Rule::Adaptive(_) => false,
            })
            .collect())
    }

    /// Chooses the productive rule for (`source`, `target`).
    ///
    /// Automatic mode returns the first positive installation. The other
    /// modes hand every positive installation along the chain to `chooser`.
    pub fn lookup_productive(
        &self,
        ws: &Workspace,
        source: NodeRef,
        target: NodeRef,
        mode: LookupMode,
        chooser: Option<&mut dyn Chooser>,
    ) -> Result<RuleInstallation, RuleError> {
        match mode {
            LookupMode::Automatic => {
                let chain = ws.context_chain(target)?;
                self.along(&chain, RuleFamily::Productive)
                    .into_iter()
                    .find(|i| match &i.rule {
                        Rule::Productive(r) => r.condition(ws, source, target),
                        Rule::Adaptive(_) => false,
                    })
                    .map(|i| (*i).clone())
                    .ok_or(RuleError::NoRuleFound)
            }
            LookupMode::MultipleChoice | LookupMode::Debug => {
                let chooser = chooser.ok_or(RuleError::ChooserRequired)?;
                let candidates = self.productive_candidates(ws, source, target)?;
                if candidates.is_empty() {
                    return Err(RuleError::NoRuleFound);
                }
                let question = Question {
                    topic: QuestionTopic::Rule,
                    prompt: format!(
                        "rule for {} `{}` into `{}`",
                        ws.kind(source).map(|k| k.name()).unwrap_or("?"),
                        node_path(ws, source),
                        node_path(ws, target)
                    ),
                    options: candidates
                        .iter()
                        .map(|i| {
                            format!(
                                "{} @ {}",
                                i.rule.descriptor().label(),
                                context_path(ws, i.context)
                            )
                        })
                        .collect(),
                };
                let pick = chooser.choose(&question)?;
                candidates
                    .get(pick)
                    .map(|i| (*i).clone())
                    .ok_or(RuleError::Failed(format!("choice {pick} out of range")))
            }
        }
    }

    /// Adaptive installations accepting (`reference`, `mapping`), in lookup order.
    pub fn adaptive_candidates(
        &self,
        env: &AdaptEnv<'_>,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<Vec<&RuleInstallation>, RuleError> {
        let chain = env.ws.context_chain(reference)?;
        Ok(self
            .along(&chain, RuleFamily::Adaptive)
            .into_iter()
            .filter(|i| match &i.rule {
                Rule::Adaptive(r) => r.condition(env, reference, mapping),
                Rule::Productive(_) => false,
            })
            .collect())
    }

    /// First adaptive installation whose condition holds for the pair.
    pub fn lookup_adaptive(
        &self,
        env: &AdaptEnv<'_>,
        reference: NodeRef,
        mapping: &Mapping,
    ) -> Result<Option<RuleInstallation>, RuleError> {
        Ok(self
            .adaptive_candidates(env, reference, Some(mapping))?
            .first()
            .map(|i| (*i).clone()))
    }

    /// First fallback rule (tested without a mapping) accepting `reference`.
    pub fn lookup_fallback(
        &self,
        env: &AdaptEnv<'_>,
        reference: NodeRef,
    ) -> Result<Option<RuleInstallation>, RuleError> {
        Ok(self
            .adaptive_candidates(env, reference, None)?
            .first()
            .map(|i| (*i).clone()))
    }
}
