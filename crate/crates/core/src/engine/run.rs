//! Per-directive state shared by the productive recursion and the adaptive
//! phase. The engine hands a `Run` to rules as their [`Migrator`] or
//! [`Adapter`].

use log::debug;

use crate::meta_model::{qualified_path, ContextId, NodeRef, Workspace};
use crate::rules::{
    mappings_for, stub_of_reference, AdaptEnv, Adapter, Chooser, LookupMode, Mapping, MappingId,
    MappingOrigin, Migrator, Question, Rule, RuleError, RuleInstallation, RuleRegistry,
};

pub(crate) struct Run<'a, 'c> {
    pub ws: &'a mut Workspace,
    pub rules: &'a RuleRegistry,
    pub chooser: Option<&'a mut (dyn Chooser + 'c)>,
    pub mode: LookupMode,
    /// Scope of the mappings registered automatically by this directive.
    pub auto_scope: Option<ContextId>,
    pub lookups: usize,
    pub mappings: Vec<MappingId>,
    pub adapted: Vec<NodeRef>,
    pub log: Vec<String>,
    /// First rule whose operation failed, with its error.
    pub failure: Option<(String, RuleError)>,
}

impl<'a, 'c> Run<'a, 'c> {
    pub fn new(
        ws: &'a mut Workspace,
        rules: &'a RuleRegistry,
        chooser: Option<&'a mut (dyn Chooser + 'c)>,
        mode: LookupMode,
    ) -> Self {
        Self {
            ws,
            rules,
            chooser,
            mode,
            auto_scope: None,
            lookups: 0,
            mappings: Vec::new(),
            adapted: Vec::new(),
            log: Vec::new(),
            failure: None,
        }
    }

    fn note(&mut self, line: String) {
        debug!("{line}");
        self.log.push(line);
    }

    fn fail(&mut self, label: &str, err: RuleError) -> RuleError {
        if self.failure.is_none() && !matches!(err, RuleError::Choice(_)) {
            self.failure = Some((label.to_string(), err.clone()));
        }
        err
    }

    /// Lookup mode for the next productive lookup: multiple choice asks only
    /// for the directive's root, debug asks every time.
    fn next_mode(&self) -> LookupMode {
        match self.mode {
            LookupMode::MultipleChoice if self.lookups > 0 => LookupMode::Automatic,
            m => m,
        }
    }

    fn apply_adaptive(
        &mut self,
        inst: &RuleInstallation,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError> {
        let Rule::Adaptive(rule) = &inst.rule else {
            return Err(RuleError::Failed(
                "productive rule in adaptive lookup".into(),
            ));
        };
        let label = rule.descriptor().label();
        let before = qualified_path(self.ws, reference);
        let adapted = match rule.apply(self, reference, mapping) {
            Ok(r) => r,
            Err(e) => return Err(self.fail(&label, e)),
        };
        self.note(format!(
            "adapt {label}: {before} -> {}",
            qualified_path(self.ws, adapted)
        ));
        self.adapted.push(adapted);
        Ok(adapted)
    }

    /// Double lookup for one stub-bound reference: mappings most concrete
    /// first, then the adaptive rules visible from the reference. Applies the
    /// first positive pair. With `fallback`, rules tested without a mapping
    /// get a chance when no mapping applies at all.
    pub fn adapt(
        &mut self,
        reference: NodeRef,
        fallback: bool,
    ) -> Result<Option<NodeRef>, RuleError> {
        let mappings = mappings_for(self.ws, reference)?;
        for m in &mappings {
            if let Some(inst) = self.find_adaptive(reference, Some(m))? {
                return self.apply_adaptive(&inst, reference, Some(m)).map(Some);
            }
        }
        if mappings.is_empty() && fallback {
            if let Some(inst) = self.find_adaptive(reference, None)? {
                return self.apply_adaptive(&inst, reference, None).map(Some);
            }
        }
        Ok(None)
    }

    fn find_adaptive(
        &self,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<Option<RuleInstallation>, RuleError> {
        let env = AdaptEnv {
            ws: self.ws,
            chooser_available: self.chooser.is_some(),
        };
        match mapping {
            Some(m) => self.rules.lookup_adaptive(&env, reference, m),
            None => self.rules.lookup_fallback(&env, reference),
        }
    }

    /// References in `scope` waiting on a stub for `source`.
    pub fn waiting_references(&self, source: NodeRef, scope: ContextId) -> Vec<NodeRef> {
        let Some(scope) = scope.node() else {
            return Vec::new();
        };
        let Ok(model) = self.ws.model(scope.model) else {
            return Vec::new();
        };
        let mut refs = Vec::new();
        for stub in self.ws.stubs(scope.model) {
            let leads_to_source = self
                .ws
                .get(stub)
                .and_then(|n| n.payload.stub())
                .is_some_and(|t| t.foreign == source);
            if leads_to_source {
                refs.extend(
                    self.ws
                        .incoming(stub)
                        .into_iter()
                        .filter(|r| model.is_ancestor_or_self(scope.node, r.node)),
                );
            }
        }
        refs.sort();
        refs
    }

    /// Adaptive phase for a freshly registered mapping. Returns references
    /// that stayed unresolved.
    pub fn adaptive_phase(&mut self, mapping: &Mapping) -> Result<Vec<NodeRef>, RuleError> {
        let mut left = Vec::new();
        for r in self.waiting_references(mapping.source, mapping.scope) {
            if stub_of_reference(self.ws, r).is_none() {
                continue;
            }
            if self.adapt(r, false)?.is_none() {
                left.push(r);
            }
        }
        Ok(left)
    }
}

impl Migrator for Run<'_, '_> {
    fn workspace(&self) -> &Workspace {
        self.ws
    }

    fn workspace_mut(&mut self) -> &mut Workspace {
        self.ws
    }

    fn migrate(&mut self, source: NodeRef, target: NodeRef) -> Result<NodeRef, RuleError> {
        let mode = self.next_mode();
        self.lookups += 1;
        let chooser = self.chooser.as_mut().map(|c| &mut **c as &mut dyn Chooser);
        let inst = self
            .rules
            .lookup_productive(self.ws, source, target, mode, chooser)?;
        let Rule::Productive(rule) = &inst.rule else {
            return Err(RuleError::Failed(
                "adaptive rule in productive lookup".into(),
            ));
        };
        let label = rule.descriptor().label();
        let produced = match rule.apply(self, source, target) {
            Ok(p) => p,
            Err(e) => return Err(self.fail(&label, e)),
        };
        if self.ws.node(produced)?.origin.is_none() {
            self.ws.set_origin(produced, Some(source))?;
        }
        self.note(format!(
            "apply {label}: {} -> {}",
            qualified_path(self.ws, source),
            qualified_path(self.ws, produced)
        ));
        if self.ws.is_declaration(source) && self.ws.is_declaration(produced) {
            if let Some(scope) = self.auto_scope {
                let id = self.ws.register_mapping(
                    source,
                    produced,
                    scope,
                    MappingOrigin::ProduceAuto,
                )?;
                self.mappings.push(id);
                self.note(format!(
                    "mapping {} => {} @ {}",
                    qualified_path(self.ws, source),
                    qualified_path(self.ws, produced),
                    crate::meta_model::context_path(self.ws, scope)
                ));
            }
        }
        Ok(produced)
    }
}

impl Adapter for Run<'_, '_> {
    fn workspace(&self) -> &Workspace {
        self.ws
    }

    fn workspace_mut(&mut self) -> &mut Workspace {
        self.ws
    }

    fn chooser_available(&self) -> bool {
        self.chooser.is_some()
    }

    fn choose(&mut self, question: &Question) -> Result<usize, RuleError> {
        let chooser = self.chooser.as_mut().ok_or(RuleError::ChooserRequired)?;
        Ok(chooser.choose(question)?)
    }

    fn register_auto_mapping(
        &mut self,
        source: NodeRef,
        target: NodeRef,
        scope: ContextId,
    ) -> Result<MappingId, RuleError> {
        let id = self
            .ws
            .register_mapping(source, target, scope, MappingOrigin::ProduceAuto)?;
        self.mappings.push(id);
        self.note(format!(
            "mapping {} => {} @ {}",
            qualified_path(self.ws, source),
            qualified_path(self.ws, target),
            crate::meta_model::context_path(self.ws, scope)
        ));
        Ok(id)
    }

    fn adapt_with(
        &mut self,
        reference: NodeRef,
        mapping: &Mapping,
    ) -> Result<Option<NodeRef>, RuleError> {
        match self.find_adaptive(reference, Some(mapping))? {
            Some(inst) => self
                .apply_adaptive(&inst, reference, Some(mapping))
                .map(Some),
            None => Ok(None),
        }
    }
}
