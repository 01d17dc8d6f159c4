use crate::frontends::dialect::{library_type, DialectSpec};
use crate::meta_model::{
    node_path, ContextId, NodeId, NodeKind, NodeRef, Payload, Shape, Workspace,
};
use crate::rules::{
    mappings_for, stub_of_reference, AdaptEnv, Adapter, AdaptiveRule, Mapping, Question,
    QuestionTopic, RuleDescriptor, RuleError, RuleFamily,
};

/// Name of the class collecting skeletons of unmapped library elements.
pub const SHIM_CLASS: &str = "LibraryShims";

/// The reference waits on a stub for exactly the mapping's source.
fn waits_on(ws: &Workspace, reference: NodeRef, mapping: &Mapping) -> bool {
    stub_of_reference(ws, reference).is_some_and(|(_, t)| t.foreign == mapping.source)
}

fn enclosing_class(ws: &Workspace, r: NodeRef) -> Option<NodeRef> {
    let mut cur = ws.parent(r);
    while let Some(p) = cur {
        if ws.kind(p) == Some(NodeKind::Class) {
            return Some(p);
        }
        cur = ws.parent(p);
    }
    None
}

/// A method-like target: a method or library routine owned by a class.
/// Returns (owning class, is static).
fn class_member(ws: &Workspace, target: NodeRef) -> Option<(NodeRef, bool)> {
    let n = ws.get(target)?;
    if !matches!(
        n.kind,
        NodeKind::Method | NodeKind::LibraryRoutineDeclaration
    ) {
        return None;
    }
    let owner = ws.parent(target)?;
    (ws.kind(owner) == Some(NodeKind::Class)).then_some((owner, n.payload.is_static()))
}

fn is_function_call(ws: &Workspace, r: NodeRef) -> bool {
    ws.kind(r) == Some(NodeKind::FunctionInvocation)
}

/// Replaces the function invocation `call` in place by a method invocation
/// on `target` whose first child is built by `receiver`; `args` are moved
/// over in order.
fn replace_with_invocation(
    ws: &mut Workspace,
    call: NodeRef,
    target: NodeRef,
    receiver: impl FnOnce(&mut Workspace, NodeRef) -> Result<(), RuleError>,
    args: &[NodeRef],
) -> Result<NodeRef, RuleError> {
    let parent = ws
        .parent(call)
        .ok_or(RuleError::Failed("invocation has no parent".into()))?;
    let index = ws
        .children(parent)
        .iter()
        .position(|c| *c == call)
        .expect("child of its parent");
    let old = ws.node(call)?.clone();
    let name = ws.node(target)?.name.clone();
    let inv = ws.insert_node(
        parent,
        index,
        NodeKind::MethodInvocation,
        name,
        Payload::None,
    )?;
    ws.set_origin(inv, old.origin)?;
    receiver(ws, inv)?;
    for a in args {
        let len = ws.children(inv).len();
        ws.move_node(*a, inv, len)?;
    }
    ws.set_referee(inv, Some(target.node))?;
    ws.remove_subtree(call)?;
    Ok(inv)
}

fn type_receiver(class: NodeRef) -> impl FnOnce(&mut Workspace, NodeRef) -> Result<(), RuleError> {
    move |ws, inv| {
        let name = ws.node(class)?.name.clone();
        let tref = ws.add_node(inv, NodeKind::TypeReference, name, Payload::None)?;
        ws.set_referee(tref, Some(class.node))?;
        Ok(())
    }
}

/// Rebinds a variable access or type reference to the mapped declaration.
#[derive(Debug, Clone)]
pub struct SimpleRename {
    desc: RuleDescriptor,
}

impl SimpleRename {
    pub fn new() -> Self {
        Self {
            desc: RuleDescriptor::new("SimpleRename", RuleFamily::Adaptive),
        }
    }
}

impl Default for SimpleRename {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptiveRule for SimpleRename {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, env: &AdaptEnv<'_>, reference: NodeRef, mapping: Option<&Mapping>) -> bool {
        let Some(m) = mapping else { return false };
        let Some(kind) = env.ws.kind(reference) else {
            return false;
        };
        let expected = match kind {
            NodeKind::VariableAccess => Shape::Variable,
            NodeKind::TypeReference => Shape::Type,
            _ => return false,
        };
        m.target.model == reference.model
            && waits_on(env.ws, reference, m)
            && env.ws.shape_of(m.target) == Some(expected)
            && env.ws.kind(m.target) != Some(NodeKind::StubDeclaration)
    }

    fn apply(
        &self,
        cx: &mut dyn Adapter,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError> {
        let m = mapping.ok_or(RuleError::ConditionFailed(self.desc.name.clone()))?;
        cx.workspace_mut()
            .set_referee(reference, Some(m.target.node))?;
        Ok(reference)
    }
}

/// Function call to a static method: `Owner.method(args)`.
#[derive(Debug, Clone)]
pub struct RenameAdaptToStaticReceiver {
    desc: RuleDescriptor,
}

impl RenameAdaptToStaticReceiver {
    pub fn new() -> Self {
        Self {
            desc: RuleDescriptor::new("RenameAdaptToStaticReceiver", RuleFamily::Adaptive),
        }
    }
}

impl Default for RenameAdaptToStaticReceiver {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptiveRule for RenameAdaptToStaticReceiver {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, env: &AdaptEnv<'_>, reference: NodeRef, mapping: Option<&Mapping>) -> bool {
        let Some(m) = mapping else { return false };
        m.target.model == reference.model
            && is_function_call(env.ws, reference)
            && waits_on(env.ws, reference, m)
            && class_member(env.ws, m.target).is_some_and(|(_, is_static)| is_static)
    }

    fn apply(
        &self,
        cx: &mut dyn Adapter,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError> {
        let m = mapping.ok_or(RuleError::ConditionFailed(self.desc.name.clone()))?;
        let ws = cx.workspace_mut();
        let (class, _) =
            class_member(ws, m.target).ok_or(RuleError::ConditionFailed(self.desc.name.clone()))?;
        let args = ws.children(reference);
        replace_with_invocation(ws, reference, m.target, type_receiver(class), &args)
    }
}

/// Function call to an instance method of the enclosing class: `this.method(args)`.
#[derive(Debug, Clone)]
pub struct RenameAdaptToSameClassReceiver {
    desc: RuleDescriptor,
}

impl RenameAdaptToSameClassReceiver {
    pub fn new() -> Self {
        Self {
            desc: RuleDescriptor::new("RenameAdaptToSameClassReceiver", RuleFamily::Adaptive),
        }
    }
}

impl Default for RenameAdaptToSameClassReceiver {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptiveRule for RenameAdaptToSameClassReceiver {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, env: &AdaptEnv<'_>, reference: NodeRef, mapping: Option<&Mapping>) -> bool {
        let Some(m) = mapping else { return false };
        m.target.model == reference.model
            && is_function_call(env.ws, reference)
            && waits_on(env.ws, reference, m)
            && match class_member(env.ws, m.target) {
                Some((owner, false)) => enclosing_class(env.ws, reference) == Some(owner),
                _ => false,
            }
    }

    fn apply(
        &self,
        cx: &mut dyn Adapter,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError> {
        let m = mapping.ok_or(RuleError::ConditionFailed(self.desc.name.clone()))?;
        let ws = cx.workspace_mut();
        let args = ws.children(reference);
        let this = |ws: &mut Workspace, inv: NodeRef| -> Result<(), RuleError> {
            ws.add_node(inv, NodeKind::ThisReceiver, None, Payload::None)?;
            Ok(())
        };
        replace_with_invocation(ws, reference, m.target, this, &args)
    }
}

/// Function call to an instance method of another class: the user picks
/// which argument becomes the receiver.
#[derive(Debug, Clone)]
pub struct RenameAdaptToArgumentReceiver {
    desc: RuleDescriptor,
}

impl RenameAdaptToArgumentReceiver {
    pub fn new() -> Self {
        Self {
            desc: RuleDescriptor::new("RenameAdaptToArgumentReceiver", RuleFamily::Adaptive),
        }
    }
}

impl Default for RenameAdaptToArgumentReceiver {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptiveRule for RenameAdaptToArgumentReceiver {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, env: &AdaptEnv<'_>, reference: NodeRef, mapping: Option<&Mapping>) -> bool {
        let Some(m) = mapping else { return false };
        env.chooser_available
            && m.target.model == reference.model
            && is_function_call(env.ws, reference)
            && waits_on(env.ws, reference, m)
            && !env.ws.children(reference).is_empty()
            && match class_member(env.ws, m.target) {
                Some((owner, false)) => enclosing_class(env.ws, reference) != Some(owner),
                _ => false,
            }
    }

    fn apply(
        &self,
        cx: &mut dyn Adapter,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError> {
        let m = mapping.ok_or(RuleError::ConditionFailed(self.desc.name.clone()))?;
        if !cx.chooser_available() {
            return Err(RuleError::ChooserRequired);
        }
        let args = cx.workspace().children(reference);
        if args.is_empty() {
            return Err(RuleError::ConditionFailed(self.desc.name.clone()));
        }
        let question = Question {
            topic: QuestionTopic::Argument,
            prompt: format!(
                "receiver for `{}` among the arguments of `{}`",
                node_path(cx.workspace(), m.target),
                cx.workspace().node(reference)?.name_or_empty()
            ),
            options: args
                .iter()
                .map(|a| {
                    crate::frontends::print_node(
                        cx.workspace().model(a.model).expect("live"),
                        a.node,
                    )
                    .trim()
                    .to_string()
                })
                .collect(),
        };
        let pick = cx.choose(&question)?;
        let receiver_arg = *args
            .get(pick)
            .ok_or(RuleError::Failed(format!("choice {pick} out of range")))?;
        let rest: Vec<NodeRef> = args.into_iter().filter(|a| *a != receiver_arg).collect();
        let ws = cx.workspace_mut();
        let recv = move |ws: &mut Workspace, inv: NodeRef| -> Result<(), RuleError> {
            ws.move_node(receiver_arg, inv, 0)?;
            Ok(())
        };
        replace_with_invocation(ws, reference, m.target, recv, &rest)
    }
}

/// Fallback for references to library elements nobody mapped: creates an
/// empty skeleton in the target, maps the library element onto it and lets
/// the regular adaptive rules finish the job.
#[derive(Debug, Clone)]
pub struct Autowrap {
    desc: RuleDescriptor,
}

impl Autowrap {
    pub fn new() -> Self {
        Self {
            desc: RuleDescriptor::new("Autowrap", RuleFamily::Adaptive),
        }
    }
}

impl Default for Autowrap {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptiveRule for Autowrap {
    fn descriptor(&self) -> &RuleDescriptor {
        &self.desc
    }

    fn condition(&self, env: &AdaptEnv<'_>, reference: NodeRef, mapping: Option<&Mapping>) -> bool {
        if mapping.is_some() {
            return false;
        }
        let Some((_, stub)) = stub_of_reference(env.ws, reference) else {
            return false;
        };
        let in_library = env
            .ws
            .model(stub.foreign.model)
            .is_ok_and(|m| m.in_library(stub.foreign.node));
        let oo = env
            .ws
            .model(reference.model)
            .is_ok_and(|m| DialectSpec::get(m.dialect).is_object_oriented());
        in_library && oo && mappings_for(env.ws, reference).is_ok_and(|v| v.is_empty())
    }

    fn apply(
        &self,
        cx: &mut dyn Adapter,
        reference: NodeRef,
        mapping: Option<&Mapping>,
    ) -> Result<NodeRef, RuleError> {
        if mapping.is_some() {
            return Err(RuleError::ConditionFailed(self.desc.name.clone()));
        }
        let (_, stub) = stub_of_reference(cx.workspace(), reference)
            .ok_or(RuleError::NotStubReference(reference))?;
        let foreign = cx.workspace().node(stub.foreign)?.clone();
        let name = foreign.name.clone().unwrap_or_else(|| "wrapped".into());
        let host = reference.model;
        let root = cx.workspace().root(host)?;
        let arity = match cx.workspace().kind(reference) {
            Some(NodeKind::FunctionInvocation | NodeKind::MethodInvocation) => {
                cx.workspace().children(reference).len()
            }
            _ => 0,
        };
        let returns = foreign.children.iter().any(|c| {
            cx.workspace().kind(NodeRef::new(stub.foreign.model, *c))
                == Some(NodeKind::TypeReference)
        });
        let ws = cx.workspace_mut();
        let skeleton = match stub.shape {
            Shape::Type => existing_or(ws, root, &name, |ws| {
                let index = ws
                    .model(host)?
                    .find_child(root.node, SHIM_CLASS)
                    .map_or(0, |_| 1);
                Ok(ws.insert_node(
                    root,
                    index,
                    NodeKind::Class,
                    Some(name.clone()),
                    Payload::None,
                )?)
            })?,
            Shape::Callable | Shape::Variable => {
                let shims = existing_or(ws, root, SHIM_CLASS, |ws| {
                    Ok(ws.insert_node(
                        root,
                        0,
                        NodeKind::Class,
                        Some(SHIM_CLASS.into()),
                        Payload::None,
                    )?)
                })?;
                existing_or(ws, shims, &name, |ws| {
                    if stub.shape == Shape::Callable {
                        wrap_routine(ws, shims, &name, arity, returns)
                    } else {
                        let attr = ws.add_node(
                            shims,
                            NodeKind::AttributeDeclaration,
                            Some(name.clone()),
                            Payload::Static(true),
                        )?;
                        add_library_type(ws, attr, TypeChoice::Top)?;
                        Ok(attr)
                    }
                })?
            }
        };
        ws.set_origin(skeleton, Some(stub.foreign))?;
        let id = cx.register_auto_mapping(stub.foreign, skeleton, ContextId::Decl(root))?;
        let m = cx
            .workspace()
            .mapping(id)
            .cloned()
            .ok_or(RuleError::Failed("mapping vanished".into()))?;
        Ok(cx.adapt_with(reference, &m)?.unwrap_or(reference))
    }
}

fn existing_or(
    ws: &mut Workspace,
    parent: NodeRef,
    name: &str,
    create: impl FnOnce(&mut Workspace) -> Result<NodeRef, RuleError>,
) -> Result<NodeRef, RuleError> {
    match ws.model(parent.model)?.find_child(parent.node, name) {
        Some(id) => Ok(NodeRef::new(parent.model, id)),
        None => create(ws),
    }
}

enum TypeChoice {
    Top,
    Void,
}

fn add_library_type(
    ws: &mut Workspace,
    owner: NodeRef,
    choice: TypeChoice,
) -> Result<(), RuleError> {
    let model = ws.model(owner.model)?;
    let spec = DialectSpec::get(model.dialect);
    let name = match choice {
        TypeChoice::Top => Some(spec.top_type),
        TypeChoice::Void => spec.void_type,
    };
    let Some(name) = name else { return Ok(()) };
    let decl: Option<NodeId> = library_type(model, name);
    let tref = ws.add_node(
        owner,
        NodeKind::TypeReference,
        Some(name.to_string()),
        Payload::None,
    )?;
    ws.set_referee(tref, decl)?;
    Ok(())
}

fn wrap_routine(
    ws: &mut Workspace,
    shims: NodeRef,
    name: &str,
    arity: usize,
    returns: bool,
) -> Result<NodeRef, RuleError> {
    let method = ws.add_node(
        shims,
        NodeKind::Method,
        Some(name.to_string()),
        Payload::Static(true),
    )?;
    add_library_type(
        ws,
        method,
        if returns {
            TypeChoice::Top
        } else {
            TypeChoice::Void
        },
    )?;
    for i in 0..arity {
        let p = ws.add_node(
            method,
            NodeKind::Parameter,
            Some(format!("arg{i}")),
            Payload::None,
        )?;
        add_library_type(ws, p, TypeChoice::Top)?;
    }
    Ok(method)
}
