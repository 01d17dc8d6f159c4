//! Deterministic pretty printer: two-space indent, stable child order.
//!
//! Any node of any model can be printed (illegal kinds get a best-effort
//! rendering so inconsistent states stay inspectable); only violation-free
//! models are exported.

use super::validate::validate;
use super::ExportError;
use crate::meta_model::{AsgNode, Dialect, Model, NodeId, NodeKind, Payload};

/// Source text of a whole model. Fails when the model has violations.
pub fn print_model(model: &Model) -> Result<String, ExportError> {
    let violations = validate(model);
    if !violations.is_empty() {
        return Err(ExportError::NotExportable(violations));
    }
    Ok(print_node(model, model.root))
}

/// Source text of the subtree at `id`, without legality checks.
pub fn print_node(model: &Model, id: NodeId) -> String {
    let mut p = Printer {
        m: model,
        dialect: model.dialect,
        out: String::new(),
    };
    match model.get(id) {
        Some(n) if is_expression(n.kind) => {
            let e = p.expr(id);
            p.out.push_str(&e);
            p.out.push('\n');
        }
        Some(_) => p.decl_or_stmt(id, 0),
        None => {}
    }
    p.out
}

fn is_expression(kind: NodeKind) -> bool {
    super::dialect::is_expression(kind)
        || matches!(kind, NodeKind::TypeReference | NodeKind::ThisReceiver)
}

struct Printer<'a> {
    m: &'a Model,
    dialect: Dialect,
    out: String,
}

impl Printer<'_> {
    fn node(&self, id: NodeId) -> &AsgNode {
        self.m.get(id).expect("printed node exists")
    }

    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn blank(&mut self) {
        if !self.out.is_empty() && !self.out.ends_with("\n\n") {
            self.out.push('\n');
        }
    }

    fn proc(&self) -> bool {
        self.dialect == Dialect::MiniProc
    }

    /// Name shown for a reference: its referee's name when bound, else the
    /// identifier recorded on the node.
    fn ref_name(&self, id: NodeId) -> String {
        let n = self.node(id);
        n.referee
            .and_then(|d| self.m.get(d))
            .and_then(|d| d.name.clone())
            .or_else(|| n.name.clone())
            .unwrap_or_else(|| "?".into())
    }

    fn type_child(&self, id: NodeId) -> Option<NodeId> {
        self.m
            .children(id)
            .iter()
            .copied()
            .find(|c| self.node(*c).kind == NodeKind::TypeReference)
    }

    fn type_name(&self, id: NodeId) -> Option<String> {
        self.type_child(id).map(|t| self.ref_name(t))
    }

    fn body_children(&self, id: NodeId) -> Vec<NodeId> {
        self.m
            .children(id)
            .iter()
            .copied()
            .filter(|c| {
                !matches!(
                    self.node(*c).kind,
                    NodeKind::TypeReference | NodeKind::Parameter
                )
            })
            .collect()
    }

    fn params(&self, id: NodeId) -> String {
        let params: Vec<String> = self
            .m
            .children(id)
            .iter()
            .copied()
            .filter(|c| self.node(*c).kind == NodeKind::Parameter)
            .enumerate()
            .map(|(i, p)| {
                let name = self.node(p).name.clone();
                let ty = self.type_name(p);
                match self.dialect {
                    Dialect::MiniProc => match ty {
                        Some(t) => format!("{} As {t}", name.unwrap_or_else(|| format!("p{i}"))),
                        None => name.unwrap_or_else(|| format!("p{i}")),
                    },
                    Dialect::MiniOO => match (ty, name) {
                        (Some(t), Some(n)) => format!("{t} {n}"),
                        (Some(t), None) => t,
                        (None, Some(n)) => format!("Object {n}"),
                        (None, None) => "Object".into(),
                    },
                    Dialect::MiniScript => {
                        let n = name.unwrap_or_else(|| format!("p{i}"));
                        match ty {
                            Some(t) => format!("{n}: {t}"),
                            None => n,
                        }
                    }
                }
            })
            .collect();
        params.join(", ")
    }

    fn statements(&mut self, ids: &[NodeId], depth: usize) {
        for id in ids {
            self.decl_or_stmt(*id, depth);
        }
    }

    fn decl_or_stmt(&mut self, id: NodeId, depth: usize) {
        let n = self.node(id).clone();
        let name = n.name.clone().unwrap_or_else(|| "?".into());
        let is_static = n.payload.is_static();
        let children = n.children.clone();
        match n.kind {
            NodeKind::Project => {
                for c in children {
                    self.decl_or_stmt(c, depth);
                }
            }
            NodeKind::Module => {
                self.blank();
                if self.proc() {
                    self.line(depth, &format!("Module {name}"));
                    self.members(&children, depth + 1);
                    self.line(depth, "End Module");
                } else {
                    self.line(depth, &format!("module {name} {{"));
                    self.members(&children, depth + 1);
                    self.line(depth, "}");
                }
            }
            NodeKind::Package => {
                self.blank();
                match self.dialect {
                    Dialect::MiniOO => {
                        self.line(depth, &format!("package {name};"));
                        for c in children {
                            self.decl_or_stmt(c, depth);
                        }
                    }
                    Dialect::MiniScript => {
                        self.line(depth, &format!("namespace {name} {{"));
                        for c in children {
                            self.decl_or_stmt(c, depth + 1);
                        }
                        self.line(depth, "}");
                    }
                    Dialect::MiniProc => {
                        self.line(depth, &format!("Package {name}"));
                        for c in children {
                            self.decl_or_stmt(c, depth + 1);
                        }
                        self.line(depth, "End Package");
                    }
                }
            }
            NodeKind::Class => {
                self.blank();
                let head = match self.dialect {
                    Dialect::MiniOO => format!("class {name} {{"),
                    Dialect::MiniScript => format!("export class {name} {{"),
                    Dialect::MiniProc => format!("Class {name}"),
                };
                self.line(depth, &head);
                self.members(&children, depth + 1);
                self.line(depth, if self.proc() { "End Class" } else { "}" });
            }
            NodeKind::Method
            | NodeKind::SubProcedure
            | NodeKind::Function
            | NodeKind::LibraryRoutineDeclaration => self.routine(id, &n, depth),
            NodeKind::AttributeDeclaration | NodeKind::VariableDeclaration => {
                let ty = self.type_name(id);
                let stat = if is_static { "static " } else { "" };
                let text = match self.dialect {
                    Dialect::MiniProc => match ty {
                        Some(t) => format!("Dim {name} As {t}"),
                        None => format!("Dim {name}"),
                    },
                    Dialect::MiniOO => {
                        format!("{stat}{} {name};", ty.unwrap_or_else(|| "Object".into()))
                    }
                    Dialect::MiniScript => {
                        let head = if n.kind == NodeKind::VariableDeclaration && !is_static {
                            format!("let {name}")
                        } else {
                            format!("{stat}{name}")
                        };
                        match ty {
                            Some(t) => format!("{head}: {t};"),
                            None => format!("{head};"),
                        }
                    }
                };
                self.line(depth, &text);
            }
            NodeKind::Parameter
            | NodeKind::PrimitiveTypeDeclaration
            | NodeKind::StubDeclaration => {
                let text = match &n.payload {
                    Payload::Stub(_) => format!("stub {name}"),
                    _ => format!("{} {name}", n.kind),
                };
                self.line(depth, &text);
            }
            NodeKind::ExpressionStatement => {
                let text = match children.first() {
                    Some(e) => {
                        let e = self.expr(*e);
                        let call = self.node(children[0]).kind == NodeKind::FunctionInvocation;
                        if self.proc() && call {
                            format!("Call {e}")
                        } else {
                            self.terminated(e)
                        }
                    }
                    None => self.terminated(String::new()),
                };
                self.line(depth, &text);
            }
            NodeKind::Assignment => {
                let lhs = children.first().map(|c| self.expr(*c)).unwrap_or_default();
                let rhs = children.get(1).map(|c| self.expr(*c)).unwrap_or_default();
                let text = self.terminated(format!("{lhs} = {rhs}"));
                self.line(depth, &text);
            }
            NodeKind::Return => {
                let text = match children.first() {
                    Some(e) => format!(
                        "{} {}",
                        if self.proc() { "Return" } else { "return" },
                        self.expr(*e)
                    ),
                    None => (if self.proc() { "Return" } else { "return" }).to_string(),
                };
                let text = self.terminated(text);
                self.line(depth, &text);
            }
            NodeKind::IfStatement => self.if_statement(&children, depth),
            NodeKind::Block | NodeKind::ElseIfClause => self.statements(&children, depth),
            _ => {
                let e = self.expr(id);
                let text = self.terminated(e);
                self.line(depth, &text);
            }
        }
    }

    fn terminated(&self, text: String) -> String {
        if self.proc() {
            text
        } else {
            format!("{text};")
        }
    }

    fn members(&mut self, ids: &[NodeId], depth: usize) {
        let routine = |k: NodeKind| {
            matches!(
                k,
                NodeKind::Method | NodeKind::SubProcedure | NodeKind::Function
            )
        };
        let mut after_routine = false;
        for id in ids {
            let is_routine = routine(self.node(*id).kind);
            if is_routine || after_routine {
                self.blank();
            }
            after_routine = is_routine;
            self.decl_or_stmt(*id, depth);
        }
    }

    fn routine(&mut self, id: NodeId, n: &AsgNode, depth: usize) {
        let name = n.name.clone().unwrap_or_else(|| "?".into());
        let stat = if n.payload.is_static() { "static " } else { "" };
        let params = self.params(id);
        let ret = self.type_name(id);
        let body = self.body_children(id);
        match self.dialect {
            Dialect::MiniProc => {
                let (kw, head) = match (n.kind, ret) {
                    (NodeKind::SubProcedure, _) => ("Sub", format!("Sub {name}({params})")),
                    (_, Some(t)) => ("Function", format!("Function {name}({params}) As {t}")),
                    (_, None) => ("Function", format!("Function {name}({params})")),
                };
                self.line(depth, &head);
                self.statements(&body, depth + 1);
                self.line(depth, &format!("End {kw}"));
            }
            Dialect::MiniOO => {
                let ret = ret.unwrap_or_else(|| "void".into());
                self.line(depth, &format!("{stat}{ret} {name}({params}) {{"));
                self.statements(&body, depth + 1);
                self.line(depth, "}");
            }
            Dialect::MiniScript => {
                let ret = ret.map(|t| format!(": {t}")).unwrap_or_default();
                self.line(depth, &format!("{stat}{name}({params}){ret} {{"));
                self.statements(&body, depth + 1);
                self.line(depth, "}");
            }
        }
    }

    fn if_statement(&mut self, children: &[NodeId], depth: usize) {
        let cond = children.first().map(|c| self.expr(*c)).unwrap_or_default();
        let rest = &children[children.len().min(1)..];
        let proc = self.proc();
        self.line(
            depth,
            &if proc {
                format!("If {cond} Then")
            } else {
                format!("if ({cond}) {{")
            },
        );
        for (i, c) in rest.iter().enumerate() {
            let kind = self.node(*c).kind;
            let parts = self.m.children(*c).to_vec();
            if kind == NodeKind::ElseIfClause {
                let cond = parts.first().map(|e| self.expr(*e)).unwrap_or_default();
                let head = if proc {
                    format!("ElseIf {cond} Then")
                } else {
                    format!("}} else if ({cond}) {{")
                };
                self.line(depth, &head);
                self.statements(&parts[parts.len().min(1)..], depth + 1);
            } else if i == 0 {
                self.statements(&parts, depth + 1);
            } else {
                self.line(depth, if proc { "Else" } else { "} else {" });
                self.statements(&parts, depth + 1);
            }
        }
        self.line(depth, if proc { "End If" } else { "}" });
    }

    fn precedence(&self, op: &str) -> u8 {
        match op {
            "*" | "/" => 4,
            "+" | "-" => 3,
            "&" => 2,
            _ => 1,
        }
    }

    fn args(&self, ids: &[NodeId]) -> String {
        ids.iter()
            .map(|a| self.expr(*a))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn expr(&self, id: NodeId) -> String {
        let n = self.node(id);
        match n.kind {
            NodeKind::StringLiteral => {
                let s = match &n.payload {
                    Payload::Str(s) => s.as_str(),
                    _ => "",
                };
                quote(s, self.proc())
            }
            NodeKind::NumberLiteral => match &n.payload {
                Payload::Num(v) => v.clone(),
                _ => "0".into(),
            },
            NodeKind::VariableAccess => {
                let name = self.ref_name(id);
                match self.qualifier(id) {
                    Some(q) => format!("{q}.{name}"),
                    None => name,
                }
            }
            NodeKind::TypeReference => self.ref_name(id),
            NodeKind::ThisReceiver => "this".into(),
            NodeKind::FunctionInvocation => {
                format!("{}({})", self.ref_name(id), self.args(&n.children))
            }
            NodeKind::MethodInvocation => {
                let (recv, args) = match n.children.split_first() {
                    Some((r, rest)) => (self.expr(*r), rest),
                    None => ("?".into(), &[][..]),
                };
                format!("{recv}.{}({})", self.ref_name(id), self.args(args))
            }
            NodeKind::BinaryOperation => {
                let op = n.payload.operator().unwrap_or("?");
                let prec = self.precedence(op);
                let side = |c: Option<&NodeId>, right: bool| -> String {
                    let Some(c) = c else { return "?".into() };
                    let text = self.expr(*c);
                    let child = self.node(*c);
                    match child.payload.operator() {
                        Some(cop) if child.kind == NodeKind::BinaryOperation => {
                            let cp = self.precedence(cop);
                            if cp < prec || (right && cp == prec) {
                                format!("({text})")
                            } else {
                                text
                            }
                        }
                        _ => text,
                    }
                };
                format!(
                    "{} {op} {}",
                    side(n.children.first(), false),
                    side(n.children.get(1), true)
                )
            }
            other => format!("<{other}>"),
        }
    }

    /// `Class.` prefix for static attributes accessed from outside their class.
    fn qualifier(&self, id: NodeId) -> Option<String> {
        if self.proc() {
            return None;
        }
        let decl = self.node(id).referee?;
        let d = self.m.get(decl)?;
        if d.kind != NodeKind::AttributeDeclaration {
            return None;
        }
        let owner = self.m.parent(decl)?;
        let mut cur = self.m.parent(id);
        while let Some(p) = cur {
            if p == owner {
                return None;
            }
            cur = self.m.parent(p);
        }
        self.m.get(owner)?.name.clone()
    }
}

fn quote(s: &str, proc: bool) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' if proc => out.push_str("\"\""),
            '"' => out.push_str("\\\""),
            '\\' if !proc => out.push_str("\\\\"),
            '\n' if !proc => out.push_str("\\n"),
            '\t' if !proc => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
