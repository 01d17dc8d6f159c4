//! Shared grammar for MiniOO (Java-like) and MiniScript (TypeScript-like).
//! The two differ in declaration syntax only; statements and expressions
//! are common.

use std::collections::BTreeSet;

use super::dialect::DialectSpec;
use super::lexer::{describe, lex, Cursor, Tok, CURLY_STYLE};
use super::{ParseError, Tree};
use crate::meta_model::{Dialect, NodeKind, Payload};

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "final",
    "readonly",
    "export",
];

pub(crate) fn parse(dialect: Dialect, text: &str) -> Result<Vec<Tree>, ParseError> {
    let toks = lex(text, CURLY_STYLE)?;
    // Class names decide whether `X.m()` has a static or a variable receiver.
    let mut classes: BTreeSet<String> = DialectSpec::get(dialect)
        .catalog
        .iter()
        .filter_map(|e| e.owner.clone())
        .collect();
    for w in toks.windows(2) {
        if let (Tok::Ident(k), Tok::Ident(name)) = (&w[0].tok, &w[1].tok) {
            if k == "class" {
                classes.insert(name.clone());
            }
        }
    }
    let mut p = Parser {
        c: Cursor::new(toks),
        script: dialect == Dialect::MiniScript,
        classes,
    };
    p.file()
}

struct Parser {
    c: Cursor,
    script: bool,
    classes: BTreeSet<String>,
}

/// Index of the package named `name` among `out`, creating it if needed.
fn package_slot(out: &mut Vec<Tree>, name: String) -> usize {
    match out
        .iter()
        .position(|t| t.kind == NodeKind::Package && t.name.as_deref() == Some(name.as_str()))
    {
        Some(i) => i,
        None => {
            out.push(Tree::named(NodeKind::Package, name));
            out.len() - 1
        }
    }
}

impl Parser {
    fn kw(&self, k: &str) -> bool {
        self.c.at_kw(k, false)
    }

    fn file(&mut self) -> Result<Vec<Tree>, ParseError> {
        let mut out: Vec<Tree> = Vec::new();
        let mut current: Option<usize> = None;
        while *self.c.peek() != Tok::Eof {
            if !self.script && self.kw("package") {
                self.c.bump();
                let name = self.dotted()?;
                self.c.expect_sym(";")?;
                current = Some(package_slot(&mut out, name));
            } else if self.script && self.kw("namespace") {
                self.c.bump();
                let name = self.dotted()?;
                let slot = package_slot(&mut out, name);
                self.c.expect_sym("{")?;
                while !self.c.eat_sym("}") {
                    let class = self.class()?;
                    out[slot].children.push(class);
                }
            } else {
                let class = self.class()?;
                match current {
                    Some(slot) => out[slot].children.push(class),
                    None => out.push(class),
                }
            }
        }
        Ok(out)
    }

    fn dotted(&mut self) -> Result<String, ParseError> {
        let mut name = self.c.expect_ident()?;
        while self.c.eat_sym(".") {
            name.push('.');
            name.push_str(&self.c.expect_ident()?);
        }
        Ok(name)
    }

    /// Skips visibility words; returns whether `static` was among them.
    fn modifiers(&mut self) -> bool {
        let mut is_static = false;
        loop {
            if self.kw("static") {
                is_static = true;
            } else if !MODIFIERS.iter().any(|m| self.kw(m)) {
                return is_static;
            }
            self.c.bump();
        }
    }

    fn class(&mut self) -> Result<Tree, ParseError> {
        self.modifiers();
        if !self.kw("class") {
            return Err(self.c.error(format!(
                "expected `class`, found {}",
                describe(self.c.peek())
            )));
        }
        self.c.bump();
        let name = self.c.expect_ident()?;
        let mut class = Tree::named(NodeKind::Class, name);
        self.c.expect_sym("{")?;
        while !self.c.eat_sym("}") {
            if *self.c.peek() == Tok::Eof {
                return Err(self.c.error("missing `}` at end of class"));
            }
            class.children.push(self.member()?);
        }
        Ok(class)
    }

    fn member(&mut self) -> Result<Tree, ParseError> {
        let is_static = self.modifiers();
        let payload = Payload::Static(is_static);
        if self.script {
            let name = self.c.expect_ident()?;
            if self.c.at_sym("(") {
                let params = self.params()?;
                let mut m = Tree::named(NodeKind::Method, name).payload(payload);
                if self.c.eat_sym(":") {
                    m.children.push(Tree::type_ref(self.c.expect_ident()?));
                }
                m.children.extend(params);
                m.children.extend(self.body()?);
                Ok(m)
            } else {
                let mut a = Tree::named(NodeKind::AttributeDeclaration, name).payload(payload);
                if self.c.eat_sym(":") {
                    a.children.push(Tree::type_ref(self.c.expect_ident()?));
                }
                self.c.expect_sym(";")?;
                Ok(a)
            }
        } else {
            let ty = self.c.expect_ident()?;
            let name = self.c.expect_ident()?;
            if self.c.at_sym("(") {
                let params = self.params()?;
                let mut m = Tree::named(NodeKind::Method, name)
                    .payload(payload)
                    .child(Tree::type_ref(ty));
                m.children.extend(params);
                m.children.extend(self.body()?);
                Ok(m)
            } else {
                self.c.expect_sym(";")?;
                Ok(Tree::named(NodeKind::AttributeDeclaration, name)
                    .payload(payload)
                    .child(Tree::type_ref(ty)))
            }
        }
    }

    fn params(&mut self) -> Result<Vec<Tree>, ParseError> {
        self.c.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.c.at_sym(")") {
            loop {
                if self.script {
                    let name = self.c.expect_ident()?;
                    let mut p = Tree::named(NodeKind::Parameter, name);
                    if self.c.eat_sym(":") {
                        p.children.push(Tree::type_ref(self.c.expect_ident()?));
                    }
                    out.push(p);
                } else {
                    let ty = self.c.expect_ident()?;
                    let mut p = Tree::new(NodeKind::Parameter).child(Tree::type_ref(ty));
                    if let Tok::Ident(name) = self.c.peek().clone() {
                        self.c.bump();
                        p.name = Some(name);
                    }
                    out.push(p);
                }
                if !self.c.eat_sym(",") {
                    break;
                }
            }
        }
        self.c.expect_sym(")")?;
        Ok(out)
    }

    /// Method body: `;`, `{ ... }` (elided) or a statement block.
    fn body(&mut self) -> Result<Vec<Tree>, ParseError> {
        if self.c.eat_sym(";") {
            return Ok(Vec::new());
        }
        self.c.expect_sym("{")?;
        if self.c.eat_sym("...") {
            self.c.expect_sym("}")?;
            return Ok(Vec::new());
        }
        self.block_rest()
    }

    /// Statements after an opening brace, through the closing one.
    fn block_rest(&mut self) -> Result<Vec<Tree>, ParseError> {
        let mut out = Vec::new();
        while !self.c.eat_sym("}") {
            if *self.c.peek() == Tok::Eof {
                return Err(self.c.error("missing `}`"));
            }
            out.push(self.statement()?);
        }
        Ok(out)
    }

    fn block(&mut self) -> Result<Tree, ParseError> {
        self.c.expect_sym("{")?;
        let mut b = Tree::new(NodeKind::Block);
        b.children = self.block_rest()?;
        Ok(b)
    }

    fn statement(&mut self) -> Result<Tree, ParseError> {
        if self.kw("if") {
            return self.if_statement();
        }
        if self.kw("return") {
            self.c.bump();
            let mut r = Tree::new(NodeKind::Return);
            if !self.c.at_sym(";") {
                r.children.push(self.expr()?);
            }
            self.c.expect_sym(";")?;
            return Ok(r);
        }
        if self.script && self.kw("let") {
            self.c.bump();
            let name = self.c.expect_ident()?;
            let mut v = Tree::named(NodeKind::VariableDeclaration, name);
            if self.c.eat_sym(":") {
                v.children.push(Tree::type_ref(self.c.expect_ident()?));
            }
            self.c.expect_sym(";")?;
            return Ok(v);
        }
        if !self.script {
            if let (Tok::Ident(ty), Tok::Ident(name)) =
                (self.c.peek().clone(), self.c.peek_at(1).clone())
            {
                self.c.bump();
                self.c.bump();
                self.c.expect_sym(";")?;
                return Ok(
                    Tree::named(NodeKind::VariableDeclaration, name).child(Tree::type_ref(ty))
                );
            }
        }
        let lhs = self.expr()?;
        let t = if self.c.eat_sym("=") {
            if lhs.kind != NodeKind::VariableAccess {
                return Err(self
                    .c
                    .error("left side of an assignment must be a variable"));
            }
            let value = self.expr()?;
            Tree::new(NodeKind::Assignment).child(lhs).child(value)
        } else {
            Tree::new(NodeKind::ExpressionStatement).child(lhs)
        };
        self.c.expect_sym(";")?;
        Ok(t)
    }

    fn if_statement(&mut self) -> Result<Tree, ParseError> {
        self.c.bump();
        let cond = self.paren_expr()?;
        let mut node = Tree::new(NodeKind::IfStatement).child(cond);
        node.children.push(self.block()?);
        while self.kw("else") {
            self.c.bump();
            if self.kw("if") {
                self.c.bump();
                let cond = self.paren_expr()?;
                let block = self.block()?;
                node.children
                    .push(Tree::new(NodeKind::ElseIfClause).child(cond).child(block));
            } else {
                node.children.push(self.block()?);
                break;
            }
        }
        Ok(node)
    }

    fn paren_expr(&mut self) -> Result<Tree, ParseError> {
        self.c.expect_sym("(")?;
        let e = self.expr()?;
        self.c.expect_sym(")")?;
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<Tree>, ParseError> {
        self.c.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.c.at_sym(")") {
            loop {
                out.push(self.expr()?);
                if !self.c.eat_sym(",") {
                    break;
                }
            }
        }
        self.c.expect_sym(")")?;
        Ok(out)
    }

    fn expr(&mut self) -> Result<Tree, ParseError> {
        self.level(0)
    }

    fn level(&mut self, depth: usize) -> Result<Tree, ParseError> {
        const LEVELS: [&[&str]; 3] = [
            &["==", "!=", "<=", ">=", "<", ">"],
            &["+", "-"],
            &["*", "/"],
        ];
        if depth == LEVELS.len() {
            return self.primary();
        }
        let mut lhs = self.level(depth + 1)?;
        loop {
            let op = match self.c.peek() {
                Tok::Sym(s) if LEVELS[depth].contains(s) => *s,
                _ => return Ok(lhs),
            };
            self.c.bump();
            let rhs = self.level(depth + 1)?;
            lhs = Tree::binary(op, lhs, rhs);
        }
    }

    fn primary(&mut self) -> Result<Tree, ParseError> {
        match self.c.peek().clone() {
            Tok::Str(s) => {
                self.c.bump();
                Ok(Tree::new(NodeKind::StringLiteral).payload(Payload::Str(s)))
            }
            Tok::Num(n) => {
                self.c.bump();
                Ok(Tree::new(NodeKind::NumberLiteral).payload(Payload::Num(n)))
            }
            Tok::Sym("(") => self.paren_expr(),
            Tok::Ident(name) => {
                self.c.bump();
                if self.c.at_sym("(") {
                    let mut call = Tree::named(NodeKind::FunctionInvocation, name);
                    call.children = self.args()?;
                    return Ok(call);
                }
                if !self.c.eat_sym(".") {
                    return Ok(Tree::named(NodeKind::VariableAccess, name));
                }
                let member = self.c.expect_ident()?;
                if self.c.at_sym("(") {
                    let receiver = if name == "this" {
                        Tree::new(NodeKind::ThisReceiver)
                    } else if self.classes.contains(&name) {
                        Tree::type_ref(name)
                    } else {
                        Tree::named(NodeKind::VariableAccess, name)
                    };
                    let mut call = Tree::named(NodeKind::MethodInvocation, member).child(receiver);
                    call.children.extend(self.args()?);
                    Ok(call)
                } else {
                    let mut access = Tree::named(NodeKind::VariableAccess, member);
                    access.qualifier = Some(name);
                    Ok(access)
                }
            }
            other => Err(self
                .c
                .error(format!("expected expression, found {}", describe(&other)))),
        }
    }
}
