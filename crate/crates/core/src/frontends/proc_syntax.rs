//! MiniProc grammar. Keywords are case-insensitive; statements end at line
//! breaks. Members outside any `Module ... End Module` block belong to an
//! implicit module named `Main`.

use super::lexer::{describe, lex, Cursor, Tok, PROC_STYLE};
use super::{ParseError, Tree};
use crate::meta_model::{NodeKind, Payload};

pub(crate) const DEFAULT_MODULE: &str = "Main";

const CMP_OPS: &[&str] = &["=", "<>", "<=", ">=", "<", ">"];

pub(crate) fn parse(text: &str) -> Result<Vec<Tree>, ParseError> {
    let mut p = Parser {
        c: Cursor::new(lex(text, PROC_STYLE)?),
    };
    p.c.skip_newlines();
    let mut modules: Vec<Tree> = Vec::new();
    let mut implicit: Option<usize> = None;
    while *p.c.peek() != Tok::Eof {
        if p.c.at_kw("Module", true) {
            p.c.bump();
            let name = p.c.expect_ident()?;
            p.c.expect_line_end()?;
            let mut module = Tree::named(NodeKind::Module, name);
            while !(p.c.at_kw("End", true) && p.c.at_kw_at(1, "Module", true)) {
                if *p.c.peek() == Tok::Eof {
                    return Err(p.c.error("missing `End Module`"));
                }
                module.children.push(p.member()?);
            }
            p.c.bump();
            p.c.bump();
            p.c.expect_line_end()?;
            modules.push(module);
        } else {
            let member = p.member()?;
            let idx = *implicit.get_or_insert_with(|| {
                modules.push(Tree::named(NodeKind::Module, DEFAULT_MODULE));
                modules.len() - 1
            });
            modules[idx].children.push(member);
        }
    }
    if modules.is_empty() {
        modules.push(Tree::named(NodeKind::Module, DEFAULT_MODULE));
    }
    Ok(modules)
}

struct Parser {
    c: Cursor,
}

impl Parser {
    fn kw(&self, k: &str) -> bool {
        self.c.at_kw(k, true)
    }

    fn skip_visibility(&mut self) {
        while self.kw("Public") || self.kw("Private") {
            self.c.bump();
        }
    }

    fn member(&mut self) -> Result<Tree, ParseError> {
        self.skip_visibility();
        if self.kw("Dim") {
            let d = self.dim()?;
            self.c.expect_line_end()?;
            Ok(d)
        } else if self.kw("Sub") {
            self.routine(NodeKind::SubProcedure, "Sub")
        } else if self.kw("Function") {
            self.routine(NodeKind::Function, "Function")
        } else {
            Err(self.c.error(format!(
                "expected `Dim`, `Sub` or `Function`, found {}",
                describe(self.c.peek())
            )))
        }
    }

    fn type_suffix(&mut self) -> Result<Option<Tree>, ParseError> {
        if self.c.eat_kw("As", true) {
            Ok(Some(Tree::type_ref(self.c.expect_ident()?)))
        } else {
            Ok(None)
        }
    }

    fn dim(&mut self) -> Result<Tree, ParseError> {
        self.c.expect_kw("Dim", true)?;
        let name = self.c.expect_ident()?;
        let mut t = Tree::named(NodeKind::VariableDeclaration, name);
        t.children.extend(self.type_suffix()?);
        Ok(t)
    }

    fn routine(&mut self, kind: NodeKind, kw: &str) -> Result<Tree, ParseError> {
        self.c.bump();
        let name = self.c.expect_ident()?;
        let mut params = Vec::new();
        self.c.expect_sym("(")?;
        if !self.c.at_sym(")") {
            loop {
                if self.kw("ByVal") || self.kw("ByRef") {
                    self.c.bump();
                }
                let pname = self.c.expect_ident()?;
                let mut param = Tree::named(NodeKind::Parameter, pname);
                param.children.extend(self.type_suffix()?);
                params.push(param);
                if !self.c.eat_sym(",") {
                    break;
                }
            }
        }
        self.c.expect_sym(")")?;
        let mut t = Tree::named(kind, name);
        if kind == NodeKind::Function {
            t.children.extend(self.type_suffix()?);
        }
        self.c.expect_line_end()?;
        t.children.extend(params);
        t.children.extend(self.statements()?);
        self.c.expect_kw("End", true)?;
        self.c.expect_kw(kw, true)?;
        self.c.expect_line_end()?;
        Ok(t)
    }

    /// Statements up to (not including) `End`, `Else` or `ElseIf`.
    fn statements(&mut self) -> Result<Vec<Tree>, ParseError> {
        let mut out = Vec::new();
        loop {
            if self.kw("End") || self.kw("Else") || self.kw("ElseIf") {
                return Ok(out);
            }
            if *self.c.peek() == Tok::Eof {
                return Err(self.c.error("unexpected end of input inside a block"));
            }
            out.push(self.statement()?);
        }
    }

    fn statement(&mut self) -> Result<Tree, ParseError> {
        let t = if self.kw("Dim") {
            self.dim()?
        } else if self.kw("Call") {
            self.c.bump();
            let name = self.c.expect_ident()?;
            let args = self.args()?;
            let mut call = Tree::named(NodeKind::FunctionInvocation, name);
            call.children = args;
            Tree::new(NodeKind::ExpressionStatement).child(call)
        } else if self.kw("If") {
            return self.if_statement();
        } else if self.kw("Return") {
            self.c.bump();
            let mut r = Tree::new(NodeKind::Return);
            if !matches!(self.c.peek(), Tok::Newline | Tok::Eof) {
                r.children.push(self.expr()?);
            }
            r
        } else if matches!(self.c.peek(), Tok::Ident(_))
            && matches!(self.c.peek_at(1), Tok::Sym("="))
        {
            let name = self.c.expect_ident()?;
            self.c.bump();
            let value = self.expr()?;
            Tree::new(NodeKind::Assignment)
                .child(Tree::named(NodeKind::VariableAccess, name))
                .child(value)
        } else {
            Tree::new(NodeKind::ExpressionStatement).child(self.expr()?)
        };
        self.c.expect_line_end()?;
        Ok(t)
    }

    fn if_statement(&mut self) -> Result<Tree, ParseError> {
        self.c.expect_kw("If", true)?;
        let cond = self.expr()?;
        self.c.expect_kw("Then", true)?;
        self.c.expect_line_end()?;
        let mut node = Tree::new(NodeKind::IfStatement).child(cond);
        let mut then = Tree::new(NodeKind::Block);
        then.children = self.statements()?;
        node.children.push(then);
        while self.kw("ElseIf") {
            self.c.bump();
            let cond = self.expr()?;
            self.c.expect_kw("Then", true)?;
            self.c.expect_line_end()?;
            let mut block = Tree::new(NodeKind::Block);
            block.children = self.statements()?;
            node.children
                .push(Tree::new(NodeKind::ElseIfClause).child(cond).child(block));
        }
        if self.kw("Else") {
            self.c.bump();
            self.c.expect_line_end()?;
            let mut block = Tree::new(NodeKind::Block);
            block.children = self.statements()?;
            node.children.push(block);
        }
        self.c.expect_kw("End", true)?;
        self.c.expect_kw("If", true)?;
        self.c.expect_line_end()?;
        Ok(node)
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
        const LEVELS: [&[&str]; 4] = [CMP_OPS, &["&"], &["+", "-"], &["*", "/"]];
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
            Tok::Sym("(") => {
                self.c.bump();
                let e = self.expr()?;
                self.c.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.c.bump();
                if self.c.at_sym("(") {
                    let mut call = Tree::named(NodeKind::FunctionInvocation, name);
                    call.children = self.args()?;
                    Ok(call)
                } else {
                    Ok(Tree::named(NodeKind::VariableAccess, name))
                }
            }
            other => Err(self
                .c
                .error(format!("expected expression, found {}", describe(&other)))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_outside_modules_go_to_main() {
        let trees = parse("Dim a As String\nSub s()\nEnd Sub\n").unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].name.as_deref(), Some(DEFAULT_MODULE));
        assert_eq!(trees[0].children.len(), 2);
    }

    #[test]
    fn ampersand_binds_looser_than_plus() {
        let trees = parse("Sub s()\nx = \"a\" & 1 + 2\nEnd Sub").unwrap();
        let assign = &trees[0].children[0].children[0];
        let value = &assign.children[1];
        assert_eq!(value.payload, Payload::Op("&".into()));
        assert_eq!(value.children[1].payload, Payload::Op("+".into()));
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert!(parse("sub s()\ncall f()\nend sub").is_ok());
    }

    #[test]
    fn missing_end_is_an_error_with_position() {
        let err = parse("Sub s()\nCall f()\n").unwrap_err();
        assert_eq!(err.line, 3);
    }
}
