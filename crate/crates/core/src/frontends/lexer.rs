use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    Sym(&'static str),
    /// End of a logical line; only emitted for line-oriented dialects.
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LexStyle {
    pub line_comment: &'static str,
    /// `""` inside a string stands for one quote (otherwise backslash escapes).
    pub doubled_quote_escape: bool,
    pub newlines: bool,
}

pub(crate) const PROC_STYLE: LexStyle = LexStyle {
    line_comment: "'",
    doubled_quote_escape: true,
    newlines: true,
};

pub(crate) const CURLY_STYLE: LexStyle = LexStyle {
    line_comment: "//",
    doubled_quote_escape: false,
    newlines: false,
};

// Longest first so that `<=` wins over `<`.
const SYMBOLS: &[&str] = &[
    "...", "==", "!=", "<=", ">=", "<>", "&", "+", "-", "*", "/", "=", "<", ">", "(", ")", "{",
    "}", ",", ";", ":", ".",
];

pub(crate) fn lex(text: &str, style: LexStyle) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let push = |out: &mut Vec<Token>, tok: Tok, line: usize, col: usize| {
        out.push(Token { tok, line, col })
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            if style.newlines
                && !matches!(
                    out.last(),
                    None | Some(Token {
                        tok: Tok::Newline,
                        ..
                    })
                )
            {
                push(&mut out, Tok::Newline, line, col);
            }
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if starts_with(&chars, i, style.line_comment) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c == '"' {
            let mut value = String::new();
            i += 1;
            col += 1;
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(ParseError::new(
                        start_line,
                        start_col,
                        "unterminated string literal",
                    ));
                };
                if d == '\n' {
                    return Err(ParseError::new(
                        start_line,
                        start_col,
                        "unterminated string literal",
                    ));
                }
                i += 1;
                col += 1;
                if d == '"' {
                    if style.doubled_quote_escape && chars.get(i) == Some(&'"') {
                        value.push('"');
                        i += 1;
                        col += 1;
                        continue;
                    }
                    break;
                }
                if d == '\\' && !style.doubled_quote_escape {
                    let Some(&e) = chars.get(i) else { continue };
                    i += 1;
                    col += 1;
                    value.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                    continue;
                }
                value.push(d);
            }
            push(&mut out, Tok::Str(value), start_line, start_col);
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || (chars[i] == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)))
            {
                i += 1;
            }
            col += i - start;
            push(
                &mut out,
                Tok::Num(chars[start..i].iter().collect()),
                start_line,
                start_col,
            );
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            push(
                &mut out,
                Tok::Ident(chars[start..i].iter().collect()),
                start_line,
                start_col,
            );
            continue;
        }
        match SYMBOLS.iter().find(|s| starts_with(&chars, i, s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                push(&mut out, Tok::Sym(sym), start_line, start_col);
            }
            None => {
                return Err(ParseError::new(
                    line,
                    col,
                    format!("unexpected character `{c}`"),
                ))
            }
        }
    }
    if style.newlines
        && !matches!(
            out.last(),
            None | Some(Token {
                tok: Tok::Newline,
                ..
            })
        )
    {
        push(&mut out, Tok::Newline, line, col);
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn starts_with(chars: &[char], i: usize, pat: &str) -> bool {
    pat.chars()
        .enumerate()
        .all(|(k, p)| chars.get(i + k) == Some(&p))
}

/// Cursor over a token vector shared by the parsers.
pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Self {
        Self { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError::new(t.line, t.col, msg)
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", describe(self.peek()))))
        }
    }

    /// Keyword test; `ci` makes the comparison case-insensitive.
    pub fn at_kw(&self, kw: &str, ci: bool) -> bool {
        match self.peek() {
            Tok::Ident(x) => {
                if ci {
                    x.eq_ignore_ascii_case(kw)
                } else {
                    x == kw
                }
            }
            _ => false,
        }
    }

    pub fn at_kw_at(&self, n: usize, kw: &str, ci: bool) -> bool {
        match self.peek_at(n) {
            Tok::Ident(x) => {
                if ci {
                    x.eq_ignore_ascii_case(kw)
                } else {
                    x == kw
                }
            }
            _ => false,
        }
    }

    pub fn eat_kw(&mut self, kw: &str, ci: bool) -> bool {
        if self.at_kw(kw, ci) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_kw(&mut self, kw: &str, ci: bool) -> Result<(), ParseError> {
        if self.eat_kw(kw, ci) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", describe(self.peek()))))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected identifier, found {}", describe(&other)))),
        }
    }

    pub fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    pub fn expect_line_end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Newline => {
                self.skip_newlines();
                Ok(())
            }
            Tok::Eof => Ok(()),
            other => Err(self.error(format!("expected end of line, found {}", describe(other)))),
        }
    }
}

pub(crate) fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Num(n) => format!("number {n}"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Newline => "end of line".into(),
        Tok::Eof => "end of input".into(),
    }
}
