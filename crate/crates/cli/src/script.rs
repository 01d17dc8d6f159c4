//! Line-based directive scripts.
//!
//! ```text
//! # comment
//! install GlobalToAttribute @ oo:
//! install CopyReplaceOperator(OtD=&, OtR=+) @ oo:
//! produce src:Main.showName -> oo:MyPackage.MyDestination mode=auto
//! map src:@lib.MsgBox -> oo:MyPackage.MyDestination.log @ oo:MyPackage.MyDestination
//! choose 0 1
//! rollback
//! export oo
//! report oo:MyPackage.MyDestination
//! expect stubs oo 2
//! expect auto-mappings 1
//! expect unresolved 0
//! ```

use std::collections::BTreeMap;

use migra_core::rules::LookupMode;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Install {
        rule: String,
        params: BTreeMap<String, String>,
        context: String,
    },
    Produce {
        source: String,
        target: String,
        mode: Option<LookupMode>,
    },
    Map {
        source: String,
        target: String,
        scope: String,
    },
    /// Answers consumed by the next produce or map.
    Choose(Vec<usize>),
    Rollback,
    Export(String),
    Report(Option<String>),
    Expect(Expectation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Stubs { alias: String, count: usize },
    AutoMappings(usize),
    Unresolved(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub number: usize,
    pub text: String,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

pub fn parse(text: &str) -> Result<Vec<Line>, ScriptError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let command = parse_line(trimmed).map_err(|message| ScriptError {
            line: i + 1,
            message,
        })?;
        out.push(Line {
            number: i + 1,
            text: trimmed.to_string(),
            command,
        });
    }
    Ok(out)
}

pub fn parse_mode(s: &str) -> Option<LookupMode> {
    match s {
        "auto" | "automatic" => Some(LookupMode::Automatic),
        "choice" | "multiple-choice" => Some(LookupMode::MultipleChoice),
        "debug" => Some(LookupMode::Debug),
        _ => None,
    }
}

fn split_arrow(s: &str) -> Result<(&str, &str), String> {
    s.split_once("->")
        .or_else(|| s.split_once("=>"))
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| "expected `->` between source and target".to_string())
}

fn parse_line(line: &str) -> Result<Command, String> {
    let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim();
    match word {
        "install" => {
            let (rule, context) = rest
                .rsplit_once(" @ ")
                .map(|(r, c)| (r.trim(), c.trim().to_string()))
                .unwrap_or((rest, "global".to_string()));
            let (name, params) = parse_rule(rule)?;
            Ok(Command::Install {
                rule: name,
                params,
                context,
            })
        }
        "produce" => {
            let (source, rest) = split_arrow(rest)?;
            let mut parts = rest.split_whitespace();
            let target = parts.next().ok_or("missing target")?.to_string();
            let mut mode = None;
            for p in parts {
                let value = p
                    .strip_prefix("mode=")
                    .ok_or_else(|| format!("unexpected `{p}`"))?;
                mode = Some(parse_mode(value).ok_or_else(|| format!("unknown mode `{value}`"))?);
            }
            Ok(Command::Produce {
                source: source.to_string(),
                target,
                mode,
            })
        }
        "map" => {
            let (source, rest) = split_arrow(rest)?;
            let (target, scope) = rest
                .split_once(" @ ")
                .ok_or("expected `@ <scope>` after the map target")?;
            Ok(Command::Map {
                source: source.to_string(),
                target: target.trim().to_string(),
                scope: scope.trim().to_string(),
            })
        }
        "choose" => rest
            .split_whitespace()
            .map(|a| a.parse::<usize>().map_err(|_| format!("bad answer `{a}`")))
            .collect::<Result<Vec<_>, _>>()
            .map(Command::Choose),
        "rollback" if rest.is_empty() => Ok(Command::Rollback),
        "export" if !rest.is_empty() => Ok(Command::Export(rest.to_string())),
        "report" => Ok(Command::Report(
            (!rest.is_empty()).then(|| rest.to_string()),
        )),
        "expect" => {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let count = |s: &str| s.parse::<usize>().map_err(|_| format!("bad count `{s}`"));
            match parts.as_slice() {
                ["stubs", alias, n] => Ok(Command::Expect(Expectation::Stubs {
                    alias: alias.to_string(),
                    count: count(n)?,
                })),
                ["auto-mappings", n] => Ok(Command::Expect(Expectation::AutoMappings(count(n)?))),
                ["unresolved", n] => Ok(Command::Expect(Expectation::Unresolved(count(n)?))),
                _ => Err(format!("unknown expectation `{rest}`")),
            }
        }
        _ => Err(format!("unknown command `{line}`")),
    }
}

/// `Name` or `Name(k=v, k=v)`.
fn parse_rule(s: &str) -> Result<(String, BTreeMap<String, String>), String> {
    let Some((name, args)) = s.split_once('(') else {
        return Ok((s.to_string(), BTreeMap::new()));
    };
    let args = args
        .strip_suffix(')')
        .ok_or("missing `)` after rule parameters")?;
    let mut params = BTreeMap::new();
    for pair in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("bad parameter `{pair}`"))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok((name.trim().to_string(), params))
}
