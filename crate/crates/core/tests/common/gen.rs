//! Random MiniProc programs and directive sequences for property tests.
#![allow(dead_code)]

use proptest::prelude::*;

pub const TYPES: &[&str] = &["String", "Integer", "Double", "Boolean"];
/// Library routines used by generated programs: (name, arity, returns value).
pub const LIB_ROUTINES: &[(&str, usize, bool)] = &[
    ("MsgBox", 1, false),
    ("CStr", 1, true),
    ("Len", 1, true),
    ("UCase", 1, true),
    ("Beep", 0, false),
];

#[derive(Debug, Clone)]
pub enum Expr {
    Str(String),
    Num(u32),
    Global(usize),
    Param(usize),
    Lib(usize, Vec<Expr>),
    Own(usize, Vec<Expr>),
    Bin(&'static str, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Call(usize, Vec<Expr>),
    CallOwn(usize, Vec<Expr>),
    AssignGlobal(usize, Expr),
    If(Expr, Vec<Stmt>, Vec<Stmt>),
}

#[derive(Debug, Clone)]
pub struct Routine {
    pub function: bool,
    pub params: Vec<usize>,
    pub returns: usize,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub globals: Vec<usize>,
    pub routines: Vec<Routine>,
}

impl Program {
    pub fn routine_name(&self, i: usize) -> String {
        if self.routines[i].function {
            format!("f{i}")
        } else {
            format!("s{i}")
        }
    }

    pub fn text(&self) -> String {
        let mut out = String::from("Module Main\n");
        for (i, t) in self.globals.iter().enumerate() {
            out.push_str(&format!("  Dim g{i} As {}\n", TYPES[*t]));
        }
        for (i, r) in self.routines.iter().enumerate() {
            let params: Vec<String> = r
                .params
                .iter()
                .enumerate()
                .map(|(j, t)| format!("p{j} As {}", TYPES[*t]))
                .collect();
            let name = self.routine_name(i);
            if r.function {
                out.push_str(&format!(
                    "  Function {name}({}) As {}\n",
                    params.join(", "),
                    TYPES[r.returns]
                ));
            } else {
                out.push_str(&format!("  Sub {name}({})\n", params.join(", ")));
            }
            for s in &r.body {
                self.stmt(s, r, 2, &mut out);
            }
            if r.function {
                out.push_str("    Return \"\"\n  End Function\n");
            } else {
                out.push_str("  End Sub\n");
            }
        }
        out.push_str("End Module\n");
        out
    }

    fn stmt(&self, s: &Stmt, r: &Routine, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match s {
            Stmt::Call(k, args) => {
                let (name, _, _) = LIB_ROUTINES[*k];
                out.push_str(&format!("{pad}Call {name}({})\n", self.args(args, r)));
            }
            Stmt::CallOwn(k, args) => {
                out.push_str(&format!(
                    "{pad}Call {}({})\n",
                    self.routine_name(*k),
                    self.args(args, r)
                ));
            }
            Stmt::AssignGlobal(g, e) => out.push_str(&format!("{pad}g{g} = {}\n", self.expr(e, r))),
            Stmt::If(c, then, els) => {
                out.push_str(&format!("{pad}If {} Then\n", self.expr(c, r)));
                for s in then {
                    self.stmt(s, r, depth + 1, out);
                }
                if !els.is_empty() {
                    out.push_str(&format!("{pad}Else\n"));
                    for s in els {
                        self.stmt(s, r, depth + 1, out);
                    }
                }
                out.push_str(&format!("{pad}End If\n"));
            }
        }
    }

    fn args(&self, args: &[Expr], r: &Routine) -> String {
        args.iter()
            .map(|a| self.expr(a, r))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn expr(&self, e: &Expr, r: &Routine) -> String {
        match e {
            Expr::Str(s) => format!("\"{s}\""),
            Expr::Num(n) => n.to_string(),
            Expr::Global(g) => format!("g{g}"),
            Expr::Param(p) => format!("p{p}"),
            Expr::Lib(k, args) => format!("{}({})", LIB_ROUTINES[*k].0, self.args(args, r)),
            Expr::Own(k, args) => format!("{}({})", self.routine_name(*k), self.args(args, r)),
            Expr::Bin(op, a, b) => format!("({} {op} {})", self.expr(a, r), self.expr(b, r)),
        }
    }
}

/// Expressions over `globals` globals, `params` parameters and the
/// functions among `functions`.
fn expr(globals: usize, params: usize, functions: Vec<usize>) -> BoxedStrategy<Expr> {
    let mut leaves: Vec<BoxedStrategy<Expr>> = vec![
        "[a-z ]{0,6}".prop_map(Expr::Str).boxed(),
        (0u32..100).prop_map(Expr::Num).boxed(),
    ];
    if globals > 0 {
        leaves.push((0..globals).prop_map(Expr::Global).boxed());
    }
    if params > 0 {
        leaves.push((0..params).prop_map(Expr::Param).boxed());
    }
    let leaf = proptest::strategy::Union::new(leaves);
    leaf.prop_recursive(2, 8, 2, move |inner| {
        let mut options: Vec<BoxedStrategy<Expr>> = vec![
            (
                prop::sample::select(vec!["&", "+", "*", "=", "<"]),
                inner.clone(),
                inner.clone(),
            )
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b)))
                .boxed(),
            (prop::sample::select(vec![1usize, 2, 3]), inner.clone())
                .prop_map(|(k, a)| Expr::Lib(k, vec![a]))
                .boxed(),
        ];
        if !functions.is_empty() {
            options.push(
                (prop::sample::select(functions.clone()), inner.clone())
                    .prop_map(|(k, a)| Expr::Own(k, vec![a]))
                    .boxed(),
            );
        }
        proptest::strategy::Union::new(options)
    })
    .boxed()
}

fn stmt(
    globals: usize,
    params: usize,
    subs: Vec<usize>,
    functions: Vec<usize>,
) -> BoxedStrategy<Stmt> {
    let e = expr(globals, params, functions);
    let mut leaves: Vec<BoxedStrategy<Stmt>> = vec![
        e.clone().prop_map(|a| Stmt::Call(0, vec![a])).boxed(),
        Just(Stmt::Call(4, vec![])).boxed(),
    ];
    if globals > 0 {
        leaves.push(
            (0..globals, e.clone())
                .prop_map(|(g, v)| Stmt::AssignGlobal(g, v))
                .boxed(),
        );
    }
    if !subs.is_empty() {
        leaves.push(
            prop::sample::select(subs)
                .prop_map(|k| Stmt::CallOwn(k, vec![]))
                .boxed(),
        );
    }
    let leaf = proptest::strategy::Union::new(leaves);
    leaf.prop_recursive(2, 6, 3, move |inner| {
        (
            e.clone(),
            prop::collection::vec(inner.clone(), 1..3),
            prop::collection::vec(inner, 0..2),
        )
            .prop_map(|(c, t, f)| Stmt::If(c, t, f))
    })
    .boxed()
}

/// Programs with 0..3 globals and 1..4 routines. Routines only call routines
/// declared before them, and parameterless subs only, so arities match.
pub fn program() -> impl Strategy<Value = Program> {
    (
        prop::collection::vec(0..TYPES.len(), 0..3),
        prop::collection::vec(
            (
                any::<bool>(),
                prop::collection::vec(0..TYPES.len(), 0..2),
                0..TYPES.len(),
            ),
            1..4,
        ),
    )
        .prop_flat_map(|(globals, shapes)| {
            let g = globals.len();
            let mut bodies = Vec::new();
            for (i, (function, params, _)) in shapes.iter().enumerate() {
                let subs: Vec<usize> = (0..i)
                    .filter(|k| !shapes[*k].0 && shapes[*k].1.is_empty())
                    .collect();
                let functions: Vec<usize> = (0..i)
                    .filter(|k| shapes[*k].0 && shapes[*k].1.len() == 1)
                    .collect();
                let _ = function;
                bodies.push(prop::collection::vec(
                    stmt(g, params.len(), subs, functions),
                    0..3,
                ));
            }
            (Just(globals), Just(shapes), bodies)
        })
        .prop_map(|(globals, shapes, bodies)| Program {
            globals,
            routines: shapes
                .into_iter()
                .zip(bodies)
                .map(|((function, params, returns), body)| Routine {
                    function,
                    params,
                    returns,
                    body,
                })
                .collect(),
        })
}

/// MiniOO target with two classes.
pub const OO_TARGET: &str = "package P;\n\nclass A {\n}\n\nclass B {\n}\n";

/// One directive of a random session. Indices are reduced modulo the
/// available choices when the directive is run.
#[derive(Debug, Clone)]
pub enum Step {
    /// Produce routine or global `decl` into class `class`.
    Produce {
        decl: usize,
        class: usize,
    },
    /// Map library element `lib` to target element `target` in `scope`.
    Map {
        lib: usize,
        target: usize,
        scope: usize,
    },
    Rollback,
}

pub fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        4 => (0..8usize, 0..2usize).prop_map(|(decl, class)| Step::Produce { decl, class }),
        3 => (0..8usize, 0..8usize, 0..3usize).prop_map(|(lib, target, scope)| Step::Map { lib, target, scope }),
        1 => Just(Step::Rollback),
    ]
}

/// Source library elements mapped by random steps.
pub const MAP_SOURCES: &[&str] = &[
    "src:@lib.MsgBox",
    "src:@lib.CStr",
    "src:@lib.Len",
    "src:@lib.UCase",
    "src:@lib.String",
    "src:@lib.Integer",
    "src:@lib.Double",
    "src:@lib.Boolean",
];

/// Target elements of the same shape as the matching entry of [`MAP_SOURCES`].
pub const MAP_TARGETS: &[&[&str]] = &[
    &["oo:@lib.Logger.log", "oo:@lib.Strings.format"],
    &["oo:@lib.Strings.valueOf"],
    &["oo:@lib.Strings.length"],
    &["oo:@lib.Strings.upper", "oo:@lib.Strings.trim"],
    &["oo:@lib.String"],
    &["oo:@lib.int", "oo:@lib.long"],
    &["oo:@lib.double"],
    &["oo:@lib.boolean"],
];

pub const SCOPES: &[&str] = &["oo:", "oo:P.A", "oo:P.B"];
