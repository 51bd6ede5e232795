//! Random C programs and a small reference evaluator written over the
//! generator's own syntax tree.

use std::collections::HashMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use ssi_core::interp::{Batch, Session};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ty {
    bits: u32,
    signed: bool,
}

const INT: Ty = Ty { bits: 32, signed: true };
const TYPES: [(&str, Ty); 6] = [
    ("int", INT),
    (
        "unsigned int",
        Ty {
            bits: 32,
            signed: false,
        },
    ),
    ("long", Ty { bits: 64, signed: true }),
    (
        "unsigned long",
        Ty {
            bits: 64,
            signed: false,
        },
    ),
    ("short", Ty { bits: 16, signed: true }),
    ("unsigned char", Ty { bits: 8, signed: false }),
];
const NVARS: usize = 5;

fn wrap(v: i128, t: Ty) -> i128 {
    let m = 1i128 << t.bits;
    let r = v.rem_euclid(m);
    if t.signed && r >= m / 2 {
        r - m
    } else {
        r
    }
}

fn promote(t: Ty) -> Ty {
    if t.bits < 32 {
        INT
    } else {
        t
    }
}

fn usual(a: Ty, b: Ty) -> Ty {
    let (a, b) = (promote(a), promote(b));
    match a.bits.cmp(&b.bits) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => Ty {
            bits: a.bits,
            signed: a.signed && b.signed,
        },
    }
}

#[derive(Debug, Clone)]
enum E {
    Var(usize),
    Lit(u32),
    Neg(Box<E>),
    Not(Box<E>),
    BitNot(Box<E>),
    Bin(&'static str, Box<E>, Box<E>),
    Shift(&'static str, Box<E>, u32),
    Div(&'static str, Box<E>, u32),
    Ternary(Box<E>, Box<E>, Box<E>),
}

#[derive(Debug, Clone)]
enum S {
    Assign(usize, Option<&'static str>, E),
    Inc(usize, bool),
    If(E, Vec<S>, Vec<S>),
    While(u32, Vec<S>),
    /// Garbage in a branch that is never taken; the clean program omits it.
    Dead(String, bool),
}

const BINOPS: [&str; 13] = ["+", "-", "*", "&", "|", "^", "==", "!=", "<", "<=", ">", ">=", "&&"];

fn expr() -> impl Strategy<Value = E> {
    let leaf = prop_oneof![
        3 => (0..NVARS).prop_map(E::Var),
        1 => (0u32..20).prop_map(E::Lit),
        1 => any::<u32>().prop_map(E::Lit),
    ];
    leaf.prop_recursive(4, 24, 3, |e| {
        prop_oneof![
            4 => (prop::sample::select(BINOPS.to_vec()), e.clone(), e.clone()).prop_map(|(o, a, b)| E::Bin(o, Box::new(a), Box::new(b))),
            1 => (prop::sample::select(vec!["<<", ">>"]), e.clone(), 0u32..32).prop_map(|(o, a, s)| E::Shift(o, Box::new(a), s)),
            1 => (prop::sample::select(vec!["/", "%"]), e.clone(), 1u32..10).prop_map(|(o, a, d)| E::Div(o, Box::new(a), d)),
            1 => e.clone().prop_map(|a| E::Neg(Box::new(a))),
            1 => e.clone().prop_map(|a| E::Not(Box::new(a))),
            1 => e.clone().prop_map(|a| E::BitNot(Box::new(a))),
            1 => (e.clone(), e.clone(), e).prop_map(|(c, a, b)| E::Ternary(Box::new(c), Box::new(a), Box::new(b))),
        ]
    })
}

fn garbage() -> impl Strategy<Value = String> {
    let pieces = prop::sample::select(vec![
        ")",
        "(",
        "]",
        "[",
        ";",
        "int",
        "*",
        "@",
        "$",
        "`",
        "->",
        "::",
        "return",
        "struct",
        "if",
        "else",
        "while (",
        "for",
        "case",
        ":",
        "x y z",
        "1..2",
        "'",
        "\"",
        "?",
        "...",
        "=",
        "==",
        "<<",
        "asm",
        "__attribute__((",
        "0x",
        "1e",
        "goto",
        "switch",
        "do",
        "sizeof",
        "typedef",
        "~~",
        "&&&",
    ]);
    prop::collection::vec(pieces, 1..12).prop_map(|v| v.join(" "))
}

fn stmts(depth: u32, loops: u32, garbage_on: bool) -> BoxedStrategy<Vec<S>> {
    let assign = (
        0..NVARS,
        prop::option::of(prop::sample::select(vec!["+", "-", "*", "&", "|", "^"])),
        expr(),
    )
        .prop_map(|(v, op, e)| S::Assign(v, op, e));
    let inc = (0..NVARS, any::<bool>()).prop_map(|(v, up)| S::Inc(v, up));
    let dead = (garbage(), any::<bool>()).prop_map(|(g, style)| S::Dead(g, style));
    let mut choices: Vec<(u32, BoxedStrategy<S>)> = vec![(6, assign.boxed()), (1, inc.boxed())];
    if garbage_on {
        choices.push((3, dead.boxed()));
    }
    if depth > 0 {
        let inner = stmts(depth - 1, loops, garbage_on);
        choices.push((
            2,
            (expr(), inner.clone(), inner.clone())
                .prop_map(|(c, a, b)| S::If(c, a, b))
                .boxed(),
        ));
        if loops > 0 {
            let body = stmts(depth - 1, loops - 1, garbage_on);
            choices.push((1, (0u32..4, body).prop_map(|(n, b)| S::While(n, b)).boxed()));
        }
    }
    prop::collection::vec(prop::strategy::Union::new_weighted(choices), 1..6).boxed()
}

fn count(ss: &[S]) -> usize {
    ss.iter()
        .map(|s| match s {
            S::If(_, a, b) => 1 + count(a) + count(b),
            S::While(_, b) => 1 + count(b),
            _ => 1,
        })
        .sum()
}

#[derive(Debug, Clone)]
struct Program {
    types: Vec<usize>,
    inits: Vec<u32>,
    body: Vec<S>,
}

fn program(garbage_on: bool) -> impl Strategy<Value = Program> {
    (
        prop::collection::vec(0..TYPES.len(), NVARS),
        prop::collection::vec(any::<u32>(), NVARS),
        stmts(2, 2, garbage_on),
    )
        .prop_filter("at most 30 statements", |(_, _, b)| count(b) <= 30)
        .prop_map(|(types, inits, body)| Program { types, inits, body })
}

// ---- rendering ----

fn lit(v: u32) -> String {
    if v < 20 {
        v.to_string()
    } else {
        format!("{v:#x}")
    }
}

fn render_e(e: &E) -> String {
    match e {
        E::Var(i) => format!("v{i}"),
        E::Lit(v) => lit(*v),
        E::Neg(a) => format!("-({})", render_e(a)),
        E::Not(a) => format!("!({})", render_e(a)),
        E::BitNot(a) => format!("~({})", render_e(a)),
        E::Bin(o, a, b) => format!("({} {o} {})", render_e(a), render_e(b)),
        E::Shift(o, a, s) => format!("({} {o} {s})", render_e(a)),
        E::Div(o, a, d) => format!("({} {o} {d})", render_e(a)),
        E::Ternary(c, a, b) => format!("({} ? {} : {})", render_e(c), render_e(a), render_e(b)),
    }
}

fn render_s(ss: &[S], indent: usize, loop_depth: usize, dirty: bool, out: &mut String) {
    let pad = "\t".repeat(indent);
    for s in ss {
        match s {
            S::Assign(v, None, e) => out.push_str(&format!("{pad}v{v} = {};\n", render_e(e))),
            S::Assign(v, Some(o), e) => out.push_str(&format!("{pad}v{v} {o}= {};\n", render_e(e))),
            S::Inc(v, up) => out.push_str(&format!("{pad}v{v}{};\n", if *up { "++" } else { "--" })),
            S::If(c, a, b) => {
                out.push_str(&format!("{pad}if ({}) {{\n", render_e(c)));
                render_s(a, indent + 1, loop_depth, dirty, out);
                if b.is_empty() {
                    out.push_str(&format!("{pad}}}\n"));
                } else {
                    out.push_str(&format!("{pad}}} else {{\n"));
                    render_s(b, indent + 1, loop_depth, dirty, out);
                    out.push_str(&format!("{pad}}}\n"));
                }
            }
            S::While(n, b) => {
                let w = format!("w{loop_depth}");
                out.push_str(&format!("{pad}{w} = 0;\n{pad}while ({w} < {n}) {{\n"));
                render_s(b, indent + 1, loop_depth + 1, dirty, out);
                out.push_str(&format!("{pad}\t{w}++;\n{pad}}}\n"));
            }
            S::Dead(g, style) if dirty => {
                if *style {
                    out.push_str(&format!("{pad}if (0) {{\n{pad}\t{g}\n{pad}}}\n"));
                } else {
                    out.push_str(&format!(
                        "{pad}if (v0 == v0) {{\n{pad}}} else {{\n{pad}\t{g}\n{pad}}}\n"
                    ));
                }
            }
            S::Dead(..) => {}
        }
    }
}

fn render(p: &Program, dirty: bool) -> String {
    let mut out = String::from("void f(void)\n{\n");
    for i in 0..NVARS {
        out.push_str(&format!("\t{} v{i} = {};\n", TYPES[p.types[i]].0, lit(p.inits[i])));
    }
    out.push_str("\tint w0 = 0, w1 = 0, w2 = 0;\n");
    render_s(&p.body, 1, 0, dirty, &mut out);
    out.push_str("}\n");
    out
}

// ---- reference evaluator ----

struct Ref {
    ty: Vec<Ty>,
    val: Vec<i128>,
}

fn lit_ty(v: u32) -> Ty {
    if v <= i32::MAX as u32 {
        INT
    } else {
        Ty {
            bits: 32,
            signed: false,
        }
    }
}

impl Ref {
    fn eval(&self, e: &E) -> (Ty, i128) {
        match e {
            E::Var(i) => (self.ty[*i], self.val[*i]),
            E::Lit(v) => (lit_ty(*v), i128::from(*v)),
            E::Neg(a) => {
                let (t, x) = self.eval(a);
                let t = promote(t);
                (t, wrap(-x, t))
            }
            E::BitNot(a) => {
                let (t, x) = self.eval(a);
                let t = promote(t);
                (t, wrap(!x, t))
            }
            E::Not(a) => (INT, i128::from(self.eval(a).1 == 0)),
            E::Bin("&&", a, b) => (INT, i128::from(self.eval(a).1 != 0 && self.eval(b).1 != 0)),
            E::Bin(o, a, b) => {
                let ((ta, x), (tb, y)) = (self.eval(a), self.eval(b));
                let t = usual(ta, tb);
                let (x, y) = (wrap(x, t), wrap(y, t));
                let m = (1i128 << t.bits) - 1;
                let r = match *o {
                    "+" => x + y,
                    "-" => x - y,
                    "*" => x.wrapping_mul(y),
                    "&" => (x & m) & (y & m),
                    "|" => (x & m) | (y & m),
                    "^" => (x & m) ^ (y & m),
                    "==" => return (INT, i128::from(x == y)),
                    "!=" => return (INT, i128::from(x != y)),
                    "<" => return (INT, i128::from(x < y)),
                    "<=" => return (INT, i128::from(x <= y)),
                    ">" => return (INT, i128::from(x > y)),
                    ">=" => return (INT, i128::from(x >= y)),
                    _ => unreachable!(),
                };
                (t, wrap(r, t))
            }
            E::Shift(o, a, s) => {
                let (t, x) = self.eval(a);
                let t = promote(t);
                let x = wrap(x, t);
                let r = if *o == "<<" { x << s } else { x >> s };
                (t, wrap(r, t))
            }
            E::Div(o, a, d) => {
                let (t, x) = self.eval(a);
                let t = usual(t, INT);
                let (x, d) = (wrap(x, t), i128::from(*d));
                (t, wrap(if *o == "/" { x / d } else { x % d }, t))
            }
            E::Ternary(c, a, b) => {
                let (ta, tb) = (self.eval(a).0, self.eval(b).0);
                let t = usual(ta, tb);
                let (_, v) = if self.eval(c).1 != 0 {
                    self.eval(a)
                } else {
                    self.eval(b)
                };
                (t, wrap(v, t))
            }
        }
    }

    fn set(&mut self, i: usize, v: i128) {
        self.val[i] = wrap(v, self.ty[i]);
    }

    fn run(&mut self, ss: &[S], loop_depth: usize, loops: &mut [i128; 3]) {
        for s in ss {
            match s {
                S::Assign(v, None, e) => {
                    let x = self.eval(e).1;
                    self.set(*v, x);
                }
                S::Assign(v, Some(o), e) => {
                    let x = self.eval(&E::Bin(o, Box::new(E::Var(*v)), Box::new(e.clone()))).1;
                    self.set(*v, x);
                }
                S::Inc(v, up) => {
                    let x = self.val[*v] + if *up { 1 } else { -1 };
                    self.set(*v, x);
                }
                S::If(c, a, b) => {
                    if self.eval(c).1 != 0 {
                        self.run(a, loop_depth, loops);
                    } else {
                        self.run(b, loop_depth, loops);
                    }
                }
                S::While(n, b) => {
                    loops[loop_depth] = 0;
                    while loops[loop_depth] < i128::from(*n) {
                        self.run(b, loop_depth + 1, loops);
                        loops[loop_depth] += 1;
                    }
                }
                S::Dead(..) => {}
            }
        }
    }
}

fn reference(p: &Program) -> HashMap<String, i128> {
    let ty: Vec<Ty> = p.types.iter().map(|&i| TYPES[i].1).collect();
    let val = p.inits.iter().zip(&ty).map(|(&v, &t)| wrap(i128::from(v), t)).collect();
    let mut r = Ref { ty, val };
    let mut loops = [0i128; 3];
    r.run(&p.body, 0, &mut loops);
    let mut out: HashMap<String, i128> = r.val.iter().enumerate().map(|(i, v)| (format!("v{i}"), *v)).collect();
    for (i, w) in loops.iter().enumerate() {
        out.insert(format!("w{i}"), *w);
    }
    out
}

fn interpret(src: &str) -> Result<HashMap<String, i128>, String> {
    let mut s = Session::from_source("prog.c", src);
    let locals = s.run_function_locals("f", &mut Batch).map_err(|e| e.to_string())?;
    locals
        .into_iter()
        .map(|(k, v)| v.map(|c| (k.clone(), c.value())).ok_or(format!("{k} not concrete")))
        .collect()
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

/// Runs `cases` garbage-free programs through the interpreter and the
/// reference evaluator; returns how many agreed.
pub fn check_concrete(cases: u32) -> Result<u32, String> {
    let n = std::cell::Cell::new(0u32);
    runner(cases)
        .run(&program(false), |p| {
            let src = render(&p, false);
            let got = interpret(&src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
            prop_assert_eq!(got, reference(&p), "\n{}", src);
            n.set(n.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(n.get())
}

/// Runs `cases` programs with and without garbage in never-taken branches;
/// returns how many behaved identically.
pub fn check_garbage(cases: u32) -> Result<u32, String> {
    let n = std::cell::Cell::new(0u32);
    runner(cases)
        .run(&program(true), |p| {
            let clean = interpret(&render(&p, false));
            let dirty_src = render(&p, true);
            let dirty = interpret(&dirty_src);
            prop_assert_eq!(&dirty, &clean, "\n{}", dirty_src);
            prop_assert!(clean.is_ok());
            n.set(n.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(n.get())
}
