//! Token-level expansion of corpus `#define`s.

use std::sync::Arc;

use crate::corpus::{MacroDef, SourceFile};
use crate::token::{is_keyword, TokenKind};

pub const MAX_DEPTH: usize = 16;

/// A significant token detached from its file, as fed to the expression
/// parser after expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XTok {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub space_before: bool,
}

impl XTok {
    pub fn new(kind: TokenKind, text: &str, line: u32) -> Self {
        XTok {
            kind,
            text: text.to_string(),
            line,
            space_before: false,
        }
    }

    pub fn is(&self, s: &str) -> bool {
        self.text == s
    }
}

/// Significant tokens of a file range with source spacing recorded.
pub fn tokens_of(file: &SourceFile, range: std::ops::Range<usize>) -> Vec<XTok> {
    let mut out = Vec::new();
    let mut gap = false;
    for t in &file.tokens[range] {
        if t.is_trivia() {
            gap = true;
            continue;
        }
        out.push(XTok {
            kind: t.kind,
            text: t.text().to_string(),
            line: t.line + file.line_base,
            space_before: gap && !out.is_empty(),
        });
        gap = false;
    }
    out
}

/// Source-like rendering: `writel(val, pc->base + reg)`.
pub fn spaced_text(toks: &[XTok]) -> String {
    let mut s = String::new();
    for (i, t) in toks.iter().enumerate() {
        if i > 0 && t.space_before {
            s.push(' ');
        }
        s.push_str(&t.text);
    }
    s
}

/// Tokens joined by single spaces: `f ( a , & b )`.
pub fn joined_text(toks: &[XTok]) -> String {
    toks.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}

pub trait MacroEnv {
    fn lookup(&self, name: &str) -> Option<Arc<MacroDef>>;
    /// Names that must not expand (a hook is registered for them).
    fn is_blocked(&self, name: &str) -> bool;
}

#[derive(Debug, Default)]
pub struct Expansion {
    pub tokens: Vec<XTok>,
    pub expanded_any: bool,
    /// `(name, line)` of macros that could not be expanded.
    pub unexpanded: Vec<(String, u32)>,
}

pub fn expand(toks: Vec<XTok>, env: &dyn MacroEnv) -> Expansion {
    let mut ex = Expansion::default();
    let mut disabled = Vec::new();
    ex.tokens = expand_rec(toks, env, 0, &mut disabled, &mut ex.expanded_any, &mut ex.unexpanded);
    ex
}

fn expand_rec(
    toks: Vec<XTok>,
    env: &dyn MacroEnv,
    depth: usize,
    disabled: &mut Vec<String>,
    any: &mut bool,
    unexpanded: &mut Vec<(String, u32)>,
) -> Vec<XTok> {
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        let def = (t.kind == TokenKind::Identifier && !disabled.contains(&t.text) && !env.is_blocked(&t.text))
            .then(|| env.lookup(&t.text))
            .flatten();
        let Some(def) = def else {
            out.push(t.clone());
            i += 1;
            continue;
        };
        let (body, next) = match &def.params {
            None => (body_tokens(&def, t), i + 1),
            Some(params) => {
                if !toks.get(i + 1).is_some_and(|n| n.is("(")) {
                    out.push(t.clone());
                    i += 1;
                    continue;
                }
                let Some((args, close)) = collect_args(&toks, i + 1) else {
                    unexpanded.push((t.text.clone(), t.line));
                    out.push(t.clone());
                    i += 1;
                    continue;
                };
                let Some(args) = match_args(params, def.variadic, args) else {
                    unexpanded.push((t.text.clone(), t.line));
                    out.push(t.clone());
                    i += 1;
                    continue;
                };
                let expanded_args: Vec<Vec<XTok>> = args
                    .iter()
                    .map(|a| expand_rec(a.clone(), env, depth + 1, disabled, any, unexpanded))
                    .collect();
                let body = substitute(&def, t, params, &args, &expanded_args);
                (body, close + 1)
            }
        };
        if depth >= MAX_DEPTH {
            unexpanded.push((t.text.clone(), t.line));
            out.push(t.clone());
            i += 1;
            continue;
        }
        *any = true;
        disabled.push(def.name.clone());
        let mut rescanned = expand_rec(body, env, depth + 1, disabled, any, unexpanded);
        disabled.pop();
        if let Some(first) = rescanned.first_mut() {
            first.space_before = t.space_before;
        }
        out.extend(rescanned);
        i = next;
    }
    out
}

fn body_tokens(def: &MacroDef, at: &XTok) -> Vec<XTok> {
    let mut out: Vec<XTok> = def
        .body
        .iter()
        .map(|(k, s)| XTok::new(*k, s, at.line))
        .collect();
    respace(&mut out);
    out
}

/// Heuristic spacing for tokens that came from a macro body.
fn respace(toks: &mut [XTok]) {
    for i in 1..toks.len() {
        let prev = toks[i - 1].text.as_str();
        let cur = toks[i].text.as_str();
        toks[i].space_before = !matches!(cur, ")" | "]" | "," | ";" | "." | "->" | "++" | "--")
            && !matches!(prev, "(" | "[" | "." | "->" | "!" | "~")
            && !(cur == "(" && matches!(toks[i - 1].kind, TokenKind::Identifier | TokenKind::Keyword))
            && !(cur == "[");
    }
}

fn collect_args(toks: &[XTok], open: usize) -> Option<(Vec<Vec<XTok>>, usize)> {
    let mut depth = 0usize;
    let mut args = vec![Vec::new()];
    for (j, t) in toks.iter().enumerate().skip(open) {
        match t.text.as_str() {
            "(" | "[" | "{" => {
                depth += 1;
                if depth == 1 {
                    continue;
                }
            }
            ")" | "]" | "}" => {
                depth -= 1;
                if depth == 0 {
                    return Some((args, j));
                }
            }
            "," if depth == 1 => {
                args.push(Vec::new());
                continue;
            }
            _ => {}
        }
        args.last_mut().expect("at least one arg").push(t.clone());
    }
    None
}

fn match_args(params: &[String], variadic: bool, mut args: Vec<Vec<XTok>>) -> Option<Vec<Vec<XTok>>> {
    if params.is_empty() {
        return (args.len() == 1 && args[0].is_empty()).then(Vec::new);
    }
    if variadic {
        let fixed = params.len() - 1;
        if args.len() < fixed {
            return None;
        }
        let rest: Vec<Vec<XTok>> = args.split_off(fixed);
        let mut va = Vec::new();
        for (k, a) in rest.into_iter().enumerate() {
            if k > 0 {
                va.push(XTok::new(TokenKind::Punct, ",", a.first().map_or(0, |t| t.line)));
            }
            va.extend(a);
        }
        args.push(va);
        return Some(args);
    }
    (args.len() == params.len()).then_some(args)
}

fn substitute(def: &MacroDef, at: &XTok, params: &[String], raw: &[Vec<XTok>], expanded: &[Vec<XTok>]) -> Vec<XTok> {
    let body = body_tokens(def, at);
    let param_index = |s: &str| params.iter().position(|p| p == s);
    let mut out: Vec<XTok> = Vec::new();
    let mut i = 0;
    while i < body.len() {
        let t = &body[i];
        if t.is("#") && i + 1 < body.len() {
            if let Some(p) = param_index(&body[i + 1].text) {
                let text = format!("\"{}\"", spaced_text(&raw[p]).replace('\\', "\\\\").replace('"', "\\\""));
                let mut s = XTok::new(TokenKind::Str, &text, at.line);
                s.space_before = t.space_before;
                out.push(s);
                i += 2;
                continue;
            }
        }
        if t.is("##") {
            let rhs: Vec<XTok> = match body.get(i + 1) {
                Some(n) => match param_index(&n.text) {
                    Some(p) => raw[p].clone(),
                    None => vec![n.clone()],
                },
                None => Vec::new(),
            };
            i += 2;
            // `, ## __VA_ARGS__` drops the comma when the list is empty.
            if rhs.is_empty() {
                if out.last().is_some_and(|l| l.is(",")) {
                    out.pop();
                }
                continue;
            }
            if out.last().is_some_and(|l| l.is(",")) && body[i - 1].text == "__VA_ARGS__" {
                let start = out.len();
                out.extend(rhs);
                out[start].space_before = true;
                continue;
            }
            let mut rhs = rhs.into_iter();
            let first = rhs.next().expect("non-empty");
            match out.last_mut() {
                Some(l) => {
                    l.text.push_str(&first.text);
                    l.kind = classify(&l.text);
                }
                None => out.push(first),
            }
            out.extend(rhs);
            continue;
        }
        let next_is_paste = body.get(i + 1).is_some_and(|n| n.is("##"));
        match param_index(&t.text) {
            Some(p) => {
                let src = if next_is_paste { &raw[p] } else { &expanded[p] };
                let start = out.len();
                out.extend(src.iter().cloned());
                if let Some(f) = out.get_mut(start) {
                    f.space_before = t.space_before;
                }
            }
            None => out.push(t.clone()),
        }
        i += 1;
    }
    for t in &mut out {
        t.line = at.line;
    }
    out
}

fn classify(text: &str) -> TokenKind {
    let first = text.chars().next().unwrap_or(' ');
    if first.is_ascii_digit() {
        TokenKind::Number
    } else if first.is_ascii_alphabetic() || first == '_' {
        if is_keyword(text) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        }
    } else {
        TokenKind::Punct
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;
    use std::collections::HashSet;

    struct Env {
        corpus: Corpus,
        blocked: HashSet<String>,
    }

    impl MacroEnv for Env {
        fn lookup(&self, name: &str) -> Option<Arc<MacroDef>> {
            self.corpus.macro_def(name).cloned()
        }
        fn is_blocked(&self, name: &str) -> bool {
            self.blocked.contains(name)
        }
    }

    fn env(defs: &str) -> Env {
        let mut corpus = Corpus::new();
        corpus.add_source("m.h", defs.as_bytes());
        Env { corpus, blocked: HashSet::new() }
    }

    fn run(env: &Env, src: &str) -> Expansion {
        let mut c = Corpus::new();
        let id = c.add_source("x.c", src.as_bytes());
        let f = c.file(id);
        expand(tokens_of(f, 0..f.tokens.len()), env)
    }

    #[test]
    fn function_like() {
        let e = env("#define BIT(nr) (1UL << (nr))\n#define GPIO_REG_SHIFT(p) ((p) % 32)\n");
        let x = run(&e, "BIT(GPIO_REG_SHIFT(gpio))");
        assert_eq!(joined_text(&x.tokens), "( 1UL << ( ( ( gpio ) % 32 ) ) )");
        assert!(x.expanded_any);
    }

    #[test]
    fn object_like_and_non_call_use() {
        let e = env("#define GPREN0 0x4c\n#define F(x) x\n");
        let x = run(&e, "GPREN0 + F");
        assert_eq!(joined_text(&x.tokens), "0x4c + F");
    }

    #[test]
    fn self_reference_stops() {
        let e = env("#define foo foo + 1\n");
        assert_eq!(joined_text(&run(&e, "foo").tokens), "foo + 1");
    }

    #[test]
    fn stringify_and_paste() {
        let e = env("#define S(x) #x\n#define CAT(a, b) a ## b\n");
        assert_eq!(joined_text(&run(&e, "S(a + b)").tokens), "\"a + b\"");
        assert_eq!(joined_text(&run(&e, "CAT(GP, REN0)").tokens), "GPREN0");
    }

    #[test]
    fn variadic() {
        let e = env("#define pr(fmt, ...) printk(fmt, ##__VA_ARGS__)\n");
        assert_eq!(joined_text(&run(&e, "pr(\"a\", 1, 2)").tokens), "printk ( \"a\" , 1 , 2 )");
        assert_eq!(joined_text(&run(&e, "pr(\"a\")").tokens), "printk ( \"a\" )");
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let e = env("#define TWO(a, b) a + b\n");
        let x = run(&e, "TWO(1)");
        assert_eq!(x.unexpanded, vec![("TWO".to_string(), 1)]);
        assert_eq!(joined_text(&x.tokens), "TWO ( 1 )");
    }

    #[test]
    fn blocked_names_stay() {
        let mut e = env("#define readl(a) (*(a))\n");
        e.blocked.insert("readl".into());
        assert_eq!(joined_text(&run(&e, "readl(p)").tokens), "readl ( p )");
    }

    #[test]
    fn spacing_is_source_like() {
        let e = env("");
        let x = run(&e, "writel(val, pc->base + reg)");
        assert_eq!(spaced_text(&x.tokens), "writel(val, pc->base + reg)");
    }
}
