use std::sync::Arc;

use proptest::prelude::*;
use ssi_core::corpus::Corpus;
use ssi_core::interp::{Batch, Session};
use ssi_core::parse::{find_function_definition, FileCtx, Hole, Node, NodeKind, ParseCache, ParseError, Rule, RuleRegistry};
use ssi_core::token::{Cursor, FileId};

fn statement() -> impl Strategy<Value = String> {
    let simple = prop::sample::select(vec![
        "x = x + 1;", "y = f(x, &y);", "if (x) y = 2;", "return x;", "break;", "continue;", "goto out;",
        "out: x--;", "int z = 3, *p = &z;", "struct s v = { .a = 1 };", "do x++; while (x < 3);",
        "switch (x) { case 1: y = 1; break; default: ; }", "for (i = 0; i < 4; i++) x += i;",
        "#define Q 1", ";", "asm volatile(\"nop\");", "TRACE(x, y);", "TRACE(1);", "x = ({ int t = 2; t; });",
    ]);
    simple.prop_map(String::from).prop_recursive(3, 30, 4, |inner| {
        prop_oneof![
            (inner.clone(), prop::option::of(inner.clone())).prop_map(|(a, b)| match b {
                Some(b) => format!("if (x > 1) {{\n{a}\n}} else {{\n{b}\n}}"),
                None => format!("while (x < 9) {{\n{a}\n}}"),
            }),
            prop::collection::vec(inner, 1..4).prop_map(|v| format!("{{\n{}\n}}", v.join("\n"))),
        ]
    })
}

fn body() -> impl Strategy<Value = String> {
    prop::collection::vec(statement(), 1..8).prop_map(|v| v.join("\n"))
}

/// Parses every hole reachable from `hole`, depth first.
fn parse_all(corpus: &Corpus, cache: &mut ParseCache, rules: &RuleRegistry, hole: Hole, out: &mut Vec<Node>) {
    let Ok(nodes) = cache.parse_hole_as_block(corpus, hole, rules) else { return };
    for n in nodes.iter() {
        out.push(n.clone());
        let inner: Vec<Hole> = match &n.kind {
            NodeKind::If { then, otherwise, .. } => std::iter::once(*then).chain(*otherwise).collect(),
            NodeKind::While { body, .. } | NodeKind::DoWhile { body, .. } | NodeKind::For { body, .. } => vec![*body],
            NodeKind::Block { body } | NodeKind::Switch { body, .. } => vec![*body],
            _ => vec![],
        };
        for h in inner {
            parse_all(corpus, cache, rules, h, out);
        }
    }
}

fn nodes_of(src: &str, rules: &RuleRegistry) -> Vec<Node> {
    let mut corpus = Corpus::new();
    corpus.add_source("t.c", src.as_bytes());
    let def = find_function_definition(&corpus, "f").unwrap();
    let mut cache = ParseCache::new();
    let mut out = Vec::new();
    parse_all(&corpus, &mut cache, rules, def.body(), &mut out);
    out
}

/// Claims `TRACE ( ... ) ;` statements as raw nodes.
struct TraceRule;

impl Rule for TraceRule {
    fn name(&self) -> &str {
        "trace-macro"
    }

    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError> {
        let Some(t) = cursor.peek().filter(|t| t.is("TRACE")) else { return Ok(None) };
        let toks = cursor.tokens();
        let start = cursor.index();
        let Some(end) = (start..cursor.end()).find(|&i| toks[i].is(";")) else { return Ok(None) };
        let node = Node {
            kind: NodeKind::Raw { tokens: Hole::new(file.id, start..end + 1) },
            file: file.id,
            line: t.line + file.line_base,
            span: start..end + 1,
        };
        Ok(Some((node, end + 1)))
    }
}

proptest! {
    #[test]
    fn parsing_is_deterministic(b in body()) {
        let src = format!("void f(void)\n{{\n{b}\n}}\n");
        let rules = RuleRegistry::builtin();
        prop_assert_eq!(nodes_of(&src, &rules), nodes_of(&src, &rules));
    }

    #[test]
    fn custom_rule_shadows_only_its_tokens(b in body()) {
        let src = format!("void f(void)\n{{\n{b}\n}}\n");
        let builtin = nodes_of(&src, &RuleRegistry::builtin());
        let mut rules = RuleRegistry::builtin();
        rules.register(1000, Arc::new(TraceRule));
        let custom = nodes_of(&src, &rules);
        prop_assert_eq!(builtin.len(), custom.len());
        let mut corpus = Corpus::new();
        let id = corpus.add_source("t.c", src.as_bytes());
        let file = corpus.file(id).clone();
        for (a, c) in builtin.iter().zip(&custom) {
            prop_assert_eq!(&a.span, &c.span);
            let first = file.tokens[c.span.start].text();
            if first == "TRACE" {
                prop_assert!(matches!(c.kind, NodeKind::Raw { .. }), "custom");
                prop_assert!(matches!(a.kind, NodeKind::Expression { .. }), "builtin");
            } else {
                prop_assert_eq!(a, c);
            }
        }
    }

    #[test]
    fn running_one_function_never_parses_siblings(siblings in prop::collection::vec(body(), 1..5), before in 0usize..5) {
        let target = "int f(void)\n{\n\tint x = 1;\n\tif (x) x = 4;\n\treturn x;\n}\n";
        let mut src = String::new();
        for (i, b) in siblings.iter().enumerate() {
            if i == before {
                src.push_str(target);
            }
            src.push_str(&format!("int g{i}(void)\n{{\n{b}\n}}\n"));
        }
        if before >= siblings.len() {
            src.push_str(target);
        }
        let mut alone = Session::from_source("t.c", target);
        alone.call("f", &[], &mut Batch).unwrap();
        let mut s = Session::from_source("t.c", &src);
        s.call("f", &[], &mut Batch).unwrap();
        prop_assert_eq!(s.parse_cache.nodes_materialized(), alone.parse_cache.nodes_materialized());
        for i in 0..siblings.len() {
            let def = find_function_definition(&s.corpus, &format!("g{i}")).unwrap();
            let body = def.body();
            prop_assert!(!s.parse_cache.parsed_holes().iter().any(|h| h.overlaps(FileId(0), &body.range())));
        }
    }
}
