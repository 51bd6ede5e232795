//! Island parsing with holes.
//!
//! Statement rules match coarse shapes (`if` + balanced parens + body) and
//! record the delimited regions as [`Hole`]s without looking inside them.
//! A hole is parsed only when execution reaches it, and the result is
//! memoized, so code that never runs is never analyzed.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use thiserror::Error;

use crate::corpus::{Corpus, FunctionLocation};
use crate::token::{find_balanced_span, Cursor, FileId, Token, TokenError, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unbalanced `{open}` opened on line {line}")]
    UnbalancedDelimiter { open: String, line: u32 },
    #[error("no parsing rule matched on line {line}")]
    NoRuleMatched { line: u32 },
    #[error("line {line}: {message}")]
    Malformed { line: u32, message: String },
}

impl From<TokenError> for ParseError {
    fn from(e: TokenError) -> Self {
        match e {
            TokenError::UnbalancedDelimiter { open, line } => {
                ParseError::UnbalancedDelimiter { open, line }
            }
        }
    }
}

/// A delimited, not-yet-parsed region of a file's token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hole {
    pub file: FileId,
    pub start: usize,
    pub end: usize,
}

impl Hole {
    pub fn new(file: FileId, range: Range<usize>) -> Self {
        Hole {
            file,
            start: range.start,
            end: range.end,
        }
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn overlaps(&self, file: FileId, range: &Range<usize>) -> bool {
        self.file == file && self.start < range.end && range.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    If {
        cond: Hole,
        then: Hole,
        otherwise: Option<Hole>,
    },
    While {
        cond: Hole,
        body: Hole,
    },
    DoWhile {
        body: Hole,
        cond: Hole,
    },
    For {
        init: Hole,
        cond: Hole,
        step: Hole,
        body: Hole,
    },
    Return {
        expr: Option<Hole>,
    },
    Break,
    Continue,
    Block {
        body: Hole,
    },
    Declaration {
        tokens: Hole,
    },
    Expression {
        tokens: Hole,
    },
    Switch {
        subject: Hole,
        body: Hole,
    },
    Case {
        expr: Hole,
    },
    Default,
    Goto {
        label: String,
    },
    Label {
        name: String,
    },
    FunctionDef {
        name: String,
        params: Hole,
        body: Hole,
    },
    Empty,
    Raw {
        tokens: Hole,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub file: FileId,
    /// 1-based line of the node's first token.
    pub line: u32,
    pub span: Range<usize>,
}

/// A statement-shape matcher. Rules inspect the cursor and either claim the
/// next statement (returning the node and the index just past it) or decline.
pub trait Rule: Send + Sync {
    fn name(&self) -> &str;
    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError>;
}

/// What a rule needs to know about the file it is matching in.
pub struct FileCtx {
    pub id: FileId,
    pub line_base: u32,
}

impl FileCtx {
    fn line(&self, tok: &Token) -> u32 {
        tok.line + self.line_base
    }
}

#[derive(Clone)]
pub struct RuleRegistry {
    rules: Vec<(i32, Arc<dyn Rule>)>,
}

impl std::fmt::Debug for RuleRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list()
            .entries(self.rules.iter().map(|(p, r)| (p, r.name())))
            .finish()
    }
}

impl Default for RuleRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RuleRegistry {
    pub fn empty() -> Self {
        RuleRegistry { rules: Vec::new() }
    }

    /// The built-in C statement hierarchy.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(100, Arc::new(DirectiveRule));
        reg.register(90, Arc::new(KeywordRule));
        reg.register(80, Arc::new(BlockRule));
        reg.register(70, Arc::new(LabelRule));
        reg.register(60, Arc::new(DeclarationRule));
        reg.register(50, Arc::new(ExpressionRule));
        reg.register(i32::MIN, Arc::new(RawRule));
        reg
    }

    /// Higher priority wins; equal priorities keep registration order.
    pub fn register(&mut self, priority: i32, rule: Arc<dyn Rule>) {
        let pos = self
            .rules
            .iter()
            .position(|(p, _)| *p < priority)
            .unwrap_or(self.rules.len());
        self.rules.insert(pos, (priority, rule));
    }

    pub fn names(&self) -> Vec<&str> {
        self.rules.iter().map(|(_, r)| r.name()).collect()
    }
}

/// Produces exactly one node at the cursor and advances past it.
pub fn parse_next_statement(
    cursor: &mut Cursor<'_>,
    file: &FileCtx,
    rules: &RuleRegistry,
) -> Result<Node, ParseError> {
    for (_, rule) in &rules.rules {
        if let Some((node, next)) = rule.try_match(cursor, file)? {
            debug_assert!(next > cursor.index(), "rule {} made no progress", rule.name());
            cursor.seek(next);
            return Ok(node);
        }
    }
    let line = cursor.peek().map_or(0, |t| file.line(t));
    Err(ParseError::NoRuleMatched { line })
}

/// Memoized hole parsing with a materialization counter.
#[derive(Debug, Default)]
pub struct ParseCache {
    parsed: HashMap<Hole, Arc<Vec<Node>>>,
    order: Vec<Hole>,
    nodes_materialized: usize,
}

impl ParseCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of statement nodes created so far.
    pub fn nodes_materialized(&self) -> usize {
        self.nodes_materialized
    }

    /// Holes parsed so far, in first-parse order.
    pub fn parsed_holes(&self) -> &[Hole] {
        &self.order
    }

    pub fn is_parsed(&self, hole: &Hole) -> bool {
        self.parsed.contains_key(hole)
    }

    /// Parses a hole's contents as a statement list, once.
    pub fn parse_hole_as_block(
        &mut self,
        corpus: &Corpus,
        hole: Hole,
        rules: &RuleRegistry,
    ) -> Result<Arc<Vec<Node>>, ParseError> {
        if let Some(nodes) = self.parsed.get(&hole) {
            return Ok(nodes.clone());
        }
        let file = corpus.file(hole.file);
        let ctx = FileCtx {
            id: file.id,
            line_base: file.line_base,
        };
        let mut cursor = Cursor::bounded(&file.tokens, hole.range());
        let mut nodes = Vec::new();
        while !cursor.at_end() {
            nodes.push(parse_next_statement(&mut cursor, &ctx, rules)?);
        }
        self.nodes_materialized += nodes.len();
        let nodes = Arc::new(nodes);
        self.parsed.insert(hole, nodes.clone());
        self.order.push(hole);
        Ok(nodes)
    }
}

/// A function definition located by scanning, not parsing.
#[derive(Debug, Clone)]
pub struct FunctionDef {
    pub node: Node,
    pub location: FunctionLocation,
}

impl FunctionDef {
    pub fn params(&self) -> Hole {
        Hole::new(self.location.file, self.location.params.clone())
    }

    pub fn body(&self) -> Hole {
        Hole::new(self.location.file, self.location.body.clone())
    }
}

/// Finds `name(...) {` at file scope across the corpus, in file order.
pub fn find_function_definition(corpus: &Corpus, name: &str) -> Option<FunctionDef> {
    let loc = corpus.find_function(name)?;
    let node = Node {
        kind: NodeKind::FunctionDef {
            name: name.to_string(),
            params: Hole::new(loc.file, loc.params.clone()),
            body: Hole::new(loc.file, loc.body.clone()),
        },
        file: loc.file,
        line: loc.line,
        span: loc.return_type.start..loc.body.end + 1,
    };
    Some(FunctionDef {
        node,
        location: loc,
    })
}

// ---------------------------------------------------------------------------
// Shape helpers

fn sig_at<'a>(cursor: &Cursor<'a>, index: usize) -> Option<(usize, &'a Token)> {
    let i = cursor.next_significant(index)?;
    Some((i, &cursor.tokens()[i]))
}

fn span_from(cursor: &Cursor<'_>, index: usize, open: &str, close: &str) -> Result<Range<usize>, ParseError> {
    let mut c = cursor.clone();
    c.seek(index);
    Ok(find_balanced_span(&c, open, close)?)
}

fn interior(span: &Range<usize>) -> Range<usize> {
    span.start + 1..span.end - 1
}

/// End (exclusive) of the statement starting at `index`, found by shape
/// alone: nested statement keywords are followed structurally, everything
/// else runs to the next top-level `;`.
pub fn statement_extent(cursor: &Cursor<'_>, index: usize) -> Result<usize, ParseError> {
    let Some((i, tok)) = sig_at(cursor, index) else {
        return Ok(cursor.end());
    };
    match tok.text() {
        "{" => Ok(span_from(cursor, i, "{", "}")?.end),
        "if" => {
            let (p, _) = sig_at(cursor, i + 1).ok_or_else(|| missing(tok, "("))?;
            let cond = span_from(cursor, p, "(", ")")?;
            let body_end = statement_extent(cursor, cond.end)?;
            match sig_at(cursor, body_end) {
                Some((e, t)) if t.is("else") => statement_extent(cursor, e + 1),
                _ => Ok(body_end),
            }
        }
        "for" | "while" | "switch" => {
            let (p, _) = sig_at(cursor, i + 1).ok_or_else(|| missing(tok, "("))?;
            let header = span_from(cursor, p, "(", ")")?;
            if tok.is("while") {
                // `while (x);` as the tail of a do-while is handled by `do`.
                if let Some((s, t)) = sig_at(cursor, header.end) {
                    if t.is(";") {
                        return Ok(s + 1);
                    }
                }
            }
            statement_extent(cursor, header.end)
        }
        "do" => {
            let body_end = statement_extent(cursor, i + 1)?;
            let (w, _) = sig_at(cursor, body_end).ok_or_else(|| missing(tok, "while"))?;
            let (p, _) = sig_at(cursor, w + 1).ok_or_else(|| missing(tok, "("))?;
            let cond = span_from(cursor, p, "(", ")")?;
            match sig_at(cursor, cond.end) {
                Some((s, t)) if t.is(";") => Ok(s + 1),
                _ => Ok(cond.end),
            }
        }
        _ => Ok(top_level_semicolon(cursor, i).map_or(cursor.end(), |s| s + 1)),
    }
}

fn missing(tok: &Token, what: &str) -> ParseError {
    ParseError::Malformed {
        line: tok.line,
        message: format!("expected `{what}` after `{}`", tok.text()),
    }
}

fn top_level_semicolon(cursor: &Cursor<'_>, from: usize) -> Option<usize> {
    let toks = cursor.tokens();
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate().take(cursor.end()).skip(from) {
        if t.is_trivia() {
            continue;
        }
        match t.text() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            ";" if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

/// Body hole for a controlled statement: braces are stripped, a single
/// unbraced statement becomes the hole itself.
fn body_hole(cursor: &Cursor<'_>, file: FileId, index: usize) -> Result<(Hole, usize), ParseError> {
    match sig_at(cursor, index) {
        Some((i, t)) if t.is("{") => {
            let span = span_from(cursor, i, "{", "}")?;
            Ok((Hole::new(file, interior(&span)), span.end))
        }
        Some((i, _)) => {
            let end = statement_extent(cursor, i)?;
            Ok((Hole::new(file, i..end), end))
        }
        None => Ok((Hole::new(file, cursor.end()..cursor.end()), cursor.end())),
    }
}

fn paren_hole(cursor: &Cursor<'_>, file: FileId, after: usize, kw: &Token) -> Result<(Hole, usize), ParseError> {
    match sig_at(cursor, after) {
        Some((p, t)) if t.is("(") => {
            let span = span_from(cursor, p, "(", ")")?;
            Ok((Hole::new(file, interior(&span)), span.end))
        }
        _ => Err(missing(kw, "(")),
    }
}

fn node(kind: NodeKind, file: &FileCtx, first: &Token, span: Range<usize>) -> Node {
    Node {
        kind,
        file: file.id,
        line: file.line(first),
        span,
    }
}

// ---------------------------------------------------------------------------
// Built-in rules

struct DirectiveRule;

impl Rule for DirectiveRule {
    fn name(&self) -> &str {
        "directive"
    }

    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError> {
        let Some(tok) = cursor.peek() else { return Ok(None) };
        if !tok.is("#") {
            return Ok(None);
        }
        let start = cursor.index();
        let toks = cursor.tokens();
        let end = (start..cursor.end())
            .find(|&i| toks[i].kind == TokenKind::Newline)
            .unwrap_or(cursor.end());
        let hole = Hole::new(file.id, start..end);
        Ok(Some((node(NodeKind::Raw { tokens: hole }, file, tok, start..end), end.max(start + 1))))
    }
}

struct KeywordRule;

impl Rule for KeywordRule {
    fn name(&self) -> &str {
        "statement-keyword"
    }

    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError> {
        let Some(tok) = cursor.peek() else { return Ok(None) };
        if tok.kind != TokenKind::Keyword {
            return Ok(None);
        }
        let start = cursor.index();
        let id = file.id;
        let (kind, end) = match tok.text() {
            "if" => {
                let (cond, after) = paren_hole(cursor, id, start + 1, tok)?;
                let (then, after_then) = body_hole(cursor, id, after)?;
                match sig_at(cursor, after_then) {
                    Some((e, t)) if t.is("else") => {
                        let (otherwise, end) = body_hole(cursor, id, e + 1)?;
                        (
                            NodeKind::If {
                                cond,
                                then,
                                otherwise: Some(otherwise),
                            },
                            end,
                        )
                    }
                    _ => (
                        NodeKind::If {
                            cond,
                            then,
                            otherwise: None,
                        },
                        after_then,
                    ),
                }
            }
            "while" => {
                let (cond, after) = paren_hole(cursor, id, start + 1, tok)?;
                let (body, end) = body_hole(cursor, id, after)?;
                (NodeKind::While { cond, body }, end)
            }
            "switch" => {
                let (subject, after) = paren_hole(cursor, id, start + 1, tok)?;
                let (body, end) = body_hole(cursor, id, after)?;
                (NodeKind::Switch { subject, body }, end)
            }
            "do" => {
                let (body, after) = body_hole(cursor, id, start + 1)?;
                let (w, wt) = sig_at(cursor, after).ok_or_else(|| missing(tok, "while"))?;
                if !wt.is("while") {
                    return Err(missing(tok, "while"));
                }
                let (cond, after_cond) = paren_hole(cursor, id, w + 1, wt)?;
                let end = match sig_at(cursor, after_cond) {
                    Some((s, t)) if t.is(";") => s + 1,
                    _ => after_cond,
                };
                (NodeKind::DoWhile { body, cond }, end)
            }
            "for" => {
                let (header, after) = paren_hole(cursor, id, start + 1, tok)?;
                let parts = split_for_header(cursor.tokens(), header.range());
                let [init, cond, step] = match parts {
                    Some(p) => p.map(|r| Hole::new(id, r)),
                    None => {
                        return Err(ParseError::Malformed {
                            line: file.line(tok),
                            message: "for header needs two `;`".into(),
                        })
                    }
                };
                let (body, end) = body_hole(cursor, id, after)?;
                (
                    NodeKind::For {
                        init,
                        cond,
                        step,
                        body,
                    },
                    end,
                )
            }
            "return" => {
                let semi = top_level_semicolon(cursor, start + 1);
                let end = semi.unwrap_or(cursor.end());
                let has_expr = cursor.next_significant(start + 1).is_some_and(|i| i < end);
                let expr = has_expr.then(|| Hole::new(id, start + 1..end));
                (NodeKind::Return { expr }, semi.map_or(end, |s| s + 1))
            }
            "break" | "continue" => {
                let end = match sig_at(cursor, start + 1) {
                    Some((s, t)) if t.is(";") => s + 1,
                    _ => start + 1,
                };
                let kind = if tok.is("break") {
                    NodeKind::Break
                } else {
                    NodeKind::Continue
                };
                (kind, end)
            }
            "goto" => {
                let (l, lt) = sig_at(cursor, start + 1).ok_or_else(|| missing(tok, "label"))?;
                let end = match sig_at(cursor, l + 1) {
                    Some((s, t)) if t.is(";") => s + 1,
                    _ => l + 1,
                };
                (
                    NodeKind::Goto {
                        label: lt.text().to_string(),
                    },
                    end,
                )
            }
            "case" => {
                let colon = case_colon(cursor, start + 1).ok_or_else(|| missing(tok, ":"))?;
                (
                    NodeKind::Case {
                        expr: Hole::new(id, start + 1..colon),
                    },
                    colon + 1,
                )
            }
            "default" => match sig_at(cursor, start + 1) {
                Some((c, t)) if t.is(":") => (NodeKind::Default, c + 1),
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        Ok(Some((node(kind, file, tok, start..end), end)))
    }
}

fn case_colon(cursor: &Cursor<'_>, from: usize) -> Option<usize> {
    let toks = cursor.tokens();
    let mut depth = 0i32;
    let mut ternary = 0i32;
    for (i, t) in toks.iter().enumerate().take(cursor.end()).skip(from) {
        match t.text() {
            _ if t.is_trivia() => {}
            "(" | "[" => depth += 1,
            ")" | "]" => depth -= 1,
            "?" => ternary += 1,
            ":" if depth == 0 && ternary == 0 => return Some(i),
            ":" => ternary -= 1,
            _ => {}
        }
    }
    None
}

fn split_for_header(toks: &[Token], range: Range<usize>) -> Option<[Range<usize>; 3]> {
    let mut depth = 0i32;
    let mut cuts = Vec::new();
    for i in range.clone() {
        let t = &toks[i];
        if t.is_trivia() {
            continue;
        }
        match t.text() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            ";" if depth == 0 => cuts.push(i),
            _ => {}
        }
    }
    if cuts.len() != 2 {
        return None;
    }
    Some([
        range.start..cuts[0],
        cuts[0] + 1..cuts[1],
        cuts[1] + 1..range.end,
    ])
}

struct BlockRule;

impl Rule for BlockRule {
    fn name(&self) -> &str {
        "block"
    }

    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError> {
        let Some(tok) = cursor.peek() else { return Ok(None) };
        let start = cursor.index();
        if tok.is(";") {
            return Ok(Some((node(NodeKind::Empty, file, tok, start..start + 1), start + 1)));
        }
        if !tok.is("{") {
            return Ok(None);
        }
        let span = find_balanced_span(cursor, "{", "}")?;
        let body = Hole::new(file.id, interior(&span));
        Ok(Some((node(NodeKind::Block { body }, file, tok, span.clone()), span.end)))
    }
}

struct LabelRule;

impl Rule for LabelRule {
    fn name(&self) -> &str {
        "label"
    }

    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError> {
        let Some(tok) = cursor.peek() else { return Ok(None) };
        if tok.kind != TokenKind::Identifier {
            return Ok(None);
        }
        let start = cursor.index();
        match sig_at(cursor, start + 1) {
            Some((c, t)) if t.is(":") => {
                let kind = NodeKind::Label {
                    name: tok.text().to_string(),
                };
                Ok(Some((node(kind, file, tok, start..c + 1), c + 1)))
            }
            _ => Ok(None),
        }
    }
}

const DECL_KEYWORDS: &[&str] = &[
    "int", "char", "short", "long", "unsigned", "signed", "void", "struct", "union", "enum",
    "const", "volatile", "static", "extern", "register", "_Bool", "typedef", "inline", "auto",
    "__inline", "__inline__", "double", "float",
];

struct DeclarationRule;

impl Rule for DeclarationRule {
    fn name(&self) -> &str {
        "declaration"
    }

    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError> {
        let Some(tok) = cursor.peek() else { return Ok(None) };
        if tok.kind != TokenKind::Keyword || !DECL_KEYWORDS.contains(&tok.text()) {
            return Ok(None);
        }
        let start = cursor.index();
        let semi = top_level_semicolon(cursor, start);
        let (tokens_end, end) = match semi {
            Some(s) => (s, s + 1),
            None => (cursor.end(), cursor.end()),
        };
        let kind = NodeKind::Declaration {
            tokens: Hole::new(file.id, start..tokens_end),
        };
        Ok(Some((node(kind, file, tok, start..end), end)))
    }
}

struct ExpressionRule;

impl Rule for ExpressionRule {
    fn name(&self) -> &str {
        "expression"
    }

    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError> {
        let Some(tok) = cursor.peek() else { return Ok(None) };
        let start = cursor.index();
        let Some(semi) = top_level_semicolon(cursor, start) else {
            return Ok(None);
        };
        let kind = NodeKind::Expression {
            tokens: Hole::new(file.id, start..semi),
        };
        Ok(Some((node(kind, file, tok, start..semi + 1), semi + 1)))
    }
}

/// Fallback: consumes to the next top-level `;`, through a balanced `{}`
/// group, or to the end of the region. Always makes progress.
struct RawRule;

impl Rule for RawRule {
    fn name(&self) -> &str {
        "raw"
    }

    fn try_match(&self, cursor: &Cursor<'_>, file: &FileCtx) -> Result<Option<(Node, usize)>, ParseError> {
        let Some(tok) = cursor.peek() else { return Ok(None) };
        let start = cursor.index();
        let toks = cursor.tokens();
        let mut depth = 0i32;
        let mut end = cursor.end();
        for (i, t) in toks.iter().enumerate().take(cursor.end()).skip(start) {
            if t.is_trivia() {
                continue;
            }
            match t.text() {
                "{" => depth += 1,
                "}" => {
                    depth -= 1;
                    if depth <= 0 {
                        end = i + 1;
                        break;
                    }
                }
                ";" if depth == 0 => {
                    end = i + 1;
                    break;
                }
                _ => {}
            }
        }
        let end = end.max(start + 1);
        let kind = NodeKind::Raw {
            tokens: Hole::new(file.id, start..end),
        };
        Ok(Some((node(kind, file, tok, start..end), end)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_all(src: &str) -> (Corpus, Vec<Node>) {
        let mut corpus = Corpus::new();
        let id = corpus.add_source("t.c", src.as_bytes());
        let len = corpus.file(id).tokens.len();
        let mut cache = ParseCache::new();
        let nodes = cache
            .parse_hole_as_block(&corpus, Hole::new(id, 0..len), &RuleRegistry::builtin())
            .unwrap();
        (corpus, nodes.as_ref().clone())
    }

    fn text(corpus: &Corpus, hole: &Hole) -> String {
        let f = corpus.file(hole.file);
        f.tokens[hole.range()]
            .iter()
            .filter(|t| !t.is_trivia())
            .map(|t| t.text())
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn if_with_holes() {
        let (corpus, nodes) = parse_all("if (x > 0) { y = 1; } z = 2;");
        assert_eq!(nodes.len(), 2);
        let NodeKind::If { cond, then, otherwise } = &nodes[0].kind else {
            panic!("expected if, got {:?}", nodes[0].kind)
        };
        assert_eq!(text(&corpus, cond), "x > 0");
        assert_eq!(text(&corpus, then), "y = 1 ;");
        assert!(otherwise.is_none());
        assert!(matches!(nodes[1].kind, NodeKind::Expression { .. }));
    }

    #[test]
    fn garbage_in_branch_is_not_analyzed() {
        let (_, nodes) = parse_all("if (x) { @garbage!! ) ( } done();");
        assert_eq!(nodes.len(), 2);
        assert!(matches!(nodes[0].kind, NodeKind::If { .. }));
    }

    #[test]
    fn call_statement() {
        let (corpus, nodes) = parse_all("err = of_address_to_resource(np, 0, &iomem);");
        let NodeKind::Expression { tokens } = &nodes[0].kind else { panic!() };
        assert_eq!(text(&corpus, tokens), "err = of_address_to_resource ( np , 0 , & iomem )");
    }

    #[test]
    fn empty_hole() {
        let (_, nodes) = parse_all("");
        assert!(nodes.is_empty());
    }

    #[test]
    fn else_if_chain_nests_lazily() {
        let (corpus, nodes) = parse_all("if (a) x = 1; else if (b) x = 2; else x = 3;");
        assert_eq!(nodes.len(), 1);
        let NodeKind::If { otherwise: Some(e), .. } = &nodes[0].kind else { panic!() };
        assert!(text(&corpus, e).starts_with("if ( b )"));
    }

    #[test]
    fn unbraced_loop_bodies() {
        let (corpus, nodes) = parse_all("for (i = 0; i < 2; i++) if (i) a(); else b(); c();");
        assert_eq!(nodes.len(), 2);
        let NodeKind::For { init, cond, step, body } = &nodes[0].kind else { panic!() };
        assert_eq!(text(&corpus, init), "i = 0");
        assert_eq!(text(&corpus, cond), "i < 2");
        assert_eq!(text(&corpus, step), "i ++");
        assert_eq!(text(&corpus, body), "if ( i ) a ( ) ; else b ( ) ;");
    }

    #[test]
    fn do_while_switch_labels() {
        let (_, nodes) = parse_all(
            "do { x++; } while (x < 3); switch (x) { case 1: break; default: ; } out: return x;",
        );
        let kinds: Vec<_> = nodes.iter().map(|n| std::mem::discriminant(&n.kind)).collect();
        assert_eq!(kinds.len(), 4);
        assert!(matches!(nodes[0].kind, NodeKind::DoWhile { .. }));
        assert!(matches!(nodes[1].kind, NodeKind::Switch { .. }));
        assert!(matches!(nodes[2].kind, NodeKind::Label { .. }));
        assert!(matches!(nodes[3].kind, NodeKind::Return { expr: Some(_) }));
    }

    #[test]
    fn raw_fallback_makes_progress() {
        let (_, nodes) = parse_all("a = (b; }");
        assert!(nodes.iter().all(|n| matches!(n.kind, NodeKind::Raw { .. })));
    }

    #[test]
    fn unbalanced_paren_in_if_is_an_error() {
        let mut corpus = Corpus::new();
        let id = corpus.add_source("t.c", b"if (x { }");
        let len = corpus.file(id).tokens.len();
        let err = ParseCache::new()
            .parse_hole_as_block(&corpus, Hole::new(id, 0..len), &RuleRegistry::builtin())
            .unwrap_err();
        assert!(matches!(err, ParseError::UnbalancedDelimiter { .. }));
    }

    #[test]
    fn memoized_per_hole() {
        let mut corpus = Corpus::new();
        let id = corpus.add_source("t.c", b"a(); b();");
        let len = corpus.file(id).tokens.len();
        let mut cache = ParseCache::new();
        let rules = RuleRegistry::builtin();
        let h = Hole::new(id, 0..len);
        cache.parse_hole_as_block(&corpus, h, &rules).unwrap();
        cache.parse_hole_as_block(&corpus, h, &rules).unwrap();
        assert_eq!(cache.nodes_materialized(), 2);
        assert_eq!(cache.parsed_holes().len(), 1);
    }

    #[test]
    fn function_definition_scan() {
        let mut corpus = Corpus::new();
        corpus.add_source(
            "d.c",
            b"void bcm2835_gpio_wr(struct bcm2835_pinctrl *pc, unsigned reg, u32 val) {\n\twritel(val, pc->base + reg);\n}\n",
        );
        let def = find_function_definition(&corpus, "bcm2835_gpio_wr").unwrap();
        assert_eq!(text(&corpus, &def.params()), "struct bcm2835_pinctrl * pc , unsigned reg , u32 val");
        assert!(find_function_definition(&corpus, "writel").is_none());
    }

    #[test]
    fn call_without_body_is_not_a_definition() {
        let mut corpus = Corpus::new();
        corpus.add_source(
            "f.c",
            b"int main(void)\n{\n\tfoo(1);\n\treturn 0;\n}\n",
        );
        assert!(find_function_definition(&corpus, "foo").is_none());
        assert!(find_function_definition(&corpus, "main").is_some());
    }
}
