//! The set of tokenized files an SSI runs over, plus the cheap token scans
//! that locate top-level definitions without parsing whole files.

use std::collections::HashMap;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::token::{tokenize, FileId, Token, TokenKind};

#[derive(Debug)]
pub struct SourceFile {
    pub id: FileId,
    pub name: String,
    pub path: Option<PathBuf>,
    pub tokens: Vec<Token>,
    /// Synthetic files hold expanded macros and hook snippets; their lines
    /// are reported relative to `line_base` and breakpoints never fire there.
    pub synthetic: bool,
    pub line_base: u32,
}

impl SourceFile {
    pub fn line_of(&self, index: usize) -> u32 {
        let line = self.tokens.get(index).map_or_else(
            || self.tokens.last().map_or(1, |t| t.line),
            |t| t.line,
        );
        line + self.line_base
    }
}

/// `#define` captured from the corpus.
#[derive(Debug, Clone)]
pub struct MacroDef {
    pub name: String,
    /// `None` for object-like macros.
    pub params: Option<Vec<String>>,
    pub variadic: bool,
    pub body: Vec<(TokenKind, String)>,
    pub file: FileId,
    pub line: u32,
}

#[derive(Debug, Default)]
pub struct Corpus {
    files: Vec<Arc<SourceFile>>,
    macros: HashMap<String, Arc<MacroDef>>,
    synthetic_by_text: HashMap<(String, u32), FileId>,
}

fn is_significant(t: &Token) -> bool {
    !t.is_trivia()
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load_file(&mut self, path: &Path) -> std::io::Result<FileId> {
        let bytes = std::fs::read(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let id = self.add_source(&name, &bytes);
        Arc::get_mut(&mut self.files[id.0 as usize])
            .expect("freshly added file is unshared")
            .path = Some(path.to_path_buf());
        Ok(id)
    }

    /// Adds an in-memory source file and records its `#define`s.
    pub fn add_source(&mut self, name: &str, source: &[u8]) -> FileId {
        let id = FileId(self.files.len() as u32);
        let file = SourceFile {
            id,
            name: name.to_string(),
            path: None,
            tokens: tokenize(source),
            synthetic: false,
            line_base: 0,
        };
        self.collect_macros(&file);
        self.files.push(Arc::new(file));
        id
    }

    /// Adds (or reuses) a synthetic file. Identical text at the same base
    /// line maps to the same file, so parse memoization carries over.
    pub fn add_synthetic(&mut self, name: &str, text: &str, line_base: u32) -> FileId {
        let key = (text.to_string(), line_base);
        if let Some(&id) = self.synthetic_by_text.get(&key) {
            return id;
        }
        let id = FileId(self.files.len() as u32);
        self.files.push(Arc::new(SourceFile {
            id,
            name: name.to_string(),
            path: None,
            tokens: tokenize(text.as_bytes()),
            synthetic: true,
            line_base,
        }));
        self.synthetic_by_text.insert(key, id);
        id
    }

    pub fn file(&self, id: FileId) -> &Arc<SourceFile> {
        &self.files[id.0 as usize]
    }

    pub fn files(&self) -> impl Iterator<Item = &Arc<SourceFile>> {
        self.files.iter().filter(|f| !f.synthetic)
    }

    pub fn file_by_name(&self, name: &str) -> Option<FileId> {
        self.files()
            .find(|f| f.name == name || f.path.as_deref().is_some_and(|p| p.ends_with(name)))
            .map(|f| f.id)
    }

    pub fn macro_def(&self, name: &str) -> Option<&Arc<MacroDef>> {
        self.macros.get(name)
    }

    fn collect_macros(&mut self, file: &SourceFile) {
        for line in directive_lines(&file.tokens) {
            let sig: Vec<&Token> = file.tokens[line.clone()]
                .iter()
                .filter(|t| is_significant(t))
                .collect();
            if sig.len() < 3 {
                continue;
            }
            match sig[1].text() {
                "undef" => {
                    self.macros.remove(sig[2].text());
                }
                "define" => {
                    if let Some(def) = parse_define(file, line) {
                        self.macros.insert(def.name.clone(), Arc::new(def));
                    }
                }
                _ => {}
            }
        }
    }

    /// Locates `name ( ... ) {` at file scope, first match in file order.
    pub fn find_function(&self, name: &str) -> Option<FunctionLocation> {
        for file in self.files() {
            let toks = &file.tokens;
            let mut scan = TopLevelScan::new(toks);
            while let Some(i) = scan.next_top_level() {
                if toks[i].kind != TokenKind::Identifier || toks[i].text() != name {
                    continue;
                }
                let Some(open) = next_sig(toks, i + 1) else { continue };
                if !toks[open].is("(") {
                    continue;
                }
                let Some(close) = match_close(toks, open, "(", ")") else { continue };
                let Some(brace) = next_sig(toks, close + 1) else { continue };
                if !toks[brace].is("{") {
                    continue;
                }
                let Some(end) = match_close(toks, brace, "{", "}") else { continue };
                let ret_start = scan.segment_start();
                return Some(FunctionLocation {
                    file: file.id,
                    name: name.to_string(),
                    line: toks[i].line + file.line_base,
                    return_type: ret_start..i,
                    params: open + 1..close,
                    body: brace + 1..end,
                    body_line: toks[brace].line + file.line_base,
                });
            }
        }
        None
    }

    /// Locates the member list of `struct tag { ... }` (or union).
    pub fn find_struct(&self, tag: &str) -> Option<(FileId, Range<usize>)> {
        for file in self.files() {
            let toks = &file.tokens;
            let mut i = 0;
            while i < toks.len() {
                if toks[i].is("struct") || toks[i].is("union") {
                    if let Some(n) = next_sig(toks, i + 1) {
                        if toks[n].text() == tag {
                            if let Some(b) = next_sig(toks, n + 1) {
                                if toks[b].is("{") {
                                    if let Some(end) = match_close(toks, b, "{", "}") {
                                        return Some((file.id, b + 1..end));
                                    }
                                }
                            }
                        }
                    }
                }
                i += 1;
            }
        }
        None
    }

    /// File-scope `typedef`s: name -> token range of the whole declaration
    /// (without the trailing `;`).
    pub fn find_typedef(&self, name: &str) -> Option<(FileId, Range<usize>)> {
        for file in self.files() {
            let toks = &file.tokens;
            let mut scan = TopLevelScan::new(toks);
            while let Some(i) = scan.next_top_level() {
                if !toks[i].is("typedef") {
                    continue;
                }
                let Some(end) = find_top_level_semicolon(toks, i) else { continue };
                let declares = (i..end)
                    .filter(|&j| toks[j].kind == TokenKind::Identifier && toks[j].text() == name)
                    .any(|j| {
                        next_sig(toks, j + 1).is_some_and(|n| {
                            n == end || toks[n].is("[") || toks[n].is(")") || toks[n].is(",")
                        })
                    });
                if declares {
                    return Some((file.id, i + 1..end));
                }
            }
        }
        None
    }

    /// File-scope declaration segment declaring `name` as an object.
    pub fn find_global(&self, name: &str) -> Option<(FileId, Range<usize>)> {
        for file in self.files() {
            let toks = &file.tokens;
            let mut scan = TopLevelScan::new(toks);
            while let Some(i) = scan.next_top_level() {
                if toks[i].kind != TokenKind::Identifier || toks[i].text() != name {
                    continue;
                }
                let start = scan.segment_start();
                let first = next_sig(toks, start).unwrap_or(i);
                if first == i || toks[first].is("typedef") || toks[first].is("#") {
                    continue;
                }
                let Some(n) = next_sig(toks, i + 1) else { continue };
                if !(toks[n].is("=") || toks[n].is(";") || toks[n].is("[") || toks[n].is(",")) {
                    continue;
                }
                if let Some(end) = find_top_level_semicolon(toks, start) {
                    if end > i {
                        return Some((file.id, start..end));
                    }
                }
            }
        }
        None
    }

    /// Value expression tokens for an enumerator, plus the enumerators
    /// preceding it in the same `enum` body (needed for implicit values).
    pub fn find_enumerator(&self, name: &str) -> Option<EnumeratorLocation> {
        for file in self.files() {
            let toks = &file.tokens;
            for i in 0..toks.len() {
                if !toks[i].is("enum") {
                    continue;
                }
                let Some(mut b) = next_sig(toks, i + 1) else { continue };
                if toks[b].kind == TokenKind::Identifier {
                    let Some(n) = next_sig(toks, b + 1) else { continue };
                    b = n;
                }
                if !toks[b].is("{") {
                    continue;
                }
                let Some(end) = match_close(toks, b, "{", "}") else { continue };
                let items = split_top_level(toks, b + 1..end, ",");
                for (pos, item) in items.iter().enumerate() {
                    let Some(first) = next_sig(toks, item.start).filter(|&f| f < item.end) else {
                        continue;
                    };
                    if toks[first].text() == name {
                        return Some(EnumeratorLocation {
                            file: file.id,
                            items: items[..=pos].to_vec(),
                        });
                    }
                }
            }
        }
        None
    }

    /// Every string argument of `MACRO("...")` invocations, in corpus order.
    pub fn macro_strings(&self, macro_name: &str) -> Vec<String> {
        let mut out = Vec::new();
        for file in self.files() {
            let toks = &file.tokens;
            for i in 0..toks.len() {
                if toks[i].kind != TokenKind::Identifier || toks[i].text() != macro_name {
                    continue;
                }
                let Some(open) = next_sig(toks, i + 1) else { continue };
                if !toks[open].is("(") {
                    continue;
                }
                let Some(close) = match_close(toks, open, "(", ")") else { continue };
                let mut text = String::new();
                for t in &toks[open + 1..close] {
                    if t.kind == TokenKind::Str {
                        text.push_str(&unquote(t.text()));
                    }
                }
                if !text.is_empty() {
                    out.push(text);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FunctionLocation {
    pub file: FileId,
    pub name: String,
    pub line: u32,
    pub return_type: Range<usize>,
    pub params: Range<usize>,
    pub body: Range<usize>,
    pub body_line: u32,
}

#[derive(Debug, Clone)]
pub struct EnumeratorLocation {
    pub file: FileId,
    /// Token ranges of `NAME [= expr]` items up to and including the match.
    pub items: Vec<Range<usize>>,
}

/// Decodes the escape sequences of a C string literal's body.
pub fn unquote(lit: &str) -> String {
    let body = lit
        .trim_start_matches(['L', 'u', 'U', '8'])
        .strip_prefix('"')
        .unwrap_or(lit);
    let body = body.strip_suffix('"').unwrap_or(body);
    let mut out = String::new();
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('0') => out.push('\0'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}

pub(crate) fn next_sig(toks: &[Token], from: usize) -> Option<usize> {
    (from..toks.len()).find(|&i| !toks[i].is_trivia())
}

pub(crate) fn match_close(toks: &[Token], open: usize, o: &str, c: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate().skip(open) {
        if t.is(o) {
            depth += 1;
        } else if t.is(c) {
            depth = depth.checked_sub(1)?;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Index of the `;` ending the statement starting at `from`, skipping
/// nested (), [] and {} groups.
pub(crate) fn find_top_level_semicolon(toks: &[Token], from: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate().skip(from) {
        if t.is_trivia() {
            continue;
        }
        match t.text() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            ";" if depth == 0 => return Some(i),
            _ => {}
        }
        if depth < 0 {
            return None;
        }
    }
    None
}

pub(crate) fn split_top_level(toks: &[Token], range: Range<usize>, sep: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = range.start;
    for i in range.clone() {
        let t = &toks[i];
        if t.is_trivia() {
            continue;
        }
        match t.text() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            s if s == sep && depth == 0 => {
                out.push(start..i);
                start = i + 1;
            }
            _ => {}
        }
    }
    if (start..range.end).any(|i| !toks[i].is_trivia()) {
        out.push(start..range.end);
    }
    out
}

/// Token ranges of preprocessor directive lines (from `#` to end of line).
pub(crate) fn directive_lines(toks: &[Token]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut at_line_start = true;
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        match t.kind {
            TokenKind::Newline => {
                at_line_start = true;
                i += 1;
            }
            TokenKind::Whitespace | TokenKind::Comment => {
                i += 1;
            }
            _ if at_line_start && t.is("#") => {
                let start = i;
                while i < toks.len() && toks[i].kind != TokenKind::Newline {
                    i += 1;
                }
                out.push(start..i);
            }
            _ => {
                at_line_start = false;
                i += 1;
            }
        }
    }
    out
}

fn parse_define(file: &SourceFile, line: Range<usize>) -> Option<MacroDef> {
    let toks = &file.tokens;
    let hash = line.start;
    let kw = next_sig(toks, hash + 1)?;
    let name_idx = next_sig(toks, kw + 1).filter(|&n| n < line.end)?;
    let name = toks[name_idx].text().to_string();
    let mut body_start = name_idx + 1;
    let mut params = None;
    let mut variadic = false;
    // Function-like only when `(` immediately follows the name.
    if toks.get(name_idx + 1).is_some_and(|t| t.is("(")) {
        let close = (name_idx + 1..line.end).find(|&i| toks[i].is(")"))?;
        let mut list = Vec::new();
        for t in &toks[name_idx + 2..close] {
            if t.is_trivia() || t.is(",") {
                continue;
            }
            if t.is("...") {
                variadic = true;
                list.push("__VA_ARGS__".to_string());
            } else {
                list.push(t.text().to_string());
            }
        }
        params = Some(list);
        body_start = close + 1;
    }
    let body = toks[body_start.min(line.end)..line.end]
        .iter()
        .filter(|t| !t.is_trivia())
        .map(|t| (t.kind, t.text().to_string()))
        .collect();
    Some(MacroDef {
        name,
        params,
        variadic,
        body,
        file: file.id,
        line: toks[hash].line,
    })
}

/// Walks significant tokens at brace depth 0, skipping directive lines, and
/// tracks where the current file-scope declaration segment began.
struct TopLevelScan<'a> {
    toks: &'a [Token],
    i: usize,
    depth: i32,
    segment_start: usize,
    directives: Vec<Range<usize>>,
    next_directive: usize,
}

impl<'a> TopLevelScan<'a> {
    fn new(toks: &'a [Token]) -> Self {
        TopLevelScan {
            toks,
            i: 0,
            depth: 0,
            segment_start: 0,
            directives: directive_lines(toks),
            next_directive: 0,
        }
    }

    fn segment_start(&self) -> usize {
        self.segment_start
    }

    fn next_top_level(&mut self) -> Option<usize> {
        while self.i < self.toks.len() {
            if let Some(d) = self.directives.get(self.next_directive) {
                if self.i >= d.start {
                    self.i = self.i.max(d.end);
                    self.next_directive += 1;
                    if self.depth == 0 {
                        self.segment_start = self.i;
                    }
                    continue;
                }
            }
            let i = self.i;
            self.i += 1;
            let t = &self.toks[i];
            if t.is_trivia() {
                continue;
            }
            match t.text() {
                "{" => self.depth += 1,
                "}" => {
                    self.depth -= 1;
                    if self.depth == 0 {
                        // A function body ends its segment; `struct {..} x;`
                        // continues to the `;`.
                        let next = next_sig(self.toks, i + 1);
                        let continues = next.is_some_and(|n| {
                            let t = &self.toks[n];
                            t.kind == TokenKind::Identifier || t.is(";") || t.is("*")
                        });
                        if !continues {
                            self.segment_start = i + 1;
                        }
                    }
                }
                ";" if self.depth == 0 => self.segment_start = i + 1,
                _ if self.depth == 0 => return Some(i),
                _ => {}
            }
        }
        None
    }
}
