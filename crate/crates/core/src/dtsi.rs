//! A small device-tree-source reader: nodes, labels, string and cell
//! properties. Anything else is skipped with a diagnostic.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DtsiError {
    #[error("line {line}: unbalanced `{delimiter}`")]
    UnbalancedDelimiter { line: u32, delimiter: char },
    #[error("no node is compatible with \"{compatible}\"")]
    NotFound { compatible: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropValue {
    Empty,
    Strings(Vec<String>),
    Cells(Vec<u64>),
    /// Mixed or unsupported value, kept as raw text.
    Other(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DtNode {
    pub label: Option<String>,
    pub name: String,
    pub properties: Vec<(String, PropValue)>,
    pub children: Vec<DtNode>,
}

impl DtNode {
    pub fn property(&self, name: &str) -> Option<&PropValue> {
        self.properties.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn compatibles(&self) -> &[String] {
        match self.property("compatible") {
            Some(PropValue::Strings(s)) => s,
            _ => &[],
        }
    }

    fn cells_prop(&self, name: &str) -> Option<u64> {
        match self.property(name) {
            Some(PropValue::Cells(c)) => c.first().copied(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DtTree {
    pub root: DtNode,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(char),
    /// `<...>` contents.
    Cells(String),
}

struct Lexer<'a> {
    src: &'a [u8],
    i: usize,
    line: u32,
}

impl Lexer<'_> {
    fn skip_space(&mut self) {
        while self.i < self.src.len() {
            let c = self.src[self.i];
            if c == b'\n' {
                self.line += 1;
                self.i += 1;
            } else if c.is_ascii_whitespace() {
                self.i += 1;
            } else if self.src[self.i..].starts_with(b"//") {
                while self.i < self.src.len() && self.src[self.i] != b'\n' {
                    self.i += 1;
                }
            } else if self.src[self.i..].starts_with(b"/*") {
                self.i += 2;
                while self.i < self.src.len() && !self.src[self.i..].starts_with(b"*/") {
                    if self.src[self.i] == b'\n' {
                        self.line += 1;
                    }
                    self.i += 1;
                }
                self.i = (self.i + 2).min(self.src.len());
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<Option<(Tok, u32)>, DtsiError> {
        self.skip_space();
        let Some(&c) = self.src.get(self.i) else { return Ok(None) };
        let line = self.line;
        let tok = match c {
            b'"' => {
                self.i += 1;
                let mut s = Vec::new();
                while self.i < self.src.len() && self.src[self.i] != b'"' {
                    if self.src[self.i] == b'\\' && self.i + 1 < self.src.len() {
                        self.i += 1;
                    }
                    if self.src[self.i] == b'\n' {
                        self.line += 1;
                    }
                    s.push(self.src[self.i]);
                    self.i += 1;
                }
                if self.i >= self.src.len() {
                    return Err(DtsiError::UnbalancedDelimiter { line, delimiter: '"' });
                }
                self.i += 1;
                Tok::Str(String::from_utf8_lossy(&s).into_owned())
            }
            b'<' => {
                let start = self.i + 1;
                let mut depth = 0;
                self.i += 1;
                loop {
                    match self.src.get(self.i) {
                        None => return Err(DtsiError::UnbalancedDelimiter { line, delimiter: '<' }),
                        Some(b'(') => depth += 1,
                        Some(b')') => depth -= 1,
                        Some(b'>') if depth <= 0 => break,
                        Some(b'\n') => self.line += 1,
                        _ => {}
                    }
                    self.i += 1;
                }
                let text = String::from_utf8_lossy(&self.src[start..self.i]).into_owned();
                self.i += 1;
                Tok::Cells(text)
            }
            c if is_word_byte(c) && c != b',' => {
                let start = self.i;
                while self.i < self.src.len() && is_word_byte(self.src[self.i]) {
                    self.i += 1;
                }
                Tok::Word(String::from_utf8_lossy(&self.src[start..self.i]).into_owned())
            }
            c => {
                self.i += 1;
                Tok::Punct(c as char)
            }
        };
        Ok(Some((tok, line)))
    }
}

fn is_word_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b'_' | b',' | b'.' | b'-' | b'+' | b'@' | b'#' | b'/' | b'?')
}

pub fn parse_dtsi(text: &str) -> Result<DtTree, DtsiError> {
    let mut lx = Lexer { src: text.as_bytes(), i: 0, line: 1 };
    let mut toks = Vec::new();
    while let Some(t) = lx.next()? {
        toks.push(t);
    }
    check_braces(&toks)?;
    let mut p = Parser { toks, i: 0, diagnostics: Vec::new() };
    let mut root = DtNode { name: "/".into(), ..DtNode::default() };
    p.items(&mut root, true);
    Ok(DtTree { root, diagnostics: p.diagnostics })
}

pub fn parse_dtsi_file(path: &Path) -> Result<DtTree, DtsiError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DtsiError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_dtsi(&text)
}

fn check_braces(toks: &[(Tok, u32)]) -> Result<(), DtsiError> {
    let mut stack = Vec::new();
    for (t, line) in toks {
        match t {
            Tok::Punct('{') => stack.push(*line),
            Tok::Punct('}') => {
                if stack.pop().is_none() {
                    return Err(DtsiError::UnbalancedDelimiter { line: *line, delimiter: '}' });
                }
            }
            _ => {}
        }
    }
    match stack.pop() {
        Some(line) => Err(DtsiError::UnbalancedDelimiter { line, delimiter: '{' }),
        None => Ok(()),
    }
}

struct Parser {
    toks: Vec<(Tok, u32)>,
    i: usize,
    diagnostics: Vec<String>,
}

impl Parser {
    fn peek(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k).map(|(t, _)| t)
    }

    fn line(&self) -> u32 {
        self.toks.get(self.i).map_or(0, |(_, l)| *l)
    }

    /// Skips to just past the next `;` at this nesting level.
    fn skip_statement(&mut self) {
        let mut depth = 0;
        while let Some(t) = self.peek(0).cloned() {
            self.i += 1;
            match t {
                Tok::Punct('{') => depth += 1,
                Tok::Punct('}') => {
                    depth -= 1;
                    if depth < 0 {
                        self.i -= 1;
                        return;
                    }
                }
                Tok::Punct(';') if depth == 0 => return,
                _ => {}
            }
        }
    }

    fn skip_line(&mut self) {
        let line = self.line();
        while self.i < self.toks.len() && self.toks[self.i].1 == line {
            self.i += 1;
        }
    }

    fn items(&mut self, node: &mut DtNode, top: bool) {
        while let Some(t) = self.peek(0).cloned() {
            match t {
                Tok::Punct('}') => return,
                Tok::Punct(';') => self.i += 1,
                Tok::Punct('#') | Tok::Word(_) if self.is_directive() => {
                    let line = self.line();
                    self.diagnostics.push(format!("line {line}: preprocessor directive skipped"));
                    self.skip_line();
                }
                Tok::Word(w) if w == "/dts-v1/" || w == "/plugin/" => self.skip_statement(),
                Tok::Word(w) if w.starts_with("/") && w.len() > 1 && w.ends_with('/') => {
                    let line = self.line();
                    self.diagnostics.push(format!("line {line}: {w} skipped"));
                    self.skip_statement();
                }
                Tok::Punct('/') if top && self.peek(1) == Some(&Tok::Punct('{')) => {
                    self.i += 2;
                    self.items(node, false);
                    self.i += 1;
                }
                Tok::Word(w) if top && w == "/" && self.peek(1) == Some(&Tok::Punct('{')) => {
                    self.i += 2;
                    self.items(node, false);
                    self.i += 1;
                }
                Tok::Punct('&') => {
                    let line = self.line();
                    self.diagnostics.push(format!("line {line}: label reference overlay skipped"));
                    self.skip_statement();
                }
                Tok::Word(w) => {
                    self.i += 1;
                    let mut label = None;
                    let mut name = w.clone();
                    if self.peek(0) == Some(&Tok::Punct(':')) {
                        if let Some(Tok::Word(n)) = self.peek(1).cloned() {
                            label = Some(w);
                            name = n;
                            self.i += 2;
                        }
                    }
                    match self.peek(0).cloned() {
                        Some(Tok::Punct('{')) => {
                            self.i += 1;
                            let mut child = DtNode { label, name, ..DtNode::default() };
                            self.items(&mut child, false);
                            self.i += 1;
                            if self.peek(0) == Some(&Tok::Punct(';')) {
                                self.i += 1;
                            }
                            node.children.push(child);
                        }
                        Some(Tok::Punct('=')) => {
                            self.i += 1;
                            let value = self.value();
                            node.properties.push((name, value));
                        }
                        Some(Tok::Punct(';')) => {
                            self.i += 1;
                            node.properties.push((name, PropValue::Empty));
                        }
                        _ => {
                            let line = self.line();
                            self.diagnostics.push(format!("line {line}: unrecognized construct near `{name}` skipped"));
                            self.skip_statement();
                        }
                    }
                }
                _ => {
                    let line = self.line();
                    self.diagnostics.push(format!("line {line}: unexpected token skipped"));
                    self.skip_statement();
                }
            }
        }
    }

    fn is_directive(&self) -> bool {
        match self.peek(0) {
            Some(Tok::Punct('#')) => true,
            Some(Tok::Word(w)) => {
                (w.starts_with("#include") || w.starts_with("#define") || w.starts_with("#if") || w == "#")
                    && !w.contains("-cells")
            }
            _ => false,
        }
    }

    /// Property value up to `;`: strings, one cell list, or raw text.
    fn value(&mut self) -> PropValue {
        let mut strings = Vec::new();
        let mut cells = Vec::new();
        let mut parts = 0;
        let mut raw = Vec::new();
        let mut ok = true;
        while let Some(t) = self.peek(0).cloned() {
            match t {
                Tok::Punct(';') => {
                    self.i += 1;
                    break;
                }
                Tok::Punct('}') => break,
                Tok::Punct(',') => {}
                Tok::Str(s) => {
                    parts |= 1;
                    raw.push(format!("\"{s}\""));
                    strings.push(s);
                }
                Tok::Cells(c) => {
                    parts |= 2;
                    raw.push(format!("<{c}>"));
                    for w in c.split_whitespace() {
                        match parse_cell(w) {
                            Some(n) => cells.push(n),
                            None => ok = false,
                        }
                    }
                }
                Tok::Word(w) => {
                    ok = false;
                    raw.push(w);
                }
                Tok::Punct(c) => {
                    ok = false;
                    raw.push(c.to_string());
                }
            }
            self.i += 1;
        }
        match parts {
            1 if ok => PropValue::Strings(strings),
            2 if ok => PropValue::Cells(cells),
            _ => PropValue::Other(raw.join(" ")),
        }
    }
}

fn parse_cell(w: &str) -> Option<u64> {
    if let Some(h) = w.strip_prefix("0x").or_else(|| w.strip_prefix("0X")) {
        u64::from_str_radix(h, 16).ok()
    } else {
        w.parse().ok()
    }
}

/// `(base, size)` from the first node, in document order, whose compatible
/// list contains `compatible`.
pub fn dtsi_find(tree: &DtTree, compatible: &str) -> Result<(u64, u64), DtsiError> {
    fn walk(node: &DtNode, addr_cells: u64, size_cells: u64, want: &str) -> Option<(u64, u64)> {
        if node.compatibles().iter().any(|c| c == want) {
            if let Some(PropValue::Cells(reg)) = node.property("reg") {
                let a = addr_cells.max(1) as usize;
                let s = size_cells as usize;
                if reg.len() >= a + s {
                    let fold = |cells: &[u64]| cells.iter().fold(0u64, |acc, c| (acc << 32) | (c & 0xffff_ffff));
                    return Some((fold(&reg[..a]), fold(&reg[a..a + s])));
                }
            }
        }
        let ac = node.cells_prop("#address-cells").unwrap_or(1);
        let sc = node.cells_prop("#size-cells").unwrap_or(1);
        node.children.iter().find_map(|c| walk(c, ac, sc, want))
    }
    walk(&tree.root, 1, 1, compatible).ok_or_else(|| DtsiError::NotFound { compatible: compatible.to_string() })
}

/// Every compatible string once, in document order.
pub fn list_compatibles(tree: &DtTree) -> Vec<String> {
    fn walk(node: &DtNode, out: &mut Vec<String>) {
        for c in node.compatibles() {
            if !out.contains(c) {
                out.push(c.clone());
            }
        }
        for child in &node.children {
            walk(child, out);
        }
    }
    let mut out = Vec::new();
    walk(&tree.root, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOC: &str = r#"
/dts-v1/;
#include "skeleton.dtsi"
/ {
    #address-cells = <1>;
    #size-cells = <1>;
    soc {
        gpio: gpio@7e200000 {
            compatible = "brcm,bcm2835-gpio";
            reg = <0x7e200000 0xb4>;
            gpio-controller;
        };
    };
};
&gpio { status = "okay"; };
"#;

    #[test]
    fn finds_reg_of_compatible_node() {
        let t = parse_dtsi(SOC).unwrap();
        assert_eq!(dtsi_find(&t, "brcm,bcm2835-gpio").unwrap(), (0x7e20_0000, 0xb4));
        let gpio = &t.root.children[0].children[0];
        assert_eq!(gpio.label.as_deref(), Some("gpio"));
        assert_eq!(gpio.name, "gpio@7e200000");
        assert_eq!(gpio.property("gpio-controller"), Some(&PropValue::Empty));
        assert_eq!(t.diagnostics.len(), 2);
    }

    #[test]
    fn missing_compatible_is_not_found() {
        let t = parse_dtsi(SOC).unwrap();
        assert_eq!(
            dtsi_find(&t, "brcm,nope"),
            Err(DtsiError::NotFound { compatible: "brcm,nope".into() })
        );
    }

    #[test]
    fn four_cell_reg_uses_first_pair() {
        let t = parse_dtsi("/ { n { compatible = \"x\"; reg = <0x10 0x20 0x30 0x40>; }; };").unwrap();
        assert_eq!(dtsi_find(&t, "x").unwrap(), (0x10, 0x20));
    }

    #[test]
    fn two_cell_addresses_combine() {
        let t = parse_dtsi("/ { #address-cells = <2>; n { compatible = \"x\"; reg = <0x1 0x2 0x30>; }; };").unwrap();
        assert_eq!(dtsi_find(&t, "x").unwrap(), ((1 << 32) | 2, 0x30));
    }

    #[test]
    fn compatibles_deduplicated_in_order() {
        let t = parse_dtsi(
            "/ { a { compatible = \"p\", \"q\"; }; b { compatible = \"q\"; }; c { compatible = \"r\"; }; };",
        )
        .unwrap();
        assert_eq!(list_compatibles(&t), ["p", "q", "r"]);
    }

    #[test]
    fn empty_and_unbalanced() {
        let t = parse_dtsi("").unwrap();
        assert!(list_compatibles(&t).is_empty());
        assert!(matches!(parse_dtsi("/ { a {"), Err(DtsiError::UnbalancedDelimiter { .. })));
        assert!(matches!(parse_dtsi("};"), Err(DtsiError::UnbalancedDelimiter { .. })));
    }

    #[test]
    fn root_nodes_merge() {
        let t = parse_dtsi("/ { a { }; }; / { b { }; };").unwrap();
        let names: Vec<_> = t.root.children.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
    }
}
