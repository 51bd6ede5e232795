//! Lossless tokenization of C-family source.
//!
//! Every input byte ends up in exactly one token, so concatenating token
//! texts reproduces the input. Nothing here ever fails: bytes that do not
//! start a recognizable token become [`TokenKind::Unknown`] tokens.

use std::ops::Range;

use thiserror::Error;

/// Identifies one source file inside a [`crate::corpus::Corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FileId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    Str,
    Char,
    Punct,
    Comment,
    Whitespace,
    Newline,
    Unknown,
}

impl TokenKind {
    pub fn is_trivia(self) -> bool {
        matches!(
            self,
            TokenKind::Comment | TokenKind::Whitespace | TokenKind::Newline
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    raw: Vec<u8>,
    pub byte_offset: usize,
    pub line: u32,
    pub column: u32,
}

impl Token {
    /// Source text of the token. Tokens holding invalid UTF-8 (only possible
    /// for unknown bytes, comments and literals) render as U+FFFD.
    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.raw).unwrap_or("\u{fffd}")
    }

    pub fn bytes(&self) -> &[u8] {
        &self.raw
    }

    pub fn is(&self, text: &str) -> bool {
        !self.kind.is_trivia() && self.raw == text.as_bytes()
    }

    pub fn is_trivia(&self) -> bool {
        self.kind.is_trivia()
    }
}

const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Bool", "_Static_assert", "asm",
    "__asm__", "__asm", "__attribute__", "__inline", "__inline__", "__volatile__", "typeof",
    "__typeof__",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

// Longest first within each leading byte group.
const PUNCTUATORS: &[&str] = &[
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "^=", "|=", "##", "[", "]", "(", ")", "{", "}", ".", "&", "*",
    "+", "-", "~", "!", "/", "%", "<", ">", "^", "|", "?", ":", ";", "=", ",", "#",
];

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    column: u32,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn peek(&self, ahead: usize) -> Option<u8> {
        self.src.get(self.pos + ahead).copied()
    }

    fn push(&mut self, kind: TokenKind, len: usize) {
        let raw = self.src[self.pos..self.pos + len].to_vec();
        let token = Token {
            kind,
            raw,
            byte_offset: self.pos,
            line: self.line,
            column: self.column,
        };
        for &b in &token.raw {
            if b == b'\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        self.pos += len;
        self.out.push(token);
    }

    fn run(mut self) -> Vec<Token> {
        while self.pos < self.src.len() {
            let (kind, len) = self.next_token();
            self.push(kind, len);
        }
        self.out
    }

    fn next_token(&self) -> (TokenKind, usize) {
        let c = self.src[self.pos];
        match c {
            b'\n' => (TokenKind::Newline, 1),
            b'\r' if self.peek(1) == Some(b'\n') => (TokenKind::Newline, 2),
            b' ' | b'\t' | b'\r' | 0x0b | 0x0c => {
                let len = self.scan_while(|b| matches!(b, b' ' | b'\t' | b'\r' | 0x0b | 0x0c));
                (TokenKind::Whitespace, len)
            }
            // Line splice: backslash-newline is whitespace for our purposes.
            b'\\' if self.peek(1) == Some(b'\n') => (TokenKind::Whitespace, 2),
            b'\\' if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => {
                (TokenKind::Whitespace, 3)
            }
            b'/' if self.peek(1) == Some(b'/') => {
                let len = self.scan_line_comment();
                (TokenKind::Comment, len)
            }
            b'/' if self.peek(1) == Some(b'*') => {
                let rest = &self.src[self.pos + 2..];
                let len = match rest.windows(2).position(|w| w == b"*/") {
                    Some(i) => i + 4,
                    None => self.src.len() - self.pos,
                };
                (TokenKind::Comment, len)
            }
            b'"' => (TokenKind::Str, self.scan_quoted(b'"')),
            b'\'' => (TokenKind::Char, self.scan_quoted(b'\'')),
            b'0'..=b'9' => (TokenKind::Number, self.scan_number()),
            b'.' if self.peek(1).is_some_and(|b| b.is_ascii_digit()) => {
                (TokenKind::Number, self.scan_number())
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' | b'$' => {
                // String/char prefixes: L"..", u8"..", U'..'
                let len = self.scan_while(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'$');
                let word = &self.src[self.pos..self.pos + len];
                if matches!(word, b"L" | b"u" | b"U" | b"u8") {
                    match self.peek(len) {
                        Some(b'"') => return (TokenKind::Str, len + self.scan_quoted_at(len, b'"')),
                        Some(b'\'') => {
                            return (TokenKind::Char, len + self.scan_quoted_at(len, b'\''))
                        }
                        _ => {}
                    }
                }
                let word = std::str::from_utf8(word).unwrap_or("");
                let kind = if is_keyword(word) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                (kind, len)
            }
            _ => {
                for p in PUNCTUATORS {
                    if self.src[self.pos..].starts_with(p.as_bytes()) {
                        return (TokenKind::Punct, p.len());
                    }
                }
                (TokenKind::Unknown, self.unknown_len())
            }
        }
    }

    fn scan_while(&self, pred: impl Fn(u8) -> bool) -> usize {
        self.src[self.pos..].iter().take_while(|&&b| pred(b)).count()
    }

    fn scan_line_comment(&self) -> usize {
        let mut i = self.pos;
        while i < self.src.len() {
            match self.src[i] {
                b'\n' if self.src[i - 1] != b'\\' => break,
                _ => i += 1,
            }
        }
        i - self.pos
    }

    fn scan_quoted(&self, quote: u8) -> usize {
        self.scan_quoted_at(0, quote)
    }

    /// Scans a quoted literal starting `skip` bytes ahead. Unterminated
    /// literals stop at end of line so a stray quote cannot swallow the file.
    fn scan_quoted_at(&self, skip: usize, quote: u8) -> usize {
        let start = self.pos + skip;
        let mut i = start + 1;
        while i < self.src.len() {
            match self.src[i] {
                b'\\' if i + 1 < self.src.len() => i += 2,
                b'\n' => return i - start,
                b if b == quote => return i + 1 - start,
                _ => i += 1,
            }
        }
        self.src.len().min(i) - start
    }

    fn scan_number(&self) -> usize {
        // pp-number: digits, identifier chars, dots and signed exponents.
        let mut i = self.pos;
        while i < self.src.len() {
            let b = self.src[i];
            if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' {
                i += 1;
            } else if (b == b'+' || b == b'-')
                && matches!(self.src[i - 1], b'e' | b'E' | b'p' | b'P')
                && !self.src[self.pos..i].starts_with(b"0x")
                && !self.src[self.pos..i].starts_with(b"0X")
            {
                i += 1;
            } else {
                break;
            }
        }
        i - self.pos
    }

    fn unknown_len(&self) -> usize {
        // Keep well-formed multi-byte UTF-8 characters together; invalid
        // bytes become one token each.
        let rest = &self.src[self.pos..];
        let want = match rest[0] {
            0xc0..=0xdf => 2,
            0xe0..=0xef => 3,
            0xf0..=0xf7 => 4,
            _ => 1,
        };
        if want > 1 && rest.len() >= want && std::str::from_utf8(&rest[..want]).is_ok() {
            want
        } else {
            1
        }
    }
}

/// Tokenizes arbitrary bytes. Total: never fails, always round-trips.
pub fn tokenize(source: &[u8]) -> Vec<Token> {
    Lexer {
        src: source,
        pos: 0,
        line: 1,
        column: 1,
        out: Vec::new(),
    }
    .run()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("unbalanced `{open}` opened on line {line}")]
    UnbalancedDelimiter { open: String, line: u32 },
}

/// A position in a token sequence, bounded to `[.., end)`.
#[derive(Debug, Clone)]
pub struct Cursor<'a> {
    tokens: &'a [Token],
    index: usize,
    end: usize,
    pub skip_trivia: bool,
}

impl<'a> Cursor<'a> {
    pub fn new(tokens: &'a [Token]) -> Self {
        Self::bounded(tokens, 0..tokens.len())
    }

    pub fn bounded(tokens: &'a [Token], range: Range<usize>) -> Self {
        let end = range.end.min(tokens.len());
        let mut cursor = Cursor {
            tokens,
            index: range.start.min(end),
            end,
            skip_trivia: true,
        };
        cursor.settle();
        cursor
    }

    pub fn tokens(&self) -> &'a [Token] {
        self.tokens
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn at_end(&self) -> bool {
        self.index >= self.end
    }

    pub fn peek(&self) -> Option<&'a Token> {
        self.tokens[..self.end].get(self.index)
    }

    /// Next significant token strictly after the current one.
    pub fn peek_next(&self) -> Option<&'a Token> {
        self.next_significant(self.index + 1)
            .map(|i| &self.tokens[i])
    }

    pub fn next_significant(&self, from: usize) -> Option<usize> {
        (from..self.end).find(|&i| !self.tokens[i].is_trivia())
    }

    pub fn seek(&mut self, index: usize) {
        self.index = index.min(self.end);
        self.settle();
    }

    pub fn advance(&mut self) -> Option<&'a Token> {
        let tok = self.peek()?;
        self.index += 1;
        self.settle();
        Some(tok)
    }

    fn settle(&mut self) {
        if self.skip_trivia {
            while self.index < self.end && self.tokens[self.index].is_trivia() {
                self.index += 1;
            }
        }
    }
}

/// Finds the span from the `open` token under the cursor through its
/// matching `close`, counting only that delimiter pair. Contents are never
/// validated.
pub fn find_balanced_span(
    cursor: &Cursor<'_>,
    open: &str,
    close: &str,
) -> Result<Range<usize>, TokenError> {
    let tokens = cursor.tokens();
    let start = cursor.index();
    let first = cursor.peek().filter(|t| t.is(open));
    let Some(first) = first else {
        let line = cursor.peek().map_or(0, |t| t.line);
        return Err(TokenError::UnbalancedDelimiter {
            open: open.to_string(),
            line,
        });
    };
    let mut depth = 0usize;
    for (i, tok) in tokens.iter().enumerate().take(cursor.end()).skip(start) {
        if tok.is(open) {
            depth += 1;
        } else if tok.is(close) {
            depth -= 1;
            if depth == 0 {
                return Ok(start..i + 1);
            }
        }
    }
    Err(TokenError::UnbalancedDelimiter {
        open: open.to_string(),
        line: first.line,
    })
}

/// Concatenated source text of a token range.
pub fn join_text(tokens: &[Token]) -> String {
    tokens.iter().map(Token::text).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn significant(src: &str) -> Vec<String> {
        tokenize(src.as_bytes())
            .into_iter()
            .filter(|t| !t.is_trivia())
            .map(|t| t.text().to_string())
            .collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize(b"").is_empty());
    }

    #[test]
    fn declaration_tokens() {
        let toks = tokenize(b"int x = a + b;");
        let texts: Vec<_> = toks.iter().map(|t| t.text()).collect();
        assert_eq!(
            texts,
            ["int", " ", "x", " ", "=", " ", "a", " ", "+", " ", "b", ";"]
        );
        assert_eq!(toks[0].kind, TokenKind::Keyword);
        assert_eq!(toks[2].kind, TokenKind::Identifier);
    }

    #[test]
    fn arrow_is_one_punctuator() {
        let toks = significant("writel(val, pc->base + reg)");
        assert_eq!(
            toks,
            ["writel", "(", "val", ",", "pc", "->", "base", "+", "reg", ")"]
        );
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize(b"a\n  b /* x\ny */ c");
        let b = toks.iter().find(|t| t.text() == "b").unwrap();
        assert_eq!((b.line, b.column), (2, 3));
        let c = toks.iter().find(|t| t.text() == "c").unwrap();
        assert_eq!(c.line, 3);
    }

    #[test]
    fn suffixes_stay_in_number_text() {
        assert_eq!(significant("0x4cUL 10u 1e+5"), ["0x4cUL", "10u", "1e+5"]);
        assert_eq!(significant("0xe+1"), ["0xe", "+", "1"]);
    }

    #[test]
    fn unterminated_string_stops_at_newline() {
        let toks = significant("\"abc\n}");
        assert_eq!(toks, ["\"abc", "}"]);
    }

    #[test]
    fn balanced_span_nested() {
        let toks = tokenize(b"(a, (b))");
        let cursor = Cursor::new(&toks);
        let span = find_balanced_span(&cursor, "(", ")").unwrap();
        assert_eq!(span, 0..toks.len());
        assert_eq!(toks.iter().filter(|t| !t.is_trivia()).count(), 7);
    }

    #[test]
    fn balanced_span_reports_opening_line() {
        let toks = tokenize(b"\n{ if (x { }");
        let cursor = Cursor::new(&toks);
        let err = find_balanced_span(&cursor, "{", "}").unwrap_err();
        assert_eq!(
            err,
            TokenError::UnbalancedDelimiter {
                open: "{".into(),
                line: 2
            }
        );
    }

    #[test]
    fn balanced_span_ignores_contents() {
        let toks = tokenize(b"{ @#$ not C ! }");
        let cursor = Cursor::new(&toks);
        let span = find_balanced_span(&cursor, "{", "}").unwrap();
        assert_eq!(span.end, toks.len());
    }

    #[test]
    fn invalid_utf8_round_trips() {
        let src = b"a \xff\xfe \"\xc3\x28\" \xe2\x82\xac";
        let toks = tokenize(src);
        let joined: Vec<u8> = toks.iter().flat_map(|t| t.bytes().to_vec()).collect();
        assert_eq!(joined, src);
        assert!(toks.iter().any(|t| t.kind == TokenKind::Unknown));
    }
}
