//! Expression trees parsed from (macro-expanded) token lists.

use thiserror::Error;

use crate::corpus::unquote;
use crate::ctype::CType;
use crate::macros::{joined_text, spaced_text, XTok};
use crate::token::TokenKind;
use crate::value::{Concrete, IntType, Op};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ExprError {
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
    BitNot,
    Deref,
    AddrOf,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Designator {
    Field(String),
    Index(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Num(Concrete),
    Str(String),
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(Op, Box<Expr>, Box<Expr>),
    Assign(Option<Op>, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
        /// Call text with source spacing.
        spaced: String,
        /// Call text with tokens joined by single spaces.
        joined: String,
    },
    Member {
        base: Box<Expr>,
        field: String,
        arrow: bool,
    },
    Index(Box<Expr>, Box<Expr>),
    Cast(CType, Box<Expr>),
    SizeofType(CType),
    SizeofExpr(Box<Expr>),
    Comma(Box<Expr>, Box<Expr>),
    InitList(Vec<(Option<Designator>, Expr)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub line: u32,
}

/// Type knowledge the parser needs to tell casts from parenthesized
/// expressions.
pub trait TypeEnv {
    fn is_type_name(&mut self, word: &str) -> bool;
    fn parse_type(&mut self, toks: &[XTok]) -> Option<CType>;
}

pub fn parse_expression(toks: &[XTok], env: &mut dyn TypeEnv) -> Result<Expr, ExprError> {
    let mut p = Parser { toks, pos: 0, env };
    let e = p.comma()?;
    p.expect_end()?;
    Ok(e)
}

/// An initializer: either a brace list or an assignment expression.
pub fn parse_initializer(toks: &[XTok], env: &mut dyn TypeEnv) -> Result<Expr, ExprError> {
    let mut p = Parser { toks, pos: 0, env };
    let e = p.initializer()?;
    p.expect_end()?;
    Ok(e)
}

struct Parser<'a, 'e> {
    toks: &'a [XTok],
    pos: usize,
    env: &'e mut dyn TypeEnv,
}

fn binary_prec(tok: &str) -> Option<(u8, Op)> {
    let op = Op::from_binary_token(tok)?;
    let prec = match op {
        Op::LogOr => 1,
        Op::LogAnd => 2,
        Op::Or => 3,
        Op::Xor => 4,
        Op::And => 5,
        Op::Eq | Op::Ne => 6,
        Op::Lt | Op::Le | Op::Gt | Op::Ge => 7,
        Op::Shl | Op::Shr => 8,
        Op::Add | Op::Sub => 9,
        _ => 10,
    };
    Some((prec, op))
}

fn assign_op(tok: &str) -> Option<Option<Op>> {
    Some(match tok {
        "=" => None,
        "+=" => Some(Op::Add),
        "-=" => Some(Op::Sub),
        "*=" => Some(Op::Mul),
        "/=" => Some(Op::Div),
        "%=" => Some(Op::Rem),
        "&=" => Some(Op::And),
        "|=" => Some(Op::Or),
        "^=" => Some(Op::Xor),
        "<<=" => Some(Op::Shl),
        ">>=" => Some(Op::Shr),
        _ => return None,
    })
}

impl Parser<'_, '_> {
    fn peek(&self) -> Option<&XTok> {
        self.toks.get(self.pos)
    }

    fn peek_is(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is(s))
    }

    fn line(&self) -> u32 {
        self.peek()
            .or_else(|| self.toks.last())
            .map_or(0, |t| t.line)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            line: self.line(),
            message: message.into(),
        })
    }

    fn expect(&mut self, s: &str) -> Result<(), ExprError> {
        if self.peek_is(s) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self.peek().map_or("end of expression".to_string(), |t| format!("`{}`", t.text));
            self.err(format!("expected `{s}`, found {found}"))
        }
    }

    fn expect_end(&self) -> Result<(), ExprError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.err(format!("unexpected `{}`", t.text)),
        }
    }

    fn node(kind: ExprKind, line: u32) -> Expr {
        Expr { kind, line }
    }

    fn comma(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.assignment()?;
        while self.peek_is(",") {
            self.pos += 1;
            let r = self.assignment()?;
            let line = e.line;
            e = Self::node(ExprKind::Comma(Box::new(e), Box::new(r)), line);
        }
        Ok(e)
    }

    fn assignment(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.ternary()?;
        if let Some(op) = self.peek().and_then(|t| assign_op(&t.text)) {
            self.pos += 1;
            let rhs = self.assignment()?;
            let line = lhs.line;
            return Ok(Self::node(ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)), line));
        }
        Ok(lhs)
    }

    fn ternary(&mut self) -> Result<Expr, ExprError> {
        let cond = self.binary(1)?;
        if !self.peek_is("?") {
            return Ok(cond);
        }
        self.pos += 1;
        // GNU `a ?: b`
        let then = if self.peek_is(":") { cond.clone() } else { self.comma()? };
        self.expect(":")?;
        let other = self.ternary()?;
        let line = cond.line;
        Ok(Self::node(ExprKind::Ternary(Box::new(cond), Box::new(then), Box::new(other)), line))
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some((prec, op)) = self.peek().and_then(|t| binary_prec(&t.text)) {
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            let line = lhs.line;
            lhs = Self::node(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), line);
        }
        Ok(lhs)
    }

    fn is_type_start(&mut self, at: usize) -> bool {
        let Some(t) = self.toks.get(at) else { return false };
        matches!(t.kind, TokenKind::Keyword | TokenKind::Identifier) && self.env.is_type_name(&t.text)
    }

    /// Parses `( type-name )` at the cursor if present.
    fn paren_type(&mut self) -> Result<Option<CType>, ExprError> {
        if !self.peek_is("(") || !self.is_type_start(self.pos + 1) {
            return Ok(None);
        }
        let close = self.matching(self.pos)?;
        let inner = &self.toks[self.pos + 1..close];
        match self.env.parse_type(inner) {
            Some(ty) => {
                self.pos = close + 1;
                Ok(Some(ty))
            }
            None => self.err(format!("cannot parse type `{}`", joined_text(inner))),
        }
    }

    fn matching(&self, open: usize) -> Result<usize, ExprError> {
        let mut depth = 0usize;
        for j in open..self.toks.len() {
            match self.toks[j].text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(j);
                    }
                }
                _ => {}
            }
        }
        self.err("unbalanced parenthesis")
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        let Some(t) = self.peek() else { return self.err("expected expression") };
        let line = t.line;
        let op = match t.text.as_str() {
            "-" => Some(UnOp::Neg),
            "+" => Some(UnOp::Plus),
            "!" => Some(UnOp::Not),
            "~" => Some(UnOp::BitNot),
            "*" => Some(UnOp::Deref),
            "&" => Some(UnOp::AddrOf),
            "++" => Some(UnOp::PreInc),
            "--" => Some(UnOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(Self::node(ExprKind::Unary(op, Box::new(e)), line));
        }
        if t.is("sizeof") {
            self.pos += 1;
            if let Some(ty) = self.paren_type()? {
                return Ok(Self::node(ExprKind::SizeofType(ty), line));
            }
            let e = self.unary()?;
            return Ok(Self::node(ExprKind::SizeofExpr(Box::new(e)), line));
        }
        if let Some(ty) = self.paren_type()? {
            if self.peek_is("{") {
                return self.err("compound literals are not supported");
            }
            let e = self.unary()?;
            return Ok(Self::node(ExprKind::Cast(ty, Box::new(e)), line));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let mut e = self.primary()?;
        loop {
            let Some(t) = self.peek() else { break };
            let line = t.line;
            match t.text.as_str() {
                "[" => {
                    self.pos += 1;
                    let i = self.comma()?;
                    self.expect("]")?;
                    e = Self::node(ExprKind::Index(Box::new(e), Box::new(i)), line);
                }
                "(" => {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.peek_is(")") {
                        loop {
                            args.push(self.assignment()?);
                            if self.peek_is(",") {
                                self.pos += 1;
                                continue;
                            }
                            break;
                        }
                    }
                    self.expect(")")?;
                    let text = &self.toks[start..self.pos];
                    let call_line = e.line;
                    e = Self::node(
                        ExprKind::Call {
                            callee: Box::new(e),
                            args,
                            spaced: spaced_text(text),
                            joined: joined_text(text),
                        },
                        call_line,
                    );
                }
                "." | "->" => {
                    let arrow = t.is("->");
                    self.pos += 1;
                    let Some(f) = self.peek().filter(|f| f.kind == TokenKind::Identifier) else {
                        return self.err("expected field name");
                    };
                    let field = f.text.clone();
                    self.pos += 1;
                    e = Self::node(ExprKind::Member { base: Box::new(e), field, arrow }, line);
                }
                "++" | "--" => {
                    let op = if t.is("++") { UnOp::PostInc } else { UnOp::PostDec };
                    self.pos += 1;
                    e = Self::node(ExprKind::Unary(op, Box::new(e)), line);
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(t) = self.peek().cloned() else { return self.err("expected expression") };
        let line = t.line;
        match t.kind {
            TokenKind::Number => {
                self.pos += 1;
                match parse_number(&t.text) {
                    Some(c) => Ok(Self::node(ExprKind::Num(c), line)),
                    None => self.err(format!("unsupported number `{}`", t.text)),
                }
            }
            TokenKind::Char => {
                self.pos += 1;
                match parse_char(&t.text) {
                    Some(c) => Ok(Self::node(ExprKind::Num(c), line)),
                    None => self.err(format!("bad character literal {}", t.text)),
                }
            }
            TokenKind::Str => {
                let mut s = String::new();
                while let Some(n) = self.peek().filter(|n| n.kind == TokenKind::Str) {
                    s.push_str(&unquote(&n.text));
                    self.pos += 1;
                }
                Ok(Self::node(ExprKind::Str(s), line))
            }
            TokenKind::Identifier | TokenKind::Keyword if !is_operator_keyword(&t.text) => {
                self.pos += 1;
                Ok(Self::node(ExprKind::Ident(t.text.clone()), line))
            }
            _ if t.is("(") => {
                if self.toks.get(self.pos + 1).is_some_and(|n| n.is("{")) {
                    return self.err("statement expressions are not supported");
                }
                self.pos += 1;
                let e = self.comma()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => self.err(format!("unexpected `{}`", t.text)),
        }
    }

    fn initializer(&mut self) -> Result<Expr, ExprError> {
        if !self.peek_is("{") {
            return self.assignment();
        }
        let line = self.line();
        self.pos += 1;
        let mut items = Vec::new();
        while !self.peek_is("}") {
            let mut designator = None;
            if self.peek_is(".") {
                self.pos += 1;
                let Some(f) = self.peek().cloned() else { return self.err("expected field name") };
                self.pos += 1;
                designator = Some(Designator::Field(f.text));
                self.expect("=")?;
            } else if self.peek_is("[") {
                self.pos += 1;
                let i = self.ternary()?;
                self.expect("]")?;
                self.expect("=")?;
                designator = Some(Designator::Index(Box::new(i)));
            }
            items.push((designator, self.initializer()?));
            if self.peek_is(",") {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect("}")?;
        Ok(Self::node(ExprKind::InitList(items), line))
    }
}

fn is_operator_keyword(word: &str) -> bool {
    matches!(word, "sizeof")
}

/// Integer literal typed per the C rules for its base and suffix.
pub fn parse_number(text: &str) -> Option<Concrete> {
    let lower = text.to_ascii_lowercase();
    let digits_end = lower.trim_end_matches(['u', 'l']).len();
    let (body, suffix) = lower.split_at(digits_end);
    let unsigned = suffix.contains('u');
    let longs = suffix.matches('l').count();
    let (radix, digits) = if let Some(h) = body.strip_prefix("0x") {
        (16, h)
    } else if let Some(b) = body.strip_prefix("0b") {
        (2, b)
    } else if body.len() > 1 && body.starts_with('0') {
        (8, &body[1..])
    } else {
        (10, body)
    };
    let digits = digits.replace('\'', "");
    let value = u64::from_str_radix(&digits, radix).ok()?;
    let decimal = radix == 10;
    let candidates: &[IntType] = match (unsigned, longs > 0, decimal) {
        (false, false, true) => &[IntType::I32, IntType::I64],
        (false, false, false) => &[IntType::I32, IntType::U32, IntType::I64, IntType::U64],
        (true, false, _) => &[IntType::U32, IntType::U64],
        (false, true, true) => &[IntType::I64],
        (false, true, false) => &[IntType::I64, IntType::U64],
        (true, true, _) => &[IntType::U64],
    };
    let fits = |t: &IntType| {
        let max = if t.signed { (t.mask() >> 1) as u128 } else { t.mask() as u128 };
        u128::from(value) <= max
    };
    let ty = candidates.iter().copied().find(fits).unwrap_or(IntType::U64);
    Some(Concrete::new(ty, i128::from(value)))
}

pub fn parse_char(text: &str) -> Option<Concrete> {
    let inner = text.strip_prefix('\'')?.strip_suffix('\'')?;
    let value: i128 = match inner.strip_prefix('\\') {
        None => i128::from(*inner.as_bytes().first()? as i8),
        Some(esc) => match esc.as_bytes().first()? {
            b'n' => 10,
            b't' => 9,
            b'r' => 13,
            b'a' => 7,
            b'b' => 8,
            b'f' => 12,
            b'v' => 11,
            b'x' => i128::from(u8::from_str_radix(&esc[1..], 16).ok()? as i8),
            b'0'..=b'7' => i128::from(u8::from_str_radix(esc, 8).ok()? as i8),
            other => i128::from(*other as i8),
        },
    };
    Some(Concrete::new(IntType::I32, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;
    use crate::macros::tokens_of;

    struct NoTypes;

    impl TypeEnv for NoTypes {
        fn is_type_name(&mut self, word: &str) -> bool {
            matches!(word, "int" | "u32" | "unsigned")
        }
        fn parse_type(&mut self, toks: &[XTok]) -> Option<CType> {
            match joined_text(toks).as_str() {
                "int" => Some(CType::int()),
                "u32" | "unsigned" => Some(CType::Int(IntType::U32)),
                "u32 *" => Some(CType::ptr(CType::Int(IntType::U32))),
                _ => None,
            }
        }
    }

    fn parse(src: &str) -> Expr {
        let mut c = Corpus::new();
        let id = c.add_source("e.c", src.as_bytes());
        let f = c.file(id);
        parse_expression(&tokens_of(f, 0..f.tokens.len()), &mut NoTypes).unwrap()
    }

    #[test]
    fn precedence() {
        let e = parse("a + b * c << 1");
        let ExprKind::Binary(Op::Shl, l, _) = e.kind else { panic!() };
        let ExprKind::Binary(Op::Add, _, r) = l.kind else { panic!() };
        assert!(matches!(r.kind, ExprKind::Binary(Op::Mul, ..)));
    }

    #[test]
    fn call_texts() {
        let e = parse("of_address_to_resource(np, 0, &iomem)");
        let ExprKind::Call { spaced, joined, args, .. } = e.kind else { panic!() };
        assert_eq!(spaced, "of_address_to_resource(np, 0, &iomem)");
        assert_eq!(joined, "of_address_to_resource ( np , 0 , & iomem )");
        assert_eq!(args.len(), 3);
    }

    #[test]
    fn casts_and_sizeof() {
        assert!(matches!(parse("(u32)x").kind, ExprKind::Cast(..)));
        assert!(matches!(parse("(x)").kind, ExprKind::Ident(_)));
        assert!(matches!(parse("sizeof(u32 *)").kind, ExprKind::SizeofType(CType::Pointer(_))));
        assert!(matches!(parse("sizeof(*pc)").kind, ExprKind::SizeofExpr(_)));
    }

    #[test]
    fn assignment_is_right_associative() {
        let e = parse("a = b += 1");
        let ExprKind::Assign(None, _, r) = e.kind else { panic!() };
        assert!(matches!(r.kind, ExprKind::Assign(Some(Op::Add), ..)));
    }

    #[test]
    fn postfix_chain() {
        let e = parse("pc->irq_lock[bank].x++");
        assert!(matches!(e.kind, ExprKind::Unary(UnOp::PostInc, _)));
    }

    #[test]
    fn number_types() {
        assert_eq!(parse_number("0x4c").unwrap(), Concrete::new(IntType::I32, 0x4c));
        assert_eq!(parse_number("1UL").unwrap().ty, IntType::U64);
        assert_eq!(parse_number("0xffffffff").unwrap().ty, IntType::U32);
        assert_eq!(parse_number("4294967295").unwrap().ty, IntType::I64);
        assert_eq!(parse_number("010").unwrap().value(), 8);
        assert_eq!(parse_char("'\\n'").unwrap().value(), 10);
        assert_eq!(parse_char("'A'").unwrap().value(), 65);
    }

    #[test]
    fn initializer_lists() {
        let mut c = Corpus::new();
        let id = c.add_source("e.c", b"{ .a = 1, [2] = 3, 4 }");
        let f = c.file(id);
        let e = parse_initializer(&tokens_of(f, 0..f.tokens.len()), &mut NoTypes).unwrap();
        let ExprKind::InitList(items) = e.kind else { panic!() };
        assert_eq!(items.len(), 3);
    }

    #[test]
    fn trailing_garbage_is_an_error() {
        let mut c = Corpus::new();
        let id = c.add_source("e.c", b"a b");
        let f = c.file(id);
        assert!(parse_expression(&tokens_of(f, 0..f.tokens.len()), &mut NoTypes).is_err());
    }
}
