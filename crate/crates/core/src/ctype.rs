//! Just enough of the C type system for driver code: integer widths,
//! pointers, arrays, struct layouts and typedefs found lazily in the corpus.

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::sync::Arc;

use crate::corpus::{Corpus, SourceFile};
use crate::memory::{FieldLayout, Layout, Memory};
use crate::token::{FileId, TokenKind};
use crate::value::IntType;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CType {
    Void,
    Int(IntType),
    Pointer(Box<CType>),
    Array(Box<CType>, Option<u64>),
    Struct { tag: String, union: bool },
    Function(Box<CType>),
    /// No type information; behaves as `int`.
    Unknown,
}

impl CType {
    pub fn int() -> CType {
        CType::Int(IntType::I32)
    }

    pub fn ptr(to: CType) -> CType {
        CType::Pointer(Box::new(to))
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, CType::Pointer(_) | CType::Array(..) | CType::Function(_))
    }

    pub fn is_struct(&self) -> bool {
        matches!(self, CType::Struct { .. })
    }

    pub fn pointee(&self) -> Option<&CType> {
        match self {
            CType::Pointer(t) | CType::Array(t, _) => Some(t),
            _ => None,
        }
    }

    pub fn struct_tag(&self) -> Option<&str> {
        match self {
            CType::Struct { tag, .. } => Some(tag),
            _ => None,
        }
    }

    /// Integer representation used for arithmetic on this type.
    pub fn int_type(&self) -> IntType {
        match self {
            CType::Int(t) => *t,
            CType::Pointer(_) | CType::Array(..) | CType::Function(_) => IntType::U64,
            _ => IntType::I32,
        }
    }
}

/// Memo tables for type lookups; owned by the session.
#[derive(Debug, Default)]
pub struct TypeCache {
    typedefs: HashMap<String, Option<CType>>,
    missing_structs: HashSet<String>,
}

/// What type parsing needs from its surroundings.
pub trait TypeCtx {
    fn corpus(&self) -> &Corpus;
    fn memory(&mut self) -> &mut Memory;
    fn type_cache(&mut self) -> &mut TypeCache;
    /// Evaluates an integer constant expression (array bounds).
    fn eval_const(&mut self, file: FileId, range: Range<usize>) -> Option<i64>;
}

pub fn builtin_typedef(name: &str) -> Option<CType> {
    let t = match name {
        "u8" | "__u8" | "uint8_t" | "bool" | "uchar" => IntType::U8,
        "s8" | "__s8" | "int8_t" => IntType::I8,
        "u16" | "__u16" | "uint16_t" | "__le16" | "__be16" | "ushort" => IntType::U16,
        "s16" | "__s16" | "int16_t" => IntType::I16,
        "u32" | "__u32" | "uint32_t" | "__le32" | "__be32" | "gfp_t" | "uint" | "fmode_t" => IntType::U32,
        "s32" | "__s32" | "int32_t" | "pid_t" => IntType::I32,
        "u64" | "__u64" | "uint64_t" | "size_t" | "uintptr_t" | "phys_addr_t" | "resource_size_t"
        | "dma_addr_t" | "irq_hw_number_t" | "ulong" | "__le64" | "__be64" => IntType::U64,
        "s64" | "__s64" | "int64_t" | "ssize_t" | "intptr_t" | "ptrdiff_t" | "loff_t" => IntType::I64,
        _ => return None,
    };
    Some(CType::Int(t))
}

const QUALIFIERS: &[&str] = &[
    "const", "volatile", "static", "extern", "register", "inline", "__inline", "__inline__",
    "auto", "restrict", "__volatile__", "__restrict",
];

const INT_WORDS: &[&str] = &["signed", "unsigned", "short", "long", "char", "int", "_Bool", "void", "float", "double"];

/// Significant-token view over a file range.
pub struct Sig {
    pub file: Arc<SourceFile>,
    pub idx: Vec<usize>,
}

impl Sig {
    pub fn new(file: Arc<SourceFile>, range: Range<usize>) -> Self {
        let idx = range.filter(|&i| !file.tokens[i].is_trivia()).collect();
        Sig { file, idx }
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn text(&self, i: usize) -> &str {
        self.idx.get(i).map_or("", |&t| self.file.tokens[t].text())
    }

    pub fn kind(&self, i: usize) -> Option<TokenKind> {
        self.idx.get(i).map(|&t| self.file.tokens[t].kind)
    }

    /// Token index (into the file) of significant position `i`, or the end.
    pub fn tok(&self, i: usize) -> usize {
        self.idx
            .get(i)
            .copied()
            .unwrap_or_else(|| self.idx.last().map_or(0, |l| l + 1))
    }

    /// Position of the bracket matching the opener at `i`.
    pub fn matching(&self, i: usize) -> Option<usize> {
        let (open, close) = match self.text(i) {
            "(" => ("(", ")"),
            "[" => ("[", "]"),
            "{" => ("{", "}"),
            _ => return None,
        };
        let mut depth = 0usize;
        for j in i..self.len() {
            let t = self.text(j);
            if t == open {
                depth += 1;
            } else if t == close {
                depth -= 1;
                if depth == 0 {
                    return Some(j);
                }
            }
        }
        None
    }
}

pub fn is_attribute_word(word: &str) -> bool {
    word.starts_with("__") && builtin_typedef(word).is_none() && word != "__VA_ARGS__"
}

/// Whether `word` can begin a type name.
pub fn is_type_word(ctx: &mut dyn TypeCtx, word: &str) -> bool {
    QUALIFIERS.contains(&word)
        || INT_WORDS.contains(&word)
        || matches!(word, "struct" | "union" | "enum" | "typeof" | "__typeof__")
        || typedef(ctx, word).is_some()
}

pub fn typedef(ctx: &mut dyn TypeCtx, name: &str) -> Option<CType> {
    if let Some(t) = builtin_typedef(name) {
        return Some(t);
    }
    if let Some(cached) = ctx.type_cache().typedefs.get(name) {
        return cached.clone();
    }
    // Guard against self-reference while parsing.
    ctx.type_cache().typedefs.insert(name.to_string(), None);
    let found = ctx.corpus().find_typedef(name);
    let ty = found.and_then(|(file, range)| {
        let sig = Sig::new(ctx.corpus().file(file).clone(), range);
        let (base, mut i) = parse_specifiers(ctx, &sig, 0)?;
        loop {
            let d = parse_declarator(ctx, &sig, i, base.clone());
            if d.name.as_deref() == Some(name) {
                return Some(d.ty);
            }
            i = d.next;
            if sig.text(i) != "," {
                return None;
            }
            i += 1;
        }
    });
    ctx.type_cache().typedefs.insert(name.to_string(), ty.clone());
    ty
}

#[derive(Debug, Clone, Default)]
pub struct Specifiers {
    pub is_typedef: bool,
    pub is_static: bool,
    pub is_extern: bool,
}

pub fn parse_specifiers(ctx: &mut dyn TypeCtx, sig: &Sig, i: usize) -> Option<(CType, usize)> {
    parse_specifiers_full(ctx, sig, i).map(|(t, n, _)| (t, n))
}

/// Declaration specifiers starting at `i`; `None` if no type is named.
pub fn parse_specifiers_full(ctx: &mut dyn TypeCtx, sig: &Sig, mut i: usize) -> Option<(CType, usize, Specifiers)> {
    let mut spec = Specifiers::default();
    let mut base: Option<CType> = None;
    let mut words: Vec<&str> = Vec::new();
    let start = i;
    while i < sig.len() {
        let w = sig.text(i);
        if QUALIFIERS.contains(&w) || w == "typedef" {
            spec.is_typedef |= w == "typedef";
            spec.is_static |= w == "static";
            spec.is_extern |= w == "extern";
            i += 1;
        } else if w == "__attribute__" {
            i = skip_group(sig, i + 1);
        } else if INT_WORDS.contains(&w) && base.is_none() {
            words.push(w);
            i += 1;
        } else if matches!(w, "struct" | "union") && base.is_none() && words.is_empty() {
            let union = w == "union";
            i += 1;
            while sig.text(i) == "__attribute__" {
                i = skip_group(sig, i + 1);
            }
            let tag = if sig.kind(i) == Some(TokenKind::Identifier) {
                i += 1;
                Some(sig.text(i - 1).to_string())
            } else {
                None
            };
            if sig.text(i) == "{" {
                let close = sig.matching(i)?;
                let tag = tag.unwrap_or_else(|| format!("<anon {}:{}>", sig.file.id.0, sig.tok(i)));
                if ctx.memory().layout(&tag).is_none_or(|l| l.synthetic) {
                    let layout = layout_from_body(ctx, &sig.file, sig.tok(i + 1)..sig.tok(close), union);
                    ctx.memory().define_layout(&tag, layout);
                }
                i = close + 1;
                base = Some(CType::Struct { tag, union });
            } else {
                base = Some(CType::Struct { tag: tag?, union });
            }
        } else if w == "enum" && base.is_none() && words.is_empty() {
            i += 1;
            if sig.kind(i) == Some(TokenKind::Identifier) {
                i += 1;
            }
            if sig.text(i) == "{" {
                i = sig.matching(i)? + 1;
            }
            base = Some(CType::int());
        } else if matches!(w, "typeof" | "__typeof__") && base.is_none() {
            i = skip_group(sig, i + 1);
            base = Some(CType::Unknown);
        } else if base.is_none() && words.is_empty() && sig.kind(i) == Some(TokenKind::Identifier) {
            if let Some(t) = typedef(ctx, w) {
                base = Some(t);
                i += 1;
            } else if is_attribute_word(w) {
                i += 1;
                if sig.text(i) == "(" {
                    i = skip_group(sig, i);
                }
            } else {
                break;
            }
        } else if sig.kind(i) == Some(TokenKind::Identifier) && is_attribute_word(w) {
            i += 1;
        } else {
            break;
        }
    }
    if i == start {
        return None;
    }
    let ty = match base {
        Some(t) => t,
        None if words.is_empty() => return None,
        None => int_from_words(&words),
    };
    Some((ty, i, spec))
}

fn skip_group(sig: &Sig, i: usize) -> usize {
    if sig.text(i) == "(" {
        sig.matching(i).map_or(sig.len(), |c| c + 1)
    } else {
        i
    }
}

fn int_from_words(words: &[&str]) -> CType {
    let has = |w: &str| words.contains(&w);
    if has("void") {
        return CType::Void;
    }
    let signed = !has("unsigned");
    let bits = if has("char") || has("_Bool") {
        8
    } else if has("short") {
        16
    } else if has("long") || has("double") {
        64
    } else {
        32
    };
    let signed = signed && !has("_Bool");
    CType::Int(IntType { bits, signed })
}

#[derive(Debug, Clone)]
pub struct Declarator {
    pub ty: CType,
    pub name: Option<String>,
    /// Significant position of the declared name.
    pub name_pos: Option<usize>,
    /// Position just past the declarator.
    pub next: usize,
}

/// Parses pointers, a (possibly parenthesized) name and array/function
/// suffixes. Abstract declarators (no name) are accepted.
pub fn parse_declarator(ctx: &mut dyn TypeCtx, sig: &Sig, mut i: usize, base: CType) -> Declarator {
    let mut ty = base;
    loop {
        let w = sig.text(i);
        if w == "*" {
            ty = CType::ptr(ty);
            i += 1;
        } else if QUALIFIERS.contains(&w) || (sig.kind(i) == Some(TokenKind::Identifier) && is_attribute_word(w)) {
            i += 1;
        } else if w == "__attribute__" {
            i = skip_group(sig, i + 1);
        } else {
            break;
        }
    }
    if sig.text(i) == "(" && matches!(sig.text(i + 1), "*" | "(" | "^") {
        let Some(close) = sig.matching(i) else {
            return Declarator { ty, name: None, name_pos: None, next: sig.len() };
        };
        let mut after = close + 1;
        let outer = parse_suffixes(ctx, sig, &mut after, ty);
        let inner = parse_declarator(ctx, sig, i + 1, outer);
        return Declarator { next: after, ..inner };
    }
    let mut name = None;
    let mut name_pos = None;
    if sig.kind(i) == Some(TokenKind::Identifier) {
        name = Some(sig.text(i).to_string());
        name_pos = Some(i);
        i += 1;
    }
    let ty = parse_suffixes(ctx, sig, &mut i, ty);
    while sig.text(i) == "__attribute__" || (sig.kind(i) == Some(TokenKind::Identifier) && is_attribute_word(sig.text(i))) {
        i = if sig.text(i + 1) == "(" { skip_group(sig, i + 1) } else { i + 1 };
    }
    Declarator { ty, name, name_pos, next: i }
}

fn parse_suffixes(ctx: &mut dyn TypeCtx, sig: &Sig, i: &mut usize, base: CType) -> CType {
    enum Suffix {
        Array(Option<u64>),
        Function,
    }
    let mut suffixes = Vec::new();
    loop {
        match sig.text(*i) {
            "[" => {
                let Some(close) = sig.matching(*i) else { break };
                let n = if close == *i + 1 {
                    None
                } else {
                    ctx.eval_const(sig.file.id, sig.tok(*i + 1)..sig.tok(close))
                        .map(|n| n.max(0) as u64)
                };
                suffixes.push(Suffix::Array(n));
                *i = close + 1;
            }
            "(" => {
                let Some(close) = sig.matching(*i) else { break };
                suffixes.push(Suffix::Function);
                *i = close + 1;
            }
            _ => break,
        }
    }
    suffixes.into_iter().rev().fold(base, |t, s| match s {
        Suffix::Array(n) => CType::Array(Box::new(t), n),
        Suffix::Function => CType::Function(Box::new(t)),
    })
}

/// Type name as used in casts and `sizeof`.
pub fn parse_type_name(ctx: &mut dyn TypeCtx, sig: &Sig, i: usize) -> Option<(CType, usize)> {
    let (base, next) = parse_specifiers(ctx, sig, i)?;
    let d = parse_declarator(ctx, sig, next, base);
    if d.name.is_some() {
        return None;
    }
    Some((d.ty, d.next))
}

pub fn size_of(ctx: &mut dyn TypeCtx, ty: &CType) -> u64 {
    match ty {
        CType::Void | CType::Function(_) => 1,
        CType::Int(t) => t.bytes(),
        CType::Pointer(_) => 8,
        CType::Array(t, n) => n.unwrap_or(0) * size_of(ctx, t),
        CType::Struct { tag, .. } => struct_layout(ctx, tag).map_or(0, |l| l.size),
        CType::Unknown => 4,
    }
}

pub fn align_of(ctx: &mut dyn TypeCtx, ty: &CType) -> u64 {
    match ty {
        CType::Array(t, _) => align_of(ctx, t),
        CType::Struct { tag, .. } => struct_layout(ctx, tag).map_or(1, |l| l.align.max(1)),
        other => size_of(ctx, other).clamp(1, 8),
    }
}

/// Layout of `struct tag`, parsing its corpus definition on first use.
pub fn struct_layout(ctx: &mut dyn TypeCtx, tag: &str) -> Option<Layout> {
    if let Some(l) = ctx.memory().layout(tag) {
        if !l.synthetic {
            return Some(l.clone());
        }
    }
    if !ctx.type_cache().missing_structs.contains(tag) {
        if let Some((file, range)) = ctx.corpus().find_struct(tag) {
            let file = ctx.corpus().file(file).clone();
            // Placeholder so self-referential members terminate.
            ctx.memory().define_layout(tag, Layout { synthetic: false, align: 1, ..Layout::default() });
            let union = range.start >= 2
                && file.tokens[..range.start]
                    .iter()
                    .rev()
                    .filter(|t| !t.is_trivia())
                    .nth(2)
                    .is_some_and(|t| t.is("union"));
            let layout = layout_from_body(ctx, &file, range, union);
            ctx.memory().define_layout(tag, layout.clone());
            return Some(layout);
        }
        ctx.type_cache().missing_structs.insert(tag.to_string());
    }
    ctx.memory().layout(tag).cloned()
}

/// Natural-alignment layout of a struct or union member list.
pub fn layout_from_body(ctx: &mut dyn TypeCtx, file: &Arc<SourceFile>, range: Range<usize>, union: bool) -> Layout {
    let sig = Sig::new(file.clone(), range);
    let mut layout = Layout { align: 1, ..Layout::default() };
    let mut offset = 0u64;
    let mut i = 0;
    while i < sig.len() {
        let Some((base, mut j)) = parse_specifiers(ctx, &sig, i) else {
            // Unparseable member: skip to the next `;`.
            i = next_semicolon(&sig, i) + 1;
            continue;
        };
        loop {
            let d = parse_declarator(ctx, &sig, j, base.clone());
            j = d.next;
            if sig.text(j) == ":" {
                j += 1;
                while j < sig.len() && !matches!(sig.text(j), "," | ";") {
                    j += 1;
                }
            }
            let size = size_of(ctx, &d.ty);
            let align = align_of(ctx, &d.ty);
            let field_offset = if union { 0 } else { offset.div_ceil(align) * align };
            let name = d.name.unwrap_or_else(|| format!("<anon {field_offset}>"));
            layout.fields.push(FieldLayout { name, offset: field_offset, width: size, ty: Some(d.ty) });
            layout.align = layout.align.max(align);
            if union {
                offset = offset.max(size);
            } else {
                offset = field_offset + size;
            }
            if sig.text(j) == "," {
                j += 1;
                continue;
            }
            break;
        }
        i = next_semicolon(&sig, j) + 1;
    }
    layout.size = offset.div_ceil(layout.align) * layout.align;
    layout
}

fn next_semicolon(sig: &Sig, mut i: usize) -> usize {
    while i < sig.len() && sig.text(i) != ";" {
        if matches!(sig.text(i), "(" | "[" | "{") {
            i = sig.matching(i).unwrap_or(sig.len());
        }
        i += 1;
    }
    i
}
