//! Host-language models of functions outside the corpus, plus a TOML form
//! for the simple cases.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::ctype::CType;
use crate::dtsi;
use crate::event::EventKind;
use crate::interp::{CallSite, ExecError, Exec, Session, TV};
use crate::memory::{Location, RegionKind};
use crate::token::{tokenize, TokenKind};
use crate::value::{CallOrigin, Concrete, IntType, Pos, ValueId};

pub type HookFn =
    dyn for<'x, 'a> Fn(&mut HookContext<'x, 'a>) -> Result<Option<ValueId>, ExecError> + Send + Sync;

/// A model for one function. Returning `None` means "no value" (void).
#[derive(Clone)]
pub struct Hook {
    pub name: String,
    pub doc: String,
    pub handler: Arc<HookFn>,
}

impl Hook {
    pub fn new<F>(name: &str, doc: &str, f: F) -> Self
    where
        F: for<'x, 'a> Fn(&mut HookContext<'x, 'a>) -> Result<Option<ValueId>, ExecError> + Send + Sync + 'static,
    {
        Hook { name: name.to_string(), doc: doc.to_string(), handler: Arc::new(f) }
    }
}

impl fmt::Debug for Hook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hook").field("name", &self.name).field("doc", &self.doc).finish_non_exhaustive()
    }
}

/// What a hook sees: its arguments, the call site, and services acting on
/// the calling session.
pub struct HookContext<'x, 'a> {
    ex: &'x mut Exec<'a>,
    name: String,
    pub args: Vec<TV>,
    pub site: CallSite,
}

impl<'x, 'a> HookContext<'x, 'a> {
    pub(crate) fn new(ex: &'x mut Exec<'a>, name: &str, args: Vec<TV>, site: CallSite) -> Self {
        HookContext { ex, name: name.to_string(), args, site }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn session(&mut self) -> &mut Session {
        self.ex.s
    }

    fn pos(&self) -> Pos {
        self.site.pos
    }

    fn err(&self, message: impl Into<String>) -> ExecError {
        ExecError::Hook { name: self.name.clone(), message: message.into() }
    }

    fn origin(&self) -> CallOrigin {
        CallOrigin { callee: self.name.clone(), call_text: self.site.joined.clone(), line: self.site.pos.line }
    }

    pub fn arg(&self, i: usize) -> Result<TV, ExecError> {
        self.args.get(i).cloned().ok_or_else(|| self.err(format!("missing argument {i}")))
    }

    /// Runs C statements with `{N}` bound to `vals[N]` and each `(opaque)`
    /// replaced by a fresh symbol.
    pub fn exec_snippet(&mut self, template: &str, vals: &[TV]) -> Result<(), ExecError> {
        let toks = tokenize(template.as_bytes());
        if toks.iter().all(|t| t.is_trivia()) {
            return Ok(());
        }
        let sig: Vec<usize> = (0..toks.len()).filter(|&i| !toks[i].is_trivia()).collect();
        let mut out = String::new();
        let mut bindings: Vec<(String, TV)> = Vec::new();
        let mut used = HashSet::new();
        let mut opaque = 0;
        let mut i = 0;
        while i < toks.len() {
            let t = &toks[i];
            let k = sig.iter().position(|&s| s == i);
            if let Some(k) = k {
                let at = |d: usize| sig.get(k + d).map(|&j| &toks[j]);
                // `{N}` with no trivia inside
                if t.is("{")
                    && i + 2 < toks.len()
                    && toks[i + 1].kind == TokenKind::Number
                    && toks[i + 2].is("}")
                {
                    let n: usize = toks[i + 1].text().parse().map_err(|_| self.err("bad placeholder"))?;
                    let tv = vals
                        .get(n)
                        .cloned()
                        .ok_or_else(|| self.err(format!("placeholder {{{n}}} has no value in `{template}`")))?;
                    let name = format!("ssi_hookarg_{n}");
                    if used.insert(n) {
                        bindings.push((name.clone(), tv));
                    }
                    out.push_str(&name);
                    i += 3;
                    continue;
                }
                if t.is("(") && at(1).is_some_and(|x| x.is("opaque")) && at(2).is_some_and(|x| x.is(")")) {
                    let name = format!("ssi_opaque_{opaque}");
                    opaque += 1;
                    let label = format!("{}@{}:opaque", self.name, self.site.pos.line);
                    let v = self.ex.s.values.symbol_from_call(&label, self.pos(), self.origin());
                    bindings.push((name.clone(), TV { v, ty: CType::Unknown }));
                    out.push_str(&name);
                    i = sig[k + 2] + 1;
                    continue;
                }
            }
            out.push_str(t.text());
            i += 1;
        }
        let name = format!("<hook {}>", self.name);
        let line = self.site.pos.line;
        self.ex
            .exec_snippet_text(&name, &out, &bindings, line)
            .map_err(|e| self.err(format!("in `{template}`: {e}")))
    }

    pub fn make_concrete(&mut self, bits: u8, value: i128) -> ValueId {
        let ty = IntType { bits, signed: bits <= 32 };
        let pos = self.pos();
        self.ex.s.values.concrete(Concrete::new(ty, value), pos)
    }

    pub fn write_through(&mut self, ptr: ValueId, value: ValueId, width: u64) -> Result<(), ExecError> {
        let loc = self.locate(ptr)?;
        self.ex.s.memory.store(loc, value, width);
        Ok(())
    }

    pub fn read_through(&mut self, ptr: ValueId, width: u64) -> Result<ValueId, ExecError> {
        let loc = self.locate(ptr)?;
        let pos = self.pos();
        Ok(self.ex.s.memory.load(&mut self.ex.s.values, loc, width, pos))
    }

    fn locate(&mut self, ptr: ValueId) -> Result<Location, ExecError> {
        let pos = self.pos();
        self.ex
            .s
            .memory
            .locate(&mut self.ex.s.values, ptr, pos)
            .map_err(|source| ExecError::Memory { line: pos.line, source })
    }

    /// Fresh symbol remembering this call, so later uses can name the model
    /// that produced it.
    pub fn fresh_symbolic(&mut self, label: &str) -> ValueId {
        let pos = self.pos();
        let origin = self.origin();
        self.ex.s.values.symbol_from_call(label, pos, origin)
    }

    /// `(imm N)` or `(str (imm N))` with `{K}` placeholders; yields the
    /// immediate as an `int`.
    pub fn emit_sexpr(&mut self, template: &str, vals: &[i128]) -> Result<ValueId, ExecError> {
        let mut text = template.to_string();
        for (k, v) in vals.iter().enumerate() {
            text = text.replace(&format!("{{{k}}}"), &v.to_string());
        }
        let n = parse_sexpr(&text).ok_or_else(|| self.err(format!("cannot emit `{text}`")))?;
        Ok(self.make_concrete(32, n))
    }

    pub fn log(&mut self, message: impl Into<String>) {
        let line = self.site.pos.line;
        self.ex.s.events.push(EventKind::Trace { line, text: message.into() });
    }

    pub fn diagnostic(&mut self, message: impl Into<String>) {
        self.ex.s.diagnostic(message);
    }

    pub fn chosen_device(&self) -> Option<String> {
        self.ex.s.chosen_device.clone()
    }

    pub fn slot(&self, name: &str) -> Option<ValueId> {
        self.ex.s.slots.get(name).copied()
    }

    pub fn set_slot(&mut self, name: &str, v: ValueId) {
        self.ex.s.slots.insert(name.to_string(), v);
    }

    /// Pointer to the start of a new region.
    pub fn alloc_region(&mut self, label: &str, kind: RegionKind, size: Option<u64>) -> ValueId {
        let pos = self.pos();
        let s = &mut *self.ex.s;
        s.memory.alloc_pointer(&mut s.values, label, kind, size, pos).1
    }

    /// Pointer to a new region whose untouched bytes read as zero.
    pub fn alloc_zeroed(&mut self, label: &str, kind: RegionKind, size: Option<u64>) -> ValueId {
        let p = self.alloc_region(label, kind, size);
        if let Some((r, _)) = self.ex.s.values.as_pointer(p) {
            self.ex.s.memory.region_mut(r).zeroed = true;
        }
        p
    }

    /// Makes addresses in `ptr`'s region print as `base + offset`.
    pub fn set_display_base(&mut self, ptr: ValueId, base: ValueId) -> Result<(), ExecError> {
        let loc = self.locate(ptr)?;
        self.ex.s.memory.region_mut(loc.region).display_base = Some(base);
        Ok(())
    }

    /// `(base, size)` of the first node compatible with `compatible`;
    /// `"$chosen"` means the device picked at startup.
    pub fn dtsi_find(&self, file: &str, compatible: &str) -> Result<(u64, u64), ExecError> {
        let compatible = match compatible {
            "$chosen" => self.chosen_device().ok_or_else(|| self.err("no device chosen"))?,
            c => c.to_string(),
        };
        let tree = self.ex.s.dtsi_tree(file).ok_or_else(|| self.err(format!("no dtsi file {file}")))?;
        dtsi::dtsi_find(tree, &compatible).map_err(|e| self.err(e.to_string()))
    }

    pub fn emit_write(&mut self, addr: ValueId, value: ValueId) {
        let address = self.ex.s.describe(addr);
        let value = self.ex.s.describe(value);
        self.ex.s.events.push(EventKind::Write { address, value });
    }

    pub fn display(&self, v: ValueId) -> String {
        self.ex.s.describe(v)
    }
}

fn parse_sexpr(text: &str) -> Option<i128> {
    let t = text.trim();
    let inner = t.strip_prefix('(')?.strip_suffix(')')?.trim();
    if let Some(rest) = inner.strip_prefix("str") {
        return parse_sexpr(rest);
    }
    let n = inner.strip_prefix("imm")?.trim();
    match n.strip_prefix("0x") {
        Some(h) => i128::from_str_radix(h, 16).ok(),
        None => n.parse().ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SchemaError {
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default)]
    models: Vec<toml::Spanned<ModelEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelEntry {
    name: String,
    doc: Option<String>,
    return_constant: Option<ReturnConstant>,
    return_symbol: Option<ReturnSymbol>,
    write_through_arg: Option<WriteThroughArg>,
    log_args: Option<LogArgs>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReturnConstant {
    width: u8,
    value: i64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReturnSymbol {
    label: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WriteThroughArg {
    arg: usize,
    constant: Option<i64>,
    dtsi: Option<DtsiSource>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DtsiSource {
    file: String,
    compatible: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogArgs {
    format: String,
}

fn line_at(text: &str, offset: usize) -> u32 {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() as u32 + 1
}

/// Registers one hook per `[[models]]` entry; returns how many.
pub fn load_declarative_models(session: &mut Session, text: &str) -> Result<usize, SchemaError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| SchemaError {
        line: e.span().map_or(0, |s| line_at(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut hooks = Vec::new();
    for spanned in file.models {
        let line = line_at(text, spanned.span().start);
        let entry = spanned.into_inner();
        hooks.push(build_model(entry).map_err(|message| SchemaError { line, message })?);
    }
    let n = hooks.len();
    for h in hooks {
        session.register_hook(h);
    }
    Ok(n)
}

pub fn load_declarative_models_file(session: &mut Session, path: &Path) -> Result<usize, SchemaError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SchemaError { line: 0, message: format!("{}: {e}", path.display()) })?;
    load_declarative_models(session, &text)
}

fn build_model(e: ModelEntry) -> Result<Hook, String> {
    let actions = [
        e.return_constant.is_some(),
        e.return_symbol.is_some(),
        e.write_through_arg.is_some(),
        e.log_args.is_some(),
    ]
    .iter()
    .filter(|b| **b)
    .count();
    if actions != 1 {
        return Err(format!(
            "model `{}` needs exactly one of return_constant, return_symbol, write_through_arg, log_args (found {actions})",
            e.name
        ));
    }
    let doc = e.doc.unwrap_or_else(|| format!("declarative model for {}", e.name));
    if let Some(rc) = e.return_constant {
        if !matches!(rc.width, 8 | 16 | 32 | 64) {
            return Err(format!("model `{}`: width must be 8, 16, 32 or 64 bits", e.name));
        }
        return Ok(Hook::new(&e.name, &doc, move |cx| Ok(Some(cx.make_concrete(rc.width, i128::from(rc.value))))));
    }
    if let Some(rs) = e.return_symbol {
        return Ok(Hook::new(&e.name, &doc, move |cx| Ok(Some(cx.fresh_symbolic(&rs.label)))));
    }
    if let Some(w) = e.write_through_arg {
        match (&w.constant, &w.dtsi) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(format!("model `{}`: write_through_arg needs exactly one of constant, dtsi", e.name)),
        }
        return Ok(Hook::new(&e.name, &doc, move |cx| {
            let target = cx.arg(w.arg)?;
            let value = match (&w.constant, &w.dtsi) {
                (Some(c), _) => i128::from(*c),
                (_, Some(d)) => i128::from(cx.dtsi_find(&d.file, &d.compatible)?.0),
                _ => unreachable!("validated at load"),
            };
            let v = cx.make_concrete(64, value);
            let tv = TV { v, ty: CType::Int(IntType::U64) };
            cx.exec_snippet("*{0} = {1};", &[target, tv])?;
            Ok(Some(cx.make_concrete(32, 0)))
        }));
    }
    let fmt = e.log_args.expect("one action").format;
    Ok(Hook::new(&e.name, &doc, move |cx| {
        let mut text = fmt.clone();
        for i in 0..cx.args.len() {
            let shown = cx.display(cx.args[i].v);
            text = text.replace(&format!("{{{i}}}"), &shown);
        }
        cx.log(text);
        Ok(None)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::Batch;

    #[test]
    fn sexpr_forms_are_the_same_immediate() {
        assert_eq!(parse_sexpr("(imm 0)"), Some(0));
        assert_eq!(parse_sexpr("(str (imm 0))"), Some(0));
        assert_eq!(parse_sexpr("(imm 0x10)"), Some(16));
        assert_eq!(parse_sexpr("(reg 1)"), None);
    }

    #[test]
    fn one_return_constant_entry() {
        let mut s = Session::from_source("t.c", "int f(void) { return probe_me(); }");
        let n = load_declarative_models(&mut s, "[[models]]\nname = \"probe_me\"\nreturn_constant = { width = 32, value = 7 }\n").unwrap();
        assert_eq!(n, 1);
        let r = s.call("f", &[], &mut Batch).unwrap().unwrap();
        assert_eq!(s.values.resolve(r.v).concrete().map(|c| c.value()), Some(7));
    }

    #[test]
    fn malformed_action_reports_line() {
        let mut s = Session::default();
        let text = "[[models]]\nname = \"a\"\nreturn_constant = { width = 32, value = 1 }\n\n[[models]]\nname = \"b\"\n";
        let e = load_declarative_models(&mut s, text).unwrap_err();
        assert_eq!(e.line, 5);
        let e = load_declarative_models(&mut s, "[[models]]\nname = \"a\"\nbogus = 1\n").unwrap_err();
        assert!(e.line >= 1, "{e}");
    }

    #[test]
    fn replacing_a_hook_emits_diagnostic() {
        let mut s = Session::default();
        s.register_hook(Hook::new("f", "", |_| Ok(None)));
        s.register_hook(Hook::new("f", "", |_| Ok(None)));
        assert!(s
            .events
            .all()
            .iter()
            .any(|e| matches!(&e.kind, EventKind::Diagnostic { message } if message.contains("replaced"))));
    }

    #[test]
    fn snippet_writes_through_pointer_and_opaque_is_fresh() {
        let src = "int f(void) { int x = 1; int y = 1; set(&x); clobber(&y); return x * 100 + y; }";
        let mut s = Session::from_source("t.c", src);
        s.register_hook(Hook::new("set", "", |cx| {
            let p = cx.arg(0)?;
            let v = cx.make_concrete(32, 42);
            cx.exec_snippet("*{0} = {1};", &[p, TV { v, ty: CType::int() }])?;
            Ok(None)
        }));
        s.register_hook(Hook::new("clobber", "", |cx| {
            let p = cx.arg(0)?;
            cx.exec_snippet("*{0} = (opaque);", &[p])?;
            cx.exec_snippet("", &[])?;
            Ok(None)
        }));
        s.policy = crate::interp::BranchPolicy::Fail;
        let r = s.call("f", &[], &mut Batch).unwrap().unwrap();
        let blockers = match s.values.resolve(r.v) {
            crate::value::Resolved::Residual(b) => b,
            other => panic!("expected residual, got {other:?}"),
        };
        let b = *blockers.iter().next().unwrap();
        assert_eq!(s.values.get(b).origin.as_ref().unwrap().callee, "clobber");
    }
}
