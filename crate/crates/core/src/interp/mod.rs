//! Tree-walking execution over island-parsed statements.

mod call;
mod eval;
mod stmt;
#[cfg(test)]
mod tests;

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::corpus::{Corpus, MacroDef};
use crate::ctype::{self, CType, Sig, TypeCache, TypeCtx};
use crate::dtsi::DtTree;
use crate::event::{EventKind, EventLog};
use crate::expr::{self, Expr, ExprError, ExprKind, TypeEnv, UnOp};
use crate::hooks::Hook;
use crate::macros::{self, tokens_of, MacroEnv, XTok};
use crate::memory::{MemError, Memory, RegionId, RegionKind};
use crate::parse::{Hole, ParseCache, ParseError, RuleRegistry};
use crate::token::FileId;
use crate::value::{eval_binop, eval_unop, BindReason, Concrete, IntType, Op, Pos, Resolved, ValueError, ValueId, ValueTable};

pub use call::CallSite;
pub(crate) use stmt::Flow;

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
const MAX_FRAMES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchPolicy {
    Ask,
    AssumeTrue,
    AssumeFalse,
    Fail,
}

impl FromStr for BranchPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ask" => Ok(BranchPolicy::Ask),
            "assume-true" => Ok(BranchPolicy::AssumeTrue),
            "assume-false" => Ok(BranchPolicy::AssumeFalse),
            "fail" => Ok(BranchPolicy::Fail),
            other => Err(format!("unknown branch policy `{other}` (ask, assume-true, assume-false, fail)")),
        }
    }
}

impl fmt::Display for BranchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchPolicy::Ask => "ask",
            BranchPolicy::AssumeTrue => "assume-true",
            BranchPolicy::AssumeFalse => "assume-false",
            BranchPolicy::Fail => "fail",
        })
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("line {line}: {source}")]
    Memory { line: u32, source: MemError },
    #[error("line {line}: branch on symbolic condition `{text}` blocked by {}", .blockers.join(", "))]
    SymbolicBranch { line: u32, text: String, blockers: Vec<String> },
    #[error("exceeded {limit} statement executions")]
    MaxStepsExceeded { limit: u64 },
    #[error("unknown command: {0}")]
    UnknownCommand(String),
    #[error("line {line}: {message}")]
    Unsupported { line: u32, message: String },
    #[error("no such local: {0}")]
    NoSuchLocal(String),
    #[error("hook {name}: {message}")]
    Hook { name: String, message: String },
    #[error("execution aborted")]
    Aborted,
}

impl ExecError {
    pub fn unsupported(line: u32, message: impl Into<String>) -> Self {
        ExecError::Unsupported { line, message: message.into() }
    }
}

/// A value with its static C type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TV {
    pub v: ValueId,
    pub ty: CType,
}

/// An lvalue: pointer to the object and the object's type.
#[derive(Debug, Clone)]
pub(crate) struct LV {
    pub ptr: ValueId,
    pub ty: CType,
}

#[derive(Debug, Clone)]
pub struct Var {
    pub ptr: ValueId,
    pub region: RegionId,
    pub ty: CType,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub function: String,
    pub(crate) scopes: Vec<HashMap<String, Var>>,
    pub pos: Pos,
}

impl Frame {
    pub(crate) fn new(function: &str, pos: Pos) -> Self {
        Frame {
            function: function.to_string(),
            scopes: vec![HashMap::new()],
            pos,
        }
    }

    pub fn lookup(&self, name: &str) -> Option<&Var> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Breakpoint {
    pub file: FileId,
    pub line: u32,
    pub enabled: bool,
    pub hits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSpec {
    pub callee: String,
    /// Per-argument display flags.
    pub pattern: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Breakpoint,
    Step,
}

#[derive(Debug, Clone)]
pub struct Stop {
    pub pos: Pos,
    pub reason: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resume {
    Continue,
    Step,
    Abort,
}

#[derive(Debug, Clone)]
pub struct BranchQuery {
    pub pos: Pos,
    pub text: String,
    pub blockers: Vec<String>,
}

/// Whoever is steering execution: the REPL, or a batch driver.
pub trait Frontend {
    fn on_stop(&mut self, session: &mut Session, stop: &Stop) -> Resume;
    /// Answer for a symbolic branch under the `ask` policy.
    fn decide_branch(&mut self, session: &mut Session, query: &BranchQuery) -> Option<bool>;
}

/// Runs to completion: ignores stops, answers no questions.
#[derive(Debug, Default)]
pub struct Batch;

impl Frontend for Batch {
    fn on_stop(&mut self, _: &mut Session, _: &Stop) -> Resume {
        Resume::Continue
    }

    fn decide_branch(&mut self, _: &mut Session, _: &BranchQuery) -> Option<bool> {
        None
    }
}

/// An SSI-defined command such as `probe`.
#[derive(Debug, Clone, Default)]
pub struct CommandSpec {
    pub entry: String,
    /// Integer parameters taken from the command line, bound as locals.
    pub params: Vec<String>,
    /// `slot -> param`: named symbols concretized to parameter values.
    pub bind: Vec<(String, String)>,
    /// Statements run before the entry call.
    pub setup: Vec<String>,
    /// Argument expressions for the entry function.
    pub args: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) enum Plan {
    Expr(Arc<Expr>),
    Decl(Arc<DeclPlan>),
    Block(Hole),
    Skip,
}

#[derive(Debug, Clone)]
pub(crate) struct DeclPlan {
    pub is_static: bool,
    pub items: Vec<(String, CType, Option<Expr>)>,
}

#[derive(Debug, Clone)]
pub(crate) struct FnInfo {
    pub name: String,
    pub file: FileId,
    pub line: u32,
    pub params: Vec<(Option<String>, CType)>,
    pub ret: CType,
    pub body: Hole,
}

/// All state of one interpreter session.
pub struct Session {
    pub corpus: Corpus,
    pub values: ValueTable,
    pub memory: Memory,
    pub types: TypeCache,
    pub parse_cache: ParseCache,
    pub rules: RuleRegistry,
    pub events: EventLog,
    pub policy: BranchPolicy,
    pub max_steps: u64,
    pub breakpoints: Vec<Breakpoint>,
    pub traces: Vec<TraceSpec>,
    pub chosen_device: Option<String>,
    pub slots: HashMap<String, ValueId>,
    pub commands: HashMap<String, CommandSpec>,
    pub dtsi: Vec<(String, DtTree)>,
    pub(crate) hooks: HashMap<String, Hook>,
    pub(crate) frames: Vec<Frame>,
    pub(crate) globals: HashMap<String, Var>,
    pub(crate) unknown_idents: HashMap<String, ValueId>,
    pub(crate) enumerators: HashMap<String, Option<Concrete>>,
    pub(crate) strings: HashMap<String, ValueId>,
    pub(crate) plans: HashMap<Hole, Plan>,
    pub(crate) functions: HashMap<String, Option<Arc<FnInfo>>>,
    pub(crate) steps: u64,
    pub(crate) stepping: bool,
    pub(crate) last_pos: Option<Pos>,
    pub(crate) warned_gaps: Vec<(FileId, u32)>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("files", &self.corpus.files().count())
            .field("values", &self.values.len())
            .field("hooks", &self.hooks.len())
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

impl Default for Session {
    fn default() -> Self {
        Self::new(Corpus::new())
    }
}

impl Session {
    pub fn new(corpus: Corpus) -> Self {
        Session {
            corpus,
            values: ValueTable::new(),
            memory: Memory::new(),
            types: TypeCache::default(),
            parse_cache: ParseCache::new(),
            rules: RuleRegistry::builtin(),
            events: EventLog::default(),
            policy: BranchPolicy::Fail,
            max_steps: DEFAULT_MAX_STEPS,
            breakpoints: Vec::new(),
            traces: Vec::new(),
            chosen_device: None,
            slots: HashMap::new(),
            commands: HashMap::new(),
            dtsi: Vec::new(),
            hooks: HashMap::new(),
            frames: Vec::new(),
            globals: HashMap::new(),
            unknown_idents: HashMap::new(),
            enumerators: HashMap::new(),
            strings: HashMap::new(),
            plans: HashMap::new(),
            functions: HashMap::new(),
            steps: 0,
            stepping: false,
            last_pos: None,
            warned_gaps: Vec::new(),
        }
    }

    /// A session over a single in-memory source file.
    pub fn from_source(name: &str, source: &str) -> Self {
        let mut corpus = Corpus::new();
        corpus.add_source(name, source.as_bytes());
        Self::new(corpus)
    }

    pub fn diagnostic(&mut self, message: impl Into<String>) {
        self.events.push(EventKind::Diagnostic { message: message.into() });
    }

    /// Registers a hook; an existing hook of the same name is replaced.
    pub fn register_hook(&mut self, hook: Hook) {
        let name = hook.name.clone();
        if self.hooks.insert(name.clone(), hook).is_some() {
            self.diagnostic(format!("hook for {name} replaced"));
        }
        self.plans.clear();
    }

    pub fn unregister_hook(&mut self, name: &str) -> bool {
        self.plans.clear();
        self.hooks.remove(name).is_some()
    }

    pub fn has_hook(&self, name: &str) -> bool {
        self.hooks.contains_key(name)
    }

    pub fn hook_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.hooks.keys().cloned().collect();
        names.sort();
        names
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn is_running(&self) -> bool {
        !self.frames.is_empty()
    }

    /// Sets a breakpoint; `false` if one already exists there.
    pub fn add_breakpoint(&mut self, file: FileId, line: u32) -> bool {
        if self.breakpoints.iter().any(|b| b.file == file && b.line == line) {
            return false;
        }
        self.breakpoints.push(Breakpoint { file, line, enabled: true, hits: 0 });
        true
    }

    pub fn add_trace(&mut self, callee: &str, pattern: Vec<bool>) {
        self.traces.retain(|t| t.callee != callee);
        self.traces.push(TraceSpec { callee: callee.to_string(), pattern });
    }

    pub fn dtsi_tree(&self, file: &str) -> Option<&DtTree> {
        self.dtsi
            .iter()
            .find(|(name, _)| name == file || name.ends_with(&format!("/{file}")) || file.ends_with(&format!("/{name}")))
            .or_else(|| {
                let base = file.rsplit('/').next().unwrap_or(file);
                self.dtsi.iter().find(|(name, _)| name.rsplit('/').next() == Some(base))
            })
            .map(|(_, t)| t)
    }

    /// Variable visible by `name` in the innermost frame, then globals.
    pub fn lookup_var(&self, name: &str) -> Option<&Var> {
        self.frames
            .last()
            .and_then(|f| f.lookup(name))
            .or_else(|| self.globals.get(name))
    }

    /// `(R, O) = value` for a variable, as printed by `xc`.
    pub fn examine(&mut self, name: &str) -> Result<String, ExecError> {
        let var = self.lookup_var(name).cloned().ok_or_else(|| ExecError::NoSuchLocal(name.to_string()))?;
        let loc = crate::memory::Location { region: var.region, offset: 0 };
        if var.ty.is_struct() || matches!(var.ty, CType::Array(..)) {
            return Ok(format!("{loc} = <aggregate {}>", ctype_name(&var.ty)));
        }
        let width = ctype::size_of(self, &var.ty).clamp(1, 8);
        let pos = self.current_pos();
        let v = self.memory.load(&mut self.values, loc, width, pos);
        Ok(format!("{loc} = {}", self.describe(v)))
    }

    /// Provenance of a variable's current value, one line per step.
    pub fn trace_value(&mut self, name: &str) -> Result<Vec<String>, ExecError> {
        let var = self.lookup_var(name).cloned().ok_or_else(|| ExecError::NoSuchLocal(name.to_string()))?;
        let loc = crate::memory::Location { region: var.region, offset: 0 };
        let width = ctype::size_of(self, &var.ty).clamp(1, 8);
        let pos = self.current_pos();
        let v = self.memory.load(&mut self.values, loc, width, pos);
        Ok(self
            .values
            .provenance_trace(v)
            .into_iter()
            .map(|e| {
                let file = &self.corpus.file(e.pos.file).name;
                let parents: Vec<String> = e.parents.iter().map(|p| p.to_string()).collect();
                format!("{file}:{} {} = {}({})", e.pos.line, e.id, e.op_description, parents.join(", "))
            })
            .collect())
    }

    /// Resolved rendering: decimal, mmio hex, `(R, O)`, or blockers.
    pub fn describe(&self, v: ValueId) -> String {
        match self.display(v) {
            Ok(s) => s,
            Err(blockers) => {
                let labels: Vec<String> = blockers
                    .iter()
                    .map(|b| self.values.label(*b).unwrap_or("?").to_string())
                    .collect();
                format!("<symbolic> [blocked by {}]", labels.join(", "))
            }
        }
    }

    /// Display form of a value, or its unbound blockers.
    pub fn display(&self, v: ValueId) -> Result<String, Vec<ValueId>> {
        match self.values.resolve(v) {
            Resolved::Concrete(c) => Ok(c.value().to_string()),
            Resolved::Address { region, offset } => {
                let r = self.memory.region(region);
                if let Some(base) = r.display_base {
                    if let Resolved::Residual(b) = self.values.resolve(base) {
                        return Err(b.into_iter().collect());
                    }
                }
                Ok(self.memory.display_location(&self.values, crate::memory::Location { region, offset }))
            }
            Resolved::Residual(b) => Err(b.into_iter().collect()),
            Resolved::Undefined(m) => Ok(format!("<undefined: {m}>")),
        }
    }

    pub(crate) fn current_pos(&self) -> Pos {
        self.frames.last().map(|f| f.pos).unwrap_or_default()
    }

    pub(crate) fn file_line_text(&self, hole: Hole) -> String {
        let f = self.corpus.file(hole.file);
        macros::spaced_text(&tokens_of(f, hole.range()))
    }

    /// Macro-expanded significant tokens of a hole.
    pub(crate) fn expand_hole(&mut self, hole: Hole) -> Vec<XTok> {
        let toks = tokens_of(self.corpus.file(hole.file), hole.range());
        self.expand_tokens(toks)
    }

    pub(crate) fn expand_tokens(&mut self, toks: Vec<XTok>) -> Vec<XTok> {
        let ex = macros::expand(toks, self);
        for (name, line) in ex.unexpanded {
            self.events.push(EventKind::UnexpandedMacro { name, line });
        }
        ex.tokens
    }

    pub(crate) fn parse_expr_tokens(&mut self, toks: &[XTok]) -> Result<Expr, ExprError> {
        expr::parse_expression(toks, self)
    }

    /// Integer constant expression over a token range (enum values, array
    /// bounds, case labels).
    pub fn const_eval_range(&mut self, file: FileId, range: Range<usize>) -> Option<Concrete> {
        let toks = self.expand_hole(Hole::new(file, range));
        let e = self.parse_expr_tokens(&toks).ok()?;
        self.const_eval(&e)
    }

    pub(crate) fn const_eval(&mut self, e: &Expr) -> Option<Concrete> {
        Some(match &e.kind {
            ExprKind::Num(c) => *c,
            ExprKind::Unary(op, x) => {
                let c = self.const_eval(x)?;
                let c = promote(c);
                match op {
                    UnOp::Neg => eval_unop(Op::Neg, c).ok()?,
                    UnOp::Plus => c,
                    UnOp::Not => eval_unop(Op::Not, c).ok()?,
                    UnOp::BitNot => eval_unop(Op::BitNot, c).ok()?,
                    _ => return None,
                }
            }
            ExprKind::Binary(op, a, b) => {
                let a = promote(self.const_eval(a)?);
                if *op == Op::LogAnd && a.is_zero() {
                    return Some(Concrete::bool(false));
                }
                if *op == Op::LogOr && !a.is_zero() {
                    return Some(Concrete::bool(true));
                }
                let b = promote(self.const_eval(b)?);
                eval_binop(*op, a, b).ok()?
            }
            ExprKind::Ternary(c, t, f) => {
                if self.const_eval(c)?.is_zero() {
                    self.const_eval(f)?
                } else {
                    self.const_eval(t)?
                }
            }
            ExprKind::Cast(ty, x) => {
                let c = self.const_eval(x)?;
                match ty {
                    CType::Int(t) => c.cast(*t),
                    _ => c.cast(IntType::U64),
                }
            }
            ExprKind::SizeofType(ty) => Concrete::new(IntType::U64, i128::from(ctype::size_of(self, ty))),
            ExprKind::Ident(name) => self.enumerator(name)?,
            ExprKind::Comma(_, b) => self.const_eval(b)?,
            _ => return None,
        })
    }

    pub(crate) fn enumerator(&mut self, name: &str) -> Option<Concrete> {
        if let Some(c) = self.enumerators.get(name) {
            return *c;
        }
        self.enumerators.insert(name.to_string(), None);
        let loc = self.corpus.find_enumerator(name)?;
        let file = self.corpus.file(loc.file).clone();
        let mut next = 0i128;
        let mut result = None;
        for item in &loc.items {
            let sig = Sig::new(file.clone(), item.clone());
            let item_name = sig.text(0).to_string();
            let value = if sig.text(1) == "=" {
                let c = self.const_eval_range(loc.file, sig.tok(2)..item.end)?;
                c.value()
            } else {
                next
            };
            next = value + 1;
            let c = Concrete::new(IntType::I32, value);
            self.enumerators.insert(item_name.clone(), Some(c));
            if item_name == name {
                result = Some(c);
            }
        }
        result
    }

    pub(crate) fn function_info(&mut self, name: &str) -> Option<Arc<FnInfo>> {
        if let Some(f) = self.functions.get(name) {
            return f.clone();
        }
        let info = self.build_function_info(name).map(Arc::new);
        self.functions.insert(name.to_string(), info.clone());
        info
    }

    fn build_function_info(&mut self, name: &str) -> Option<FnInfo> {
        let def = crate::parse::find_function_definition(&self.corpus, name)?;
        let loc = def.location.clone();
        let file = self.corpus.file(loc.file).clone();
        let ret_sig = Sig::new(file.clone(), loc.return_type.clone());
        let ret = match ctype::parse_specifiers(self, &ret_sig, 0) {
            Some((base, i)) => {
                let stars = (i..ret_sig.len()).filter(|&j| ret_sig.text(j) == "*").count();
                (0..stars).fold(base, |t, _| CType::ptr(t))
            }
            None => CType::Unknown,
        };
        let psig = Sig::new(file.clone(), loc.params.clone());
        let mut params = Vec::new();
        let mut i = 0;
        while i < psig.len() {
            let start = i;
            let mut depth = 0i32;
            while i < psig.len() {
                match psig.text(i) {
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth -= 1,
                    "," if depth == 0 => break,
                    _ => {}
                }
                i += 1;
            }
            let range = psig.tok(start)..psig.tok(i);
            let one = Sig::new(file.clone(), range);
            i += 1;
            if one.len() == 1 && one.text(0) == "void" || one.text(0) == "..." {
                continue;
            }
            match ctype::parse_specifiers(self, &one, 0) {
                Some((base, j)) => {
                    let d = ctype::parse_declarator(self, &one, j, base);
                    let ty = match d.ty {
                        CType::Array(t, _) => CType::Pointer(t),
                        t => t,
                    };
                    params.push((d.name, ty));
                }
                None => {
                    let name = (0..one.len()).rev().find(|&k| one.kind(k) == Some(crate::token::TokenKind::Identifier));
                    params.push((name.map(|k| one.text(k).to_string()), CType::Unknown));
                }
            }
        }
        Some(FnInfo {
            name: name.to_string(),
            file: loc.file,
            line: loc.line,
            params,
            ret,
            body: def.body(),
        })
    }

    /// Global variable `name` of pointer type `ty` holding `target`.
    pub fn define_global_pointer(&mut self, name: &str, ty: CType, target: ValueId) {
        let var = self.alloc_var(name, ty, RegionKind::Static, Pos::default());
        let loc = crate::memory::Location { region: var.region, offset: 0 };
        self.memory.store(loc, target, 8);
        self.globals.insert(name.to_string(), var);
    }

    pub(crate) fn frame_depth_ok(&self) -> bool {
        self.frames.len() < MAX_FRAMES
    }

    pub(crate) fn alloc_var(&mut self, name: &str, ty: CType, kind: RegionKind, at: Pos) -> Var {
        let size = ctype::size_of(self, &ty);
        let (region, ptr) = self.memory.alloc_pointer(&mut self.values, name, kind, Some(size), at);
        Var { ptr, region, ty }
    }

    pub(crate) fn learn_from_branch(&mut self, cond: ValueId, taken: bool, at: Pos) {
        use crate::value::Payload;
        let strip = |values: &ValueTable, mut v: ValueId| loop {
            match &values.get(v).payload {
                Payload::Term { op: Op::Cast(_), operands } => v = operands[0],
                _ => return v,
            }
        };
        let v = strip(&self.values, cond);
        let is_sym = |values: &ValueTable, v: ValueId| matches!(values.get(v).payload, Payload::Symbol { .. });
        let binding = match self.values.get(v).payload.clone() {
            Payload::Symbol { .. } if !taken => Some((v, Concrete::int(0))),
            Payload::Term { op: Op::Not, operands } if taken => {
                let x = strip(&self.values, operands[0]);
                is_sym(&self.values, x).then_some((x, Concrete::int(0)))
            }
            Payload::Term { op: op @ (Op::Eq | Op::Ne), operands } if taken == (op == Op::Eq) => {
                let a = strip(&self.values, operands[0]);
                let b = strip(&self.values, operands[1]);
                match (self.values.resolve(a).concrete(), self.values.resolve(b).concrete()) {
                    (None, Some(c)) if is_sym(&self.values, a) => Some((a, c)),
                    (Some(c), None) if is_sym(&self.values, b) => Some((b, c)),
                    _ => None,
                }
            }
            _ => None,
        };
        if let Some((s, c)) = binding {
            let _ = self.values.concretize(s, c, BindReason::BranchComparison, at);
        }
    }
}

fn promote(c: Concrete) -> Concrete {
    if c.ty.bits < 32 {
        c.cast(IntType::I32)
    } else {
        c
    }
}

pub(crate) fn ctype_name(ty: &CType) -> String {
    match ty {
        CType::Void => "void".into(),
        CType::Int(t) => t.to_string(),
        CType::Pointer(t) => format!("{} *", ctype_name(t)),
        CType::Array(t, n) => format!("{}[{}]", ctype_name(t), n.map_or(String::new(), |n| n.to_string())),
        CType::Struct { tag, union } => format!("{} {tag}", if *union { "union" } else { "struct" }),
        CType::Function(t) => format!("{} ()", ctype_name(t)),
        CType::Unknown => "?".into(),
    }
}

impl TypeCtx for Session {
    fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    fn memory(&mut self) -> &mut Memory {
        &mut self.memory
    }

    fn type_cache(&mut self) -> &mut TypeCache {
        &mut self.types
    }

    fn eval_const(&mut self, file: FileId, range: Range<usize>) -> Option<i64> {
        self.const_eval_range(file, range).map(|c| c.value() as i64)
    }
}

impl Session {
    pub(crate) fn is_type_name_checked(&mut self, word: &str) -> bool {
        if self.frames.last().is_some_and(|f| f.lookup(word).is_some()) {
            return false;
        }
        ctype::is_type_word(self, word)
    }
}

impl TypeEnv for Session {
    fn is_type_name(&mut self, word: &str) -> bool {
        self.is_type_name_checked(word)
    }

    fn parse_type(&mut self, toks: &[XTok]) -> Option<CType> {
        let text = macros::joined_text(toks);
        let id = self.corpus.add_synthetic("<type>", &text, 0);
        let file = self.corpus.file(id).clone();
        let len = file.tokens.len();
        let sig = Sig::new(file, 0..len);
        let (ty, next) = ctype::parse_type_name(self, &sig, 0)?;
        (next == sig.len()).then_some(ty)
    }
}

impl MacroEnv for Session {
    fn lookup(&self, name: &str) -> Option<Arc<MacroDef>> {
        self.corpus.macro_def(name).cloned()
    }

    fn is_blocked(&self, name: &str) -> bool {
        self.hooks.contains_key(name)
    }
}

/// Execution context: the session plus whoever steers it.
pub struct Exec<'a> {
    pub s: &'a mut Session,
    pub(crate) fe: &'a mut dyn Frontend,
}

impl<'a> Exec<'a> {
    pub fn new(s: &'a mut Session, fe: &'a mut dyn Frontend) -> Self {
        Exec { s, fe }
    }
}

impl Session {
    /// Runs an SSI command to completion (or until aborted).
    pub fn run_command(&mut self, name: &str, args: &[i128], fe: &mut dyn Frontend) -> Result<Option<TV>, ExecError> {
        let spec = self
            .commands
            .get(name)
            .cloned()
            .ok_or_else(|| ExecError::UnknownCommand(name.to_string()))?;
        if spec.params.len() != args.len() {
            return Err(ExecError::unsupported(
                0,
                format!("{name} takes {} argument(s): {}", spec.params.len(), spec.params.join(" ")),
            ));
        }
        self.steps = 0;
        self.stepping = false;
        self.last_pos = None;
        let result = Exec::new(self, fe).run_command(&spec, args);
        self.frames.clear();
        self.stepping = false;
        result
    }

    /// Calls a function by name with concrete integer arguments.
    pub fn call(&mut self, name: &str, args: &[i128], fe: &mut dyn Frontend) -> Result<Option<TV>, ExecError> {
        self.steps = 0;
        self.last_pos = None;
        let mut ex = Exec::new(self, fe);
        let pos = Pos::default();
        ex.s.frames.push(Frame::new("<call>", pos));
        let tvs: Vec<TV> = args
            .iter()
            .map(|a| TV { v: ex.s.values.concrete(Concrete::new(IntType::I64, *a), pos), ty: CType::Int(IntType::I64) })
            .collect();
        let site = CallSite::synthetic(name, pos);
        let r = ex.call_function(name, tvs, &site);
        self.frames.clear();
        r.map(Some)
    }

    /// Executes C statements at top level in a scratch frame.
    pub fn exec_text(&mut self, text: &str, fe: &mut dyn Frontend) -> Result<(), ExecError> {
        self.steps = 0;
        self.last_pos = None;
        let mut ex = Exec::new(self, fe);
        let r = ex.exec_snippet_text("<exec>", text, &[], 0);
        self.frames.clear();
        r
    }

    /// Executes a whole function body in a fresh frame and returns the
    /// frame's final locals, for tests and tooling.
    pub fn run_function_locals(&mut self, name: &str, fe: &mut dyn Frontend) -> Result<HashMap<String, Option<Concrete>>, ExecError> {
        self.steps = 0;
        self.last_pos = None;
        let info = self
            .function_info(name)
            .ok_or_else(|| ExecError::unsupported(0, format!("no definition of {name}")))?;
        let mut ex = Exec::new(self, fe);
        ex.s.frames.push(Frame::new(name, Pos::new(info.file, info.line)));
        let r = ex.exec_body(info.body);
        let frame = ex.s.frames.pop().expect("frame");
        self.frames.clear();
        r?;
        let mut out = HashMap::new();
        for scope in &frame.scopes {
            for (name, var) in scope {
                if var.ty.is_struct() || matches!(var.ty, CType::Array(..)) {
                    continue;
                }
                let loc = crate::memory::Location { region: var.region, offset: 0 };
                let c = self.memory.peek(loc).and_then(|v| self.values.resolve(v).concrete());
                out.insert(name.clone(), c);
            }
        }
        Ok(out)
    }
}
