use super::{CommandSpec, ExecError, Exec, Flow, Frame, LV, TV};
use crate::ctype::{self, CType};
use crate::event::{CallVia, EventKind};
use crate::expr::{Expr, ExprKind, UnOp};
use crate::hooks::HookContext;
use crate::macros::tokens_of;
use crate::memory::RegionKind;
use crate::parse::Hole;
use crate::value::{BindReason, CallOrigin, Concrete, IntType, Pos, Resolved, ValueId};

/// Where a call happened and how it was written.
#[derive(Debug, Clone)]
pub struct CallSite {
    pub pos: Pos,
    pub callee: String,
    /// Source-spaced call text, as shown in traces.
    pub spaced: String,
    /// Single-space joined call text, as shown in missing-model reports.
    pub joined: String,
    /// Which arguments were written `&x`.
    pub addr_of: Vec<bool>,
}

impl CallSite {
    pub fn synthetic(name: &str, pos: Pos) -> Self {
        CallSite {
            pos,
            callee: name.to_string(),
            spaced: format!("{name}()"),
            joined: format!("{name} ( )"),
            addr_of: Vec::new(),
        }
    }
}

impl Exec<'_> {
    pub(crate) fn eval_call(
        &mut self,
        callee: &Expr,
        args: &[Expr],
        spaced: &str,
        joined: &str,
        line: u32,
    ) -> Result<TV, ExecError> {
        let name = match &callee.kind {
            ExprKind::Ident(n) if self.find_var(n, line)?.is_none() => n.clone(),
            _ => {
                let f = self.eval(callee)?;
                match self.s.values.label(f.v).and_then(|l| l.strip_prefix("fn:")) {
                    Some(n) => n.to_string(),
                    None => spaced.split('(').next().unwrap_or(spaced).trim().to_string(),
                }
            }
        };
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a)?);
        }
        let site = CallSite {
            pos: self.pos(line),
            callee: name.clone(),
            spaced: spaced.to_string(),
            joined: joined.to_string(),
            addr_of: args.iter().map(|a| matches!(a.kind, ExprKind::Unary(UnOp::AddrOf, _))).collect(),
        };
        self.call_function(&name, vals, &site)
    }

    /// Dispatch order: hook, corpus definition, fallback symbol.
    pub(crate) fn call_function(&mut self, name: &str, args: Vec<TV>, site: &CallSite) -> Result<TV, ExecError> {
        self.fire_traces(name, &args, site);
        let ids: Vec<ValueId> = args.iter().map(|a| a.v).collect();
        if let Some(hook) = self.s.hooks.get(name).cloned() {
            self.s.events.push(EventKind::Call { callee: name.to_string(), args: ids, via: CallVia::Hook });
            let mut ctx = HookContext::new(self, name, args, site.clone());
            let out = (hook.handler)(&mut ctx)?;
            return Ok(match out {
                Some(v) => {
                    let ty = self.type_for_value(v);
                    TV { v, ty }
                }
                None => TV { v: self.int_const(0, IntType::I32, site.pos.line).v, ty: CType::Void },
            });
        }
        if let Some(info) = self.s.function_info(name) {
            self.s.events.push(EventKind::Call { callee: name.to_string(), args: ids, via: CallVia::Corpus });
            return self.call_corpus(&info, args, site);
        }
        self.s.events.push(EventKind::Call { callee: name.to_string(), args: ids, via: CallVia::Fallback });
        self.fallback(name, &args, site)
    }

    fn type_for_value(&self, v: ValueId) -> CType {
        if self.s.values.as_pointer(v).is_some() {
            return CType::ptr(CType::Void);
        }
        match self.s.values.resolve(v) {
            Resolved::Concrete(c) => CType::Int(c.ty),
            _ => CType::Unknown,
        }
    }

    fn call_corpus(&mut self, info: &super::FnInfo, args: Vec<TV>, site: &CallSite) -> Result<TV, ExecError> {
        let line = site.pos.line;
        if !self.s.frame_depth_ok() {
            return Err(ExecError::unsupported(line, format!("call depth exceeded calling {}", info.name)));
        }
        let pos = Pos::new(info.file, info.line);
        self.s.frames.push(Frame::new(&info.name, pos));
        let r = (|| {
            let mut args = args.into_iter();
            for (i, (pname, ty)) in info.params.iter().enumerate() {
                let arg = match args.next() {
                    Some(a) => a,
                    None => {
                        let v = self.s.values.fresh_symbol(&format!("{}:arg{i}", info.name), pos);
                        TV { v, ty: ty.clone() }
                    }
                };
                let Some(pname) = pname else { continue };
                let var = self.s.alloc_var(pname, ty.clone(), RegionKind::Stack, pos);
                let arg = self.convert(arg, ty, info.line)?;
                self.store(&LV { ptr: var.ptr, ty: ty.clone() }, &arg, info.line)?;
                self.bind_local(pname, var);
            }
            self.exec_body(info.body)
        })();
        let flow = r;
        let ret_line = self.s.current_pos().line;
        self.s.frames.pop();
        match flow? {
            Flow::Return(Some(tv)) if info.ret != CType::Void => self.convert(tv, &info.ret, ret_line),
            Flow::Goto(l) => Err(ExecError::unsupported(ret_line, format!("no label `{l}` in {}", info.name))),
            _ => Ok(TV { v: self.int_const(0, IntType::I32, line).v, ty: CType::Void }),
        }
    }

    /// Unknown function: the result is a fresh symbol remembering the call,
    /// and objects passed by address are clobbered the same way.
    fn fallback(&mut self, name: &str, args: &[TV], site: &CallSite) -> Result<TV, ExecError> {
        let line = site.pos.line;
        let origin = CallOrigin { callee: name.to_string(), call_text: site.joined.clone(), line };
        let v = self.s.values.symbol_from_call(&format!("ret:{name}@{line}"), site.pos, origin.clone());
        for (i, arg) in args.iter().enumerate() {
            if !site.addr_of.get(i).copied().unwrap_or(false) {
                continue;
            }
            let target = arg.ty.pointee().cloned().unwrap_or(CType::Unknown);
            let label = format!("{name}@{line}:arg{i}");
            self.clobber(arg.v, &target, &label, &origin, site.pos)?;
        }
        Ok(TV { v, ty: CType::Unknown })
    }

    fn clobber(&mut self, ptr: ValueId, ty: &CType, label: &str, origin: &CallOrigin, pos: Pos) -> Result<(), ExecError> {
        let Ok(loc) = self.s.memory.locate(&mut self.s.values, ptr, pos) else { return Ok(()) };
        let layout = ty.struct_tag().and_then(|t| ctype::struct_layout(self.s, t)).filter(|l| !l.synthetic);
        match layout {
            Some(l) => {
                for f in l.fields {
                    let fty = f.ty.clone().unwrap_or(CType::Unknown);
                    if fty.is_struct() || matches!(fty, CType::Array(..)) {
                        continue;
                    }
                    let v = self.s.values.symbol_from_call(&format!("{label}:{}", f.name), pos, origin.clone());
                    let at = crate::memory::Location { region: loc.region, offset: loc.offset + f.offset as i64 };
                    self.s.memory.store(at, v, f.width.clamp(1, 8));
                }
            }
            None => {
                let width = self.width_of(ty);
                let v = self.s.values.symbol_from_call(label, pos, origin.clone());
                self.s.memory.store(loc, v, width);
            }
        }
        Ok(())
    }

    fn fire_traces(&mut self, name: &str, args: &[TV], site: &CallSite) {
        let Some(spec) = self.s.traces.iter().find(|t| t.callee == name).cloned() else { return };
        let line = site.pos.line;
        let mut shown = Vec::new();
        let mut blocked = Vec::new();
        for (arg, _) in args.iter().zip(&spec.pattern).filter(|(_, on)| **on) {
            match self.s.display(arg.v) {
                Ok(s) => shown.push(s),
                Err(b) => blocked.extend(b),
            }
        }
        if blocked.is_empty() {
            let text = format!("Line {line}: {} => {}", site.spaced, shown.join(", "));
            self.s.events.push(EventKind::Trace { line, text });
            return;
        }
        let origin = blocked.iter().find_map(|b| self.s.values.get(*b).origin.clone());
        match origin {
            Some(o) => {
                self.s.events.push(EventKind::MissingModel {
                    callee: o.callee,
                    call_text: o.call_text,
                    line: o.line,
                    reported_at: line,
                });
            }
            None => {
                let labels: Vec<String> =
                    blocked.iter().map(|b| self.s.values.label(*b).unwrap_or("?").to_string()).collect();
                let text = format!("Line {line}: Could not verbose because of unresolved {}", labels.join(", "));
                self.s.events.push(EventKind::Trace { line, text });
            }
        }
    }

    pub(crate) fn run_command(&mut self, spec: &CommandSpec, args: &[i128]) -> Result<Option<TV>, ExecError> {
        let pos = Pos::default();
        self.s.frames.push(Frame::new("<command>", pos));
        for (p, a) in spec.params.iter().zip(args) {
            let var = self.s.alloc_var(p, CType::int(), RegionKind::Stack, pos);
            let tv = self.int_const(*a, IntType::I32, 0);
            self.store(&LV { ptr: var.ptr, ty: CType::int() }, &tv, 0)?;
            self.bind_local(p, var);
        }
        for (slot, param) in &spec.bind {
            let idx = spec
                .params
                .iter()
                .position(|p| p == param)
                .ok_or_else(|| ExecError::unsupported(0, format!("bind refers to unknown parameter `{param}`")))?;
            let sym = self.s.values.fresh_symbol(slot, pos);
            self.s.values.concretize(sym, Concrete::new(IntType::I64, args[idx]), BindReason::UserSupplied, pos)?;
            self.s.slots.insert(slot.clone(), sym);
        }
        for text in &spec.setup {
            let id = self.s.corpus.add_synthetic("<setup>", text, 0);
            let len = self.s.corpus.file(id).tokens.len();
            self.exec_body(Hole::new(id, 0..len))?;
        }
        let mut vals = Vec::new();
        for text in &spec.args {
            let id = self.s.corpus.add_synthetic("<arg>", text, 0);
            let file = self.s.corpus.file(id).clone();
            let toks = self.s.expand_tokens(tokens_of(&file, 0..file.tokens.len()));
            let e = self.s.parse_expr_tokens(&toks)?;
            vals.push(self.eval(&e)?);
        }
        let site = CallSite::synthetic(&spec.entry, pos);
        let r = self.call_function(&spec.entry, vals, &site);
        self.s.frames.pop();
        r.map(Some)
    }
}
