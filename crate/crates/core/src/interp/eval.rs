use super::{ExecError, Exec, Var, LV, TV};
use crate::ctype::{self, CType};
use crate::expr::{Expr, ExprKind, UnOp};
use crate::memory::{Location, MemError, RegionKind};
use crate::value::{Concrete, IntType, Op, Payload, Pos, Resolved, ValueId};

impl Exec<'_> {
    pub(crate) fn pos(&self, line: u32) -> Pos {
        Pos::new(self.s.current_pos().file, line)
    }

    pub(crate) fn int_const(&mut self, v: i128, ty: IntType, line: u32) -> TV {
        let pos = self.pos(line);
        TV { v: self.s.values.concrete(Concrete::new(ty, v), pos), ty: CType::Int(ty) }
    }

    pub(crate) fn eval(&mut self, e: &Expr) -> Result<TV, ExecError> {
        let line = e.line;
        let pos = self.pos(line);
        match &e.kind {
            ExprKind::Num(c) => Ok(TV { v: self.s.values.concrete(*c, pos), ty: CType::Int(c.ty) }),
            ExprKind::Str(s) => Ok(self.string_literal(s, line)),
            ExprKind::Ident(name) => self.ident_rvalue(name, line),
            ExprKind::Unary(op, x) => match op {
                UnOp::Deref => {
                    let lv = self.lvalue(e)?;
                    self.load(&lv, line)
                }
                UnOp::AddrOf => {
                    if let ExprKind::Ident(name) = &x.kind {
                        if self.find_var(name, line)?.is_none()
                            && (self.s.has_hook(name) || self.s.function_info(name).is_some())
                        {
                            return self.ident_rvalue(name, line);
                        }
                    }
                    let lv = self.lvalue(x)?;
                    Ok(TV { v: lv.ptr, ty: CType::ptr(lv.ty) })
                }
                UnOp::Neg | UnOp::BitNot => {
                    let t = self.eval(x)?;
                    let (v, ty) = self.promote(&t, line)?;
                    let op = if *op == UnOp::Neg { Op::Neg } else { Op::BitNot };
                    let v = self.s.values.apply_unop(op, v, pos)?;
                    Ok(TV { v, ty: CType::Int(ty) })
                }
                UnOp::Plus => {
                    let t = self.eval(x)?;
                    let (v, ty) = self.promote(&t, line)?;
                    Ok(TV { v, ty: CType::Int(ty) })
                }
                UnOp::Not => {
                    let t = self.eval(x)?;
                    let v = self.s.values.apply_unop(Op::Not, t.v, pos)?;
                    Ok(TV { v, ty: CType::int() })
                }
                UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec => self.incdec(x, *op, line),
            },
            ExprKind::Binary(op @ (Op::LogAnd | Op::LogOr), a, b) => {
                let la = self.eval(a)?;
                let av = self.bool_value(&la, line);
                if let Some(c) = self.s.values.resolve(av).concrete() {
                    let short = if *op == Op::LogAnd { c.is_zero() } else { !c.is_zero() };
                    if short {
                        let v = self.s.values.apply_binop(*op, av, av, pos)?;
                        return Ok(TV { v, ty: CType::int() });
                    }
                }
                let lb = self.eval(b)?;
                let bv = self.bool_value(&lb, line);
                let v = self.s.values.apply_binop(*op, av, bv, pos)?;
                Ok(TV { v, ty: CType::int() })
            }
            ExprKind::Binary(op, a, b) => {
                let la = self.eval(a)?;
                let lb = self.eval(b)?;
                self.binop(*op, la, lb, line)
            }
            ExprKind::Assign(op, l, r) => {
                let lv = self.lvalue(l)?;
                let rv = self.eval(r)?;
                let nv = match op {
                    None => rv,
                    Some(op) => {
                        let cur = self.load(&lv, line)?;
                        self.binop(*op, cur, rv, line)?
                    }
                };
                // scalar into struct: `store` narrows it to the first member
                let nv = if lv.ty.is_struct() && !nv.ty.is_struct() { nv } else { self.convert(nv, &lv.ty, line)? };
                self.store(&lv, &nv, line)?;
                Ok(nv)
            }
            ExprKind::Ternary(c, t, f) => {
                let cv = self.eval(c)?;
                let v = self.bool_value(&cv, line);
                let hole = self.current_hole_stub(line);
                let r = if self.truth(v, line, || hole)? { self.eval(t)? } else { self.eval(f)? };
                // both arms share the usual arithmetic conversion
                match (&r.ty, self.static_type(e)?) {
                    (CType::Int(_), ty @ CType::Int(_)) => self.convert(r, &ty, line),
                    _ => Ok(r),
                }
            }
            ExprKind::Call { callee, args, spaced, joined } => self.eval_call(callee, args, spaced, joined, line),
            ExprKind::Member { .. } | ExprKind::Index(..) => {
                let lv = self.lvalue(e)?;
                self.load(&lv, line)
            }
            ExprKind::Cast(ty, x) => {
                let t = self.eval(x)?;
                self.convert(t, ty, line)
            }
            ExprKind::SizeofType(ty) => {
                let n = ctype::size_of(self.s, ty);
                Ok(self.int_const(i128::from(n), IntType::U64, line))
            }
            ExprKind::SizeofExpr(x) => {
                let ty = self.static_type(x)?;
                let n = ctype::size_of(self.s, &ty);
                Ok(self.int_const(i128::from(n), IntType::U64, line))
            }
            ExprKind::Comma(a, b) => {
                self.eval(a)?;
                self.eval(b)
            }
            ExprKind::InitList(_) => Err(ExecError::unsupported(line, "brace initializer outside a declaration")),
        }
    }

    /// Hole covering nothing, used when a condition has no source text of
    /// its own.
    fn current_hole_stub(&self, _line: u32) -> crate::parse::Hole {
        let file = self.s.current_pos().file;
        crate::parse::Hole::new(file, 0..0)
    }

    fn bool_value(&mut self, tv: &TV, line: u32) -> ValueId {
        if self.s.values.as_pointer(tv.v).is_some() {
            return self.int_const(1, IntType::I32, line).v;
        }
        tv.v
    }

    fn string_literal(&mut self, s: &str, line: u32) -> TV {
        let ty = CType::ptr(CType::Int(IntType::I8));
        if let Some(v) = self.s.strings.get(s) {
            return TV { v: *v, ty };
        }
        let pos = self.pos(line);
        let bytes: Vec<u8> = s.bytes().chain(std::iter::once(0)).collect();
        let label = format!("{s:?}");
        let (region, ptr) =
            self.s.memory.alloc_pointer(&mut self.s.values, &label, RegionKind::Static, Some(bytes.len() as u64), pos);
        for (i, b) in bytes.into_iter().enumerate() {
            let c = self.s.values.concrete(Concrete::new(IntType::I8, i128::from(b as i8)), pos);
            self.s.memory.store(Location { region, offset: i as i64 }, c, 1);
        }
        self.s.strings.insert(s.to_string(), ptr);
        TV { v: ptr, ty }
    }

    /// Local, then global (found lazily in the corpus).
    pub(crate) fn find_var(&mut self, name: &str, line: u32) -> Result<Option<Var>, ExecError> {
        if let Some(v) = self.s.frames.last().and_then(|f| f.lookup(name)) {
            return Ok(Some(v.clone()));
        }
        if let Some(v) = self.s.globals.get(name) {
            return Ok(Some(v.clone()));
        }
        self.materialize_global(name, line)
    }

    fn materialize_global(&mut self, name: &str, line: u32) -> Result<Option<Var>, ExecError> {
        let Some((file_id, range)) = self.s.corpus.find_global(name) else { return Ok(None) };
        let file = self.s.corpus.file(file_id).clone();
        let sig = ctype::Sig::new(file.clone(), range);
        let Some((base, mut i, _)) = ctype::parse_specifiers_full(self.s, &sig, 0) else { return Ok(None) };
        while i < sig.len() {
            let d = ctype::parse_declarator(self.s, &sig, i, base.clone());
            let mut j = d.next;
            let mut init_range = None;
            if sig.text(j) == "=" {
                let start = j + 1;
                let mut depth = 0i32;
                j = start;
                while j < sig.len() {
                    match sig.text(j) {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => depth -= 1,
                        "," if depth == 0 => break,
                        _ => {}
                    }
                    j += 1;
                }
                init_range = Some(sig.tok(start)..sig.tok(j));
            }
            if d.name.as_deref() == Some(name) {
                let pos = Pos::new(file_id, file.line_of(sig.tok(d.name_pos.unwrap_or(0))));
                let mut ty = d.ty;
                let init = match init_range {
                    Some(r) => {
                        let toks = crate::macros::tokens_of(&file, r);
                        let toks = self.s.expand_tokens(toks);
                        Some(crate::expr::parse_initializer(&toks, self.s)?)
                    }
                    None => None,
                };
                if let (CType::Array(elem, None), Some(ExprKind::InitList(items))) = (&ty, init.as_ref().map(|e| &e.kind)) {
                    ty = CType::Array(elem.clone(), Some(items.len() as u64));
                }
                let var = self.s.alloc_var(name, ty.clone(), RegionKind::Static, pos);
                self.s.globals.insert(name.to_string(), var.clone());
                let lv = LV { ptr: var.ptr, ty };
                self.zero_fill(&lv, line)?;
                if let Some(init) = init {
                    self.init_object(&lv, &init, line)?;
                }
                return Ok(Some(var));
            }
            if sig.text(j) != "," {
                break;
            }
            i = j + 1;
        }
        Ok(None)
    }

    fn ident_rvalue(&mut self, name: &str, line: u32) -> Result<TV, ExecError> {
        if let Some(var) = self.find_var(name, line)? {
            return self.load(&LV { ptr: var.ptr, ty: var.ty }, line);
        }
        if let Some(c) = self.s.enumerator(name) {
            return Ok(TV { v: self.s.values.concrete(c, self.pos(line)), ty: CType::Int(c.ty) });
        }
        match name {
            "NULL" => return Ok(TV { v: self.int_const(0, IntType::U64, line).v, ty: CType::ptr(CType::Void) }),
            "true" => return Ok(self.int_const(1, IntType::I32, line)),
            "false" => return Ok(self.int_const(0, IntType::I32, line)),
            _ => {}
        }
        let is_function = self.s.has_hook(name) || self.s.function_info(name).is_some();
        let label = if is_function { format!("fn:{name}") } else { name.to_string() };
        let v = match self.s.unknown_idents.get(&label) {
            Some(v) => *v,
            None => {
                let pos = self.pos(line);
                let v = self.s.values.fresh_symbol(&label, pos);
                self.s.unknown_idents.insert(label, v);
                v
            }
        };
        let ty = if is_function { CType::Function(Box::new(CType::Unknown)) } else { CType::Unknown };
        Ok(TV { v, ty })
    }

    pub(crate) fn lvalue(&mut self, e: &Expr) -> Result<LV, ExecError> {
        let line = e.line;
        match &e.kind {
            ExprKind::Ident(name) => {
                if let Some(var) = self.find_var(name, line)? {
                    return Ok(LV { ptr: var.ptr, ty: var.ty });
                }
                let pos = self.pos(line);
                let var = self.s.alloc_var(name, CType::Unknown, RegionKind::Static, pos);
                self.s.globals.insert(name.to_string(), var.clone());
                Ok(LV { ptr: var.ptr, ty: var.ty })
            }
            ExprKind::Unary(UnOp::Deref, x) => {
                let p = self.eval(x)?;
                let ty = match &p.ty {
                    CType::Pointer(t) | CType::Array(t, _) => (**t).clone(),
                    CType::Function(_) => p.ty.clone(),
                    _ => CType::Unknown,
                };
                Ok(LV { ptr: p.v, ty })
            }
            ExprKind::Member { base, field, arrow } => {
                let (ptr, sty) = if *arrow {
                    let b = self.eval(base)?;
                    let sty = b.ty.pointee().cloned().unwrap_or(CType::Unknown);
                    (b.v, sty)
                } else {
                    let l = self.lvalue(base)?;
                    (l.ptr, l.ty)
                };
                let (offset, fty) = self.field(&sty, field);
                let ptr = self.offset_ptr(ptr, offset as i64, line)?;
                Ok(LV { ptr, ty: fty })
            }
            ExprKind::Index(a, i) => {
                let mut av = self.eval(a)?;
                let mut iv = self.eval(i)?;
                if !av.ty.is_pointer() && iv.ty.is_pointer() {
                    std::mem::swap(&mut av, &mut iv);
                }
                let elem = av.ty.pointee().cloned().unwrap_or(CType::Unknown);
                let p = self.ptr_offset(&av, &iv, Op::Add, line)?;
                Ok(LV { ptr: p.v, ty: elem })
            }
            ExprKind::Cast(_, x) => self.lvalue(x),
            _ => Err(ExecError::unsupported(line, "expression is not assignable")),
        }
    }

    /// Byte offset and type of `field` within a struct type.
    fn field(&mut self, sty: &CType, field: &str) -> (u64, CType) {
        if let Some(tag) = sty.struct_tag() {
            if let Some(found) = self.find_field(tag, field, 0) {
                return found;
            }
        }
        let tag = sty.struct_tag().unwrap_or("?").to_string();
        let (off, w) = self.s.memory.field_offset(&tag, field, None);
        (off, if w == 8 { CType::Int(IntType::U64) } else { CType::Unknown })
    }

    fn find_field(&mut self, tag: &str, field: &str, depth: usize) -> Option<(u64, CType)> {
        let layout = ctype::struct_layout(self.s, tag)?;
        if layout.synthetic {
            return None;
        }
        if let Some(f) = layout.field(field) {
            return Some((f.offset, f.ty.clone().unwrap_or(CType::Unknown)));
        }
        if depth > 8 {
            return None;
        }
        for f in layout.fields.iter().filter(|f| f.name.starts_with("<anon")) {
            if let Some(CType::Struct { tag: inner, .. }) = &f.ty {
                if let Some((off, ty)) = self.find_field(inner, field, depth + 1) {
                    return Some((f.offset + off, ty));
                }
            }
        }
        None
    }

    /// `ptr + bytes` in region/offset form.
    pub(crate) fn offset_ptr(&mut self, ptr: ValueId, bytes: i64, line: u32) -> Result<ValueId, ExecError> {
        let pos = self.pos(line);
        let p = self
            .s
            .memory
            .as_pointer(&mut self.s.values, ptr, pos)
            .map_err(|source| ExecError::Memory { line, source })?;
        if bytes == 0 {
            return Ok(p);
        }
        let k = self.s.values.concrete(Concrete::new(IntType::I64, i128::from(bytes)), pos);
        Ok(self.s.values.apply_binop(Op::Add, p, k, pos)?)
    }

    /// Pointer plus or minus an integer, scaled by the pointee size.
    fn ptr_offset(&mut self, p: &TV, i: &TV, op: Op, line: u32) -> Result<TV, ExecError> {
        let pos = self.pos(line);
        let elem = p.ty.pointee().cloned().unwrap_or(CType::Void);
        let size = match elem {
            CType::Unknown | CType::Void | CType::Function(_) => 1,
            ref t => ctype::size_of(self.s, t).max(1),
        };
        let idx = self.convert(i.clone(), &CType::Int(IntType::I64), line)?;
        let scaled = if size == 1 {
            idx.v
        } else {
            let k = self.s.values.concrete(Concrete::new(IntType::I64, i128::from(size)), pos);
            self.s.values.apply_binop(Op::Mul, idx.v, k, pos)?
        };
        let ty = match &p.ty {
            CType::Array(t, _) => CType::Pointer(t.clone()),
            t => t.clone(),
        };
        let base = match self.s.memory.as_pointer(&mut self.s.values, p.v, pos) {
            Ok(b) => b,
            Err(MemError::SymbolicAddress { .. }) => p.v,
            Err(source) => return Err(ExecError::Memory { line, source }),
        };
        let v = self.s.values.apply_binop(op, base, scaled, pos)?;
        Ok(TV { v, ty })
    }

    pub(crate) fn width_of(&mut self, ty: &CType) -> u64 {
        match ty {
            CType::Unknown => 4,
            t => ctype::size_of(self.s, t).clamp(1, 8),
        }
    }

    pub(crate) fn load(&mut self, lv: &LV, line: u32) -> Result<TV, ExecError> {
        match &lv.ty {
            CType::Array(t, _) => return Ok(TV { v: lv.ptr, ty: CType::Pointer(t.clone()) }),
            CType::Struct { .. } => return Ok(TV { v: lv.ptr, ty: lv.ty.clone() }),
            CType::Function(_) => return Ok(TV { v: lv.ptr, ty: CType::ptr(lv.ty.clone()) }),
            _ => {}
        }
        let width = self.width_of(&lv.ty);
        let pos = self.pos(line);
        match self.s.memory.locate(&mut self.s.values, lv.ptr, pos) {
            Ok(loc) => {
                let v = self.s.memory.load(&mut self.s.values, loc, width, pos);
                let tv = TV { v, ty: lv.ty.clone() };
                self.fit(tv, line)
            }
            Err(MemError::SymbolicAddress { blockers }) => {
                self.s.diagnostic(format!("line {line}: load through symbolic address"));
                let origin = blockers.iter().find_map(|b| self.s.values.get(*b).origin.clone());
                let label = format!("load@{line}");
                let v = match origin {
                    Some(o) => self.s.values.symbol_from_call(&label, pos, o),
                    None => self.s.values.fresh_symbol(&label, pos),
                };
                Ok(TV { v, ty: lv.ty.clone() })
            }
            Err(source) => Err(ExecError::Memory { line, source }),
        }
    }

    /// Casts a concrete value to its declared integer type when they differ.
    fn fit(&mut self, tv: TV, line: u32) -> Result<TV, ExecError> {
        if let CType::Int(t) = tv.ty {
            if let Payload::Concrete(c) = self.s.values.get(tv.v).payload {
                if c.ty != t {
                    let v = self.s.values.apply_unop(Op::Cast(t), tv.v, self.pos(line))?;
                    return Ok(TV { v, ty: tv.ty });
                }
            }
        }
        Ok(tv)
    }

    pub(crate) fn store(&mut self, lv: &LV, tv: &TV, line: u32) -> Result<(), ExecError> {
        let pos = self.pos(line);
        if let CType::Struct { tag, .. } = &lv.ty {
            let layout = ctype::struct_layout(self.s, tag);
            if tv.ty.is_struct() {
                let fields = layout.map(|l| l.fields).unwrap_or_default();
                for f in fields {
                    let fty = f.ty.clone().unwrap_or(CType::Unknown);
                    let src = self.offset_ptr(tv.v, f.offset as i64, line)?;
                    let dst = self.offset_ptr(lv.ptr, f.offset as i64, line)?;
                    let val = self.load(&LV { ptr: src, ty: fty.clone() }, line)?;
                    self.store(&LV { ptr: dst, ty: fty }, &val, line)?;
                }
                return Ok(());
            }
            let first_ty = layout
                .and_then(|l| l.fields.first().and_then(|f| f.ty.clone()))
                .unwrap_or(CType::Int(IntType::U64));
            let first = LV { ptr: lv.ptr, ty: first_ty.clone() };
            let tv = self.convert(tv.clone(), &first_ty, line)?;
            return self.store(&first, &tv, line);
        }
        if let CType::Array(..) = lv.ty {
            return Err(ExecError::unsupported(line, "assignment to an array"));
        }
        let width = self.width_of(&lv.ty);
        match self.s.memory.locate(&mut self.s.values, lv.ptr, pos) {
            Ok(loc) => {
                self.s.memory.store(loc, tv.v, width);
                Ok(())
            }
            Err(MemError::SymbolicAddress { .. }) => {
                self.s.diagnostic(format!("line {line}: store through symbolic address dropped"));
                Ok(())
            }
            Err(source) => Err(ExecError::Memory { line, source }),
        }
    }

    /// Implicit or explicit conversion to `target`.
    pub(crate) fn convert(&mut self, tv: TV, target: &CType, line: u32) -> Result<TV, ExecError> {
        let CType::Int(t) = target else {
            return Ok(TV { v: tv.v, ty: target.clone() });
        };
        if self.s.values.as_pointer(tv.v).is_some() {
            return Ok(TV { v: tv.v, ty: target.clone() });
        }
        let pos = self.pos(line);
        let v = match self.s.values.resolve(tv.v) {
            Resolved::Concrete(c) if c.ty == *t => tv.v,
            Resolved::Concrete(_) => self.s.values.apply_unop(Op::Cast(*t), tv.v, pos)?,
            Resolved::Residual(_) => {
                let src_bits = match &tv.ty {
                    CType::Int(s) => s.bits,
                    CType::Unknown => 32,
                    _ => 64,
                };
                if t.bits < src_bits {
                    self.s.values.apply_unop(Op::Cast(*t), tv.v, pos)?
                } else {
                    tv.v
                }
            }
            _ => tv.v,
        };
        Ok(TV { v, ty: target.clone() })
    }

    /// Integer promotion: the arithmetic type and the (possibly cast) value.
    fn promote(&mut self, tv: &TV, line: u32) -> Result<(ValueId, IntType), ExecError> {
        let ty = self.arith_type(tv);
        let v = self.cast_value(tv, ty, line)?;
        Ok((v, ty))
    }

    fn arith_type(&self, tv: &TV) -> IntType {
        let t = match &tv.ty {
            CType::Int(t) => *t,
            CType::Unknown | CType::Void | CType::Struct { .. } => match self.s.values.get(tv.v).payload {
                Payload::Concrete(c) => c.ty,
                _ => IntType::I32,
            },
            _ => IntType::U64,
        };
        if t.bits < 32 {
            IntType::I32
        } else {
            t
        }
    }

    fn cast_value(&mut self, tv: &TV, to: IntType, line: u32) -> Result<ValueId, ExecError> {
        if self.s.values.as_pointer(tv.v).is_some() {
            return Ok(tv.v);
        }
        let pos = self.pos(line);
        Ok(match self.s.values.resolve(tv.v) {
            Resolved::Concrete(c) if c.ty == to => tv.v,
            Resolved::Concrete(_) => self.s.values.apply_unop(Op::Cast(to), tv.v, pos)?,
            Resolved::Residual(_) => {
                let src = self.arith_type(tv);
                if to.bits < src.bits {
                    self.s.values.apply_unop(Op::Cast(to), tv.v, pos)?
                } else {
                    tv.v
                }
            }
            _ => tv.v,
        })
    }

    pub(crate) fn binop(&mut self, op: Op, a: TV, b: TV, line: u32) -> Result<TV, ExecError> {
        let pos = self.pos(line);
        let (ap, bp) = (a.ty.is_pointer(), b.ty.is_pointer());
        if matches!(op, Op::Add | Op::Sub) && ap && !bp {
            return self.ptr_offset(&a, &b, op, line);
        }
        if op == Op::Add && bp && !ap {
            return self.ptr_offset(&b, &a, op, line);
        }
        if op == Op::Sub && ap && bp {
            let x = self.offset_ptr(a.v, 0, line)?;
            let y = self.offset_ptr(b.v, 0, line)?;
            let diff = self.s.values.apply_binop(Op::Sub, x, y, pos)?;
            let elem = a.ty.pointee().cloned().unwrap_or(CType::Void);
            let size = match elem {
                CType::Unknown | CType::Void => 1,
                ref t => ctype::size_of(self.s, t).max(1),
            };
            let v = if size == 1 {
                diff
            } else {
                let k = self.s.values.concrete(Concrete::new(IntType::I64, i128::from(size)), pos);
                self.s.values.apply_binop(Op::Div, diff, k, pos)?
            };
            return Ok(TV { v, ty: CType::Int(IntType::I64) });
        }
        let a_is_ptr = self.s.values.as_pointer(a.v).is_some();
        let b_is_ptr = self.s.values.as_pointer(b.v).is_some();
        if op.is_comparison() && (a_is_ptr || b_is_ptr) {
            let mut x = a.v;
            let mut y = b.v;
            if a_is_ptr && !b_is_ptr && self.s.values.resolve(y).concrete().is_none() {
                y = self.offset_ptr(y, 0, line)?;
            }
            if b_is_ptr && !a_is_ptr && self.s.values.resolve(x).concrete().is_none() {
                x = self.offset_ptr(x, 0, line)?;
            }
            let v = self.s.values.apply_binop(op, x, y, pos)?;
            return Ok(TV { v, ty: CType::int() });
        }
        let ta = self.arith_type(&a);
        let tb = self.arith_type(&b);
        let common = IntType::reconcile(ta, tb);
        let x = self.cast_value(&a, common, line)?;
        let y = self.cast_value(&b, common, line)?;
        let v = self.s.values.apply_binop(op, x, y, pos)?;
        let ty = if op.is_comparison() { CType::int() } else { CType::Int(common) };
        Ok(TV { v, ty })
    }

    fn incdec(&mut self, x: &Expr, op: UnOp, line: u32) -> Result<TV, ExecError> {
        let lv = self.lvalue(x)?;
        let cur = self.load(&lv, line)?;
        let one = self.int_const(1, IntType::I32, line);
        let bop = if matches!(op, UnOp::PreInc | UnOp::PostInc) { Op::Add } else { Op::Sub };
        let new = self.binop(bop, cur.clone(), one, line)?;
        let new = self.convert(new, &lv.ty, line)?;
        self.store(&lv, &new, line)?;
        Ok(if matches!(op, UnOp::PreInc | UnOp::PreDec) { new } else { cur })
    }

    /// Type of an expression without evaluating it.
    pub(crate) fn static_type(&mut self, e: &Expr) -> Result<CType, ExecError> {
        let line = e.line;
        Ok(match &e.kind {
            ExprKind::Num(c) => CType::Int(c.ty),
            ExprKind::Str(s) => CType::Array(Box::new(CType::Int(IntType::I8)), Some(s.len() as u64 + 1)),
            ExprKind::Ident(name) => match self.find_var(name, line)? {
                Some(v) => v.ty,
                None => CType::int(),
            },
            ExprKind::Unary(UnOp::Deref, x) => match self.static_type(x)? {
                CType::Pointer(t) | CType::Array(t, _) => *t,
                _ => CType::Unknown,
            },
            ExprKind::Unary(UnOp::AddrOf, x) => CType::ptr(self.static_type(x)?),
            ExprKind::Unary(UnOp::Not, _) => CType::int(),
            ExprKind::Unary(_, x) => match self.static_type(x)? {
                CType::Int(t) => CType::Int(t.max_width()),
                other => other,
            },
            ExprKind::Member { base, field, arrow } => {
                let bt = self.static_type(base)?;
                let sty = if *arrow { bt.pointee().cloned().unwrap_or(CType::Unknown) } else { bt };
                self.field(&sty, field).1
            }
            ExprKind::Index(a, _) => match self.static_type(a)? {
                CType::Pointer(t) | CType::Array(t, _) => *t,
                _ => CType::Unknown,
            },
            ExprKind::Cast(ty, _) => ty.clone(),
            ExprKind::SizeofType(_) | ExprKind::SizeofExpr(_) => CType::Int(IntType::U64),
            ExprKind::Binary(op, a, b) => {
                if op.is_comparison() || matches!(op, Op::LogAnd | Op::LogOr) {
                    CType::int()
                } else {
                    let ta = self.static_type(a)?;
                    if ta.is_pointer() {
                        ta
                    } else if matches!(op, Op::Shl | Op::Shr) {
                        CType::Int(ta.int_type().max_width())
                    } else {
                        let tb = self.static_type(b)?;
                        match (ta.int_type(), tb.int_type()) {
                            (x, y) => CType::Int(IntType::reconcile(x.max_width(), y.max_width())),
                        }
                    }
                }
            }
            ExprKind::Assign(_, l, _) => self.static_type(l)?,
            ExprKind::Ternary(_, t, f) => {
                let (tt, tf) = (self.static_type(t)?, self.static_type(f)?);
                match (&tt, &tf) {
                    (CType::Int(x), CType::Int(y)) => CType::Int(IntType::reconcile(x.max_width(), y.max_width())),
                    _ => tt,
                }
            }
            ExprKind::Comma(_, b) => self.static_type(b)?,
            ExprKind::Call { .. } | ExprKind::InitList(_) => CType::int(),
        })
    }
}

trait Promoted {
    fn max_width(self) -> IntType;
}

impl Promoted for IntType {
    fn max_width(self) -> IntType {
        if self.bits < 32 {
            IntType::I32
        } else {
            self
        }
    }
}
