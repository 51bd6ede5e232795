use std::sync::Arc;

use super::{DeclPlan, ExecError, Exec, Plan, Resume, Stop, StopReason, Var, LV, TV};
use crate::ctype::{self, CType, Sig};
use crate::expr::{self, Expr, ExprKind};
use crate::macros::{joined_text, tokens_of, XTok};
use crate::memory::RegionKind;
use crate::parse::{Hole, Node, NodeKind};
use crate::token::TokenKind;
use crate::value::{Pos, Resolved};

#[derive(Debug, Clone)]
pub(crate) enum Flow {
    Next,
    Break,
    Continue,
    Return(Option<TV>),
    Goto(String),
}

const STATEMENT_WORDS: &[&str] = &["if", "do", "while", "for", "switch", "return", "break", "continue", "goto"];

impl Exec<'_> {
    pub(crate) fn parse_hole(&mut self, hole: Hole) -> Result<Arc<Vec<Node>>, ExecError> {
        let s = &mut *self.s;
        Ok(s.parse_cache.parse_hole_as_block(&s.corpus, hole, &s.rules)?)
    }

    /// Runs a hole's statements in a new scope.
    pub(crate) fn exec_block(&mut self, hole: Hole) -> Result<Flow, ExecError> {
        let nodes = self.parse_hole(hole)?;
        self.push_scope();
        let r = self.exec_list(&nodes);
        self.pop_scope();
        r
    }

    /// Runs a hole's statements in the current scope.
    pub(crate) fn exec_body(&mut self, hole: Hole) -> Result<Flow, ExecError> {
        let nodes = self.parse_hole(hole)?;
        self.exec_list(&nodes)
    }

    fn push_scope(&mut self) {
        if let Some(f) = self.s.frames.last_mut() {
            f.scopes.push(Default::default());
        }
    }

    fn pop_scope(&mut self) {
        if let Some(f) = self.s.frames.last_mut() {
            if f.scopes.len() > 1 {
                f.scopes.pop();
            }
        }
    }

    pub(crate) fn bind_local(&mut self, name: &str, var: Var) {
        if let Some(scope) = self.s.frames.last_mut().and_then(|f| f.scopes.last_mut()) {
            scope.insert(name.to_string(), var);
        }
    }

    fn exec_list(&mut self, nodes: &Arc<Vec<Node>>) -> Result<Flow, ExecError> {
        self.warn_gap_breakpoints(nodes);
        let mut i = 0;
        while i < nodes.len() {
            match self.exec_node(&nodes[i])? {
                Flow::Next => i += 1,
                Flow::Goto(label) => {
                    let target = nodes
                        .iter()
                        .position(|n| matches!(&n.kind, NodeKind::Label { name } if *name == label));
                    match target {
                        Some(j) => i = j + 1,
                        None => return Ok(Flow::Goto(label)),
                    }
                }
                other => return Ok(other),
            }
        }
        Ok(Flow::Next)
    }

    /// One warning per breakpoint that falls strictly between two
    /// consecutive statements of a list.
    fn warn_gap_breakpoints(&mut self, nodes: &[Node]) {
        let Some(first) = nodes.first() else { return };
        let file = self.s.corpus.file(first.file).clone();
        if file.synthetic {
            return;
        }
        let mut gaps = Vec::new();
        for bp in self.s.breakpoints.iter().filter(|b| b.enabled && b.file == first.file) {
            if nodes.iter().any(|n| n.line == bp.line) {
                continue;
            }
            for pair in nodes.windows(2) {
                let end_line = file.line_of(pair[0].span.end.saturating_sub(1));
                if end_line < bp.line && bp.line < pair[1].line {
                    gaps.push(bp.line);
                }
            }
        }
        for line in gaps {
            if !self.s.warned_gaps.contains(&(first.file, line)) {
                self.s.warned_gaps.push((first.file, line));
                self.s.diagnostic(format!("breakpoint at line {line} is not on an executable statement"));
            }
        }
    }

    pub(crate) fn tick(&mut self) -> Result<(), ExecError> {
        self.s.steps += 1;
        if self.s.steps > self.s.max_steps {
            return Err(ExecError::MaxStepsExceeded { limit: self.s.max_steps });
        }
        Ok(())
    }

    fn before_statement(&mut self, node: &Node) -> Result<(), ExecError> {
        self.tick()?;
        let pos = Pos::new(node.file, node.line);
        if let Some(f) = self.s.frames.last_mut() {
            f.pos = pos;
        }
        if self.s.corpus.file(node.file).synthetic || matches!(node.kind, NodeKind::Block { .. }) {
            return Ok(());
        }
        let same_line = self.s.last_pos == Some(pos);
        self.s.last_pos = Some(pos);
        if same_line {
            return Ok(());
        }
        let mut reason = None;
        if let Some(bp) = self
            .s
            .breakpoints
            .iter_mut()
            .find(|b| b.enabled && b.file == node.file && b.line == node.line)
        {
            bp.hits += 1;
            reason = Some(StopReason::Breakpoint);
        } else if self.s.stepping {
            reason = Some(StopReason::Step);
        }
        if let Some(reason) = reason {
            let stop = Stop { pos, reason };
            match self.fe.on_stop(self.s, &stop) {
                Resume::Continue => self.s.stepping = false,
                Resume::Step => self.s.stepping = true,
                Resume::Abort => return Err(ExecError::Aborted),
            }
        }
        Ok(())
    }

    pub(crate) fn exec_node(&mut self, node: &Node) -> Result<Flow, ExecError> {
        match &node.kind {
            NodeKind::Empty
            | NodeKind::Label { .. }
            | NodeKind::Case { .. }
            | NodeKind::Default
            | NodeKind::FunctionDef { .. } => return Ok(Flow::Next),
            _ => {}
        }
        self.before_statement(node)?;
        let line = node.line;
        match &node.kind {
            NodeKind::If { cond, then, otherwise } => {
                if self.eval_cond(*cond, line)? {
                    self.exec_block(*then)
                } else if let Some(o) = otherwise {
                    self.exec_block(*o)
                } else {
                    Ok(Flow::Next)
                }
            }
            NodeKind::While { cond, body } => {
                loop {
                    self.tick()?;
                    if !self.eval_cond(*cond, line)? {
                        break;
                    }
                    match self.exec_block(*body)? {
                        Flow::Break => break,
                        Flow::Next | Flow::Continue => {}
                        other => return Ok(other),
                    }
                }
                Ok(Flow::Next)
            }
            NodeKind::DoWhile { body, cond } => {
                loop {
                    self.tick()?;
                    match self.exec_block(*body)? {
                        Flow::Break => break,
                        Flow::Next | Flow::Continue => {}
                        other => return Ok(other),
                    }
                    if !self.eval_cond(*cond, line)? {
                        break;
                    }
                }
                Ok(Flow::Next)
            }
            NodeKind::For { init, cond, step, body } => {
                self.push_scope();
                let r = self.exec_for(*init, *cond, *step, *body, line);
                self.pop_scope();
                r
            }
            NodeKind::Return { expr } => match expr {
                Some(h) => {
                    let tv = self.eval_hole(*h)?;
                    Ok(Flow::Return(Some(tv)))
                }
                None => Ok(Flow::Return(None)),
            },
            NodeKind::Break => Ok(Flow::Break),
            NodeKind::Continue => Ok(Flow::Continue),
            NodeKind::Goto { label } => Ok(Flow::Goto(label.clone())),
            NodeKind::Block { body } => self.exec_block(*body),
            NodeKind::Declaration { tokens } => self.exec_simple(*tokens, line, true),
            NodeKind::Expression { tokens } => self.exec_simple(*tokens, line, false),
            NodeKind::Switch { subject, body } => self.exec_switch(*subject, *body, line),
            NodeKind::Raw { tokens } => {
                let toks = tokens_of(self.s.corpus.file(tokens.file), tokens.range());
                match toks.first() {
                    None => Ok(Flow::Next),
                    Some(t) if t.is("#") => Ok(Flow::Next),
                    Some(t) if is_asm(&t.text) => {
                        self.s.diagnostic(format!("line {line}: inline assembly skipped"));
                        Ok(Flow::Next)
                    }
                    Some(_) => Err(ExecError::unsupported(
                        line,
                        format!("cannot execute `{}`", joined_text(&toks)),
                    )),
                }
            }
            NodeKind::Empty
            | NodeKind::Label { .. }
            | NodeKind::Case { .. }
            | NodeKind::Default
            | NodeKind::FunctionDef { .. } => Ok(Flow::Next),
        }
    }

    fn exec_for(&mut self, init: Hole, cond: Hole, step: Hole, body: Hole, line: u32) -> Result<Flow, ExecError> {
        if !self.is_blank(init) {
            self.exec_simple(init, line, false)?;
        }
        loop {
            self.tick()?;
            if !self.is_blank(cond) && !self.eval_cond(cond, line)? {
                break;
            }
            match self.exec_block(body)? {
                Flow::Break => break,
                Flow::Next | Flow::Continue => {}
                other => return Ok(other),
            }
            if !self.is_blank(step) {
                self.eval_hole(step)?;
            }
        }
        Ok(Flow::Next)
    }

    fn exec_switch(&mut self, subject: Hole, body: Hole, line: u32) -> Result<Flow, ExecError> {
        let subject_tv = self.eval_hole(subject)?;
        let mut nodes = self.parse_hole(body)?;
        if let [Node { kind: NodeKind::Block { body }, .. }] = nodes.as_slice() {
            nodes = self.parse_hole(*body)?;
        }
        let value = self.s.values.resolve(subject_tv.v).concrete();
        if value.is_none() && self.s.policy == super::BranchPolicy::Fail {
            let text = self.s.file_line_text(subject);
            let blockers = self.blocker_labels(subject_tv.v);
            return Err(ExecError::SymbolicBranch { line, text, blockers });
        }
        let mut start = None;
        if let Some(v) = value {
            for (i, n) in nodes.iter().enumerate() {
                if let NodeKind::Case { expr } = &n.kind {
                    let c = self.s.const_eval_range(expr.file, expr.range());
                    if c.is_some_and(|c| c.value() == v.value() || c.cast(v.ty).bits == v.bits) {
                        start = Some(i);
                        break;
                    }
                }
            }
        }
        if start.is_none() {
            start = nodes.iter().position(|n| matches!(n.kind, NodeKind::Default));
        }
        let Some(start) = start else { return Ok(Flow::Next) };
        self.push_scope();
        let rest: Arc<Vec<Node>> = Arc::new(nodes[start..].to_vec());
        let r = self.exec_list(&rest);
        self.pop_scope();
        match r? {
            Flow::Break => Ok(Flow::Next),
            other => Ok(other),
        }
    }

    fn is_blank(&self, hole: Hole) -> bool {
        let f = self.s.corpus.file(hole.file);
        f.tokens[hole.range()].iter().all(|t| t.is_trivia())
    }

    pub(crate) fn blocker_labels(&self, v: crate::value::ValueId) -> Vec<String> {
        match self.s.values.resolve(v) {
            Resolved::Residual(b) => b
                .iter()
                .map(|id| self.s.values.label(*id).unwrap_or("?").to_string())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Declarations, expression statements and statement-like macros.
    fn exec_simple(&mut self, hole: Hole, line: u32, decl_hint: bool) -> Result<Flow, ExecError> {
        let plan = match self.s.plans.get(&hole) {
            Some(p) => p.clone(),
            None => {
                let p = self.make_plan(hole, line, decl_hint)?;
                self.s.plans.insert(hole, p.clone());
                p
            }
        };
        match plan {
            Plan::Expr(e) => {
                self.eval(&e)?;
                Ok(Flow::Next)
            }
            Plan::Decl(d) => {
                self.exec_decl(&d, line)?;
                Ok(Flow::Next)
            }
            Plan::Block(h) => self.exec_body(h),
            Plan::Skip => Ok(Flow::Next),
        }
    }

    fn make_plan(&mut self, hole: Hole, line: u32, decl_hint: bool) -> Result<Plan, ExecError> {
        let raw = tokens_of(self.s.corpus.file(hole.file), hole.range());
        let Some(first) = raw.first() else { return Ok(Plan::Skip) };
        if is_asm(&first.text) {
            self.s.diagnostic(format!("line {line}: inline assembly skipped"));
            return Ok(Plan::Skip);
        }
        if decl_hint || self.looks_like_decl(&raw) {
            if let Some(plan) = self.decl_plan(hole)? {
                return Ok(plan);
            }
        }
        let expanded = self.s.expand_tokens(raw);
        let Some(head) = expanded.first() else { return Ok(Plan::Skip) };
        let statement_like = head.is("{")
            || (head.kind == TokenKind::Keyword && STATEMENT_WORDS.contains(&head.text.as_str()))
            || self.looks_like_decl(&expanded);
        if statement_like {
            let mut text = joined_text(&expanded);
            if !text.ends_with(';') && !text.ends_with('}') {
                text.push_str(" ;");
            }
            let id = self.s.corpus.add_synthetic("<macro>", &text, line.saturating_sub(1));
            let len = self.s.corpus.file(id).tokens.len();
            return Ok(Plan::Block(Hole::new(id, 0..len)));
        }
        let e = self.s.parse_expr_tokens(&expanded)?;
        Ok(Plan::Expr(Arc::new(e)))
    }

    fn looks_like_decl(&mut self, toks: &[XTok]) -> bool {
        let Some(first) = toks.first() else { return false };
        let second = toks.get(1);
        if first.kind == TokenKind::Keyword {
            return matches!(
                first.text.as_str(),
                "int" | "char" | "short" | "long" | "unsigned" | "signed" | "void" | "struct" | "union" | "enum"
                    | "const" | "volatile" | "static" | "_Bool" | "register"
            );
        }
        if first.kind != TokenKind::Identifier {
            return false;
        }
        let Some(second) = second else { return false };
        if second.kind == TokenKind::Identifier {
            return true;
        }
        second.is("*") && self.s.is_type_name_checked(&first.text)
    }

    fn decl_plan(&mut self, hole: Hole) -> Result<Option<Plan>, ExecError> {
        let file = self.s.corpus.file(hole.file).clone();
        let sig = Sig::new(file.clone(), hole.range());
        let (base, mut i, spec) = match ctype::parse_specifiers_full(self.s, &sig, 0) {
            Some(x) => x,
            None if sig.kind(0) == Some(TokenKind::Identifier) && sig.kind(1) == Some(TokenKind::Identifier) => {
                (CType::Unknown, 1, Default::default())
            }
            None => return Ok(None),
        };
        if spec.is_typedef || spec.is_extern {
            return Ok(Some(Plan::Skip));
        }
        let mut items = Vec::new();
        while i < sig.len() {
            let d = ctype::parse_declarator(self.s, &sig, i, base.clone());
            let Some(name) = d.name else { break };
            let mut j = d.next;
            let mut init = None;
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
                let toks = tokens_of(&file, sig.tok(start)..sig.tok(j));
                let toks = self.s.expand_tokens(toks);
                init = Some(expr::parse_initializer(&toks, self.s)?);
            }
            items.push((name, d.ty, init));
            if sig.text(j) == "," {
                i = j + 1;
            } else {
                break;
            }
        }
        if items.is_empty() && base.struct_tag().is_none() {
            return Ok(None);
        }
        Ok(Some(Plan::Decl(Arc::new(DeclPlan { is_static: spec.is_static, items }))))
    }

    fn exec_decl(&mut self, plan: &DeclPlan, line: u32) -> Result<(), ExecError> {
        let pos = Pos::new(self.s.current_pos().file, line);
        for (name, ty, init) in &plan.items {
            let ty = complete_array_type(ty, init.as_ref());
            if plan.is_static {
                let function = self.s.frames.last().map(|f| f.function.clone()).unwrap_or_default();
                let key = format!("{function}::{name}");
                if let Some(var) = self.s.globals.get(&key).cloned() {
                    self.bind_local(name, var);
                    continue;
                }
                let var = self.s.alloc_var(name, ty.clone(), RegionKind::Static, pos);
                self.s.globals.insert(key, var.clone());
                self.bind_local(name, var.clone());
                let lv = LV { ptr: var.ptr, ty: ty.clone() };
                self.zero_fill(&lv, line)?;
                if let Some(e) = init {
                    self.init_object(&lv, e, line)?;
                }
                continue;
            }
            let var = self.s.alloc_var(name, ty.clone(), RegionKind::Stack, pos);
            self.bind_local(name, var.clone());
            if let Some(e) = init {
                let lv = LV { ptr: var.ptr, ty: ty.clone() };
                self.init_object(&lv, e, line)?;
            }
        }
        Ok(())
    }

    /// Initializes an object from a scalar or brace initializer.
    pub(crate) fn init_object(&mut self, lv: &LV, init: &Expr, line: u32) -> Result<(), ExecError> {
        match (&init.kind, &lv.ty) {
            (ExprKind::InitList(items), CType::Struct { tag, .. }) => {
                self.zero_fill(lv, line)?;
                let layout = ctype::struct_layout(self.s, tag);
                let fields: Vec<_> = layout.map(|l| l.fields).unwrap_or_default();
                let mut next = 0usize;
                for (designator, e) in items {
                    let idx = match designator {
                        Some(expr::Designator::Field(f)) => fields.iter().position(|x| &x.name == f),
                        Some(expr::Designator::Index(_)) => None,
                        None => Some(next),
                    };
                    let Some(idx) = idx.filter(|&i| i < fields.len()) else {
                        self.s.diagnostic(format!("line {line}: initializer element ignored"));
                        continue;
                    };
                    next = idx + 1;
                    let f = &fields[idx];
                    let ptr = self.offset_ptr(lv.ptr, f.offset as i64, line)?;
                    let sub = LV { ptr, ty: f.ty.clone().unwrap_or(CType::Unknown) };
                    self.init_object(&sub, e, line)?;
                }
                Ok(())
            }
            (ExprKind::InitList(items), CType::Array(elem, _)) => {
                self.zero_fill(lv, line)?;
                let size = ctype::size_of(self.s, elem).max(1);
                let mut next = 0i64;
                for (designator, e) in items {
                    let idx = match designator {
                        Some(expr::Designator::Index(ix)) => self
                            .s
                            .const_eval(ix)
                            .map(|c| c.value() as i64)
                            .ok_or_else(|| ExecError::unsupported(line, "non-constant array designator"))?,
                        Some(expr::Designator::Field(_)) => {
                            return Err(ExecError::unsupported(line, "field designator for array"))
                        }
                        None => next,
                    };
                    next = idx + 1;
                    let ptr = self.offset_ptr(lv.ptr, idx * size as i64, line)?;
                    let sub = LV { ptr, ty: (**elem).clone() };
                    self.init_object(&sub, e, line)?;
                }
                Ok(())
            }
            (ExprKind::InitList(items), _) => match items.first() {
                Some((_, e)) => self.init_object(lv, e, line),
                None => self.zero_fill(lv, line),
            },
            (ExprKind::Str(s), CType::Array(elem, _)) => {
                let bytes: Vec<u8> = s.bytes().chain(std::iter::once(0)).collect();
                for (i, b) in bytes.into_iter().enumerate() {
                    let ptr = self.offset_ptr(lv.ptr, i as i64, line)?;
                    let tv = self.int_const(i128::from(b as i8), crate::value::IntType::I8, line);
                    self.store(&LV { ptr, ty: (**elem).clone() }, &tv, line)?;
                }
                Ok(())
            }
            _ => {
                let tv = self.eval(init)?;
                let tv = self.convert(tv, &lv.ty, line)?;
                self.store(lv, &tv, line)
            }
        }
    }

    /// Stores zero into every scalar cell of an object with known layout.
    pub(crate) fn zero_fill(&mut self, lv: &LV, line: u32) -> Result<(), ExecError> {
        match &lv.ty {
            CType::Struct { tag, .. } => {
                let Some(layout) = ctype::struct_layout(self.s, tag) else { return Ok(()) };
                for f in layout.fields {
                    let ptr = self.offset_ptr(lv.ptr, f.offset as i64, line)?;
                    let sub = LV { ptr, ty: f.ty.clone().unwrap_or(CType::Unknown) };
                    self.zero_fill(&sub, line)?;
                }
                Ok(())
            }
            CType::Array(elem, Some(n)) => {
                let size = ctype::size_of(self.s, elem).max(1) as i64;
                for i in 0..(*n).min(4096) as i64 {
                    let ptr = self.offset_ptr(lv.ptr, i * size, line)?;
                    self.zero_fill(&LV { ptr, ty: (**elem).clone() }, line)?;
                }
                Ok(())
            }
            CType::Array(_, None) | CType::Function(_) | CType::Void => Ok(()),
            ty => {
                let it = match ty {
                    CType::Int(t) => *t,
                    CType::Pointer(_) => crate::value::IntType::U64,
                    _ => crate::value::IntType::I32,
                };
                let zero = self.int_const(0, it, line);
                self.store(lv, &zero, line)
            }
        }
    }

    pub(crate) fn eval_hole(&mut self, hole: Hole) -> Result<TV, ExecError> {
        let e = self.expr_for(hole)?;
        self.eval(&e)
    }

    pub(crate) fn expr_for(&mut self, hole: Hole) -> Result<Arc<Expr>, ExecError> {
        if let Some(Plan::Expr(e)) = self.s.plans.get(&hole) {
            return Ok(e.clone());
        }
        let toks = self.s.expand_hole(hole);
        let e = Arc::new(self.s.parse_expr_tokens(&toks)?);
        self.s.plans.insert(hole, Plan::Expr(e.clone()));
        Ok(e)
    }

    fn eval_cond(&mut self, hole: Hole, line: u32) -> Result<bool, ExecError> {
        let tv = self.eval_hole(hole)?;
        self.truth(tv.v, line, || hole)
    }

    /// Truth value of a condition, consulting the branch policy when it
    /// is symbolic.
    pub(crate) fn truth(
        &mut self,
        v: crate::value::ValueId,
        line: u32,
        text_of: impl FnOnce() -> Hole,
    ) -> Result<bool, ExecError> {
        match self.s.values.resolve(v) {
            Resolved::Concrete(c) => Ok(!c.is_zero()),
            Resolved::Address { .. } => Ok(true),
            Resolved::Undefined(m) => Err(ExecError::unsupported(line, m)),
            Resolved::Residual(_) if self.s.values.as_pointer(v).is_some() => Ok(true),
            Resolved::Residual(_) => {
                let hole = text_of();
                let text = self.s.file_line_text(hole);
                let blockers = self.blocker_labels(v);
                let pos = Pos::new(self.s.current_pos().file, line);
                let decision = match self.s.policy {
                    super::BranchPolicy::AssumeTrue => Some(true),
                    super::BranchPolicy::AssumeFalse => Some(false),
                    super::BranchPolicy::Fail => None,
                    super::BranchPolicy::Ask => {
                        let q = super::BranchQuery { pos, text: text.clone(), blockers: blockers.clone() };
                        self.fe.decide_branch(self.s, &q)
                    }
                };
                let Some(b) = decision else {
                    return Err(ExecError::SymbolicBranch { line, text, blockers });
                };
                self.s.learn_from_branch(v, b, pos);
                Ok(b)
            }
        }
    }

    /// Runs C statement text in a scratch frame with pre-bound locals.
    pub(crate) fn exec_snippet_text(
        &mut self,
        name: &str,
        text: &str,
        bindings: &[(String, TV)],
        line: u32,
    ) -> Result<(), ExecError> {
        let id = self.s.corpus.add_synthetic(name, text, line.saturating_sub(1));
        let len = self.s.corpus.file(id).tokens.len();
        let pos = Pos::new(id, line);
        self.s.frames.push(super::Frame::new(name, pos));
        let r = (|| {
            for (n, tv) in bindings {
                self.bind_value(n, tv, line)?;
            }
            self.exec_body(Hole::new(id, 0..len))
        })();
        self.s.frames.pop();
        match r? {
            Flow::Goto(l) => Err(ExecError::unsupported(line, format!("no label `{l}`"))),
            _ => Ok(()),
        }
    }

    /// Declares a local holding `tv` in the current scope.
    pub(crate) fn bind_value(&mut self, name: &str, tv: &TV, line: u32) -> Result<Var, ExecError> {
        let pos = Pos::new(self.s.current_pos().file, line);
        let ty = match &tv.ty {
            CType::Struct { .. } => CType::ptr(tv.ty.clone()),
            CType::Array(t, _) => CType::Pointer(t.clone()),
            CType::Void => CType::Unknown,
            t => t.clone(),
        };
        let var = self.s.alloc_var(name, ty.clone(), RegionKind::Stack, pos);
        self.bind_local(name, var.clone());
        self.store(&LV { ptr: var.ptr, ty }, tv, line)?;
        Ok(var)
    }
}

fn is_asm(word: &str) -> bool {
    matches!(word, "asm" | "__asm__" | "__asm")
}

fn complete_array_type(ty: &CType, init: Option<&Expr>) -> CType {
    match (ty, init.map(|e| &e.kind)) {
        (CType::Array(elem, None), Some(ExprKind::InitList(items))) => CType::Array(elem.clone(), Some(items.len() as u64)),
        (CType::Array(elem, None), Some(ExprKind::Str(s))) => CType::Array(elem.clone(), Some(s.len() as u64 + 1)),
        _ => ty.clone(),
    }
}
