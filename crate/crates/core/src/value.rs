//! Semi-symbolic values: concrete bit-vectors, symbolic roots and terms over
//! them, with greedy constant propagation and provenance for every value.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::memory::RegionId;
use crate::token::FileId;

/// Dense value id; ids are handed out in creation order, so an id doubles
/// as the value's creation timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntType {
    pub bits: u8,
    pub signed: bool,
}

impl IntType {
    pub const I8: IntType = IntType { bits: 8, signed: true };
    pub const U8: IntType = IntType { bits: 8, signed: false };
    pub const I16: IntType = IntType { bits: 16, signed: true };
    pub const U16: IntType = IntType { bits: 16, signed: false };
    pub const I32: IntType = IntType { bits: 32, signed: true };
    pub const U32: IntType = IntType { bits: 32, signed: false };
    pub const I64: IntType = IntType { bits: 64, signed: true };
    pub const U64: IntType = IntType { bits: 64, signed: false };

    pub fn mask(self) -> u64 {
        if self.bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    pub fn bytes(self) -> u64 {
        u64::from(self.bits / 8)
    }

    /// The type both operands are converted to before a binary operator.
    pub fn reconcile(a: IntType, b: IntType) -> IntType {
        use std::cmp::Ordering::*;
        match a.bits.cmp(&b.bits) {
            Greater => a,
            Less => b,
            Equal => IntType {
                bits: a.bits,
                signed: a.signed && b.signed,
            },
        }
    }
}

impl fmt::Display for IntType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.signed { "i" } else { "u" }, self.bits)
    }
}

/// A bit-vector with its type; `bits` is always reduced to the width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Concrete {
    pub ty: IntType,
    pub bits: u64,
}

impl Concrete {
    /// Reduces any integer mod 2^width.
    pub fn new(ty: IntType, value: i128) -> Self {
        Concrete {
            ty,
            bits: (value as u64) & ty.mask(),
        }
    }

    pub fn from_bits(ty: IntType, bits: u64) -> Self {
        Concrete {
            ty,
            bits: bits & ty.mask(),
        }
    }

    pub fn int(v: i32) -> Self {
        Concrete::new(IntType::I32, i128::from(v))
    }

    pub fn bool(b: bool) -> Self {
        Concrete::int(i32::from(b))
    }

    /// Numeric value under the type's signedness.
    pub fn value(self) -> i128 {
        if self.ty.signed && self.ty.bits < 128 {
            let shift = 64 - u32::from(self.ty.bits);
            i128::from(((self.bits << shift) as i64) >> shift)
        } else {
            i128::from(self.bits)
        }
    }

    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    pub fn cast(self, ty: IntType) -> Self {
        Concrete::new(ty, self.value())
    }
}

impl fmt::Display for Concrete {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogAnd,
    LogOr,
    Not,
    BitNot,
    Neg,
    Cast(IntType),
    /// Pointer into a region; the single operand is the byte offset.
    AddrOf(RegionId),
}

impl Op {
    pub fn is_binary(self) -> bool {
        !matches!(self, Op::Not | Op::BitNot | Op::Neg | Op::Cast(_) | Op::AddrOf(_))
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Op::Eq | Op::Ne | Op::Lt | Op::Le | Op::Gt | Op::Ge)
    }

    pub fn symbol(self) -> String {
        match self {
            Op::Add => "+".into(),
            Op::Sub => "-".into(),
            Op::Mul => "*".into(),
            Op::Div => "/".into(),
            Op::Rem => "%".into(),
            Op::And => "&".into(),
            Op::Or => "|".into(),
            Op::Xor => "^".into(),
            Op::Shl => "<<".into(),
            Op::Shr => ">>".into(),
            Op::Eq => "==".into(),
            Op::Ne => "!=".into(),
            Op::Lt => "<".into(),
            Op::Le => "<=".into(),
            Op::Gt => ">".into(),
            Op::Ge => ">=".into(),
            Op::LogAnd => "&&".into(),
            Op::LogOr => "||".into(),
            Op::Not => "!".into(),
            Op::BitNot => "~".into(),
            Op::Neg => "neg".into(),
            Op::Cast(t) => format!("cast<{t}>"),
            Op::AddrOf(r) => format!("addr<{}>", r.0),
        }
    }

    pub fn from_binary_token(tok: &str) -> Option<Op> {
        Some(match tok {
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::Div,
            "%" => Op::Rem,
            "&" => Op::And,
            "|" => Op::Or,
            "^" => Op::Xor,
            "<<" => Op::Shl,
            ">>" => Op::Shr,
            "==" => Op::Eq,
            "!=" => Op::Ne,
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "&&" => Op::LogAnd,
            "||" => Op::LogOr,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Pos {
    pub file: FileId,
    pub line: u32,
}

impl Pos {
    pub fn new(file: FileId, line: u32) -> Self {
        Pos { file, line }
    }
}

/// Call site that produced a symbolic value, used in missing-model reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallOrigin {
    pub callee: String,
    pub call_text: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Concrete(Concrete),
    Symbol { label: String },
    Term { op: Op, operands: Vec<ValueId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub created_at: Pos,
    pub op_description: String,
    pub parents: Vec<ValueId>,
}

#[derive(Debug, Clone)]
pub struct Value {
    pub id: ValueId,
    pub payload: Payload,
    pub provenance: Provenance,
    pub origin: Option<CallOrigin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindReason {
    ConstantAssignment,
    BranchComparison,
    HookSupplied,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub symbol: ValueId,
    pub bound_to: Concrete,
    pub learned_at: Pos,
    pub reason: BindReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolved {
    Concrete(Concrete),
    Address { region: RegionId, offset: i64 },
    /// Unbound symbols standing between the value and a concrete result.
    Residual(BTreeSet<ValueId>),
    /// Operands are concrete but the operation has no defined result.
    Undefined(String),
}

impl Resolved {
    pub fn concrete(&self) -> Option<Concrete> {
        match self {
            Resolved::Concrete(c) => Some(*c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("division by zero at line {}", .pos.line)]
    DivisionByConcreteZero { pos: Pos },
    #[error("unsupported operation `{op}` at line {}", .pos.line)]
    UnsupportedOperation { op: String, pos: Pos },
    #[error("conflicting binding for {label}: already {existing}, requested {requested}")]
    ConflictingBinding {
        label: String,
        existing: i128,
        requested: i128,
    },
    #[error("{0} is not a symbolic root")]
    NotASymbol(ValueId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub id: ValueId,
    pub pos: Pos,
    pub op_description: String,
    pub parents: Vec<ValueId>,
}

/// Session-owned table of all values and learned bindings.
#[derive(Debug, Default)]
pub struct ValueTable {
    values: Vec<Value>,
    bindings: HashMap<ValueId, Binding>,
    stable: RefCell<HashMap<ValueId, Resolved>>,
    /// Residuals stay valid until the next binding is learned.
    residual: RefCell<(usize, HashMap<ValueId, Resolved>)>,
}

/// Pure concrete evaluation of a binary operator.
pub fn eval_binop(op: Op, a: Concrete, b: Concrete) -> Result<Concrete, &'static str> {
    if matches!(op, Op::LogAnd) {
        return Ok(Concrete::bool(!a.is_zero() && !b.is_zero()));
    }
    if matches!(op, Op::LogOr) {
        return Ok(Concrete::bool(!a.is_zero() || !b.is_zero()));
    }
    let ty = IntType::reconcile(a.ty, b.ty);
    let (a, b) = (a.cast(ty), b.cast(ty));
    let (x, y) = (a.value(), b.value());
    let width = u32::from(ty.bits);
    let r = match op {
        Op::Add => x + y,
        Op::Sub => x - y,
        Op::Mul => x.wrapping_mul(y),
        Op::Div | Op::Rem => {
            if y == 0 {
                return Err("division by zero");
            }
            // i128 holds every 64-bit quotient, so INT_MIN / -1 wraps on reduction.
            if op == Op::Div {
                x / y
            } else {
                x % y
            }
        }
        Op::And => i128::from(a.bits & b.bits),
        Op::Or => i128::from(a.bits | b.bits),
        Op::Xor => i128::from(a.bits ^ b.bits),
        Op::Shl | Op::Shr => {
            let amount = if b.value() < 0 { u32::MAX } else { b.bits.min(u64::from(u32::MAX)) as u32 };
            if op == Op::Shl {
                if amount >= width {
                    0
                } else {
                    i128::from(a.bits << amount)
                }
            } else if amount >= width {
                if x < 0 {
                    -1
                } else {
                    0
                }
            } else if ty.signed {
                x >> amount
            } else {
                i128::from(a.bits >> amount)
            }
        }
        Op::Eq => return Ok(Concrete::bool(x == y)),
        Op::Ne => return Ok(Concrete::bool(x != y)),
        Op::Lt => return Ok(Concrete::bool(x < y)),
        Op::Le => return Ok(Concrete::bool(x <= y)),
        Op::Gt => return Ok(Concrete::bool(x > y)),
        Op::Ge => return Ok(Concrete::bool(x >= y)),
        _ => return Err("not a binary operator"),
    };
    Ok(Concrete::new(ty, r))
}

/// Pure concrete evaluation of a unary operator.
pub fn eval_unop(op: Op, a: Concrete) -> Result<Concrete, &'static str> {
    Ok(match op {
        Op::Not => Concrete::bool(a.is_zero()),
        Op::BitNot => Concrete::from_bits(a.ty, !a.bits),
        Op::Neg => Concrete::new(a.ty, -a.value()),
        Op::Cast(ty) => a.cast(ty),
        _ => return Err("not a unary operator"),
    })
}

impl ValueTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ValueId) -> &Value {
        &self.values[id.0 as usize]
    }

    pub fn binding(&self, id: ValueId) -> Option<&Binding> {
        self.bindings.get(&id)
    }

    fn push(&mut self, payload: Payload, pos: Pos, desc: String, parents: Vec<ValueId>) -> ValueId {
        let id = ValueId(self.values.len() as u32);
        self.values.push(Value {
            id,
            payload,
            provenance: Provenance {
                created_at: pos,
                op_description: desc,
                parents,
            },
            origin: None,
        });
        id
    }

    /// A literal constant: a root with no parents.
    pub fn concrete(&mut self, c: Concrete, pos: Pos) -> ValueId {
        self.push(Payload::Concrete(c), pos, format!("const {c}"), Vec::new())
    }

    pub fn fresh_symbol(&mut self, label: &str, at: Pos) -> ValueId {
        self.push(
            Payload::Symbol {
                label: label.to_string(),
            },
            at,
            format!("symbol {label}"),
            Vec::new(),
        )
    }

    pub fn symbol_from_call(&mut self, label: &str, at: Pos, origin: CallOrigin) -> ValueId {
        let id = self.fresh_symbol(label, at);
        self.values[id.0 as usize].origin = Some(origin);
        id
    }

    /// Pointer to `region` at byte offset `offset`.
    pub fn address(&mut self, region: RegionId, offset: ValueId, at: Pos) -> ValueId {
        self.push(
            Payload::Term {
                op: Op::AddrOf(region),
                operands: vec![offset],
            },
            at,
            Op::AddrOf(region).symbol(),
            vec![offset],
        )
    }

    /// `(region, offset-value)` if `id` is a pointer.
    pub fn as_pointer(&self, id: ValueId) -> Option<(RegionId, ValueId)> {
        match &self.get(id).payload {
            Payload::Term {
                op: Op::AddrOf(r),
                operands,
            } => Some((*r, operands[0])),
            _ => None,
        }
    }

    pub fn label(&self, id: ValueId) -> Option<&str> {
        match &self.get(id).payload {
            Payload::Symbol { label } => Some(label),
            _ => None,
        }
    }

    fn derived(&mut self, c: Concrete, op: Op, parents: Vec<ValueId>, at: Pos) -> ValueId {
        self.push(Payload::Concrete(c), at, op.symbol(), parents)
    }

    fn term(&mut self, op: Op, operands: Vec<ValueId>, at: Pos) -> ValueId {
        self.push(
            Payload::Term {
                op,
                operands: operands.clone(),
            },
            at,
            op.symbol(),
            operands,
        )
    }

    fn unsupported(op: Op, at: Pos) -> ValueError {
        ValueError::UnsupportedOperation { op: op.symbol(), pos: at }
    }

    pub fn apply_binop(&mut self, op: Op, lhs: ValueId, rhs: ValueId, at: Pos) -> Result<ValueId, ValueError> {
        if !op.is_binary() {
            return Err(Self::unsupported(op, at));
        }
        let (lp, rp) = (self.as_pointer(lhs), self.as_pointer(rhs));
        if lp.is_some() || rp.is_some() {
            return self.pointer_binop(op, lhs, rhs, lp, rp, at);
        }
        let (lc, rc) = (self.resolve(lhs).concrete(), self.resolve(rhs).concrete());
        if let (Some(a), Some(b)) = (lc, rc) {
            return match eval_binop(op, a, b) {
                Ok(c) => Ok(self.derived(c, op, vec![lhs, rhs], at)),
                Err(_) => Err(ValueError::DivisionByConcreteZero { pos: at }),
            };
        }
        if let Some(v) = self.identity_fold(op, lhs, rhs, lc, rc, at)? {
            return Ok(v);
        }
        Ok(self.term(op, vec![lhs, rhs], at))
    }

    fn identity_fold(
        &mut self,
        op: Op,
        lhs: ValueId,
        rhs: ValueId,
        lc: Option<Concrete>,
        rc: Option<Concrete>,
        at: Pos,
    ) -> Result<Option<ValueId>, ValueError> {
        let is = |c: Option<Concrete>, v: i128| c.is_some_and(|c| c.value() == v || (v == 0 && c.is_zero()));
        let zero_like = |this: &mut Self, c: Concrete, parents: Vec<ValueId>| {
            this.derived(Concrete::new(c.ty, 0), op, parents, at)
        };
        Ok(match op {
            Op::Add | Op::Or | Op::Xor if is(rc, 0) => Some(lhs),
            Op::Add | Op::Or | Op::Xor if is(lc, 0) => Some(rhs),
            Op::Sub | Op::Shl | Op::Shr if is(rc, 0) => Some(lhs),
            Op::Mul if is(rc, 1) => Some(lhs),
            Op::Mul if is(lc, 1) => Some(rhs),
            Op::Mul | Op::And if is(rc, 0) => Some(zero_like(self, rc.unwrap(), vec![lhs, rhs])),
            Op::Mul | Op::And if is(lc, 0) => Some(zero_like(self, lc.unwrap(), vec![lhs, rhs])),
            Op::Div | Op::Rem if is(rc, 0) => return Err(ValueError::DivisionByConcreteZero { pos: at }),
            Op::LogAnd if is(lc, 0) || is(rc, 0) => {
                Some(self.derived(Concrete::bool(false), op, vec![lhs, rhs], at))
            }
            Op::LogOr if lc.is_some_and(|c| !c.is_zero()) || rc.is_some_and(|c| !c.is_zero()) => {
                Some(self.derived(Concrete::bool(true), op, vec![lhs, rhs], at))
            }
            _ => None,
        })
    }

    fn pointer_binop(
        &mut self,
        op: Op,
        lhs: ValueId,
        rhs: ValueId,
        lp: Option<(RegionId, ValueId)>,
        rp: Option<(RegionId, ValueId)>,
        at: Pos,
    ) -> Result<ValueId, ValueError> {
        match (op, lp, rp) {
            (Op::Add, Some((r, off)), None) | (Op::Add, None, Some((r, off))) => {
                let k = if lp.is_some() { rhs } else { lhs };
                let off = self.apply_binop(Op::Add, off, k, at)?;
                Ok(self.address(r, off, at))
            }
            (Op::Sub, Some((r, off)), None) => {
                let off = self.apply_binop(Op::Sub, off, rhs, at)?;
                Ok(self.address(r, off, at))
            }
            (Op::Sub, Some((ra, a)), Some((rb, b))) if ra == rb => self.apply_binop(Op::Sub, a, b, at),
            (op, Some((ra, a)), Some((rb, b))) if op.is_comparison() => {
                if ra == rb {
                    return self.apply_binop(op, a, b, at);
                }
                let result = match op {
                    Op::Eq => false,
                    Op::Ne => true,
                    Op::Lt => ra < rb,
                    Op::Le => ra <= rb,
                    Op::Gt => ra > rb,
                    _ => ra >= rb,
                };
                Ok(self.derived(Concrete::bool(result), op, vec![lhs, rhs], at))
            }
            (Op::Eq | Op::Ne, Some(_), None) | (Op::Eq | Op::Ne, None, Some(_)) => {
                let other = if lp.is_some() { rhs } else { lhs };
                match self.resolve(other).concrete() {
                    Some(c) if c.is_zero() => {
                        Ok(self.derived(Concrete::bool(op == Op::Ne), op, vec![lhs, rhs], at))
                    }
                    _ => Err(Self::unsupported(op, at)),
                }
            }
            (Op::LogAnd | Op::LogOr, _, _) => {
                let truth = |this: &Self, v: ValueId, p: Option<(RegionId, ValueId)>| {
                    if p.is_some() {
                        Some(true)
                    } else {
                        this.resolve(v).concrete().map(|c| !c.is_zero())
                    }
                };
                match (truth(self, lhs, lp), truth(self, rhs, rp)) {
                    (Some(a), Some(b)) => {
                        let r = if op == Op::LogAnd { a && b } else { a || b };
                        Ok(self.derived(Concrete::bool(r), op, vec![lhs, rhs], at))
                    }
                    _ => Err(Self::unsupported(op, at)),
                }
            }
            _ => Err(Self::unsupported(op, at)),
        }
    }

    pub fn apply_unop(&mut self, op: Op, v: ValueId, at: Pos) -> Result<ValueId, ValueError> {
        if op.is_binary() || matches!(op, Op::AddrOf(_)) {
            return Err(Self::unsupported(op, at));
        }
        if self.as_pointer(v).is_some() {
            return match op {
                Op::Cast(_) => Ok(v),
                Op::Not => Ok(self.derived(Concrete::bool(false), op, vec![v], at)),
                _ => Err(Self::unsupported(op, at)),
            };
        }
        if let Some(c) = self.resolve(v).concrete() {
            let r = eval_unop(op, c).map_err(|_| Self::unsupported(op, at))?;
            return Ok(self.derived(r, op, vec![v], at));
        }
        Ok(self.term(op, vec![v], at))
    }

    /// Records `symbol := to`. Re-binding to the same bits is a no-op.
    pub fn concretize(
        &mut self,
        symbol: ValueId,
        to: Concrete,
        reason: BindReason,
        at: Pos,
    ) -> Result<Binding, ValueError> {
        let Payload::Symbol { label } = &self.get(symbol).payload else {
            return Err(ValueError::NotASymbol(symbol));
        };
        if let Some(b) = self.bindings.get(&symbol) {
            if b.bound_to.value() == to.value() || b.bound_to.bits == to.cast(b.bound_to.ty).bits {
                return Ok(b.clone());
            }
            return Err(ValueError::ConflictingBinding {
                label: label.clone(),
                existing: b.bound_to.value(),
                requested: to.value(),
            });
        }
        let binding = Binding {
            symbol,
            bound_to: to,
            learned_at: at,
            reason,
        };
        self.bindings.insert(symbol, binding.clone());
        Ok(binding)
    }

    /// Follows bindings and folds, iteratively.
    pub fn resolve(&self, v: ValueId) -> Resolved {
        if let Some(r) = self.stable.borrow().get(&v) {
            return r.clone();
        }
        let epoch = self.bindings.len();
        {
            let mut res = self.residual.borrow_mut();
            if res.0 != epoch {
                *res = (epoch, HashMap::new());
            }
            if let Some(r) = res.1.get(&v) {
                return r.clone();
            }
        }
        let mut done: HashMap<ValueId, Resolved> = HashMap::new();
        let mut stack = vec![(v, false)];
        while let Some((id, expanded)) = stack.pop() {
            if done.contains_key(&id) {
                continue;
            }
            if let Some(r) = self.stable.borrow().get(&id) {
                done.insert(id, r.clone());
                continue;
            }
            if let Some(r) = self.residual.borrow().1.get(&id) {
                done.insert(id, r.clone());
                continue;
            }
            let value = self.get(id);
            let result = match &value.payload {
                Payload::Concrete(c) => Resolved::Concrete(*c),
                Payload::Symbol { .. } => match self.bindings.get(&id) {
                    Some(b) => Resolved::Concrete(b.bound_to),
                    None => Resolved::Residual(BTreeSet::from([id])),
                },
                Payload::Term { op, operands } => {
                    if !expanded {
                        stack.push((id, true));
                        for o in operands {
                            if !done.contains_key(o) {
                                stack.push((*o, false));
                            }
                        }
                        continue;
                    }
                    let parts: Vec<&Resolved> = operands.iter().map(|o| &done[o]).collect();
                    combine(*op, &parts)
                }
            };
            if matches!(result, Resolved::Concrete(_) | Resolved::Address { .. } | Resolved::Undefined(_)) {
                self.stable.borrow_mut().insert(id, result.clone());
            } else {
                self.residual.borrow_mut().1.insert(id, result.clone());
            }
            done.insert(id, result);
        }
        done.remove(&v).expect("root resolved")
    }

    /// Ancestry of `v` from roots to `v`, ordered by creation.
    pub fn provenance_trace(&self, v: ValueId) -> Vec<TraceEntry> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(id) = stack.pop() {
            if seen.insert(id) {
                stack.extend(self.get(id).provenance.parents.iter().copied());
            }
        }
        seen.into_iter()
            .map(|id| {
                let p = &self.get(id).provenance;
                TraceEntry {
                    id,
                    pos: p.created_at,
                    op_description: p.op_description.clone(),
                    parents: p.parents.clone(),
                }
            })
            .collect()
    }
}

fn combine(op: Op, parts: &[&Resolved]) -> Resolved {
    if let Some(u) = parts.iter().find(|p| matches!(p, Resolved::Undefined(_))) {
        return (*u).clone();
    }
    let mut blockers = BTreeSet::new();
    for p in parts {
        if let Resolved::Residual(b) = p {
            blockers.extend(b.iter().copied());
        }
    }
    if !blockers.is_empty() {
        return Resolved::Residual(blockers);
    }
    if let Op::AddrOf(region) = op {
        return match parts[0] {
            Resolved::Concrete(c) => Resolved::Address {
                region,
                offset: c.cast(IntType::I64).value() as i64,
            },
            _ => Resolved::Undefined("pointer offset is not an integer".into()),
        };
    }
    let cs: Option<Vec<Concrete>> = parts.iter().map(|p| p.concrete()).collect();
    let Some(cs) = cs else {
        return Resolved::Undefined(format!("pointer operand to `{}`", op.symbol()));
    };
    let r = if op.is_binary() {
        eval_binop(op, cs[0], cs[1])
    } else {
        eval_unop(op, cs[0])
    };
    match r {
        Ok(c) => Resolved::Concrete(c),
        Err(e) => Resolved::Undefined(e.to_string()),
    }
}
