//! Region/offset memory. Each allocation and each unknown pointer base is its
//! own region; untouched cells read as fresh symbols.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::ctype::CType;
use crate::value::{Concrete, IntType, Op, Payload, Pos, Resolved, ValueId, ValueTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionId(pub u32);

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Stack,
    Static,
    Heap,
    Mmio,
    Opaque,
}

#[derive(Debug, Clone)]
pub struct Region {
    pub id: RegionId,
    pub label: String,
    pub kind: RegionKind,
    pub size: Option<u64>,
    /// Physical base for mmio regions; addresses render as base + offset.
    pub display_base: Option<ValueId>,
    /// Untouched cells read as zero instead of fresh symbols.
    pub zeroed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Location {
    pub region: RegionId,
    pub offset: i64,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.region, self.offset)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemError {
    #[error("address depends on unresolved symbols")]
    SymbolicAddress { blockers: BTreeSet<ValueId> },
    #[error("invalid address: {0}")]
    InvalidAddress(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldLayout {
    pub name: String,
    pub offset: u64,
    pub width: u64,
    pub ty: Option<CType>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layout {
    pub fields: Vec<FieldLayout>,
    pub size: u64,
    pub align: u64,
    /// True when built from field accesses rather than a definition.
    pub synthetic: bool,
}

impl Layout {
    pub fn field(&self, name: &str) -> Option<&FieldLayout> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    value: ValueId,
    width: u64,
}

#[derive(Debug, Default)]
pub struct Memory {
    regions: Vec<Region>,
    cells: HashMap<Location, Cell>,
    layouts: HashMap<String, Layout>,
    opaque_by_base: HashMap<ValueId, RegionId>,
    absolute: Option<RegionId>,
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc_region(&mut self, label: &str, kind: RegionKind, size: Option<u64>) -> RegionId {
        let id = RegionId(self.regions.len() as u32 + 1);
        self.regions.push(Region {
            id,
            label: label.to_string(),
            kind,
            size,
            display_base: None,
            zeroed: false,
        });
        id
    }

    pub fn region(&self, id: RegionId) -> &Region {
        &self.regions[id.0 as usize - 1]
    }

    pub fn region_mut(&mut self, id: RegionId) -> &mut Region {
        &mut self.regions[id.0 as usize - 1]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Pointer value for the start of a fresh region.
    pub fn alloc_pointer(
        &mut self,
        values: &mut ValueTable,
        label: &str,
        kind: RegionKind,
        size: Option<u64>,
        at: Pos,
    ) -> (RegionId, ValueId) {
        let r = self.alloc_region(label, kind, size);
        let zero = values.concrete(Concrete::new(IntType::I64, 0), at);
        (r, values.address(r, zero, at))
    }

    /// Rewrites any pointer-valued `v` into the region/offset form, backing
    /// unbound symbolic bases with lazily created opaque regions.
    pub fn as_pointer(&mut self, values: &mut ValueTable, v: ValueId, at: Pos) -> Result<ValueId, MemError> {
        if values.as_pointer(v).is_some() {
            return Ok(v);
        }
        match values.resolve(v) {
            Resolved::Concrete(c) => {
                if c.is_zero() {
                    return Err(MemError::InvalidAddress("null pointer".into()));
                }
                let r = *self
                    .absolute
                    .get_or_insert_with(|| {
                        let id = RegionId(self.regions.len() as u32 + 1);
                        self.regions.push(Region {
                            id,
                            label: "absolute".into(),
                            kind: RegionKind::Opaque,
                            size: None,
                            display_base: None,
                            zeroed: false,
                        });
                        id
                    });
                let off = values.concrete(Concrete::new(IntType::I64, c.value()), at);
                Ok(values.address(r, off, at))
            }
            Resolved::Address { .. } => Ok(v),
            Resolved::Undefined(m) => Err(MemError::InvalidAddress(m)),
            Resolved::Residual(blockers) => {
                let Some((base, k)) = split_pointer(values, v) else {
                    return Err(MemError::SymbolicAddress { blockers });
                };
                let r = match self.opaque_by_base.get(&base) {
                    Some(r) => *r,
                    None => {
                        let label = values.label(base).unwrap_or("opaque").to_string();
                        let r = self.alloc_region(&label, RegionKind::Opaque, None);
                        self.opaque_by_base.insert(base, r);
                        r
                    }
                };
                let off = values.concrete(Concrete::new(IntType::I64, k), at);
                Ok(values.address(r, off, at))
            }
        }
    }

    /// Concrete cell addressed by a pointer value.
    pub fn locate(&mut self, values: &mut ValueTable, ptr: ValueId, at: Pos) -> Result<Location, MemError> {
        let p = self.as_pointer(values, ptr, at)?;
        match values.resolve(p) {
            Resolved::Address { region, offset } => Ok(Location { region, offset }),
            Resolved::Residual(blockers) => Err(MemError::SymbolicAddress { blockers }),
            Resolved::Undefined(m) => Err(MemError::InvalidAddress(m)),
            Resolved::Concrete(_) => Err(MemError::InvalidAddress("integer used as pointer".into())),
        }
    }

    /// Reads a cell, minting and remembering a fresh symbol if untouched.
    pub fn load(&mut self, values: &mut ValueTable, loc: Location, width: u64, at: Pos) -> ValueId {
        if let Some(c) = self.cells.get(&loc) {
            return c.value;
        }
        let v = if self.region(loc.region).zeroed {
            let bits = (width.clamp(1, 8) * 8) as u8;
            values.concrete(Concrete::new(IntType { bits, signed: false }, 0), at)
        } else {
            values.fresh_symbol(&format!("mem:({},{})", loc.region, loc.offset), at)
        };
        self.cells.insert(loc, Cell { value: v, width });
        v
    }

    pub fn store(&mut self, loc: Location, v: ValueId, width: u64) {
        self.cells.insert(loc, Cell { value: v, width });
    }

    /// Current content of a cell without minting anything.
    pub fn peek(&self, loc: Location) -> Option<ValueId> {
        self.cells.get(&loc).map(|c| c.value)
    }

    pub fn cell_width(&self, loc: Location) -> Option<u64> {
        self.cells.get(&loc).map(|c| c.width)
    }

    pub fn layout(&self, tag: &str) -> Option<&Layout> {
        self.layouts.get(tag)
    }

    pub fn define_layout(&mut self, tag: &str, layout: Layout) {
        self.layouts.insert(tag.to_string(), layout);
    }

    /// Offset and width of `tag.field`; unknown fields are appended to the
    /// tag's layout in first-use order.
    pub fn field_offset(&mut self, tag: &str, field: &str, width_hint: Option<u64>) -> (u64, u64) {
        let layout = self.layouts.entry(tag.to_string()).or_insert_with(|| Layout {
            synthetic: true,
            align: 1,
            ..Layout::default()
        });
        if let Some(f) = layout.field(field) {
            return (f.offset, f.width);
        }
        let width = width_hint.unwrap_or(4);
        let offset = layout.fields.last().map_or(0, |f| f.offset + f.width).max(layout.size);
        layout.fields.push(FieldLayout {
            name: field.to_string(),
            offset,
            width,
            ty: None,
        });
        layout.size = offset + width;
        (offset, width)
    }

    /// Hex physical address for mmio pointers, `(region, offset)` otherwise.
    pub fn display_location(&self, values: &ValueTable, loc: Location) -> String {
        let region = self.region(loc.region);
        if let Some(base) = region.display_base {
            if let Some(b) = values.resolve(base).concrete() {
                return format!("{:x}", b.bits.wrapping_add(loc.offset as u64));
            }
        }
        loc.to_string()
    }
}

/// Splits a symbolic pointer into its unbound base symbol and a constant
/// byte offset: `s`, `s + k`, `s - k`, `(cast) s`.
pub fn split_pointer(values: &ValueTable, v: ValueId) -> Option<(ValueId, i128)> {
    match &values.get(v).payload {
        Payload::Symbol { .. } => Some((v, 0)),
        Payload::Term { op: Op::Cast(_), operands } => split_pointer(values, operands[0]),
        Payload::Term {
            op: op @ (Op::Add | Op::Sub),
            operands,
        } => {
            let k = values.resolve(operands[1]).concrete()?.value();
            let (base, off) = split_pointer(values, operands[0])?;
            Some((base, if *op == Op::Add { off + k } else { off - k }))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::FileId;
    use crate::value::BindReason;

    fn pos() -> Pos {
        Pos::new(FileId(0), 1)
    }

    #[test]
    fn load_untouched_is_stable() {
        let mut m = Memory::new();
        let mut v = ValueTable::new();
        let r = m.alloc_region("x", RegionKind::Stack, Some(4));
        let loc = Location { region: r, offset: 0 };
        let a = m.load(&mut v, loc, 4, pos());
        let b = m.load(&mut v, loc, 4, pos());
        assert_eq!(a, b);
        assert_eq!(v.label(a), Some(format!("mem:({},0)", r.0).as_str()));
    }

    #[test]
    fn store_then_load() {
        let mut m = Memory::new();
        let mut v = ValueTable::new();
        let r = m.alloc_region("offset", RegionKind::Stack, Some(4));
        let loc = Location { region: r, offset: 0 };
        let three = v.concrete(Concrete::int(3), pos());
        m.store(loc, three, 4);
        let got = m.load(&mut v, loc, 4, pos());
        assert_eq!(v.resolve(got).concrete().unwrap().value(), 3);
        assert_eq!(format!("{loc} = {}", v.resolve(got).concrete().unwrap()), format!("({}, 0) = 3", r.0));
    }

    #[test]
    fn symbolic_offset_reports_blockers() {
        let mut m = Memory::new();
        let mut v = ValueTable::new();
        let r = m.alloc_region("buf", RegionKind::Heap, None);
        let s = v.fresh_symbol("s", pos());
        let four = v.concrete(Concrete::int(4), pos());
        let off = v.apply_binop(Op::Add, s, four, pos()).unwrap();
        let p = v.address(r, off, pos());
        let err = m.locate(&mut v, p, pos()).unwrap_err();
        assert_eq!(err, MemError::SymbolicAddress { blockers: BTreeSet::from([s]) });
        v.concretize(s, Concrete::int(2), BindReason::UserSupplied, pos()).unwrap();
        assert_eq!(m.locate(&mut v, p, pos()).unwrap(), Location { region: r, offset: 6 });
    }

    #[test]
    fn distinct_regions() {
        let mut m = Memory::new();
        let ids: BTreeSet<_> = (0..100).map(|i| m.alloc_region(&i.to_string(), RegionKind::Heap, None)).collect();
        assert_eq!(ids.len(), 100);
    }

    #[test]
    fn synthetic_layout_first_fit() {
        let mut m = Memory::new();
        assert_eq!(m.field_offset("bcm2835_pinctrl", "base", None), (0, 4));
        assert_eq!(m.field_offset("bcm2835_pinctrl", "dev", Some(8)), (4, 8));
        assert_eq!(m.field_offset("bcm2835_pinctrl", "base", None), (0, 4));
    }

    #[test]
    fn symbolic_pointer_gets_opaque_region() {
        let mut m = Memory::new();
        let mut v = ValueTable::new();
        let np = v.fresh_symbol("np", pos());
        let eight = v.concrete(Concrete::int(8), pos());
        let field = v.apply_binop(Op::Add, np, eight, pos()).unwrap();
        let a = m.locate(&mut v, np, pos()).unwrap();
        let b = m.locate(&mut v, field, pos()).unwrap();
        assert_eq!(a.region, b.region);
        assert_eq!(b.offset, 8);
        assert_eq!(m.region(a.region).kind, RegionKind::Opaque);
    }

    #[test]
    fn mmio_display() {
        let mut m = Memory::new();
        let mut v = ValueTable::new();
        let r = m.alloc_region("ioremap", RegionKind::Mmio, None);
        let base = v.concrete(Concrete::new(IntType::U64, 0x7e20_0000), pos());
        m.region_mut(r).display_base = Some(base);
        assert_eq!(m.display_location(&v, Location { region: r, offset: 0x4c }), "7e20004c");
    }
}
