//! Interface models for the bundled BCM2835 pin controller facsimile.
//!
//! The facsimile sources, device tree and configs live in
//! `examples/pinctrl/`; [`fixture_dir`] locates them.

use std::path::PathBuf;

use ssi_core::hooks::{Hook, HookContext};
use ssi_core::interp::{ExecError, Session};
use ssi_core::memory::RegionKind;
use ssi_core::value::ValueId;

/// Device tree the `of_address_to_resource` model consults.
pub const DTSI_FILE: &str = "bcm283x.dtsi";

/// Hooks the register-write trace depends on. Every other model only
/// stands in for locking, allocation or logging.
pub const SUFFICIENT_HOOKS: [&str; 4] = ["writel", "devm_ioremap_resource", "of_address_to_resource", "irqd_to_hwirq"];

/// Directory holding the facsimile driver, device tree and configs.
pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join("pinctrl")
}

type Ret = Result<Option<ValueId>, ExecError>;

fn zero(cx: &mut HookContext<'_, '_>) -> Ret {
    Ok(Some(cx.make_concrete(32, 0)))
}

fn nothing(_: &mut HookContext<'_, '_>) -> Ret {
    Ok(None)
}

fn log_diagnostic(cx: &mut HookContext<'_, '_>) -> Ret {
    let text = cx.site.spaced.clone();
    cx.diagnostic(format!("line {}: {text}", cx.site.pos.line));
    Ok(None)
}

fn writel(cx: &mut HookContext<'_, '_>) -> Ret {
    let val = cx.arg(0)?;
    let addr = cx.arg(1)?;
    cx.emit_write(addr.v, val.v);
    Ok(None)
}

fn readl(cx: &mut HookContext<'_, '_>) -> Ret {
    let line = cx.site.pos.line;
    Ok(Some(cx.fresh_symbolic(&format!("readl@{line}"))))
}

/// `struct resource` starts with `start`; the new region prints relative to it.
fn devm_ioremap_resource(cx: &mut HookContext<'_, '_>) -> Ret {
    let res = cx.arg(1)?;
    let start = cx.read_through(res.v, 8)?;
    let base = cx.alloc_region("mmio", RegionKind::Mmio, None);
    cx.set_display_base(base, start)?;
    Ok(Some(base))
}

fn of_address_to_resource(cx: &mut HookContext<'_, '_>) -> Ret {
    let res = cx.arg(2)?;
    let (start, _) = cx.dtsi_find(DTSI_FILE, "$chosen")?;
    let start = cx.make_concrete(64, start as i128);
    let start = ssi_core::interp::TV { v: start, ty: ssi_core::ctype::CType::Int(ssi_core::value::IntType::U64) };
    cx.exec_snippet("*{0} = {1};", &[res, start])?;
    cx.emit_sexpr("(str (imm {0}))", &[0]).map(Some)
}

/// The first-draft model: it fills the resource with an unknown, so any
/// address derived from it stays symbolic.
fn of_address_to_resource_incomplete(cx: &mut HookContext<'_, '_>) -> Ret {
    let res = cx.arg(2)?;
    cx.exec_snippet("*{0} = (opaque);", &[res])?;
    cx.emit_sexpr("(imm 0)", &[]).map(Some)
}

fn irqd_to_hwirq(cx: &mut HookContext<'_, '_>) -> Ret {
    match cx.slot("hwirq") {
        Some(v) => Ok(Some(v)),
        None => Ok(Some(cx.fresh_symbolic("hwirq"))),
    }
}

fn devm_kzalloc(cx: &mut HookContext<'_, '_>) -> Ret {
    let size = cx.arg(1)?;
    let size = cx.session().values.resolve(size.v).concrete().map(|c| c.value() as u64);
    Ok(Some(cx.alloc_zeroed("devm_kzalloc", RegionKind::Heap, size)))
}

fn platform_get_irq(cx: &mut HookContext<'_, '_>) -> Ret {
    let n = cx.arg(1)?;
    let n = cx.session().values.resolve(n.v).concrete().map(|c| c.value()).unwrap_or(0);
    Ok(Some(cx.make_concrete(32, 32 + n)))
}

/// Every model for the facsimile, complete `of_address_to_resource` included.
pub fn default_models() -> Vec<Hook> {
    vec![
        Hook::new("writel", "MMIO write: reported as a Write event", writel),
        Hook::new("readl", "MMIO read: an unknown register value", readl),
        Hook::new("devm_ioremap_resource", "maps the resource as an MMIO region", devm_ioremap_resource),
        Hook::new("of_address_to_resource", "resource start from the device tree", of_address_to_resource),
        Hook::new("irqd_to_hwirq", "hardware irq number bound by the command", irqd_to_hwirq),
        Hook::new("devm_kzalloc", "zero-filled heap allocation", devm_kzalloc),
        Hook::new("platform_get_irq", "irq numbers 32, 33, ...", platform_get_irq),
        Hook::new("IS_ERR", "mapped pointers are never errors", zero),
        Hook::new("PTR_ERR", "", zero),
        Hook::new("_raw_spin_lock", "", nothing),
        Hook::new("_raw_spin_unlock", "", nothing),
        Hook::new("raw_spin_lock_init", "", nothing),
        Hook::new("set_bit", "", nothing),
        Hook::new("clear_bit", "", nothing),
        Hook::new("dev_warn", "", log_diagnostic),
        Hook::new("dev_err", "", log_diagnostic),
        Hook::new("dev_info", "", log_diagnostic),
    ]
}

/// Registers the hooks of a named profile: `bcm2835`, or
/// `bcm2835-incomplete` with the first-draft resource model.
pub fn register_profile(s: &mut Session, name: &str) -> Result<(), String> {
    let incomplete = match name {
        "bcm2835" => false,
        "bcm2835-incomplete" => true,
        other => return Err(format!("unknown profile `{other}`")),
    };
    for h in default_models() {
        if incomplete && h.name == "of_address_to_resource" {
            s.register_hook(Hook::new(&h.name, "resource filled with an unknown", of_address_to_resource_incomplete));
        } else {
            s.register_hook(h);
        }
    }
    Ok(())
}
