use super::*;
use crate::event::CallVia;
use crate::hooks::Hook;

fn locals(src: &str) -> HashMap<String, Option<i128>> {
    let mut s = Session::from_source("t.c", src);
    s.run_function_locals("f", &mut Batch)
        .unwrap()
        .into_iter()
        .map(|(k, v)| (k, v.map(|c| c.value())))
        .collect()
}

fn ret(s: &mut Session, name: &str, args: &[i128]) -> Option<i128> {
    let r = s.call(name, args, &mut Batch).unwrap().unwrap();
    s.values.resolve(r.v).concrete().map(|c| c.value())
}

#[test]
fn straight_line_arithmetic() {
    let l = locals("void f(void) { int a = 1, b = 0; int x = a + b; x += 4; x <<= 2; }");
    assert_eq!(l["x"], Some(20));
    assert_eq!(l["a"], Some(1));
}

#[test]
fn unsigned_wraps_and_signed_division_truncates() {
    let l = locals("void f(void) { unsigned int u = 0; u = u - 1; int q = -7 / 2; int r = -7 % 2; char c = 200; }");
    assert_eq!(l["u"], Some(0xffff_ffff));
    assert_eq!(l["q"], Some(-3));
    assert_eq!(l["r"], Some(-1));
    assert_eq!(l["c"], Some(-56));
}

#[test]
fn loops_and_control_flow() {
    let src = "void f(void) { int i, s = 0; for (i = 0; i < 10; i++) { if (i == 3) continue; if (i == 8) break; s += i; }
        int n = 0; while (n < 5) n++; do { n--; } while (n > 2);
        int k = 0; switch (n) { case 1: k = 10; break; case 2: k = 20; default: k++; } }";
    let l = locals(src);
    assert_eq!(l["s"], Some(0 + 1 + 2 + 4 + 5 + 6 + 7));
    assert_eq!(l["n"], Some(2));
    assert_eq!(l["k"], Some(21));
}

#[test]
fn goto_forward_within_body() {
    let l = locals("void f(void) { int x = 1; goto out; x = 2; out: x += 10; }");
    assert_eq!(l["x"], Some(11));
}

#[test]
fn macros_bit_and_sizeof() {
    let src = "#define BIT(n) (1UL << (n))\nstruct pair { u32 a; u64 b; };\nvoid f(void) { unsigned long m = BIT(3); int s = sizeof(u32); int p = sizeof(struct pair); }";
    let l = locals(src);
    assert_eq!(l["m"], Some(8));
    assert_eq!(l["s"], Some(4));
    assert_eq!(l["p"], Some(16));
}

#[test]
fn pointers_structs_and_arrays() {
    let src = "struct s { int a; int b[4]; };
        int g(struct s *p) { return p->a + p->b[2]; }
        int f(void) { struct s v; int *q; v.a = 5; v.b[2] = 7; q = &v.b[0]; q[1] = 3; return g(&v) + v.b[1]; }";
    let mut s = Session::from_source("t.c", src);
    assert_eq!(ret(&mut s, "f", &[]), Some(15));
}

#[test]
fn globals_and_enums_and_static_locals() {
    let src = "enum { A = 3, B, C = B * 2 };
        static int counter = 5;
        int bump(void) { static int n; n++; return n; }
        int f(void) { counter += C; bump(); return bump() * 100 + counter; }";
    let mut s = Session::from_source("t.c", src);
    assert_eq!(ret(&mut s, "f", &[]), Some(213));
}

#[test]
fn symbolic_branch_fails_under_fail_policy() {
    let mut s = Session::from_source("t.c", "int f(void) { int x = unknown_thing(); if (x) return 1; return 2; }");
    let err = s.call("f", &[], &mut Batch).unwrap_err();
    assert!(matches!(err, ExecError::SymbolicBranch { .. }), "{err}");
    s.policy = BranchPolicy::AssumeFalse;
    assert_eq!(ret(&mut s, "f", &[]), Some(2));
}

#[test]
fn branch_learning_binds_symbol() {
    let mut s = Session::from_source("t.c", "int f(void) { int x = unknown_thing(); if (x != 4) return 0; return x + 1; }");
    s.policy = BranchPolicy::AssumeFalse;
    assert_eq!(ret(&mut s, "f", &[]), Some(5));
}

#[test]
fn hook_takes_precedence_over_corpus() {
    let src = "int g(void) { return 1; } int f(void) { return g(); }";
    let mut s = Session::from_source("t.c", src);
    assert_eq!(ret(&mut s, "f", &[]), Some(1));
    s.register_hook(Hook::new("g", "", |cx| Ok(Some(cx.make_concrete(32, 9)))));
    assert_eq!(ret(&mut s, "f", &[]), Some(9));
    let vias: Vec<CallVia> = s
        .events
        .all()
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::Call { callee, via, .. } if callee == "g" => Some(*via),
            _ => None,
        })
        .collect();
    assert_eq!(vias, [CallVia::Corpus, CallVia::Hook]);
}

#[test]
fn fallback_clobbers_address_arguments() {
    let src = "int f(void) { int r = 3; fill(&r); return r; }";
    let mut s = Session::from_source("t.c", src);
    let r = s.call("f", &[], &mut Batch).unwrap().unwrap();
    match s.values.resolve(r.v) {
        Resolved::Residual(b) => {
            let o = s.values.get(*b.iter().next().unwrap()).origin.clone().unwrap();
            assert_eq!(o.callee, "fill");
            assert_eq!(o.call_text, "fill ( & r )");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn garbage_in_untaken_branch_is_tolerated() {
    let src = "int f(void) { int x = 1; if (x == 2) { this is ) not [ C at all; } return x; }";
    let mut s = Session::from_source("t.c", src);
    assert_eq!(ret(&mut s, "f", &[]), Some(1));
}

#[test]
fn max_steps_bounds_infinite_loops() {
    let mut s = Session::from_source("t.c", "void f(void) { for (;;) ; }");
    s.max_steps = 1000;
    assert!(matches!(s.call("f", &[], &mut Batch), Err(ExecError::MaxStepsExceeded { .. })));
}

#[test]
fn untouched_function_is_never_parsed() {
    let src = "int big(void) { int a = 1; a++; return a; }\nint f(void) { return 2; }";
    let mut s = Session::from_source("t.c", src);
    assert_eq!(ret(&mut s, "f", &[]), Some(2));
    let def = crate::parse::find_function_definition(&s.corpus, "big").unwrap();
    let body = def.body();
    assert!(!s.parse_cache.parsed_holes().iter().any(|h| h.overlaps(body.file, &body.range())));
}

struct StopOnce {
    seen: Vec<u32>,
    x: Option<String>,
}

impl Frontend for StopOnce {
    fn on_stop(&mut self, s: &mut Session, stop: &Stop) -> Resume {
        self.seen.push(stop.pos.line);
        self.x = s.examine("x").ok();
        Resume::Continue
    }

    fn decide_branch(&mut self, _: &mut Session, _: &BranchQuery) -> Option<bool> {
        None
    }
}

#[test]
fn breakpoint_stops_with_locals_visible() {
    let src = "int f(void)\n{\n\tint x = 6;\n\tx = x / 2;\n\treturn x;\n}\n";
    let mut s = Session::from_source("t.c", src);
    s.add_breakpoint(FileId(0), 5);
    let mut fe = StopOnce { seen: Vec::new(), x: None };
    s.call("f", &[], &mut fe).unwrap();
    assert_eq!(fe.seen, [5]);
    assert!(fe.x.unwrap().ends_with(" = 3"));
}

#[test]
fn command_binds_params_and_slots() {
    let src = "struct dev { int id; };\nint entry(struct dev *d, int n) { return d->id * 10 + n + hw(); }";
    let mut s = Session::from_source("t.c", src);
    s.register_hook(Hook::new("hw", "", |cx| Ok(cx.slot("hwirq"))));
    let spec = CommandSpec {
        entry: "entry".into(),
        params: vec!["gpio".into()],
        bind: vec![("hwirq".into(), "gpio".into())],
        setup: vec!["static struct dev dd; dd.id = 4;".into()],
        args: vec!["&dd".into(), "gpio".into()],
    };
    s.commands.insert("go".into(), spec);
    let r = s.run_command("go", &[3], &mut Batch).unwrap().unwrap();
    assert_eq!(s.values.resolve(r.v).concrete().map(|c| c.value()), Some(46));
}

#[test]
fn scalar_assigned_through_struct_pointer_sets_first_member() {
    let src = "struct res { unsigned long start; unsigned long flags; };
        void h(struct res *p, unsigned long v) { *p = v; }
        long f(void) { struct res r; h(&r, 0x7e200000); return r.start; }";
    let mut s = Session::from_source("t.c", src);
    assert_eq!(ret(&mut s, "f", &[]), Some(0x7e20_0000));
}

#[test]
fn conditional_arms_share_a_common_type() {
    let l = locals("void f(void) { int a = -1; unsigned int u = 5; short s = 0; int c = a < (0 ? u : s); long w = 1 ? -1 : u; }");
    assert_eq!(l["c"], Some(0));
    assert_eq!(l["w"], Some(0xffff_ffff));
}
