use proptest::prelude::*;
use ssi_core::dtsi::{dtsi_find, list_compatibles, parse_dtsi};

fn sibling() -> impl Strategy<Value = String> {
    (0u32..1000, 0u64..0xffff_ffff, prop::option::of("[a-z]{2,6}")).prop_map(|(i, base, extra)| {
        let prop = extra.map(|p| format!("\t\t{p} = <{i}>;\n")).unwrap_or_default();
        format!("\tnode{i}@{base:x} {{\n\t\tcompatible = \"vendor,other-{i}\";\n\t\treg = <{base:#x} 0x10>;\n{prop}\t\tstatus = \"disabled\";\n\t}};\n")
    })
}

proptest! {
    #[test]
    fn find_ignores_unrelated_siblings(before in prop::collection::vec(sibling(), 0..5), after in prop::collection::vec(sibling(), 0..5)) {
        let target = "\tgpio: gpio@7e200000 {\n\t\tcompatible = \"brcm,bcm2835-gpio\";\n\t\treg = <0x7e200000 0xb4>;\n\t};\n";
        let src = format!("/dts-v1/;\n/ {{\n{}{target}{}}};\n", before.concat(), after.concat());
        let tree = parse_dtsi(&src).unwrap();
        prop_assert_eq!(dtsi_find(&tree, "brcm,bcm2835-gpio").unwrap(), (0x7e20_0000, 0xb4));
        let distinct: std::collections::BTreeSet<&str> =
            before.iter().chain(&after).filter_map(|s| s.split('"').nth(1)).collect();
        let listed = list_compatibles(&tree);
        prop_assert_eq!(listed.len(), distinct.len() + 1);
        prop_assert_eq!(listed.iter().filter(|c| c.as_str() == "brcm,bcm2835-gpio").count(), 1);
    }
}
