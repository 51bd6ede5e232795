use proptest::prelude::*;
use ssi_core::token::{find_balanced_span, tokenize, Cursor};

fn c_like() -> impl Strategy<Value = String> {
    let pieces = prop::sample::select(vec![
        "int", " ", "\n", "\t", "x1", "(", ")", "{", "}", "[", "]", ";", "->", "<<=", "0x1fUL", "'a'", "\"s\\\"t\"",
        "/* c */", "// line\n", "#define X 1\n", "\\\n", "+", "++", "...", "@", "`", "é", "\"open\n", "/*", "1e+5",
    ]);
    prop::collection::vec(pieces, 0..60).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn any_bytes_round_trip(src in prop::collection::vec(any::<u8>(), 0..400)) {
        let toks = tokenize(&src);
        let joined: Vec<u8> = toks.iter().flat_map(|t| t.bytes().iter().copied()).collect();
        prop_assert_eq!(joined, src);
    }

    #[test]
    fn c_like_text_round_trips(src in c_like()) {
        let toks = tokenize(src.as_bytes());
        let joined: String = toks.iter().map(|t| t.text()).collect();
        prop_assert_eq!(joined, src);
    }

    #[test]
    fn offsets_strictly_increase(src in prop::collection::vec(any::<u8>(), 0..400)) {
        let toks = tokenize(&src);
        for w in toks.windows(2) {
            prop_assert!(w[0].byte_offset < w[1].byte_offset);
        }
        if let Some(first) = toks.first() {
            prop_assert_eq!(first.byte_offset, 0);
        }
    }

    #[test]
    fn balanced_spans_balance(src in c_like(), skip in 0usize..40) {
        let toks = tokenize(src.as_bytes());
        let opens: Vec<usize> = (0..toks.len()).filter(|&i| toks[i].is("{")).collect();
        if opens.is_empty() {
            return Ok(());
        }
        let start = opens[skip % opens.len()];
        let mut cur = Cursor::new(&toks);
        cur.seek(start);
        if let Ok(span) = find_balanced_span(&cur, "{", "}") {
            prop_assert_eq!(span.start, start);
            let mut depth = 0i64;
            for t in &toks[span.clone()] {
                if t.is("{") { depth += 1; }
                if t.is("}") { depth -= 1; }
                prop_assert!(depth >= 0);
            }
            prop_assert_eq!(depth, 0);
        }
    }
}
