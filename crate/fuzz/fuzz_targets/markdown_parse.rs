#![no_main]

use libfuzzer_sys::fuzz_target;
use tabeval_core::markdown::{
    classify_error, extract_candidates, parse_all, serialize_minimal_markdown, validate_candidate,
};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let outcome = parse_all(text);
    let mut valid = 0;
    for block in extract_candidates(text) {
        match validate_candidate(&block) {
            Ok(_) => valid += 1,
            Err(f) => {
                classify_error(&f);
            }
        }
    }
    assert_eq!(valid, outcome.tables.len());
    // Round trip holds for tables without empty cells.
    for table in &outcome.tables {
        let cells = table
            .column_headers()
            .iter()
            .cloned()
            .chain(table.rows().iter().flatten().map(|c| c.render()));
        if cells.into_iter().any(|c| c.is_empty()) {
            continue;
        }
        let again = parse_all(&serialize_minimal_markdown(table));
        assert_eq!(again.tables.as_slice(), std::slice::from_ref(table));
    }
});
