#![no_main]

use libfuzzer_sys::fuzz_target;
use tabeval_core::align::{normalize_cell, normalize_value, NormalizationOptions};
use tabeval_core::model::CellKind;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let opts = NormalizationOptions::default();
    for kind in [CellKind::Text, CellKind::NullableInteger] {
        let once = normalize_cell(text, kind, &opts);
        assert_eq!(normalize_value(&once, kind, &opts), once);
    }
});
