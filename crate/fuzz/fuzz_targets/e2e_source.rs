#![no_main]

use libfuzzer_sys::fuzz_target;
use tabeval::convert::{convert_e2e, parse_mr};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_mr(text);
    }
    let _ = convert_e2e(data);
});
