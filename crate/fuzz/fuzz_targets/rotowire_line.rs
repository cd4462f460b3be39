#![no_main]

use libfuzzer_sys::fuzz_target;
use tabeval::convert::parse_rotowire_tables;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_rotowire_tables(text);
});
