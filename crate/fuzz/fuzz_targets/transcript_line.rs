#![no_main]

use libfuzzer_sys::fuzz_target;
use tabeval::transcript::{parse_entry, read_transcript};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_entry(text, 1);
    let _ = read_transcript(text.as_bytes());
});
