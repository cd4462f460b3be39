#![no_main]

use libfuzzer_sys::fuzz_target;
use tabeval::dataset::{parse_line, write_records};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(record) = parse_line(text, 1) {
        let mut out = Vec::new();
        write_records(std::slice::from_ref(&record), &mut out).unwrap();
        let again = parse_line(std::str::from_utf8(&out).unwrap().trim_end(), 1).unwrap();
        assert_eq!(again, record);
    }
});
