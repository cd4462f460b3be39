#![no_main]

use libfuzzer_sys::fuzz_target;
use tabeval::convert::convert_livesum;

fuzz_target!(|data: &[u8]| {
    let _ = convert_livesum(data);
});
