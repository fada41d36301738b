#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::signatures::read_matches;

fuzz_target!(|data: &[u8]| {
    let _ = read_matches(data);
});
