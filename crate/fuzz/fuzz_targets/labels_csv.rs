#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::store::read_labels;

fuzz_target!(|data: &[u8]| {
    let _ = read_labels(data);
});
