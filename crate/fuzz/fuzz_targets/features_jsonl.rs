#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::motif::read_features;

fuzz_target!(|data: &[u8]| {
    let _ = read_features(data);
});
