#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::synth::parse_truth;

fuzz_target!(|data: &[u8]| {
    let _ = parse_truth(data);
});
