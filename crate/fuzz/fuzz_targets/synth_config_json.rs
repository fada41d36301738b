#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::synth::SynthConfig;

fuzz_target!(|data: &[u8]| {
    let _ = SynthConfig::from_json(data);
});
