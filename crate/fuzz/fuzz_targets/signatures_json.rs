#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::signatures::SignatureSet;

fuzz_target!(|data: &[u8]| {
    let _ = SignatureSet::from_json(data);
});
