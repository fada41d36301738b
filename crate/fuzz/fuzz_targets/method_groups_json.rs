#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::ingest::MethodMapping;

fuzz_target!(|data: &[u8]| {
    let _ = MethodMapping::from_json(data);
});
