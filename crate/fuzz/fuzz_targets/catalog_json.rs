#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::motif::MotifCatalog;

fuzz_target!(|data: &[u8]| {
    let _ = MotifCatalog::from_json(data);
});
