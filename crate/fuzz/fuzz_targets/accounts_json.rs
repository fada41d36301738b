#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::ingest::AccountRegistry;

fuzz_target!(|data: &[u8]| {
    let _ = AccountRegistry::from_json(data);
});
