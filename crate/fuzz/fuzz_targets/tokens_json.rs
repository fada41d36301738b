#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::ingest::TokenRegistry;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = TokenRegistry::from_json(data) {
        for t in r.entries() {
            let _ = r.category(&t.contract, &t.symbol);
        }
    }
});
