#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::ingest::parse_transfers;

fuzz_target!(|data: &[u8]| {
    let _ = parse_transfers(data);
});
