#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::store::read_transactions;

fuzz_target!(|data: &[u8]| {
    let _ = read_transactions(data);
});
