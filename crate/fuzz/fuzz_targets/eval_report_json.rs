#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::learn::EvalReport;

fuzz_target!(|data: &[u8]| {
    let _ = EvalReport::from_json(data);
});
