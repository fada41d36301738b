#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::ingest::{group_methods, parse_method_labels, MethodMapping};

fuzz_target!(|data: &[u8]| {
    if let Ok(load) = parse_method_labels(data) {
        let _ = group_methods(load.labels, &MethodMapping::builtin());
    }
});
