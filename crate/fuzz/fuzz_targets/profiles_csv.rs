#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::profile::read_profiles_csv;

fuzz_target!(|data: &[u8]| {
    let _ = read_profiles_csv(data);
});
