#![no_main]

use libfuzzer_sys::fuzz_target;
use motifscope::learn::ModelFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = ModelFile::from_json(data) {
        let row = vec![0.0; m.vocabulary.n_columns()];
        let _ = m.model.predict(&row);
    }
});
