#![no_main]

use forge_core::pipeline::CorpusRecord;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        if let Ok(rec) = CorpusRecord::from_json_line(line) {
            let _ = rec.into_file();
        }
    }
});
