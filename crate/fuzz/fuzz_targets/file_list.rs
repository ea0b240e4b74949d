#![no_main]

use forge_core::pipeline::parse_file_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        for path in parse_file_list(text) {
            assert!(!path.trim().is_empty());
        }
    }
});
