#![no_main]

use forge_core::adoption::parse_log_line;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        if let Ok(entry) = parse_log_line(line) {
            assert!(!entry.prediction.is_empty());
        }
    }
});
