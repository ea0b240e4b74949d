#![no_main]

use forge_core::pipeline::clean::strip_comments;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(out) = strip_comments(text) {
            // Line numbers of code survive comment removal.
            assert_eq!(out.matches('\n').count(), text.matches('\n').count());
        }
    }
});
