#![no_main]

use forge_core::pipeline::RawFile;
use forge_core::segment::{cut_fim_samples, GranularityRange};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // First byte picks the language, the rest is source text.
    let Some((&sel, body)) = data.split_first() else {
        return;
    };
    let path = if sel % 2 == 0 { "f.c" } else { "f.cpp" };
    let file = RawFile::from_bytes(path, body.to_vec());
    let range = GranularityRange::tokens(1, 4096).unwrap();
    if let Ok(samples) = cut_fim_samples(&file, range, "<mask>", sel as u64) {
        for s in samples {
            assert_eq!(s.reconstruct(), file.content);
        }
    }
});
