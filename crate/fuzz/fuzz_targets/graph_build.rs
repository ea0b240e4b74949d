#![no_main]

use forge_core::graph::{build_graph_from_files, enumerate_paths, PathStrategy};
use forge_core::pipeline::RawFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Input is split into files on NUL bytes.
    let files: Vec<RawFile> = data
        .split(|&b| b == 0)
        .take(8)
        .enumerate()
        .map(|(i, chunk)| {
            let ext = if i % 2 == 0 { "c" } else { "h" };
            RawFile::from_bytes(format!("src/f{i}.{ext}"), chunk.to_vec())
        })
        .collect();
    let graph = build_graph_from_files(&files);
    let paths = enumerate_paths(&graph, 2, 4, PathStrategy::ForwardCall).unwrap();
    assert!(paths.len() >= graph.node_count());
});
