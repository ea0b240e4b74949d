//! Structure-aware code corpus construction and completion-metric analysis.

pub mod adoption;
pub mod config;
pub mod graph;
pub mod metrics;
pub mod orchestrate;
pub mod pipeline;
pub mod segment;
pub mod tokenize;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
