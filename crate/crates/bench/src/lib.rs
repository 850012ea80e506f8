//! Criterion benchmarks for the link simulator; see `benches/link.rs`.
