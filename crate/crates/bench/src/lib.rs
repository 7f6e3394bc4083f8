//! Criterion benchmarks for `chanprobe-core`; see `benches/`.
