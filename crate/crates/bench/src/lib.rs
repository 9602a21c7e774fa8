//! Criterion benchmarks for the enhancement engine live in `benches/`.
