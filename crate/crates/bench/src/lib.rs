//! Benchmarks for pomalg live in `benches/`.
