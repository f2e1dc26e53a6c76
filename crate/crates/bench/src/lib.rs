//! Criterion benchmarks for the core algorithms and the sweep driver; see `benches/`.
