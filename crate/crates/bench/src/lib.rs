//! Criterion benchmarks for the psnads crate; see `benches/`.
