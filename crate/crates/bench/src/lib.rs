//! Criterion benchmarks for the hot paths of `diracnet-core`; see `benches/`.
