//! Criterion benchmarks for the simulation and learning kernels live in `benches/`.
