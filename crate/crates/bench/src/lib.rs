//! Criterion benchmarks for the hot paths of `riszf-core`. Run with `cargo bench -p riszf-bench`.
