//! Criterion benchmarks for `dbcsp-core`; see `benches/`.
