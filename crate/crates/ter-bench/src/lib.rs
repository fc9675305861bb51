//! Benchmark-only crate; see `benches/replay.rs`.
