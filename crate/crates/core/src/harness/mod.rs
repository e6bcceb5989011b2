//! Benchmark harness: warmup/timed-iteration measurement of the kernels and
//! the dense reference, named mask presets, and length sweeps.

mod bench;
mod preset;
mod sweep;

pub use bench::{
    estimate_footprint_bytes, run_benchmark, BenchAlgo, BenchConfig, BenchReport, MaskSource,
    OracleCheck, DEFAULT_ITERS, DEFAULT_MEMORY_CAP_BYTES, DEFAULT_WARMUP,
};
pub use preset::{build_preset, default_global_indices, LegMask, Preset, PresetLeg, PresetName};
pub use sweep::{run_sweep, sweep_csv, SweepKind, SweepOutcome, SweepRow};
