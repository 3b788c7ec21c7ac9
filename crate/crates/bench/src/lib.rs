//! Desk-scale micro-benchmarks: kernel throughput in each memory layout,
//! misaligned streaming copies and halo-exchange bandwidth. Every benchmark
//! checks the operation it times before timing it.

pub mod error;
pub mod halo;
pub mod layout;
pub mod misalign;
pub mod registry;
pub mod timing;

pub use error::{BenchError, Result};
pub use halo::{bench_halo_exchange, contiguous_shortfalls, HaloParams, HaloReport};
pub use layout::{bench_layout, layout_report, Kernel, LayoutParams};
pub use misalign::{bench_misalignment, misalignment_report, CopyMode, MisalignParams};
pub use registry::{BenchOutput, BenchSettings, Benchmark, BenchmarkRegistry};
pub use timing::{measure, BenchReport, BenchResult, Repeat, Timing, DEFAULT_WARMUP, MIN_REPS};
