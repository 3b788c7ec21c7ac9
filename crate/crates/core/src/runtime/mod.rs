//! Simulated multi-rank execution: one thread per tile, halos exchanged
//! over ordered point-to-point channels.

pub mod comm;
pub mod decompose;
pub mod halo;
mod rank;
mod run;
pub mod schedule;

pub use comm::{build_mesh, HaloMessage, Links};
pub use decompose::{decompose, Boundary, Neighbors, TileAssignment, Tiling, BORDER};
pub use halo::{Face, HaloBuffer, MirrorPlan};
pub use rank::{Rank, TileRegions};
pub use run::{run, run_observed, validate_config, RunMetrics, RunOutcome, SimConfig, StepRecord};
pub use schedule::{Overlapped, PhaseTimes, Schedule, ScheduleRegistry, Staged};
