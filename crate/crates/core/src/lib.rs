//! Thermal lattice Boltzmann engine with D2Q37 and D2Q9 stencils.
//!
//! The lattice is split into tiles, each owned by a rank thread that
//! exchanges halos with its neighbors by message passing. Results are
//! independent of the tiling and of the step schedule, bit for bit.

pub mod error;
pub mod fields;
pub mod kernels;
pub mod lattice;
pub mod presets;
pub mod runtime;
pub mod velocity;

pub use error::{Error, Result};
pub use fields::{GlobalState, MacroFields};
pub use kernels::{Moments, PhysicsParams};
pub use lattice::{allocate_field, DoubleBuffer, LatticeGeometry, Layout, PopulationField, Region};
pub use presets::{InitialCondition, PresetOptions, PresetRegistry};
pub use runtime::{run, run_observed, Boundary, RunOutcome, SimConfig, Tiling};
pub use velocity::{build_velocity_set, VelocitySet};
