//! Communication and scaling model for a 2D lattice tiled over processors.
//!
//! Given lattice extents, per-site compute cost, bytes per boundary site
//! and (possibly size-dependent) halo bandwidths, predicts the time per
//! step of 1D slab and 2D grid tilings, with and without overlapping the
//! column exchange with the bulk update.

pub mod bandwidth;
pub mod config;
pub mod curve;
pub mod error;
pub mod model;

pub use bandwidth::{BandwidthTable, BandwidthTables};
pub use config::PlannerConfig;
pub use curve::{
    find_crossover, model_curves, scaling_curve, write_curve_csv, write_model_csv, Crossover, CurveRow,
    ModelRow, TilingKind,
};
pub use error::{PlanError, Result};
pub use model::{
    aspect_factor, brent_bound, comm_time_2d, factor_pairs, optimal_grid, optimal_grid_real, predict_1d,
    predict_1d_overlap, predict_2d, predict_2d_overlap, predict_tiling, surface_over_volume, CostModelInput,
    Prediction, DEFAULT_S,
};
