//! Sparse recovery of target range, azimuth and Doppler.

pub mod focus;
pub mod omp;
pub mod projection;

pub use focus::{doppler_focus, FocusedMap};
pub use omp::{omp2d, omp3d, omp_first_iteration, Estimate, OmpOptions, RecoveryResult};
pub use projection::{project_cell, projection_argmax, projection_map, ProjectionMap};
