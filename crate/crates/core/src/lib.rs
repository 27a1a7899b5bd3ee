//! FDMA MIMO radar simulation and sparse recovery.
//!
//! Transmitters occupy disjoint frequency bands; receivers sample Fourier
//! coefficients of the echoes. Targets on a delay/azimuth/Doppler grid are
//! recovered by orthogonal matching pursuit over separable dictionaries, and a
//! CDMA baseline is provided for comparison.

pub mod cdma;
pub mod channelizer;
pub mod config;
pub mod coupling;
pub mod dictionary;
pub mod error;
pub mod harness;
pub mod io;
pub mod parallel;
pub mod recovery;
pub mod rng;
pub mod synth;
pub mod waveforms;

pub use config::{GridIndex, RadarConfig, SynthesisMode, Target, TargetScene};
pub use error::{Error, Result};
