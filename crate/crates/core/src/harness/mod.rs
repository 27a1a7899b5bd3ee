//! Experiment orchestration.

pub mod experiment;
pub mod scene;
pub mod score;
pub mod template;

pub use experiment::{run_experiment, ExperimentOutput, ExperimentSpec, HitReport, Method, SceneSpec, Sweep, SweepVariable};
pub use scene::{random_scene, resolution_scene};
pub use score::{score_hits, TrialScore};
pub use template::{ArrayLayout, ConfigTemplate};
