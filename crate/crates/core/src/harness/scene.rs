//! Random and preset target scenes.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::config::{GridIndex, RadarConfig, Target, TargetScene};
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

/// Rejection-sampling budget per requested target.
const ATTEMPTS_PER_TARGET: usize = 10_000;

/// Largest per-axis index distance (Doppler ignored for single-pulse configs).
pub fn grid_distance(a: GridIndex, b: GridIndex) -> usize {
    a.delay.abs_diff(b.delay).max(a.azimuth.abs_diff(b.azimuth)).max(a.doppler.abs_diff(b.doppler))
}

/// `count` distinct on-grid targets, uniform over the grid, with unit
/// magnitudes and i.i.d. uniform phases. Targets are at least
/// `min_separation` bins apart on some axis.
///
/// With `rcs_ratio_db` set the scene has exactly two targets; the weaker one
/// has unit magnitude and the stronger `10^(ratio / 10)`.
pub fn random_scene(config: &RadarConfig, count: usize, rcs_ratio_db: Option<f64>, min_separation: usize, seed: u64) -> Result<TargetScene> {
    let cells = config.total_bins() * config.num_channels() * config.num_pulses;
    if count > cells {
        return Err(Error::SceneTooDense { requested: count, reason: format!("grid has {cells} cells") });
    }
    if rcs_ratio_db.is_some() && count != 2 {
        return Err(Error::InvalidConfig("an RCS ratio needs exactly two targets".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut targets: Vec<Target> = Vec::with_capacity(count);
    let mut attempts = 0;
    while targets.len() < count {
        attempts += 1;
        if attempts > ATTEMPTS_PER_TARGET * count {
            return Err(Error::SceneTooDense {
                requested: count,
                reason: format!("could not place targets {min_separation} bins apart"),
            });
        }
        let idx = GridIndex::new(
            rng.random_range(0..config.total_bins()),
            rng.random_range(0..config.num_channels()),
            rng.random_range(0..config.num_pulses),
        );
        let phase = rng.random_range(0.0..TAU);
        if targets.iter().any(|t| t.index() == idx || grid_distance(t.index(), idx) < min_separation) {
            continue;
        }
        targets.push(Target::new(Complex64::from_polar(1.0, phase), idx.delay, idx.azimuth, idx.doppler));
    }
    if let Some(ratio) = rcs_ratio_db {
        targets[0].amplitude *= 10f64.powf(ratio / 10.0);
    }
    Ok(TargetScene { targets, seed })
}

/// Six unit targets: a pair one range bin apart, a pair one azimuth bin apart
/// and a pair one Doppler bin apart, spread over the grid.
pub fn resolution_scene(config: &RadarConfig, seed: u64) -> Result<TargetScene> {
    let (tn, tr, p) = (config.total_bins(), config.num_channels(), config.num_pulses);
    if tn < 8 || tr < 8 || p < 4 {
        return Err(Error::SceneTooDense { requested: 6, reason: "grid too small for the resolution preset".into() });
    }
    let cells = [
        GridIndex::new(tn / 4, tr / 4, p / 2),
        GridIndex::new(tn / 4 + 1, tr / 4, p / 2),
        GridIndex::new(tn / 2, 3 * tr / 4, p / 4),
        GridIndex::new(tn / 2, 3 * tr / 4 + 1, p / 4),
        GridIndex::new(3 * tn / 4, tr / 2, p / 2 + 1),
        GridIndex::new(3 * tn / 4, tr / 2, p / 2 + 2),
    ];
    let mut rng = seeded_rng(seed);
    let targets = cells
        .iter()
        .map(|c| Target::new(Complex64::from_polar(1.0, rng.random_range(0.0..TAU)), c.delay, c.azimuth, c.doppler))
        .collect();
    Ok(TargetScene { targets, seed })
}
