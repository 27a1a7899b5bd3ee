//! Hit-or-miss scoring.

use serde::{Deserialize, Serialize};

use crate::config::{RadarConfig, TargetScene};
use crate::recovery::RecoveryResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    pub hits: usize,
    pub targets: usize,
    /// (truth index, estimate index) of each hit.
    pub matches: Vec<(usize, usize)>,
    /// Sum over hits of |delay error| in seconds.
    pub delay_error_s: f64,
    /// Sum over hits of |delay error| in delay bins.
    pub delay_error_bins: f64,
}

/// Greedy one-to-one matching of estimates to true targets. A pair matches
/// when the indices differ by at most one bin in delay and azimuth, and in
/// Doppler too for multi-pulse configs. Closest pairs are taken first (ties by
/// truth cell, then estimate order).
pub fn score_hits(truth: &TargetScene, result: &RecoveryResult, config: &RadarConfig) -> TrialScore {
    let use_doppler = config.num_pulses > 1;
    let mut pairs = Vec::new();
    for (j, t) in truth.targets.iter().enumerate() {
        let ti = t.index();
        for (i, e) in result.support.iter().enumerate() {
            let ds = ti.delay.abs_diff(e.delay);
            let dr = ti.azimuth.abs_diff(e.azimuth);
            let du = if use_doppler { ti.doppler.abs_diff(e.doppler) } else { 0 };
            if ds <= 1 && dr <= 1 && du <= 1 {
                pairs.push((ds * ds + dr * dr + du * du, ti, j, i));
            }
        }
    }
    pairs.sort();
    let mut truth_used = vec![false; truth.targets.len()];
    let mut est_used = vec![false; result.support.len()];
    let mut matches = Vec::new();
    let (mut err_s, mut err_bins) = (0.0, 0.0);
    for (_, ti, j, i) in pairs {
        if truth_used[j] || est_used[i] {
            continue;
        }
        truth_used[j] = true;
        est_used[i] = true;
        matches.push((j, i));
        let bins = ti.delay.abs_diff(result.support[i].delay) as f64;
        err_bins += bins;
        err_s += bins * config.pri / config.total_bins() as f64;
    }
    matches.sort();
    TrialScore { hits: matches.len(), targets: truth.targets.len(), matches, delay_error_s: err_s, delay_error_bins: err_bins }
}
