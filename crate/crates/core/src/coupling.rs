//! Single-target ambiguity maps, range-azimuth coupling and peak sidelobe
//! levels for different array and carrier layouts.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channelizer::ChannelCoefficients;
use crate::config::{GridIndex, RadarConfig, SynthesisMode};
use crate::dictionary::{build_dictionaries_with, BetaModel, DictionarySet};
use crate::error::{Error, Result};
use crate::recovery::{doppler_focus, projection_map, ProjectionMap};
use crate::waveforms::{assign_carriers, random_array, ula_array, ula_array_tx_dense, CarrierMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// Uniform array (transmitters at m/2, receivers at Tq/2) with linearly
    /// indexed carriers and the carrier factor dropped from beta.
    UlaGridCarriers,
    /// Uniform array with carriers drawn i.i.d. on the band grid (repeats allowed).
    RandomCarriersUla,
    /// Uniformly random positions with linearly indexed carriers.
    RandomArrayGridCarriers,
}

impl CouplingMode {
    pub fn beta_model(self) -> BetaModel {
        match self {
            CouplingMode::UlaGridCarriers => BetaModel::Simplified,
            _ => BetaModel::Full,
        }
    }
}

/// Single-pulse config of the given layout with B_h = 5 MHz, f_c = 10 GHz and Z = TR/2.
pub fn coupling_config(mode: CouplingMode, num_tx: usize, num_rx: usize, bins: usize, seed: u64) -> RadarConfig {
    let bh = 5e6;
    let aperture = (num_tx * num_rx) as f64 / 2.0;
    let ((tx, rx), carriers) = match mode {
        CouplingMode::UlaGridCarriers => (ula_array_tx_dense(num_tx, num_rx), CarrierMode::Linear),
        CouplingMode::RandomCarriersUla => (ula_array(num_tx, num_rx), CarrierMode::RandomIid),
        CouplingMode::RandomArrayGridCarriers => (random_array(num_tx, num_rx, aperture, seed), CarrierMode::Linear),
    };
    RadarConfig {
        num_tx,
        num_rx,
        num_pulses: 1,
        pri: bins as f64 / bh,
        channel_bandwidth: bh,
        carrier_freq: 10e9,
        tx_positions: tx,
        rx_positions: rx,
        tx_carriers: assign_carriers(num_tx, bh, carriers, seed),
        aperture,
        synthesis_mode: SynthesisMode::Simplified,
        pulse_width: None,
        seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainPeak {
    pub delay: usize,
    pub azimuth: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityReport {
    pub mode: CouplingMode,
    pub target: GridIndex,
    pub main_peak: MainPeak,
    pub peak_sidelobe_level: f64,
    pub config_hash: String,
    pub seed: u64,
    /// Range-azimuth magnitudes `[r][s]` at the target's Doppler bin.
    #[serde(skip)]
    pub map: ProjectionMap,
}

impl AmbiguityReport {
    /// `delay,azimuth,magnitude` rows.
    pub fn write_map_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["delay", "azimuth", "magnitude"])?;
        for (i, v) in self.map.values.iter().enumerate() {
            out.serialize((i % self.map.num_delay, i / self.map.num_delay, v))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Noiseless channel data of a unit target at `target` generated from the
/// dictionaries themselves.
pub fn model_channels(dict: &DictionarySet, target: GridIndex) -> Result<ChannelCoefficients> {
    let (t, r, p, n) = (dict.num_tx, dict.num_rx, dict.num_pulses, dict.num_bins);
    let mut data = vec![Complex64::new(0.0, 0.0); t * r * p * n];
    for m in 0..t {
        let atom = dict.atom(m, target.delay, target.azimuth, target.doppler)?;
        // atom is [p][q][k]; channel data is [m][q][p][k]
        for pp in 0..p {
            for q in 0..r {
                let src = &atom[(pp * r + q) * n..][..n];
                data[((m * r + q) * p + pp) * n..][..n].copy_from_slice(src);
            }
        }
    }
    Ok(ChannelCoefficients { num_tx: t, num_rx: r, num_pulses: p, num_bins: n, data })
}

/// Ratio of the largest value outside the one-bin neighbourhood of the main
/// peak to the main peak. Zero for an empty sidelobe region.
pub fn peak_sidelobe_level(map: &ProjectionMap) -> (GridIndex, f64, f64) {
    let (main, peak) = map.argmax();
    let mut side = 0.0f64;
    for (i, &v) in map.values.iter().enumerate() {
        let idx = map.index_of(i);
        if idx.delay.abs_diff(main.delay) > 1 || idx.azimuth.abs_diff(main.azimuth) > 1 || idx.doppler.abs_diff(main.doppler) > 1 {
            side = side.max(v);
        }
    }
    let psl = if peak > 0.0 { side / peak } else { 0.0 };
    (main, peak, psl)
}

pub fn ambiguity_map(config: &RadarConfig, target: GridIndex, mode: CouplingMode) -> Result<AmbiguityReport> {
    let dict = build_dictionaries_with(config, mode.beta_model())?;
    let y = model_channels(&dict, target)?;
    let full = projection_map(&doppler_focus(&y), &dict);
    let plane = full.num_azimuth * full.num_delay;
    let map = ProjectionMap {
        num_doppler: 1,
        num_azimuth: full.num_azimuth,
        num_delay: full.num_delay,
        values: full.values[target.doppler * plane..(target.doppler + 1) * plane].to_vec(),
    };
    let (main, value, psl) = peak_sidelobe_level(&map);
    Ok(AmbiguityReport {
        mode,
        target,
        main_peak: MainPeak { delay: main.delay, azimuth: main.azimuth, value },
        peak_sidelobe_level: psl,
        config_hash: config.hash_hex(),
        seed: config.seed,
        map,
    })
}

/// Cells (s, r) with r - sR = r_l - s_l R (mod TR).
pub fn coupled_cells(dict: &DictionarySet, delay: usize, azimuth: usize) -> Vec<(usize, usize)> {
    let tr = dict.num_channels() as i64;
    let key = |s: usize, r: usize| (r as i64 - s as i64 * dict.num_rx as i64).rem_euclid(tr);
    let target = key(delay, azimuth);
    let mut out = Vec::new();
    for s in 0..dict.total_bins() {
        for r in 0..dict.num_channels() {
            if key(s, r) == target {
                out.push((s, r));
            }
        }
    }
    out
}

/// Channel phase vectors of two cells agree up to one common phase factor.
pub fn same_channel_phases(dict: &DictionarySet, a: (usize, usize), b: (usize, usize), tol: f64) -> bool {
    let va = dict.channel_phases(a.0, a.1);
    let vb = dict.channel_phases(b.0, b.1);
    let common = vb[0] / va[0];
    va.iter().zip(&vb).all(|(x, y)| (x * common - y).norm() <= tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PslDistribution {
    pub mode: CouplingMode,
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
    pub median: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// PSL for a centre target over independently drawn layouts.
pub fn psl_distribution(mode: CouplingMode, num_tx: usize, num_rx: usize, bins: usize, seeds: &[u64]) -> Result<PslDistribution> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed required".into()));
    }
    let values = seeds
        .iter()
        .map(|&seed| {
            let cfg = coupling_config(mode, num_tx, num_rx, bins, seed);
            let target = GridIndex::new(cfg.total_bins() / 2, cfg.num_channels() / 2, 0);
            ambiguity_map(&cfg, target, mode).map(|r| r.peak_sidelobe_level)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PslDistribution { mode, seeds: seeds.to_vec(), median: median(&values), values })
}
