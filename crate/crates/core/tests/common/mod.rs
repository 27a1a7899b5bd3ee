#![allow(dead_code)]

use std::path::PathBuf;

use fdma_mimo::channelizer::{channelize, ChannelCoefficients};
use fdma_mimo::harness::{random_scene, ArrayLayout, ConfigTemplate, ExperimentSpec};
use fdma_mimo::synth::{add_noise, synthesize, NoiseBandwidth};
use fdma_mimo::waveforms::{CarrierMode, WaveformBank};
use fdma_mimo::{RadarConfig, SynthesisMode, TargetScene};

/// Desk-scale template: random array with aperture TR/2, permuted carriers,
/// B_h = 1 MHz at 10 GHz.
pub fn template(t: usize, r: usize, n: usize, p: usize) -> ConfigTemplate {
    ConfigTemplate {
        num_tx: t,
        num_rx: r,
        num_pulses: p,
        bins_per_channel: n,
        channel_bandwidth: 1e6,
        carrier_freq: 10e9,
        aperture: None,
        array: ArrayLayout::Random,
        carriers: CarrierMode::RandomPermutation,
        synthesis_mode: SynthesisMode::Simplified,
        pulse_width: None,
    }
}

pub fn config(t: usize, r: usize, n: usize, p: usize, seed: u64) -> RadarConfig {
    template(t, r, n, p).build(seed).unwrap()
}

pub fn scene(cfg: &RadarConfig, count: usize, seed: u64) -> TargetScene {
    random_scene(cfg, count, None, 0, seed).unwrap()
}

/// Flat-envelope synthesis and channelization; `snr_db = inf` is noiseless.
pub fn channels(cfg: &RadarConfig, scene: &TargetScene, mode: SynthesisMode, snr_db: f64, seed: u64) -> ChannelCoefficients {
    let bank = WaveformBank::fdma_flat(cfg);
    let s = synthesize(cfg, scene, &bank, mode).unwrap();
    let s = add_noise(&s, cfg, snr_db, seed, NoiseBandwidth::PerChannel).unwrap();
    channelize(&s, &bank, cfg).unwrap()
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn load_spec(name: &str) -> ExperimentSpec {
    let text = std::fs::read_to_string(config_path(name)).unwrap();
    ExperimentSpec::from_toml(&text).unwrap()
}
