//! Config templates: a recipe that draws a concrete [`RadarConfig`] per trial.

use serde::{Deserialize, Serialize};

use crate::config::{RadarConfig, SynthesisMode};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::waveforms::{assign_carriers, random_array, ula_array, ula_array_tx_dense, CarrierMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrayLayout {
    /// Positions uniform on [0, Z].
    #[default]
    Random,
    /// Receivers at q/2, transmitters at R m/2.
    Ula,
    /// Transmitters at m/2, receivers at T q/2.
    UlaTxDense,
    /// Every antenna at the origin.
    Colocated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigTemplate {
    pub num_tx: usize,
    pub num_rx: usize,
    pub num_pulses: usize,
    /// N = tau B_h.
    pub bins_per_channel: usize,
    pub channel_bandwidth: f64,
    pub carrier_freq: f64,
    /// Defaults to TR/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<f64>,
    #[serde(default)]
    pub array: ArrayLayout,
    #[serde(default)]
    pub carriers: CarrierMode,
    #[serde(default)]
    pub synthesis_mode: SynthesisMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_width: Option<f64>,
}

impl ConfigTemplate {
    /// Full-scale layout: T = R = 20, P = 10, N = 500, B_h = 5 MHz, f_c = 10 GHz.
    pub fn full_scale() -> Self {
        Self {
            num_tx: 20,
            num_rx: 20,
            num_pulses: 10,
            bins_per_channel: 500,
            channel_bandwidth: 5e6,
            carrier_freq: 10e9,
            aperture: None,
            array: ArrayLayout::Random,
            carriers: CarrierMode::RandomPermutation,
            synthesis_mode: SynthesisMode::Exact,
            pulse_width: None,
        }
    }

    pub fn aperture(&self) -> f64 {
        self.aperture.unwrap_or((self.num_tx * self.num_rx) as f64 / 2.0)
    }

    /// Concrete config; positions and carriers are drawn from `seed`.
    pub fn build(&self, seed: u64) -> Result<RadarConfig> {
        if self.bins_per_channel == 0 || self.bins_per_channel % 2 == 1 {
            return Err(Error::NonIntegerBinCount(self.bins_per_channel as f64));
        }
        let z = self.aperture();
        let (t, r) = (self.num_tx, self.num_rx);
        let (tx, rx) = match self.array {
            ArrayLayout::Random => random_array(t, r, z, derive_seed(seed, &[0])),
            ArrayLayout::Ula => ula_array(t, r),
            ArrayLayout::UlaTxDense => ula_array_tx_dense(t, r),
            ArrayLayout::Colocated => (vec![0.0; t], vec![0.0; r]),
        };
        let config = RadarConfig {
            num_tx: t,
            num_rx: r,
            num_pulses: self.num_pulses,
            pri: self.bins_per_channel as f64 / self.channel_bandwidth,
            channel_bandwidth: self.channel_bandwidth,
            carrier_freq: self.carrier_freq,
            tx_positions: tx,
            rx_positions: rx,
            tx_carriers: assign_carriers(t, self.channel_bandwidth, self.carriers, derive_seed(seed, &[1])),
            aperture: z,
            synthesis_mode: self.synthesis_mode,
            pulse_width: self.pulse_width,
            seed,
        };
        config.validate_layout()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_template_builds() {
        let cfg = ConfigTemplate::full_scale().build(3).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.bins_per_channel(), 500);
        assert_eq!(cfg.aperture, 200.0);
        assert!((cfg.pri - 100e-6).abs() < 1e-15);
        assert_eq!(cfg, ConfigTemplate::full_scale().build(3).unwrap());
        assert_ne!(cfg.tx_positions, ConfigTemplate::full_scale().build(4).unwrap().tx_positions);
    }

    #[test]
    fn toml_round_trip() {
        let t = ConfigTemplate { array: ArrayLayout::Ula, aperture: Some(50.0), ..ConfigTemplate::full_scale() };
        let text = toml::to_string(&t).unwrap();
        assert_eq!(toml::from_str::<ConfigTemplate>(&text).unwrap(), t);
    }

    #[test]
    fn odd_bins_rejected() {
        let t = ConfigTemplate { bins_per_channel: 5, ..ConfigTemplate::full_scale() };
        assert!(matches!(t.build(0), Err(Error::NonIntegerBinCount(_))));
    }
}
