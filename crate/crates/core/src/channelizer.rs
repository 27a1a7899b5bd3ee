//! Splits FDMA received coefficients into per-transmitter channels.
//!
//! Channel (m, q) at in-band bin k in [-N/2, N/2) is the received coefficient at
//! global bin k + f_m tau, matched by tau H_m^* / |H_0|^2. Since
//! H_m(k + f_m tau) = H_0(k) this is a single multiply by tau / H_0(k).

use num_complex::Complex64;

use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::parallel;
use crate::synth::RxSpectra;
use crate::waveforms::WaveformBank;

/// Channel coefficients laid out `[m][q][p][k]`, k in-band (index 0 is -N/2).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoefficients {
    pub num_tx: usize,
    pub num_rx: usize,
    pub num_pulses: usize,
    pub num_bins: usize,
    pub data: Vec<Complex64>,
}

impl ChannelCoefficients {
    pub fn channel(&self, m: usize, q: usize, p: usize) -> &[Complex64] {
        let start = ((m * self.num_rx + q) * self.num_pulses + p) * self.num_bins;
        &self.data[start..start + self.num_bins]
    }

    pub fn at(&self, m: usize, q: usize, p: usize, k: i64) -> Complex64 {
        self.channel(m, q, p)[(k + self.num_bins as i64 / 2) as usize]
    }

    /// Samples of transmitter `m`, pulse `p` as an N x R block, `[q][k]`.
    pub fn block(&self, m: usize, p: usize) -> Vec<Complex64> {
        (0..self.num_rx).flat_map(|q| self.channel(m, q, p).iter().copied()).collect()
    }
}

pub fn channelize(spectra: &RxSpectra, bank: &WaveformBank, config: &RadarConfig) -> Result<ChannelCoefficients> {
    let fdma = match bank {
        WaveformBank::Fdma(b) => b,
        WaveformBank::Cdma(_) => return Err(Error::FamilyMismatch { expected: "fdma" }),
    };
    let (t, r, p, n, tn) = (config.num_tx, config.num_rx, config.num_pulses, config.bins_per_channel(), config.total_bins());
    if (spectra.num_rx, spectra.num_pulses, spectra.num_bins) != (r, p, tn) {
        return Err(Error::ShapeMismatch(format!(
            "spectra [{}, {}, {}] do not match config [{r}, {p}, {tn}]",
            spectra.num_rx, spectra.num_pulses, spectra.num_bins
        )));
    }
    let mut starts = Vec::with_capacity(t);
    for m in 0..t {
        // global 0-based index of in-band bin -N/2
        let start = config.carrier_bin_offset(m) + tn as i64 / 2 - n as i64 / 2;
        if start < 0 || start as usize + n > tn {
            return Err(Error::MissingBand(m));
        }
        starts.push(start as usize);
    }
    let matched: Vec<Complex64> = fdma.envelope.values.iter().map(|h| config.pri / h).collect();
    let mut data = vec![Complex64::new(0.0, 0.0); t * r * p * n];
    parallel::for_each_chunk_mut(&mut data, n, |i, out| {
        let m = i / (r * p);
        let (q, pp) = ((i / p) % r, i % p);
        let row = &spectra.row(q, pp)[starts[m]..starts[m] + n];
        for ((o, y), w) in out.iter_mut().zip(row).zip(&matched) {
            *o = y * w;
        }
    });
    Ok(ChannelCoefficients { num_tx: t, num_rx: r, num_pulses: p, num_bins: n, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{SynthesisMode, Target, TargetScene};
    use crate::synth::{synthesize, tests::small};
    use crate::waveforms::gaussian_envelope;
    use std::f64::consts::PI;

    #[test]
    fn single_target_channels_match_model() {
        let cfg = small(4, 3, 8, 3, 11, true);
        let env = gaussian_envelope(&cfg, cfg.pri / 8.0, cfg.channel_bandwidth).unwrap();
        let bank = WaveformBank::fdma(&cfg, env).unwrap();
        let tgt = Target::new(Complex64::from_polar(1.3, -0.4), 9, 5, 2);
        let s = synthesize(&cfg, &TargetScene::new(vec![tgt]), &bank, SynthesisMode::Simplified).unwrap();
        let c = channelize(&s, &bank, &cfg).unwrap();
        let tn = cfg.total_bins() as f64;
        let theta = cfg.azimuth_at(tgt.azimuth_index);
        for m in 0..4 {
            for q in 0..3 {
                for p in 0..3 {
                    for k in -4i64..4 {
                        let g = k + cfg.carrier_bin_offset(m);
                        let phase = 2.0 * PI * cfg.beta(m, q) * theta - 2.0 * PI * g as f64 * 9.0 / tn
                            - 2.0 * PI * cfg.doppler_at(2) * p as f64 * cfg.pri;
                        let expect = tgt.amplitude * Complex64::from_polar(1.0, phase);
                        assert!((c.at(m, q, p, k) - expect).norm() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn wrong_family_and_shape() {
        let cfg = small(2, 2, 4, 1, 1, true);
        let s = RxSpectra::zeros(&cfg);
        let cdma = crate::waveforms::cdma_bank_for(&cfg, 8, 2, 1, Default::default()).unwrap();
        assert!(matches!(channelize(&s, &cdma, &cfg), Err(Error::FamilyMismatch { .. })));
        let mut other = cfg.clone();
        other.num_pulses = 2;
        assert!(matches!(channelize(&s, &WaveformBank::fdma_flat(&cfg), &other), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn carrier_outside_grid_is_missing_band() {
        let mut cfg = small(2, 2, 4, 1, 1, true);
        let s = RxSpectra::zeros(&cfg);
        cfg.tx_carriers[1] = 5.0 * cfg.channel_bandwidth;
        let bank = WaveformBank::Fdma(crate::waveforms::FdmaBank {
            carriers: cfg.tx_carriers.clone(),
            envelope: crate::waveforms::flat_envelope(&cfg),
        });
        assert!(matches!(channelize(&s, &bank, &cfg), Err(Error::MissingBand(1))));
    }
}
