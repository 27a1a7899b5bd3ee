//! Classic CDMA MIMO processing: per-code matched filter, range compression,
//! beamforming over the virtual array, Doppler processing and peak picking.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::parallel;
use crate::recovery::{OmpOptions, ProjectionMap, RecoveryResult};
use crate::synth::RxSpectra;
use crate::waveforms::WaveformBank;

/// Processed CDMA data laid out `[u][r][s]` over TN delay bins, TR azimuth
/// bins and P Doppler bins, scaled so an isolated target's peak equals its
/// amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct CdmaMap {
    pub num_doppler: usize,
    pub num_azimuth: usize,
    pub num_delay: usize,
    pub values: Vec<Complex64>,
}

impl CdmaMap {
    pub fn magnitude(&self) -> ProjectionMap {
        ProjectionMap {
            num_doppler: self.num_doppler,
            num_azimuth: self.num_azimuth,
            num_delay: self.num_delay,
            values: self.values.iter().map(|z| z.norm()).collect(),
        }
    }

    pub fn header(&self, config: &RadarConfig) -> crate::io::TensorHeader {
        crate::io::TensorHeader {
            shape: vec![self.num_doppler, self.num_azimuth, self.num_delay],
            config_hash: crate::io::hash_u64(config),
            seed: config.seed,
        }
    }

    /// Writes the range-azimuth magnitude slice at Doppler bin `u` as
    /// `delay,azimuth,magnitude` rows.
    pub fn write_slice_csv<W: std::io::Write>(&self, u: usize, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["delay", "azimuth", "magnitude"])?;
        let plane = self.num_azimuth * self.num_delay;
        for (i, z) in self.values[u * plane..(u + 1) * plane].iter().enumerate() {
            out.serialize((i % self.num_delay, i / self.num_delay, z.norm()))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn cdma_map(spectra: &RxSpectra, bank: &WaveformBank, config: &RadarConfig) -> Result<CdmaMap> {
    if !matches!(bank, WaveformBank::Cdma(_)) {
        return Err(Error::FamilyMismatch { expected: "cdma" });
    }
    config.validate_layout()?;
    let (t, r, p, tn, tr) = (config.num_tx, config.num_rx, config.num_pulses, config.total_bins(), config.num_channels());
    if (spectra.num_rx, spectra.num_pulses, spectra.num_bins) != (r, p, tn) {
        return Err(Error::ShapeMismatch("spectra do not match the config".into()));
    }
    let filters: Vec<Vec<Complex64>> = (0..t)
        .map(|m| bank.global_spectrum(config, m).map(|h| h.iter().map(|z| z.conj()).collect()))
        .collect::<Result<_>>()?;
    let gain = r as f64 * p as f64 * filters.iter().map(|h| h.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() / config.pri;
    if gain == 0.0 {
        return Err(Error::InvalidConfig("CDMA codes have zero energy".into()));
    }

    // Matched filter, range compression and Doppler processing: [m][q][u][s].
    let range_fft = FftPlanner::new().plan_fft_inverse(tn);
    let doppler_fft = FftPlanner::new().plan_fft_inverse(p);
    let half = tn / 2;
    let mut compressed = vec![Complex64::new(0.0, 0.0); t * r * p * tn];
    parallel::for_each_chunk_mut(&mut compressed, p * tn, |channel, out| {
        let (m, q) = (channel / r, channel % r);
        for (pp, row) in out.chunks_exact_mut(tn).enumerate() {
            let c = spectra.row(q, pp);
            // Global index g holds bin k = g - TN/2; the FFT wants k mod TN.
            for (g, (x, h)) in c.iter().zip(&filters[m]).enumerate() {
                row[(g + half) % tn] = x * h;
            }
            range_fft.process(row);
            if pp % 2 == 1 {
                row.iter_mut().for_each(|z| *z = -*z);
            }
        }
        if p > 1 {
            let mut series = vec![Complex64::new(0.0, 0.0); p];
            for s in 0..tn {
                for (pp, x) in series.iter_mut().enumerate() {
                    *x = out[pp * tn + s];
                }
                doppler_fft.process(&mut series);
                for (u, x) in series.iter().enumerate() {
                    out[u * tn + s] = *x;
                }
            }
        }
    });

    // Beamforming with steering phases exp(j 2pi (xi_m + zeta_q) theta_r).
    let mut values = vec![Complex64::new(0.0, 0.0); p * tr * tn];
    parallel::for_each_chunk_mut(&mut values, tn, |row_index, row| {
        let (u, rr) = (row_index / tr, row_index % tr);
        let theta = config.azimuth_at(rr);
        for m in 0..t {
            for q in 0..r {
                let geom = config.tx_positions[m] + config.rx_positions[q];
                let w = Complex64::from_polar(1.0 / gain, -2.0 * PI * geom * theta);
                let src = &compressed[((m * r + q) * p + u) * tn..][..tn];
                row.iter_mut().zip(src).for_each(|(o, x)| *o += x * w);
            }
        }
    });
    Ok(CdmaMap { num_doppler: p, num_azimuth: tr, num_delay: tn, values })
}

/// Runs the chain and reports the `opts.targets` strongest distinct peaks.
pub fn cdma_process(spectra: &RxSpectra, bank: &WaveformBank, config: &RadarConfig, opts: &OmpOptions) -> Result<RecoveryResult> {
    let map = cdma_map(spectra, bank, config)?;
    let mag = map.magnitude();
    let peaks = mag.peaks(opts.targets);
    let support: Vec<_> = peaks.iter().map(|(i, _)| *i).collect();
    let amplitudes = support.iter().map(|i| map.values[mag.linear(*i)]).collect();
    Ok(RecoveryResult::new("cdma", config, support, amplitudes, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{SynthesisMode, Target, TargetScene};
    use crate::synth::{synthesize, tests::small};
    use crate::waveforms::{cdma_bank_for, CodeAlphabet};

    #[test]
    fn single_code_recovers_target_exactly() {
        let cfg = small(1, 4, 16, 3, 2, true);
        let bank = cdma_bank_for(&cfg, 16, 4, 2, CodeAlphabet::Psk(4)).unwrap();
        let tgt = Target::new(Complex64::from_polar(2.0, 0.4), 5, 2, 1);
        let s = synthesize(&cfg, &TargetScene::new(vec![tgt]), &bank, SynthesisMode::Simplified).unwrap();
        let res = cdma_process(&s, &bank, &cfg, &OmpOptions::new(1)).unwrap();
        assert_eq!(res.support, vec![tgt.index()]);
        assert!((res.amplitudes[0] - tgt.amplitude).norm() < 1e-9);
    }

    #[test]
    fn global_phase_does_not_change_magnitudes() {
        let cfg = small(3, 3, 8, 2, 4, true);
        let bank = cdma_bank_for(&cfg, 24, 4, 1, CodeAlphabet::Psk(4)).unwrap();
        let scene = TargetScene::new(vec![Target::new(Complex64::new(1.0, 0.0), 3, 2, 0), Target::new(Complex64::new(0.5, 0.5), 11, 7, 1)]);
        let rot = Complex64::from_polar(1.0, 1.3);
        let rotated = TargetScene::new(scene.targets.iter().map(|t| Target { amplitude: t.amplitude * rot, ..*t }).collect());
        let a = cdma_map(&synthesize(&cfg, &scene, &bank, SynthesisMode::Exact).unwrap(), &bank, &cfg).unwrap().magnitude();
        let b = cdma_map(&synthesize(&cfg, &rotated, &bank, SynthesisMode::Exact).unwrap(), &bank, &cfg).unwrap().magnitude();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_fdma_bank() {
        let cfg = small(2, 2, 4, 1, 1, true);
        let s = RxSpectra::zeros(&cfg);
        let err = cdma_process(&s, &WaveformBank::fdma_flat(&cfg), &cfg, &OmpOptions::new(1));
        assert!(matches!(err, Err(Error::FamilyMismatch { .. })));
    }

    #[test]
    fn slice_csv() {
        let cfg = small(2, 2, 4, 1, 1, true);
        let bank = cdma_bank_for(&cfg, 8, 2, 1, CodeAlphabet::Psk(4)).unwrap();
        let map = cdma_map(&RxSpectra::zeros(&cfg), &bank, &cfg).unwrap();
        let mut buf = Vec::new();
        map.write_slice_csv(0, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 8 * 4);
    }
}
