//! Doppler focusing: `Phi^nu = sum_p y^p exp(j 2pi nu p tau)` on the Doppler
//! grid, i.e. an unnormalized inverse DFT of `(-1)^p y^p` over pulses.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::channelizer::ChannelCoefficients;
use crate::parallel;

/// Focused coefficients stored `[m][nu][q][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusedMap {
    pub num_tx: usize,
    pub num_rx: usize,
    pub num_doppler: usize,
    pub num_bins: usize,
    pub data: Vec<Complex64>,
}

impl FocusedMap {
    /// Contiguous N x R slice of transmitter `m` at Doppler bin `nu`, `[q][k]`.
    pub fn slice(&self, m: usize, nu: usize) -> &[Complex64] {
        let len = self.num_rx * self.num_bins;
        let start = (m * self.num_doppler + nu) * len;
        &self.data[start..start + len]
    }

    pub fn slice_mut(&mut self, m: usize, nu: usize) -> &mut [Complex64] {
        let len = self.num_rx * self.num_bins;
        let start = (m * self.num_doppler + nu) * len;
        &mut self.data[start..start + len]
    }

    /// Phi[m][nu][k][q] with k 0-based in-band.
    pub fn at(&self, m: usize, nu: usize, k: usize, q: usize) -> Complex64 {
        self.slice(m, nu)[q * self.num_bins + k]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn doppler_focus(y: &ChannelCoefficients) -> FocusedMap {
    let (t, r, p, n) = (y.num_tx, y.num_rx, y.num_pulses, y.num_bins);
    let mut data = vec![Complex64::new(0.0, 0.0); t * p * r * n];
    if p == 1 {
        data.copy_from_slice(&y.data);
    } else {
        let fft = FftPlanner::new().plan_fft_inverse(p);
        // One chunk per transmitter: [nu][q][k] holds (m, q, k) series over pulses.
        parallel::for_each_chunk_mut(&mut data, p * r * n, |m, out| {
            let mut series = vec![Complex64::new(0.0, 0.0); p];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for q in 0..r {
                for k in 0..n {
                    for (pp, x) in series.iter_mut().enumerate() {
                        let v = y.channel(m, q, pp)[k];
                        *x = if pp % 2 == 0 { v } else { -v };
                    }
                    fft.process_with_scratch(&mut series, &mut scratch);
                    for (nu, x) in series.iter().enumerate() {
                        out[(nu * r + q) * n + k] = *x;
                    }
                }
            }
        });
    }
    FocusedMap { num_tx: t, num_rx: r, num_doppler: p, num_bins: n, data }
}

/// Direct evaluation of the focusing sum at Doppler frequency `nu_hz`.
pub fn focus_at(y: &ChannelCoefficients, pri: f64, nu_hz: f64, m: usize, q: usize, k: usize) -> Complex64 {
    (0..y.num_pulses)
        .map(|p| y.channel(m, q, p)[k] * Complex64::from_polar(1.0, 2.0 * PI * nu_hz * p as f64 * pri))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channelizer::channelize;
    use crate::config::{SynthesisMode, Target, TargetScene};
    use crate::synth::{add_noise, synthesize, tests::small, NoiseBandwidth, RxSpectra};
    use crate::waveforms::WaveformBank;

    #[test]
    fn single_pulse_is_identity() {
        let cfg = small(3, 2, 8, 1, 1, true);
        let s = synthesize(&cfg, &TargetScene::new(vec![Target::new(Complex64::new(1.0, 2.0), 4, 3, 0)]), &WaveformBank::fdma_flat(&cfg), SynthesisMode::Exact).unwrap();
        let y = channelize(&s, &WaveformBank::fdma_flat(&cfg), &cfg).unwrap();
        assert_eq!(doppler_focus(&y).data, y.data);
    }

    #[test]
    fn on_grid_target_concentrates_in_one_bin() {
        let cfg = small(3, 3, 8, 5, 2, true);
        let bank = WaveformBank::fdma_flat(&cfg);
        let alpha = Complex64::from_polar(0.8, 1.1);
        let s = synthesize(&cfg, &TargetScene::new(vec![Target::new(alpha, 10, 4, 3)]), &bank, SynthesisMode::Simplified).unwrap();
        let y = channelize(&s, &bank, &cfg).unwrap();
        let phi = doppler_focus(&y);
        for m in 0..3 {
            for nu in 0..5 {
                for q in 0..3 {
                    for k in 0..8 {
                        let v = phi.at(m, nu, k, q).norm();
                        if nu == 3 {
                            assert!((v - 5.0 * alpha.norm()).abs() < 1e-10);
                        } else {
                            assert!(v < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn matches_direct_sum_and_conserves_energy() {
        let cfg = small(2, 3, 6, 7, 3, true);
        let noisy = add_noise(&RxSpectra::zeros(&cfg), &cfg, 0.0, 5, NoiseBandwidth::PerChannel).unwrap();
        let y = channelize(&noisy, &WaveformBank::fdma_flat(&cfg), &cfg).unwrap();
        let phi = doppler_focus(&y);
        for u in 0..7 {
            let nu = cfg.doppler_at(u);
            for (m, q, k) in [(0, 0, 0), (1, 2, 5), (1, 1, 3)] {
                assert!((phi.at(m, u, k, q) - focus_at(&y, cfg.pri, nu, m, q, k)).norm() < 1e-10);
            }
        }
        let e_in: f64 = y.data.iter().map(|z| z.norm_sqr()).sum();
        assert!((phi.norm().powi(2) / 7.0 / e_in - 1.0).abs() < 1e-12);
    }
}
