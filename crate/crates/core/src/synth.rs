//! Received-signal synthesis directly in the Fourier-coefficient domain.
//!
//! For receiver q and pulse p the coefficient at global bin k is
//!
//! ```text
//! c_q^p[k] = 1/tau * sum_m H_m(k) sum_l alpha_l * spatial_mq(l) * exp(-j 2pi k tau_eff / tau) * exp(-j 2pi f_D p tau)
//! ```
//!
//! In `Simplified` mode `spatial = exp(j 2pi beta_mq theta_l)` and
//! `tau_eff = tau_l`. In `Exact` mode the carrier phase is
//! `exp(j 2pi f_c eta_mq theta_l)` and `tau_eff = tau_l - eta_mq theta_l`, so the
//! per-channel envelope misalignment is present in the data.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{RadarConfig, SynthesisMode, TargetScene};
use crate::error::{Error, Result};
use crate::io::TensorHeader;
use crate::parallel;
use crate::rng::substream;
use crate::waveforms::WaveformBank;

/// Received Fourier coefficients, laid out `[q][p][k]` with k over the T N
/// global bins (index 0 is k = -TN/2).
#[derive(Debug, Clone, PartialEq)]
pub struct RxSpectra {
    pub num_rx: usize,
    pub num_pulses: usize,
    pub num_bins: usize,
    pub data: Vec<Complex64>,
    /// Variance of the added noise per bin (0 when noiseless).
    pub noise_variance: f64,
    pub config_hash: u64,
    pub seed: u64,
}

impl RxSpectra {
    pub fn zeros(config: &RadarConfig) -> Self {
        let (r, p, tn) = (config.num_rx, config.num_pulses, config.total_bins());
        Self {
            num_rx: r,
            num_pulses: p,
            num_bins: tn,
            data: vec![Complex64::new(0.0, 0.0); r * p * tn],
            noise_variance: 0.0,
            config_hash: crate::io::hash_u64(config),
            seed: config.seed,
        }
    }

    /// Coefficients of receiver `q`, pulse `p`.
    pub fn row(&self, q: usize, p: usize) -> &[Complex64] {
        let start = (q * self.num_pulses + p) * self.num_bins;
        &self.data[start..start + self.num_bins]
    }

    /// Coefficient at signed global bin `k`.
    pub fn at(&self, q: usize, p: usize, k: i64) -> Complex64 {
        self.row(q, p)[(k + self.num_bins as i64 / 2) as usize]
    }

    pub fn header(&self) -> TensorHeader {
        TensorHeader {
            shape: vec![self.num_rx, self.num_pulses, self.num_bins],
            config_hash: self.config_hash,
            seed: self.seed,
        }
    }

    pub fn from_tensor(header: &TensorHeader, data: Vec<Complex64>) -> Result<Self> {
        match header.shape.as_slice() {
            &[r, p, tn] if r * p * tn == data.len() => Ok(Self {
                num_rx: r,
                num_pulses: p,
                num_bins: tn,
                data,
                noise_variance: 0.0,
                config_hash: header.config_hash,
                seed: header.seed,
            }),
            other => Err(Error::ShapeMismatch(format!("expected [R, P, TN], got {other:?}"))),
        }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if (self.num_rx, self.num_pulses, self.num_bins) != (other.num_rx, other.num_pulses, other.num_bins) {
            return Err(Error::ShapeMismatch("spectra shapes differ".into()));
        }
        Ok(())
    }

    /// Elementwise sum (noise variances add).
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        out.noise_variance += other.noise_variance;
        Ok(out)
    }
}

/// Per-transmitter carrier offsets that enter the phase terms: the FDMA
/// carriers, or zero for CDMA where every code shares the band.
fn phase_carriers(config: &RadarConfig, bank: &WaveformBank) -> Vec<f64> {
    match bank {
        WaveformBank::Fdma(b) => b.carriers.clone(),
        WaveformBank::Cdma(_) => vec![0.0; config.num_tx],
    }
}

/// Bins where a global spectrum is non-zero, with their values.
fn support(h: &[Complex64]) -> Vec<(usize, Complex64)> {
    h.iter().enumerate().filter(|(_, z)| z.norm_sqr() > 0.0).map(|(g, z)| (g, *z)).collect()
}

/// exp(-j 2 pi a / n) with a reduced modulo n first.
pub(crate) fn unit_phase_frac(a: i64, n: usize) -> Complex64 {
    let r = a.rem_euclid(n as i64) as f64 / n as f64;
    Complex64::from_polar(1.0, -2.0 * PI * r)
}

/// Noiseless received coefficients of `scene`.
pub fn synthesize(config: &RadarConfig, scene: &TargetScene, bank: &WaveformBank, mode: SynthesisMode) -> Result<RxSpectra> {
    match bank {
        WaveformBank::Fdma(b) => {
            config.validate()?;
            if b.carriers != config.tx_carriers {
                return Err(Error::InvalidConfig("bank carriers differ from config carriers".into()));
            }
        }
        WaveformBank::Cdma(b) => {
            config.validate_layout()?;
            if b.codes.len() != config.num_tx {
                return Err(Error::ShapeMismatch("one code per transmitter expected".into()));
            }
        }
    }
    scene.validate(config)?;
    let (t, p_count, tn) = (config.num_tx, config.num_pulses, config.total_bins());
    let half = tn as i64 / 2;
    let spectra = (0..t)
        .map(|m| bank.global_spectrum(config, m).map(|h| support(&h)))
        .collect::<Result<Vec<_>>>()?;
    let carriers = phase_carriers(config, bank);
    let inv_tau = 1.0 / config.pri;

    let mut out = RxSpectra::zeros(config);
    parallel::for_each_chunk_mut(&mut out.data, tn, |row_index, row| {
        let (q, p) = (row_index / p_count, row_index % p_count);
        for (m, band) in spectra.iter().enumerate() {
            let geom = config.tx_positions[m] + config.rx_positions[q];
            let eta = config.eta(m, q);
            for target in &scene.targets {
                let theta = config.azimuth_at(target.azimuth_index);
                let spatial = match mode {
                    SynthesisMode::Simplified => geom * (1.0 + carriers[m] / config.carrier_freq) * theta,
                    SynthesisMode::Exact => geom * theta,
                };
                // exp(-j 2 pi f_D p tau) = exp(j pi p) exp(-j 2 pi u p / P)
                let doppler = unit_phase_frac((target.doppler_index * p) as i64, p_count)
                    * if p % 2 == 0 { 1.0 } else { -1.0 };
                let coeff = target.amplitude * Complex64::from_polar(inv_tau, 2.0 * PI * spatial) * doppler;
                let misalign = match mode {
                    SynthesisMode::Simplified => 0.0,
                    SynthesisMode::Exact => eta * theta / config.pri,
                };
                for &(g, h) in band {
                    let k = g as i64 - half;
                    let mut ph = unit_phase_frac(k * target.delay_index as i64, tn);
                    if misalign != 0.0 {
                        ph *= Complex64::from_polar(1.0, 2.0 * PI * k as f64 * misalign);
                    }
                    row[g] += coeff * h * ph;
                }
            }
        }
    });
    Ok(out)
}

/// Which bandwidth the noise power is referred to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseBandwidth {
    /// N_0 B_h (per channel).
    #[default]
    PerChannel,
    /// N_0 T B_h.
    Total,
}

/// Per-bin noise variance N_0 / tau for a unit-energy pulse at `snr_db`, with
/// SNR = (E_h / T_p) / (N_0 B).
pub fn noise_variance_per_bin(config: &RadarConfig, snr_db: f64, bandwidth: NoiseBandwidth) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let b = match bandwidth {
        NoiseBandwidth::PerChannel => config.channel_bandwidth,
        NoiseBandwidth::Total => config.total_bandwidth(),
    };
    let snr = 10f64.powf(snr_db / 10.0);
    let n0 = 1.0 / (config.pulse_width() * b * snr);
    n0 / config.pri
}

/// Adds circular complex white Gaussian noise. Each (q, p) row draws from its
/// own substream of `seed`, so the result does not depend on scheduling.
/// `snr_db = +inf` leaves the spectra unchanged.
pub fn add_noise(spectra: &RxSpectra, config: &RadarConfig, snr_db: f64, seed: u64, bandwidth: NoiseBandwidth) -> Result<RxSpectra> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidConfig("snr_db must be finite or +inf".into()));
    }
    let mut out = spectra.clone();
    let var = noise_variance_per_bin(config, snr_db, bandwidth);
    if var == 0.0 {
        return Ok(out);
    }
    let sd = (var / 2.0).sqrt();
    parallel::for_each_chunk_mut(&mut out.data, spectra.num_bins, |row_index, row| {
        let mut rng = substream(seed, row_index as u64);
        for z in row.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z += Complex64::new(re * sd, im * sd);
        }
    });
    out.noise_variance += var;
    out.seed = seed;
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::config::{GridIndex, Target};
    use crate::waveforms::{assign_carriers, random_array, ula_array, CarrierMode};

    /// Small config: T, R transmitters/receivers, N bins, P pulses.
    pub(crate) fn small(t: usize, r: usize, n: usize, p: usize, seed: u64, random: bool) -> RadarConfig {
        let bh = 1e6;
        let aperture = (t * r) as f64 / 2.0;
        let (tx, rx) = if random { random_array(t, r, aperture, seed) } else { ula_array(t, r) };
        let mode = if random { CarrierMode::RandomPermutation } else { CarrierMode::Linear };
        RadarConfig {
            num_tx: t,
            num_rx: r,
            num_pulses: p,
            pri: n as f64 / bh,
            channel_bandwidth: bh,
            carrier_freq: 10e9,
            tx_positions: tx,
            rx_positions: rx,
            tx_carriers: assign_carriers(t, bh, mode, seed ^ 0xC0FFEE),
            aperture,
            synthesis_mode: SynthesisMode::Simplified,
            pulse_width: None,
            seed,
        }
    }

    fn unit(idx: GridIndex) -> Target {
        Target::new(Complex64::new(1.0, 0.0), idx.delay, idx.azimuth, idx.doppler)
    }

    #[test]
    fn empty_scene_is_zero() {
        let cfg = small(3, 2, 8, 2, 1, true);
        let s = synthesize(&cfg, &TargetScene::default(), &WaveformBank::fdma_flat(&cfg), SynthesisMode::Exact).unwrap();
        assert!(s.data.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn simplified_matches_closed_form() {
        // Independent evaluation of the Fourier-series expression term by term.
        let cfg = small(3, 3, 6, 4, 0, false);
        let tn = cfg.total_bins() as i64;
        let target = Target::new(Complex64::from_polar(0.7, 0.3), 5, cfg.num_channels() / 2, 2);
        let scene = TargetScene::new(vec![target]);
        let bank = WaveformBank::fdma_flat(&cfg);
        let s = synthesize(&cfg, &scene, &bank, SynthesisMode::Simplified).unwrap();
        let env = crate::waveforms::flat_envelope(&cfg);
        let n = cfg.bins_per_channel() as i64;
        let tau_l = cfg.delay_at(5);
        let theta = cfg.azimuth_at(target.azimuth_index);
        let fd = cfg.doppler_at(2);
        for q in 0..3 {
            for p in 0..4 {
                for k in -tn / 2..tn / 2 {
                    let mut expect = Complex64::new(0.0, 0.0);
                    for m in 0..3 {
                        let kb = k - cfg.carrier_bin_offset(m);
                        if kb < -n / 2 || kb >= n / 2 {
                            continue;
                        }
                        let phase = 2.0 * PI * cfg.beta(m, q) * theta
                            - 2.0 * PI / cfg.pri * k as f64 * tau_l
                            - 2.0 * PI * fd * p as f64 * cfg.pri;
                        expect += target.amplitude * Complex64::from_polar(1.0 / cfg.pri, phase) * env.at(kb);
                    }
                    let got = s.at(q, p, k);
                    assert!((got - expect).norm() <= 1e-12 * expect.norm().max(1.0), "{got} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn linearity_and_scaling() {
        let cfg = small(4, 3, 6, 3, 5, true);
        let bank = WaveformBank::fdma_flat(&cfg);
        let a = TargetScene::new(vec![Target::new(Complex64::new(0.5, 1.0), 3, 4, 1)]);
        let b = TargetScene::new(vec![Target::new(Complex64::new(-1.0, 0.2), 17, 9, 2)]);
        let ab = TargetScene::new(vec![a.targets[0], b.targets[0]]);
        for mode in [SynthesisMode::Exact, SynthesisMode::Simplified] {
            let sa = synthesize(&cfg, &a, &bank, mode).unwrap();
            let sb = synthesize(&cfg, &b, &bank, mode).unwrap();
            let sab = synthesize(&cfg, &ab, &bank, mode).unwrap();
            let sum = sa.add(&sb).unwrap();
            for (x, y) in sab.data.iter().zip(&sum.data) {
                assert!((x - y).norm() < 1e-9);
            }
            let c = Complex64::new(0.0, -3.0);
            let scaled = TargetScene::new(vec![Target { amplitude: a.targets[0].amplitude * c, ..a.targets[0] }]);
            let ss = synthesize(&cfg, &scaled, &bank, mode).unwrap();
            for (x, y) in ss.data.iter().zip(&sa.data) {
                assert!((x - y * c).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn colocated_array_makes_modes_agree() {
        let mut cfg = small(4, 4, 8, 2, 2, true);
        cfg.tx_positions.iter_mut().for_each(|x| *x = 0.0);
        cfg.rx_positions.iter_mut().for_each(|x| *x = 0.0);
        let bank = WaveformBank::fdma_flat(&cfg);
        let scene = TargetScene::new(vec![unit(GridIndex::new(7, 3, 1)), unit(GridIndex::new(20, 15, 0))]);
        let e = synthesize(&cfg, &scene, &bank, SynthesisMode::Exact).unwrap();
        let s = synthesize(&cfg, &scene, &bank, SynthesisMode::Simplified).unwrap();
        for (x, y) in e.data.iter().zip(&s.data) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_diverges_once_relaxed_margin_exceeds_one() {
        let mut worst_by_margin = Vec::new();
        for bw_scale in [0.01, 0.1, 1.0, 4.0] {
            let mut cfg = small(4, 4, 8, 1, 4, true);
            // aperture 8 wavelengths at 10 GHz -> relaxed margin = 16 B_h / f_c
            cfg.channel_bandwidth = bw_scale * 10e9 / 16.0;
            cfg.pri = 8.0 / cfg.channel_bandwidth;
            cfg.tx_carriers = assign_carriers(4, cfg.channel_bandwidth, CarrierMode::RandomPermutation, 1);
            cfg.tx_positions = vec![0.0, 8.0, 3.0, 8.0];
            cfg.rx_positions = vec![8.0, 0.0, 5.0, 8.0];
            let margin = crate::config::validate_config(&cfg, 0.0, 1.0).unwrap().narrowband_relaxed.margin;
            let bank = WaveformBank::fdma_flat(&cfg);
            let scene = TargetScene::new(vec![unit(GridIndex::new(5, 1, 0))]);
            let e = synthesize(&cfg, &scene, &bank, SynthesisMode::Exact).unwrap();
            let s = synthesize(&cfg, &scene, &bank, SynthesisMode::Simplified).unwrap();
            let worst = e
                .data
                .iter()
                .zip(&s.data)
                .filter(|(_, y)| y.norm() > 0.0)
                .map(|(x, y)| (x - y).norm() / y.norm())
                .fold(0.0, f64::max);
            worst_by_margin.push((margin, worst));
        }
        for w in worst_by_margin.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        for (margin, worst) in worst_by_margin {
            if margin > 1.0 {
                assert!(worst > 0.1, "margin {margin}: {worst}");
            }
        }
    }

    #[test]
    fn noise_statistics() {
        let cfg = small(4, 5, 500, 10, 1, true);
        let zero = RxSpectra::zeros(&cfg);
        let snr_db = 3.0;
        let noisy = add_noise(&zero, &cfg, snr_db, 99, NoiseBandwidth::PerChannel).unwrap();
        let var = noise_variance_per_bin(&cfg, snr_db, NoiseBandwidth::PerChannel);
        assert_eq!(noisy.data.len(), 100_000);
        let est = noisy.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / noisy.data.len() as f64;
        assert!((est / var - 1.0).abs() < 0.02, "{est} vs {var}");
        let mean: Complex64 = noisy.data.iter().sum::<Complex64>() / noisy.data.len() as f64;
        assert!(mean.norm() < 0.02 * var.sqrt());
        assert_eq!(noisy, add_noise(&zero, &cfg, snr_db, 99, NoiseBandwidth::PerChannel).unwrap());
        let total = noise_variance_per_bin(&cfg, snr_db, NoiseBandwidth::Total);
        assert!((var / total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_snr_is_identity() {
        let cfg = small(2, 2, 4, 1, 1, true);
        let s = synthesize(
            &cfg,
            &TargetScene::new(vec![unit(GridIndex::new(1, 1, 0))]),
            &WaveformBank::fdma_flat(&cfg),
            SynthesisMode::Exact,
        )
        .unwrap();
        assert_eq!(add_noise(&s, &cfg, f64::INFINITY, 1, NoiseBandwidth::PerChannel).unwrap(), s);
        assert!(add_noise(&s, &cfg, f64::NAN, 1, NoiseBandwidth::PerChannel).is_err());
    }
}
