//! Pulse envelope spectra, carrier assignment, array layouts and the CDMA
//! code bank.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::parallel;
use crate::rng::{seeded_rng, substream};

/// Floor on |H_0| relative to its peak. Bounds the noise gain of the
/// normalized matched filter at 60 dB.
pub const ENVELOPE_FLOOR: f64 = 1e-3;

/// Baseband envelope spectrum H_0(2 pi k / tau) for k in [-N/2, N/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpectrum {
    pub values: Vec<Complex64>,
    pub bandwidth: f64,
    /// Set when some bins were raised to the floor.
    #[serde(default)]
    pub floor_lifted: bool,
}

impl EnvelopeSpectrum {
    /// Wraps user-supplied values, rejecting sub-floor bins.
    pub fn from_values(values: Vec<Complex64>, bandwidth: f64) -> Result<Self> {
        let peak = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(bin) = values.iter().position(|z| z.norm() < ENVELOPE_FLOOR * peak || peak == 0.0) {
            return Err(Error::FloorViolation { bin });
        }
        Ok(Self { values, bandwidth, floor_lifted: false })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at baseband bin `k` in [-N/2, N/2).
    pub fn at(&self, k: i64) -> Complex64 {
        self.values[(k + self.len() as i64 / 2) as usize]
    }

    /// Pulse energy sum |H_0|^2 / tau.
    pub fn energy(&self, pri: f64) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / pri
    }

    pub fn min_magnitude(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Flat unit-energy spectrum over the N bins of one channel.
pub fn flat_envelope(config: &RadarConfig) -> EnvelopeSpectrum {
    let n = config.bins_per_channel();
    let mag = (config.pri / n as f64).sqrt();
    EnvelopeSpectrum {
        values: vec![Complex64::new(mag, 0.0); n],
        bandwidth: config.channel_bandwidth,
        floor_lifted: false,
    }
}

/// Spectrum of a Gaussian pulse with time-domain standard deviation
/// `time_width`, truncated to `truncation_bandwidth` (two-sided, Hz) and
/// renormalized to unit energy. Bins are sampled at (k + 1/2)/tau, so the
/// result is symmetric under k -> -k - 1. A zero `time_width` gives the flat
/// spectrum.
pub fn gaussian_envelope(config: &RadarConfig, time_width: f64, truncation_bandwidth: f64) -> Result<EnvelopeSpectrum> {
    if !(truncation_bandwidth > 0.0 && truncation_bandwidth <= config.channel_bandwidth * (1.0 + 1e-12)) {
        return Err(Error::InvalidConfig("truncation bandwidth must lie in (0, B_h]".into()));
    }
    if !(time_width >= 0.0 && time_width.is_finite()) {
        return Err(Error::InvalidConfig("gaussian time width must be finite and non-negative".into()));
    }
    let n = config.bins_per_channel() as i64;
    let mut values: Vec<f64> = (-n / 2..n / 2)
        .map(|k| {
            let f = (k as f64 + 0.5) / config.pri;
            if f.abs() > truncation_bandwidth / 2.0 {
                0.0
            } else {
                let a = 2.0 * std::f64::consts::PI * time_width * f;
                (-0.5 * a * a).exp()
            }
        })
        .collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    let floor = ENVELOPE_FLOOR * peak;
    let mut floor_lifted = false;
    for v in values.iter_mut() {
        if *v < floor {
            *v = floor;
            floor_lifted = true;
        }
    }
    let energy: f64 = values.iter().map(|v| v * v).sum::<f64>() / config.pri;
    let scale = energy.sqrt().recip();
    Ok(EnvelopeSpectrum {
        values: values.into_iter().map(|v| Complex64::new(v * scale, 0.0)).collect(),
        bandwidth: config.channel_bandwidth,
        floor_lifted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierMode {
    /// Band indices are a uniform random permutation of 0..T.
    #[default]
    RandomPermutation,
    /// f_m = (m - (T-1)/2) B_h.
    Linear,
    /// Band indices drawn i.i.d. uniform on 0..T (bands may repeat).
    RandomIid,
}

/// Carrier offsets f_m = (i_m - (T-1)/2) B_h.
pub fn assign_carriers(num_tx: usize, bandwidth: f64, mode: CarrierMode, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    let indices: Vec<usize> = match mode {
        CarrierMode::Linear => (0..num_tx).collect(),
        CarrierMode::RandomPermutation => {
            let mut idx: Vec<usize> = (0..num_tx).collect();
            // Fisher-Yates
            for i in (1..num_tx).rev() {
                let j = rng.random_range(0..=i);
                idx.swap(i, j);
            }
            idx
        }
        CarrierMode::RandomIid => (0..num_tx).map(|_| rng.random_range(0..num_tx)).collect(),
    };
    let center = (num_tx as f64 - 1.0) / 2.0;
    indices.into_iter().map(|i| (i as f64 - center) * bandwidth).collect()
}

/// Transmit and receive positions drawn i.i.d. uniform on [0, Z] (wavelengths).
pub fn random_array(num_tx: usize, num_rx: usize, aperture: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seeded_rng(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>() * aperture).collect() };
    let tx = draw(num_tx);
    let rx = draw(num_rx);
    (tx, rx)
}

/// Virtual ULA with receivers at q/2 and transmitters at R m / 2.
pub fn ula_array(num_tx: usize, num_rx: usize) -> (Vec<f64>, Vec<f64>) {
    let tx = (0..num_tx).map(|m| (num_rx * m) as f64 / 2.0).collect();
    let rx = (0..num_rx).map(|q| q as f64 / 2.0).collect();
    (tx, rx)
}

/// Virtual ULA with the roles swapped: transmitters at m/2, receivers at T q / 2.
/// With linear carriers this layout puts channel gamma = qT + m on carrier
/// (gamma mod T), which gives the r - sR coupling line.
pub fn ula_array_tx_dense(num_tx: usize, num_rx: usize) -> (Vec<f64>, Vec<f64>) {
    let tx = (0..num_tx).map(|m| m as f64 / 2.0).collect();
    let rx = (0..num_rx).map(|q| (num_tx * q) as f64 / 2.0).collect();
    (tx, rx)
}

/// Phase alphabet for random CDMA codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeAlphabet {
    /// M-ary PSK with the given number of phases.
    Psk(u32),
    /// Phases uniform on [0, 2 pi).
    Continuous,
}

impl Default for CodeAlphabet {
    fn default() -> Self {
        CodeAlphabet::Psk(4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdmaBank {
    /// T codes of N_c unit-modulus chips.
    pub codes: Vec<Vec<Complex64>>,
    /// Chip (slot) duration in seconds.
    pub chip_duration: f64,
    /// Worst pairwise normalized cross-correlation over all lags.
    pub max_cross_correlation: f64,
    pub alphabet: CodeAlphabet,
    pub trials: usize,
    pub seed: u64,
}

impl CdmaBank {
    pub fn num_chips(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }

    /// Writes `tx,chip,re,im` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["tx", "chip", "re", "im"])?;
        for (m, code) in self.codes.iter().enumerate() {
            for (u, z) in code.iter().enumerate() {
                out.write_record([m.to_string(), u.to_string(), z.re.to_string(), z.im.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdmaBank {
    pub carriers: Vec<f64>,
    pub envelope: EnvelopeSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum WaveformBank {
    Fdma(FdmaBank),
    Cdma(CdmaBank),
}

impl WaveformBank {
    /// FDMA bank using the config's carriers and the given envelope.
    pub fn fdma(config: &RadarConfig, envelope: EnvelopeSpectrum) -> Result<Self> {
        if envelope.len() != config.bins_per_channel() {
            return Err(Error::ShapeMismatch(format!(
                "envelope has {} bins, channel has {}",
                envelope.len(),
                config.bins_per_channel()
            )));
        }
        Ok(WaveformBank::Fdma(FdmaBank { carriers: config.tx_carriers.clone(), envelope }))
    }

    /// FDMA bank with the flat envelope.
    pub fn fdma_flat(config: &RadarConfig) -> Self {
        WaveformBank::Fdma(FdmaBank { carriers: config.tx_carriers.clone(), envelope: flat_envelope(config) })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            WaveformBank::Fdma(_) => "fdma",
            WaveformBank::Cdma(_) => "cdma",
        }
    }

    /// H_m over the T N global bins (index 0 is k = -TN/2).
    ///
    /// FDMA: H_0 shifted to the transmitter's band, zero elsewhere.
    /// CDMA: flat chip spectrum over the whole band times the code's DFT,
    /// with chips of duration tau / (T N).
    pub fn global_spectrum(&self, config: &RadarConfig, m: usize) -> Result<Vec<Complex64>> {
        let tn = config.total_bins();
        let half = tn as i64 / 2;
        let mut out = vec![Complex64::new(0.0, 0.0); tn];
        match self {
            WaveformBank::Fdma(bank) => {
                let n = bank.envelope.len() as i64;
                let shift = (bank.carriers[m] * config.pri).round() as i64;
                let start = shift - n / 2 + half;
                if start < 0 || start + n > tn as i64 {
                    return Err(Error::BandOverflow(m));
                }
                out[start as usize..(start + n) as usize].copy_from_slice(&bank.envelope.values);
            }
            WaveformBank::Cdma(bank) => {
                let code = &bank.codes[m];
                let nc = code.len();
                if nc > tn {
                    return Err(Error::BandOverflow(m));
                }
                let scale = (config.pri / tn as f64).sqrt() / (nc as f64).sqrt();
                for (g, slot) in out.iter_mut().enumerate() {
                    let k = g as i64 - half;
                    let acc: Complex64 = code
                        .iter()
                        .enumerate()
                        .map(|(u, w)| {
                            let ph = -2.0 * std::f64::consts::PI * ((k * u as i64).rem_euclid(tn as i64)) as f64
                                / tn as f64;
                            w * Complex64::from_polar(1.0, ph)
                        })
                        .sum();
                    *slot = acc * scale;
                }
            }
        }
        Ok(out)
    }
}

/// Largest |sum_u a_u conj(b_{u+lag})| / N_c over all aperiodic lags.
pub fn peak_cross_correlation(a: &[Complex64], b: &[Complex64]) -> f64 {
    let n = a.len() as i64;
    let mut best = 0.0f64;
    for lag in -(n - 1)..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for u in 0..n {
            let v = u + lag;
            if (0..n).contains(&v) {
                acc += a[u as usize] * b[v as usize].conj();
            }
        }
        best = best.max(acc.norm());
    }
    best / n as f64
}

/// Worst pairwise cross-correlation of a code set; 0 for a single code.
pub fn max_cross_correlation(codes: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..codes.len() {
        for j in i + 1..codes.len() {
            worst = worst.max(peak_cross_correlation(&codes[i], &codes[j]));
        }
    }
    worst
}

fn random_code_set<R: Rng>(rng: &mut R, num_tx: usize, num_chips: usize, alphabet: CodeAlphabet) -> Vec<Vec<Complex64>> {
    let tau = 2.0 * std::f64::consts::PI;
    (0..num_tx)
        .map(|_| {
            (0..num_chips)
                .map(|_| {
                    let phase = match alphabet {
                        CodeAlphabet::Psk(m) => tau * rng.random_range(0..m.max(1)) as f64 / m.max(1) as f64,
                        CodeAlphabet::Continuous => tau * rng.random::<f64>(),
                    };
                    Complex64::from_polar(1.0, phase)
                })
                .collect()
        })
        .collect()
}

/// Random search over `num_trials` independent code sets; keeps the one with
/// the smallest worst-case cross-correlation (ties go to the earlier trial).
pub fn cdma_code_search(
    num_tx: usize,
    num_chips: usize,
    num_trials: usize,
    seed: u64,
    alphabet: CodeAlphabet,
    pri: f64,
    total_bins: usize,
) -> Result<CdmaBank> {
    if num_trials == 0 || num_chips == 0 || num_tx == 0 {
        return Err(Error::InvalidConfig("code search needs T, N_c and trials >= 1".into()));
    }
    let scores = parallel::map_range(num_trials, |trial| {
        let codes = random_code_set(&mut substream(seed, trial as u64), num_tx, num_chips, alphabet);
        max_cross_correlation(&codes)
    });
    let (best_trial, best) = scores
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let codes = random_code_set(&mut substream(seed, best_trial as u64), num_tx, num_chips, alphabet);
    Ok(CdmaBank {
        codes,
        chip_duration: pri / total_bins.max(1) as f64,
        max_cross_correlation: best,
        alphabet,
        trials: num_trials,
        seed,
    })
}

/// CDMA bank sized for `config` (chips of duration tau / TN).
pub fn cdma_bank_for(config: &RadarConfig, num_chips: usize, num_trials: usize, seed: u64, alphabet: CodeAlphabet) -> Result<WaveformBank> {
    if num_chips > config.total_bins() {
        return Err(Error::InvalidConfig(format!(
            "{num_chips} chips do not fit in {} bins",
            config.total_bins()
        )));
    }
    let bank = cdma_code_search(config.num_tx, num_chips, num_trials, seed, alphabet, config.pri, config.total_bins())?;
    Ok(WaveformBank::Cdma(bank))
}
