//! Range, azimuth and Doppler measurement matrices.
//!
//! For transmitter m the range dictionary A^m is N x TN with
//! `A^m(k, s) = exp(-j 2pi (k - N/2) s / TN) * exp(-j 2pi (f_m / B_h) (s / T))`,
//! the azimuth dictionary B^m is R x TR with
//! `B^m(q, r) = exp(j 2pi beta_mq (-1 + 2r/TR))`, and the Doppler matrix F is
//! P x P with `F(p, u) = (-1)^p exp(-j 2pi p u / P)`.
//!
//! Matrices are evaluated entry by entry; dense copies are only built for small
//! configurations.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::synth::unit_phase_frac;

/// Largest matrix materialized by the `dense_*` helpers.
pub const DENSE_LIMIT: usize = 10_000_000;

/// How beta_mq is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaModel {
    /// (zeta_q + xi_m)(1 + f_m / f_c)
    #[default]
    Full,
    /// zeta_q + xi_m, dropping the carrier-offset factor.
    Simplified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionarySet {
    pub num_tx: usize,
    pub num_rx: usize,
    pub num_pulses: usize,
    pub num_bins: usize,
    pub beta_model: BetaModel,
    /// f_m tau per transmitter.
    pub carrier_bins: Vec<i64>,
    /// f_m / B_h per transmitter.
    pub carrier_ratio: Vec<f64>,
    /// beta_mq laid out `[m][q]`.
    pub beta: Vec<f64>,
}

pub fn build_dictionaries(config: &RadarConfig) -> Result<DictionarySet> {
    build_dictionaries_with(config, BetaModel::Full)
}

/// Builds the dictionaries. Only the layout invariants are checked, so carrier
/// sets with repeated bands (used in the sidelobe studies) are accepted.
pub fn build_dictionaries_with(config: &RadarConfig, beta_model: BetaModel) -> Result<DictionarySet> {
    config.validate_layout()?;
    let (t, r) = (config.num_tx, config.num_rx);
    let mut beta = Vec::with_capacity(t * r);
    for m in 0..t {
        for q in 0..r {
            beta.push(match beta_model {
                BetaModel::Full => config.beta(m, q),
                BetaModel::Simplified => config.tx_positions[m] + config.rx_positions[q],
            });
        }
    }
    Ok(DictionarySet {
        num_tx: t,
        num_rx: r,
        num_pulses: config.num_pulses,
        num_bins: config.bins_per_channel(),
        beta_model,
        carrier_bins: (0..t).map(|m| config.carrier_bin_offset(m)).collect(),
        carrier_ratio: config.tx_carriers.iter().map(|f| f / config.channel_bandwidth).collect(),
        beta,
    })
}

impl DictionarySet {
    pub fn total_bins(&self) -> usize {
        self.num_tx * self.num_bins
    }

    pub fn num_channels(&self) -> usize {
        self.num_tx * self.num_rx
    }

    pub fn beta(&self, m: usize, q: usize) -> f64 {
        self.beta[m * self.num_rx + q]
    }

    /// Signed global bin k - N/2 + f_m tau of in-band row `k` (0-based).
    pub fn global_bin(&self, m: usize, k: usize) -> i64 {
        k as i64 - self.num_bins as i64 / 2 + self.carrier_bins[m]
    }

    /// A^m(k, s), with the two phase factors merged into one integer phase.
    pub fn a(&self, m: usize, k: usize, s: usize) -> Complex64 {
        unit_phase_frac(self.global_bin(m, k) * s as i64, self.total_bins())
    }

    /// A^m(k, s) evaluated as the product of its two printed factors.
    pub fn a_two_factor(&self, m: usize, k: usize, s: usize) -> Complex64 {
        let tn = self.total_bins() as f64;
        let first = -2.0 * PI / tn * (k as f64 - self.num_bins as f64 / 2.0) * s as f64;
        let second = -2.0 * PI * self.carrier_ratio[m] * s as f64 / self.num_tx as f64;
        Complex64::from_polar(1.0, first) * Complex64::from_polar(1.0, second)
    }

    /// Azimuth grid value -1 + 2r/TR.
    pub fn azimuth(&self, r: usize) -> f64 {
        -1.0 + 2.0 * r as f64 / self.num_channels() as f64
    }

    pub fn b(&self, m: usize, q: usize, r: usize) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.beta(m, q) * self.azimuth(r))
    }

    pub fn f(&self, p: usize, u: usize) -> Complex64 {
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        unit_phase_frac((p * u) as i64, self.num_pulses) * sign
    }

    fn check_index(&self, m: usize, s: usize, r: usize, u: usize) -> Result<()> {
        if m >= self.num_tx || s >= self.total_bins() || r >= self.num_channels() || u >= self.num_pulses {
            return Err(Error::IndexOutOfRange(format!("atom (m={m}, s={s}, r={r}, u={u})")));
        }
        Ok(())
    }

    /// Atom of transmitter `m` for grid cell (s, r, u): the N x R x P block
    /// `A^m(k, s) B^m(q, r) F(p, u)` flattened with index `k + q N + p N R`.
    pub fn atom(&self, m: usize, s: usize, r: usize, u: usize) -> Result<Vec<Complex64>> {
        self.check_index(m, s, r, u)?;
        let (n, rr, pp) = (self.num_bins, self.num_rx, self.num_pulses);
        let a: Vec<Complex64> = (0..n).map(|k| self.a(m, k, s)).collect();
        let mut out = Vec::with_capacity(n * rr * pp);
        for p in 0..pp {
            let f = self.f(p, u);
            for q in 0..rr {
                let bf = self.b(m, q, r) * f;
                out.extend(a.iter().map(|x| x * bf));
            }
        }
        Ok(out)
    }

    /// Channel phase e^{j 2pi (beta_mq theta_r - f_m tau s / TN)} for every
    /// (m, q), laid out `[m][q]`. This is the part of the atom that varies
    /// across channels.
    pub fn channel_phases(&self, s: usize, r: usize) -> Vec<Complex64> {
        let theta = self.azimuth(r);
        let tn = self.total_bins();
        let mut out = Vec::with_capacity(self.num_channels());
        for m in 0..self.num_tx {
            let range = unit_phase_frac(self.carrier_bins[m] * s as i64, tn);
            for q in 0..self.num_rx {
                out.push(Complex64::from_polar(1.0, 2.0 * PI * self.beta(m, q) * theta) * range);
            }
        }
        out
    }

    fn check_dense(rows: usize, cols: usize) -> Result<()> {
        if rows * cols > DENSE_LIMIT {
            return Err(Error::InvalidConfig(format!(
                "dense {rows} x {cols} matrix exceeds {DENSE_LIMIT} entries"
            )));
        }
        Ok(())
    }

    pub fn dense_a(&self, m: usize) -> Result<Array2<Complex64>> {
        Self::check_dense(self.num_bins, self.total_bins())?;
        Ok(Array2::from_shape_fn((self.num_bins, self.total_bins()), |(k, s)| self.a(m, k, s)))
    }

    pub fn dense_b(&self, m: usize) -> Result<Array2<Complex64>> {
        Self::check_dense(self.num_rx, self.num_channels())?;
        Ok(Array2::from_shape_fn((self.num_rx, self.num_channels()), |(q, r)| self.b(m, q, r)))
    }

    pub fn dense_f(&self) -> Result<Array2<Complex64>> {
        Self::check_dense(self.num_pulses, self.num_pulses)?;
        Ok(Array2::from_shape_fn((self.num_pulses, self.num_pulses), |(p, u)| self.f(p, u)))
    }

    /// The T blocks A^m stacked vertically (TN x TN).
    pub fn stacked_a(&self) -> Result<Array2<Complex64>> {
        let (n, tn) = (self.num_bins, self.total_bins());
        Self::check_dense(tn, tn)?;
        Ok(Array2::from_shape_fn((tn, tn), |(i, s)| self.a(i / n, i % n, s)))
    }

    /// The T blocks B^m stacked vertically (TR x TR).
    pub fn stacked_b(&self) -> Result<Array2<Complex64>> {
        let (r, tr) = (self.num_rx, self.num_channels());
        Self::check_dense(tr, tr)?;
        Ok(Array2::from_shape_fn((tr, tr), |(i, c)| self.b(i / r, i % r, c)))
    }
}

/// Writes a dense matrix as CSV rows `row,col,re,im`.
pub fn write_matrix_csv<W: Write>(matrix: &Array2<Complex64>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["row", "col", "re", "im"])?;
    for ((i, j), z) in matrix.indexed_iter() {
        out.serialize((i, j, z.re, z.im))?;
    }
    out.flush()?;
    Ok(())
}
