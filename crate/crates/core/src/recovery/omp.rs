//! Simultaneous orthogonal matching pursuit over all channels.
//!
//! Work happens on the Doppler-focused data. The focused atom of cell
//! (s, r, u) is `P A^m(k, s) B^m(q, r)` on Doppler slice u and zero on every
//! other slice, so atoms on different slices are orthogonal and the
//! least-squares fit only couples atoms sharing a slice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::focus::{doppler_focus, FocusedMap};
use super::projection::{projection_argmax, projection_map};
use crate::channelizer::ChannelCoefficients;
use crate::config::{GridIndex, RadarConfig};
use crate::dictionary::DictionarySet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmpOptions {
    /// Number of targets L (iterations).
    pub targets: usize,
    /// Stop early once the residual norm falls to this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_threshold: Option<f64>,
}

impl OmpOptions {
    pub fn new(targets: usize) -> Self {
        Self { targets, residual_threshold: None }
    }
}

/// Physical parameters of a recovered target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Seconds.
    pub delay: f64,
    /// sin of the angle.
    pub azimuth: f64,
    /// Hz.
    pub doppler: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub method: String,
    pub support: Vec<GridIndex>,
    #[serde(with = "crate::io::complex_vec")]
    pub amplitudes: Vec<Complex64>,
    /// Residual norm before the first iteration and after each one.
    pub residual_norms: Vec<f64>,
    pub estimates: Vec<Estimate>,
    pub config_hash: String,
    pub seed: u64,
}

impl RecoveryResult {
    pub fn new(method: &str, config: &RadarConfig, support: Vec<GridIndex>, amplitudes: Vec<Complex64>, residual_norms: Vec<f64>) -> Self {
        let estimates = support
            .iter()
            .map(|i| Estimate {
                delay: config.delay_at(i.delay),
                azimuth: config.azimuth_at(i.azimuth),
                doppler: config.doppler_at(i.doppler),
            })
            .collect();
        Self {
            method: method.to_string(),
            support,
            amplitudes,
            residual_norms,
            estimates,
            config_hash: config.hash_hex(),
            seed: config.seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Focused atom restricted to its Doppler slice, laid out `[m][q][k]`.
fn focused_atom(dict: &DictionarySet, idx: GridIndex) -> Vec<Complex64> {
    let (n, p) = (dict.num_bins, dict.num_pulses as f64);
    let mut out = Vec::with_capacity(dict.num_tx * dict.num_rx * n);
    for m in 0..dict.num_tx {
        let a: Vec<Complex64> = (0..n).map(|k| dict.a(m, k, idx.delay)).collect();
        for q in 0..dict.num_rx {
            let b = dict.b(m, q, idx.azimuth) * p;
            out.extend(a.iter().map(|x| x * b));
        }
    }
    out
}

fn gather(phi: &FocusedMap, nu: usize) -> Vec<Complex64> {
    (0..phi.num_tx).flat_map(|m| phi.slice(m, nu).iter().copied()).collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Incremental QR (modified Gram-Schmidt with one re-orthogonalization pass)
/// of the selected focused atoms.
struct LeastSquares {
    slices: Vec<usize>,
    atoms: Vec<Vec<Complex64>>,
    q: Vec<Vec<Complex64>>,
    /// Columns of the upper-triangular factor.
    r: Vec<Vec<Complex64>>,
    /// Q^H applied to the data.
    z: Vec<Complex64>,
}

impl LeastSquares {
    fn new() -> Self {
        Self { slices: Vec::new(), atoms: Vec::new(), q: Vec::new(), r: Vec::new(), z: Vec::new() }
    }

    fn push(&mut self, nu: usize, atom: Vec<Complex64>, data: &FocusedMap, iteration: usize) -> Result<()> {
        let t = self.q.len();
        let mut v = atom.clone();
        let mut col = vec![Complex64::new(0.0, 0.0); t + 1];
        for _ in 0..2 {
            for j in 0..t {
                if self.slices[j] != nu {
                    continue;
                }
                let c = dot(&self.q[j], &v);
                v.iter_mut().zip(&self.q[j]).for_each(|(x, y)| *x -= c * y);
                col[j] += c;
            }
        }
        let rtt = norm(&v);
        if !(rtt > 1e-10 * norm(&atom)) {
            return Err(Error::SingularLs { iteration });
        }
        v.iter_mut().for_each(|x| *x /= rtt);
        col[t] = Complex64::new(rtt, 0.0);
        self.z.push(dot(&v, &gather(data, nu)));
        self.slices.push(nu);
        self.atoms.push(atom);
        self.q.push(v);
        self.r.push(col);
        Ok(())
    }

    /// Solves R alpha = Q^H y by back substitution.
    fn solve(&self) -> Vec<Complex64> {
        let t = self.z.len();
        let mut alpha = vec![Complex64::new(0.0, 0.0); t];
        for i in (0..t).rev() {
            let mut acc = self.z[i];
            for j in i + 1..t {
                acc -= self.r[j][i] * alpha[j];
            }
            alpha[i] = acc / self.r[i][i];
        }
        alpha
    }

    fn residual(&self, data: &FocusedMap, alpha: &[Complex64]) -> FocusedMap {
        let mut res = data.clone();
        let len = data.num_rx * data.num_bins;
        for ((nu, atom), a) in self.slices.iter().zip(&self.atoms).zip(alpha) {
            for m in 0..data.num_tx {
                let slice = res.slice_mut(m, *nu);
                for (x, y) in slice.iter_mut().zip(&atom[m * len..(m + 1) * len]) {
                    *x -= a * y;
                }
            }
        }
        res
    }
}

fn check_shapes(y: &ChannelCoefficients, dict: &DictionarySet) -> Result<()> {
    if (y.num_tx, y.num_rx, y.num_pulses, y.num_bins) != (dict.num_tx, dict.num_rx, dict.num_pulses, dict.num_bins) {
        return Err(Error::ShapeMismatch("channel coefficients do not match the dictionaries".into()));
    }
    Ok(())
}

/// Orthogonal matching pursuit with Doppler focusing.
pub fn omp3d(y: &ChannelCoefficients, dict: &DictionarySet, config: &RadarConfig, opts: &OmpOptions) -> Result<RecoveryResult> {
    omp_impl(y, dict, config, opts, "omp3d")
}

/// Range-azimuth recovery for a single pulse.
pub fn omp2d(y: &ChannelCoefficients, dict: &DictionarySet, config: &RadarConfig, opts: &OmpOptions) -> Result<RecoveryResult> {
    if y.num_pulses != 1 {
        return Err(Error::InvalidConfig("omp2d needs a single pulse; use omp3d".into()));
    }
    omp_impl(y, dict, config, opts, "omp2d")
}

fn omp_impl(y: &ChannelCoefficients, dict: &DictionarySet, config: &RadarConfig, opts: &OmpOptions, method: &str) -> Result<RecoveryResult> {
    check_shapes(y, dict)?;
    let phi = doppler_focus(y);
    let scale = (dict.num_pulses as f64).sqrt().recip();
    let mut residual = phi.clone();
    let mut norms = vec![phi.norm() * scale];
    let mut ls = LeastSquares::new();
    let mut support = Vec::new();
    let mut alpha = Vec::new();
    for t in 0..opts.targets {
        if opts.residual_threshold.is_some_and(|th| norms[t] <= th) {
            break;
        }
        let (idx, _) = projection_argmax(&residual, dict, &support);
        ls.push(idx.doppler, focused_atom(dict, idx), &phi, t)?;
        support.push(idx);
        alpha = ls.solve();
        residual = ls.residual(&phi, &alpha);
        norms.push(residual.norm() * scale);
    }
    Ok(RecoveryResult::new(method, config, support, alpha, norms))
}

/// Single-pass detection: the `targets` largest peaks of the initial map
/// (one-bin neighbourhoods suppressed), then a joint least-squares fit of their
/// amplitudes. No residual is fed back into the selection.
pub fn omp_first_iteration(y: &ChannelCoefficients, dict: &DictionarySet, config: &RadarConfig, opts: &OmpOptions) -> Result<RecoveryResult> {
    check_shapes(y, dict)?;
    let phi = doppler_focus(y);
    let scale = (dict.num_pulses as f64).sqrt().recip();
    let map = projection_map(&phi, dict);
    let mut norms = vec![phi.norm() * scale];
    let mut ls = LeastSquares::new();
    let mut support = Vec::new();
    let mut alpha = Vec::new();
    for (t, (idx, _)) in map.peaks(opts.targets).into_iter().enumerate() {
        ls.push(idx.doppler, focused_atom(dict, idx), &phi, t)?;
        support.push(idx);
        alpha = ls.solve();
        norms.push(ls.residual(&phi, &alpha).norm() * scale);
    }
    Ok(RecoveryResult::new("omp-first-iteration", config, support, alpha, norms))
}

/// Residual of the focused data after removing `support` with `amplitudes`.
pub fn focused_residual(y: &ChannelCoefficients, dict: &DictionarySet, support: &[GridIndex], amplitudes: &[Complex64]) -> FocusedMap {
    let phi = doppler_focus(y);
    let mut ls = LeastSquares::new();
    for idx in support {
        ls.slices.push(idx.doppler);
        ls.atoms.push(focused_atom(dict, *idx));
    }
    ls.residual(&phi, amplitudes)
}
