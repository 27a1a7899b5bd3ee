//! Correlation of a focused residual with every grid atom:
//!
//! ```text
//! Psi^nu(s, r) = sum_m sum_{k,q} conj(A^m(k, s)) Phi^{m,nu}(k, q) conj(B^m(q, r))
//! ```
//!
//! Since `conj(A^m(k, s)) = exp(j 2pi s g_m(k) / TN)` with an integer global bin
//! g_m(k), each (nu, r) column is the beamformed residual scattered onto the
//! TN global bins followed by one inverse FFT of length TN.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::focus::FocusedMap;
use crate::config::GridIndex;
use crate::dictionary::DictionarySet;
use crate::parallel;

/// Azimuth columns handled per work item.
const COLUMN_BLOCK: usize = 8;

/// Magnitudes |Psi| laid out `[nu][r][s]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectionMap {
    pub num_doppler: usize,
    pub num_azimuth: usize,
    pub num_delay: usize,
    pub values: Vec<f64>,
}

impl ProjectionMap {
    pub fn at(&self, idx: GridIndex) -> f64 {
        self.values[self.linear(idx)]
    }

    pub fn linear(&self, idx: GridIndex) -> usize {
        (idx.doppler * self.num_azimuth + idx.azimuth) * self.num_delay + idx.delay
    }

    pub fn index_of(&self, linear: usize) -> GridIndex {
        let s = linear % self.num_delay;
        let r = (linear / self.num_delay) % self.num_azimuth;
        GridIndex::new(s, r, linear / (self.num_delay * self.num_azimuth))
    }

    /// Largest cell, ties to the smallest linear index.
    pub fn argmax(&self) -> (GridIndex, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        (self.index_of(best.0), best.1)
    }

    /// Up to `count` peaks in decreasing order. After each pick the cells
    /// within one bin of it on every axis (no wraparound) are excluded.
    pub fn peaks(&self, count: usize) -> Vec<(GridIndex, f64)> {
        let near = |a: GridIndex, b: GridIndex| {
            a.delay.abs_diff(b.delay) <= 1 && a.azimuth.abs_diff(b.azimuth) <= 1 && a.doppler.abs_diff(b.doppler) <= 1
        };
        let mut picked: Vec<(GridIndex, f64)> = Vec::with_capacity(count);
        while picked.len() < count {
            let mut best: Option<(usize, f64)> = None;
            for (i, &v) in self.values.iter().enumerate() {
                if best.is_some_and(|b| v <= b.1) {
                    continue;
                }
                let idx = self.index_of(i);
                if !picked.iter().any(|(p, _)| near(*p, idx)) {
                    best = Some((i, v));
                }
            }
            match best {
                Some((i, v)) => picked.push((self.index_of(i), v)),
                None => break,
            }
        }
        picked
    }
}

/// Complex projection value at a single grid cell, by direct summation.
pub fn project_cell(phi: &FocusedMap, dict: &DictionarySet, idx: GridIndex) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..dict.num_tx {
        let slice = phi.slice(m, idx.doppler);
        for q in 0..dict.num_rx {
            let b = dict.b(m, q, idx.azimuth).conj();
            for k in 0..dict.num_bins {
                acc += dict.a(m, k, idx.delay).conj() * slice[q * dict.num_bins + k] * b;
            }
        }
    }
    acc
}

struct Kernel {
    fft: Arc<dyn Fft<f64>>,
    /// Global FFT index (g mod TN) of in-band row k for each transmitter, `[m][k]`.
    scatter: Vec<usize>,
    /// conj(B^m(q, r)) laid out `[m][q][r]`.
    conj_b: Vec<Complex64>,
}

impl Kernel {
    fn new(dict: &DictionarySet) -> Self {
        let tn = dict.total_bins();
        let tr = dict.num_channels();
        let mut scatter = Vec::with_capacity(dict.num_tx * dict.num_bins);
        for m in 0..dict.num_tx {
            for k in 0..dict.num_bins {
                scatter.push(dict.global_bin(m, k).rem_euclid(tn as i64) as usize);
            }
        }
        let mut conj_b = Vec::with_capacity(dict.num_tx * dict.num_rx * tr);
        for m in 0..dict.num_tx {
            for q in 0..dict.num_rx {
                for r in 0..tr {
                    conj_b.push(dict.b(m, q, r).conj());
                }
            }
        }
        Self { fft: FftPlanner::new().plan_fft_inverse(tn), scatter, conj_b }
    }

    /// Fills `out` (rows of TN) with Psi^nu(., r) for r in `r0..r0 + rows`.
    fn columns(&self, phi: &FocusedMap, dict: &DictionarySet, nu: usize, r0: usize, out: &mut [Complex64], scratch: &mut [Complex64]) {
        let (n, tn, tr) = (dict.num_bins, dict.total_bins(), dict.num_channels());
        let rows = out.len() / tn;
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for m in 0..dict.num_tx {
            let slice = phi.slice(m, nu);
            let idx = &self.scatter[m * n..(m + 1) * n];
            for q in 0..dict.num_rx {
                let data = &slice[q * n..(q + 1) * n];
                let weights = &self.conj_b[(m * dict.num_rx + q) * tr + r0..][..rows];
                for (row, w) in out.chunks_exact_mut(tn).zip(weights) {
                    for (&g, x) in idx.iter().zip(data) {
                        row[g] += x * w;
                    }
                }
            }
        }
        for row in out.chunks_exact_mut(tn) {
            self.fft.process_with_scratch(row, scratch);
        }
    }
}

fn blocks(dict: &DictionarySet) -> Vec<(usize, usize, usize)> {
    let tr = dict.num_channels();
    let mut out = Vec::new();
    for nu in 0..dict.num_pulses {
        let mut r0 = 0;
        while r0 < tr {
            let rows = COLUMN_BLOCK.min(tr - r0);
            out.push((nu, r0, rows));
            r0 += rows;
        }
    }
    out
}

/// Full magnitude map |Psi|.
pub fn projection_map(phi: &FocusedMap, dict: &DictionarySet) -> ProjectionMap {
    let (tn, tr, p) = (dict.total_bins(), dict.num_channels(), dict.num_pulses);
    let kernel = Kernel::new(dict);
    let work = blocks(dict);
    let init = || (vec![Complex64::new(0.0, 0.0); COLUMN_BLOCK * tn], vec![Complex64::new(0.0, 0.0); kernel.fft.get_inplace_scratch_len()]);
    let results = parallel::map_range_with(work.len(), init, |(buf, scratch), i| {
        let (nu, r0, rows) = work[i];
        let out = &mut buf[..rows * tn];
        kernel.columns(phi, dict, nu, r0, out, scratch);
        out.iter().map(|z| z.norm()).collect::<Vec<f64>>()
    });
    // Work items are in linear-index order.
    let values = results.concat();
    ProjectionMap { num_doppler: p, num_azimuth: tr, num_delay: tn, values }
}

/// Largest |Psi| over cells not in `excluded`, without storing the map.
/// Ties go to the smallest linear index `nu TR TN + r TN + s`.
pub fn projection_argmax(phi: &FocusedMap, dict: &DictionarySet, excluded: &[GridIndex]) -> (GridIndex, f64) {
    let tn = dict.total_bins();
    let kernel = Kernel::new(dict);
    let work = blocks(dict);
    let init = || (vec![Complex64::new(0.0, 0.0); COLUMN_BLOCK * tn], vec![Complex64::new(0.0, 0.0); kernel.fft.get_inplace_scratch_len()]);
    let partial = parallel::map_range_with(work.len(), init, |(buf, scratch), i| {
        let (nu, r0, rows) = work[i];
        let out = &mut buf[..rows * tn];
        kernel.columns(phi, dict, nu, r0, out, scratch);
        let mut best: Option<(GridIndex, f64)> = None;
        for (j, row) in out.chunks_exact(tn).enumerate() {
            for (s, z) in row.iter().enumerate() {
                let v = z.norm_sqr();
                if best.is_none_or(|b| v > b.1) {
                    let idx = GridIndex::new(s, r0 + j, nu);
                    if !excluded.contains(&idx) {
                        best = Some((idx, v));
                    }
                }
            }
        }
        best
    });
    // Work items are in increasing linear-index order, so strict comparison keeps the earliest tie.
    let mut best: Option<(GridIndex, f64)> = None;
    for cand in partial.into_iter().flatten() {
        if best.is_none_or(|b| cand.1 > b.1) {
            best = Some(cand);
        }
    }
    let (idx, v) = best.unwrap_or((GridIndex::new(0, 0, 0), 0.0));
    (idx, v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channelizer::channelize;
    use crate::dictionary::build_dictionaries;
    use crate::recovery::focus::doppler_focus;
    use crate::synth::{add_noise, tests::small, NoiseBandwidth, RxSpectra};
    use crate::waveforms::WaveformBank;

    fn noise_phi(seed: u64, p: usize) -> (FocusedMap, DictionarySet) {
        let cfg = small(3, 3, 8, p, seed, true);
        let noisy = add_noise(&RxSpectra::zeros(&cfg), &cfg, 0.0, seed, NoiseBandwidth::PerChannel).unwrap();
        let y = channelize(&noisy, &WaveformBank::fdma_flat(&cfg), &cfg).unwrap();
        (doppler_focus(&y), build_dictionaries(&cfg).unwrap())
    }

    #[test]
    fn fast_map_matches_direct_sum() {
        let (phi, dict) = noise_phi(4, 3);
        let map = projection_map(&phi, &dict);
        assert_eq!(map.values.len(), 3 * 9 * 24);
        for (i, &v) in map.values.iter().enumerate() {
            let direct = project_cell(&phi, &dict, map.index_of(i)).norm();
            assert!((v - direct).abs() < 1e-9 * direct.max(1.0), "{i}");
        }
    }

    #[test]
    fn streaming_argmax_matches_map() {
        for seed in 0..5 {
            let (phi, dict) = noise_phi(seed, 2);
            let map = projection_map(&phi, &dict);
            let (idx, v) = projection_argmax(&phi, &dict, &[]);
            assert_eq!(idx, map.argmax().0);
            assert!((v - map.argmax().1).abs() < 1e-12);
            let (second, _) = projection_argmax(&phi, &dict, &[idx]);
            assert_ne!(second, idx);
            let mut masked = map.clone();
            masked.values[map.linear(idx)] = f64::NEG_INFINITY;
            assert_eq!(second, masked.argmax().0);
        }
    }

    #[test]
    fn zero_map_ties_to_first_cell() {
        let (mut phi, dict) = noise_phi(1, 2);
        phi.data.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        assert_eq!(projection_argmax(&phi, &dict, &[]).0, GridIndex::new(0, 0, 0));
        assert_eq!(projection_argmax(&phi, &dict, &[GridIndex::new(0, 0, 0)]).0, GridIndex::new(1, 0, 0));
    }

    #[test]
    fn peaks_respect_neighbourhood() {
        let mut map = ProjectionMap { num_doppler: 1, num_azimuth: 4, num_delay: 5, values: vec![0.0; 20] };
        let i = map.linear(GridIndex::new(2, 1, 0));
        map.values[i] = 5.0;
        let i = map.linear(GridIndex::new(3, 2, 0));
        map.values[i] = 4.0;
        let i = map.linear(GridIndex::new(0, 3, 0));
        map.values[i] = 3.0;
        let peaks = map.peaks(2);
        assert_eq!(peaks[0].0, GridIndex::new(2, 1, 0));
        assert_eq!(peaks[1].0, GridIndex::new(0, 3, 0));
        assert!(map.peaks(100).len() < 20);
    }
}
