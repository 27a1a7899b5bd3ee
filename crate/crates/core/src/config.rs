//! Radar configuration, on-grid targets, parameter grids and the modeling
//! assumption checks.
//!
//! Antenna positions are kept in wavelength units (the normalized positions
//! that appear in every phase term). Carriers are baseband offsets in Hz.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative tolerance when checking that a real quantity is an integer.
const INTEGER_TOL: f64 = 1e-9;

/// How received spectra are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisMode {
    /// Channel-dependent envelope delays are kept (wideband array effects present).
    #[default]
    Exact,
    /// Geometry delay removed from the baseband envelope only.
    Simplified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub num_tx: usize,
    pub num_rx: usize,
    pub num_pulses: usize,
    /// Pulse repetition interval in seconds.
    pub pri: f64,
    /// Per-transmitter bandwidth in Hz.
    pub channel_bandwidth: f64,
    pub carrier_freq: f64,
    /// Transmitter positions in wavelengths.
    pub tx_positions: Vec<f64>,
    /// Receiver positions in wavelengths.
    pub rx_positions: Vec<f64>,
    /// Baseband carrier offset of each transmitter in Hz.
    pub tx_carriers: Vec<f64>,
    /// Normalized aperture in wavelengths.
    pub aperture: f64,
    #[serde(default)]
    pub synthesis_mode: SynthesisMode,
    /// Pulse time support in seconds; defaults to the PRI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_width: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn nearest_integer(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= INTEGER_TOL * r.abs().max(1.0) {
        Some(r as i64)
    } else {
        None
    }
}

impl RadarConfig {
    /// Number of Fourier bins per channel, N = tau * B_h.
    pub fn bins_per_channel(&self) -> usize {
        (self.pri * self.channel_bandwidth).round() as usize
    }

    /// Number of global Fourier bins, T * N.
    pub fn total_bins(&self) -> usize {
        self.num_tx * self.bins_per_channel()
    }

    /// Number of virtual channels, T * R.
    pub fn num_channels(&self) -> usize {
        self.num_tx * self.num_rx
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Total transmitted bandwidth T * B_h.
    pub fn total_bandwidth(&self) -> f64 {
        self.num_tx as f64 * self.channel_bandwidth
    }

    pub fn pulse_width(&self) -> f64 {
        self.pulse_width.unwrap_or(self.pri)
    }

    /// Carrier offset of transmitter `m` in bins, f_m * tau.
    pub fn carrier_bin_offset(&self, m: usize) -> i64 {
        (self.tx_carriers[m] * self.pri).round() as i64
    }

    /// Band index i_m in `0..T` such that f_m = (i_m - (T-1)/2) B_h.
    pub fn carrier_band_index(&self, m: usize) -> Option<usize> {
        let t = self.num_tx as f64;
        let i = nearest_integer(self.tx_carriers[m] / self.channel_bandwidth + (t - 1.0) / 2.0)?;
        (0..self.num_tx as i64).contains(&i).then_some(i as usize)
    }

    /// Virtual-array phase coefficient (zeta_q + xi_m)(f_m lambda / c + 1).
    pub fn beta(&self, m: usize, q: usize) -> f64 {
        (self.rx_positions[q] + self.tx_positions[m]) * (1.0 + self.tx_carriers[m] / self.carrier_freq)
    }

    /// Two-way geometric delay coefficient eta_mq = (xi_m + zeta_q) lambda / c in seconds.
    pub fn eta(&self, m: usize, q: usize) -> f64 {
        (self.rx_positions[q] + self.tx_positions[m]) / self.carrier_freq
    }

    /// True when f_c * tau is an integer (the per-pulse carrier phase cancels).
    pub fn carrier_phase_aligned(&self) -> bool {
        nearest_integer(self.carrier_freq * self.pri).is_some()
    }

    /// Checks every structural invariant except carrier distinctness.
    ///
    /// Dictionaries and coupling studies that deliberately reuse carriers call
    /// this directly; the synthesis chain uses [`RadarConfig::validate`].
    pub fn validate_layout(&self) -> Result<()> {
        if self.num_tx == 0 || self.num_rx == 0 || self.num_pulses == 0 {
            return Err(Error::InvalidConfig(
                "num_tx, num_rx and num_pulses must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("pri", self.pri),
            ("channel_bandwidth", self.channel_bandwidth),
            ("carrier_freq", self.carrier_freq),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and positive")));
            }
        }
        if let Some(tp) = self.pulse_width {
            if !(tp.is_finite() && tp > 0.0 && tp <= self.pri) {
                return Err(Error::InvalidConfig("pulse_width must lie in (0, pri]".into()));
            }
        }
        let n = self.pri * self.channel_bandwidth;
        match nearest_integer(n) {
            Some(k) if k > 0 && k % 2 == 0 => {}
            _ => return Err(Error::NonIntegerBinCount(n)),
        }
        if self.tx_positions.len() != self.num_tx
            || self.tx_carriers.len() != self.num_tx
            || self.rx_positions.len() != self.num_rx
        {
            return Err(Error::InvalidConfig(
                "position/carrier list lengths must match num_tx and num_rx".into(),
            ));
        }
        if !(self.aperture.is_finite() && self.aperture >= 0.0) {
            return Err(Error::InvalidConfig("aperture must be finite and non-negative".into()));
        }
        let in_aperture = |x: &f64| x.is_finite() && *x >= 0.0 && *x <= self.aperture * (1.0 + 1e-12);
        if !self.tx_positions.iter().all(in_aperture) || !self.rx_positions.iter().all(in_aperture) {
            return Err(Error::InvalidConfig("antenna positions must lie in [0, aperture]".into()));
        }
        for m in 0..self.num_tx {
            let f = self.tx_carriers[m];
            let off_grid = self.carrier_band_index(m).is_none()
                || nearest_integer(f * self.pri).is_none();
            if off_grid {
                return Err(Error::CarrierOffGrid { index: m, freq_hz: f });
            }
        }
        Ok(())
    }

    /// Full validation: layout invariants plus non-overlapping carrier bands.
    pub fn validate(&self) -> Result<()> {
        self.validate_layout()?;
        let mut owner = vec![None; self.num_tx];
        for m in 0..self.num_tx {
            let i = self.carrier_band_index(m).expect("checked by validate_layout");
            if let Some(prev) = owner[i] {
                return Err(Error::DuplicateCarrier(prev, m));
            }
            owner[i] = Some(m);
        }
        Ok(())
    }

    pub fn delay_at(&self, s: usize) -> f64 {
        self.pri / self.total_bins() as f64 * s as f64
    }

    pub fn azimuth_at(&self, r: usize) -> f64 {
        -1.0 + 2.0 / self.num_channels() as f64 * r as f64
    }

    pub fn doppler_at(&self, u: usize) -> f64 {
        -1.0 / (2.0 * self.pri) + u as f64 / (self.num_pulses as f64 * self.pri)
    }

    /// Nearest grid indices for a physical (delay, azimuth sine, Doppler) triple.
    pub fn nearest_index(&self, delay: f64, azimuth: f64, doppler: f64) -> GridIndex {
        let tn = self.total_bins() as f64;
        let tr = self.num_channels() as f64;
        let p = self.num_pulses as f64;
        let clamp = |x: f64, hi: f64| x.round().clamp(0.0, hi - 1.0) as usize;
        GridIndex {
            delay: clamp(delay * tn / self.pri, tn),
            azimuth: clamp((azimuth + 1.0) * tr / 2.0, tr),
            doppler: clamp((doppler + 1.0 / (2.0 * self.pri)) * p * self.pri, p),
        }
    }

    /// SHA-256 of the canonical JSON form, truncated to 16 hex digits.
    pub fn hash_hex(&self) -> String {
        crate::io::hash_hex(self)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Indices of a cell on the delay x azimuth x Doppler grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex {
    pub delay: usize,
    pub azimuth: usize,
    pub doppler: usize,
}

impl GridIndex {
    pub fn new(delay: usize, azimuth: usize, doppler: usize) -> Self {
        Self { delay, azimuth, doppler }
    }
}

/// The three parameter grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub delay: Vec<f64>,
    pub azimuth: Vec<f64>,
    pub doppler: Vec<f64>,
}

pub fn make_grids(config: &RadarConfig) -> Result<Grids> {
    config.validate_layout()?;
    Ok(Grids {
        delay: (0..config.total_bins()).map(|s| config.delay_at(s)).collect(),
        azimuth: (0..config.num_channels()).map(|r| config.azimuth_at(r)).collect(),
        doppler: (0..config.num_pulses).map(|u| config.doppler_at(u)).collect(),
    })
}

/// A non-fluctuating point target on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub amplitude: Complex64,
    pub delay_index: usize,
    pub azimuth_index: usize,
    pub doppler_index: usize,
}

impl Target {
    pub fn new(amplitude: Complex64, delay_index: usize, azimuth_index: usize, doppler_index: usize) -> Self {
        Self { amplitude, delay_index, azimuth_index, doppler_index }
    }

    pub fn index(&self) -> GridIndex {
        GridIndex::new(self.delay_index, self.azimuth_index, self.doppler_index)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetScene {
    pub targets: Vec<Target>,
    pub seed: u64,
}

impl TargetScene {
    pub fn new(targets: Vec<Target>) -> Self {
        Self { targets, seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Checks grid bounds and distinctness of the index triples.
    pub fn validate(&self, config: &RadarConfig) -> Result<()> {
        let (tn, tr, p) = (config.total_bins(), config.num_channels(), config.num_pulses);
        let mut seen = std::collections::HashSet::new();
        for (i, t) in self.targets.iter().enumerate() {
            if t.delay_index >= tn || t.azimuth_index >= tr || t.doppler_index >= p {
                return Err(Error::TargetOffGrid {
                    index: i,
                    reason: format!("{:?} outside {tn} x {tr} x {p}", t.index()),
                });
            }
            if !t.amplitude.re.is_finite() || !t.amplitude.im.is_finite() {
                return Err(Error::TargetOffGrid { index: i, reason: "non-finite amplitude".into() });
            }
            if !seen.insert(t.index()) {
                return Err(Error::TargetOffGrid { index: i, reason: "duplicate grid cell".into() });
            }
        }
        Ok(())
    }
}

/// Target kinematics used to evaluate the modeling assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    /// m/s
    pub max_velocity: f64,
    /// m
    pub max_range: f64,
    /// m/s^2
    #[serde(default)]
    pub max_acceleration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    /// Left side divided by right side of the "much less than" inequality.
    pub margin: f64,
    pub holds: bool,
}

impl AssumptionCheck {
    fn new(lhs: f64, rhs: f64, threshold: f64) -> Self {
        let margin = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self { margin, holds: margin < threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub threshold: f64,
    /// Range change over the CPI small against the range.
    pub far_targets: AssumptionCheck,
    /// Range walk over the CPI small against the total-bandwidth range bin.
    pub slow_range_walk: AssumptionCheck,
    /// Doppler phase constant over one pulse.
    pub slow_intrapulse_doppler: AssumptionCheck,
    pub low_acceleration: AssumptionCheck,
    /// Aperture delay small against 1/B_h (what FDMA processing needs).
    pub narrowband_relaxed: AssumptionCheck,
    /// Aperture delay small against 1/(T B_h).
    pub narrowband_strict: AssumptionCheck,
    /// f_c * tau is an integer. Informational only.
    pub carrier_phase_aligned: bool,
}

pub const DEFAULT_ASSUMPTION_THRESHOLD: f64 = 0.1;

/// Evaluates the modeling assumptions with zero acceleration and the default threshold.
pub fn validate_config(config: &RadarConfig, max_velocity: f64, max_range: f64) -> Result<AssumptionReport> {
    validate_config_with(
        config,
        &Kinematics { max_velocity, max_range, max_acceleration: 0.0 },
        DEFAULT_ASSUMPTION_THRESHOLD,
    )
}

pub fn validate_config_with(config: &RadarConfig, kin: &Kinematics, threshold: f64) -> Result<AssumptionReport> {
    config.validate()?;
    let c = SPEED_OF_LIGHT;
    let cpi = config.num_pulses as f64 * config.pri;
    let b_tot = config.total_bandwidth();
    let aperture_delay = 2.0 * config.aperture * config.wavelength() / c;
    let doppler = 2.0 * kin.max_velocity * config.carrier_freq / c;
    Ok(AssumptionReport {
        threshold,
        far_targets: AssumptionCheck::new(kin.max_velocity * cpi, kin.max_range, threshold),
        slow_range_walk: AssumptionCheck::new(2.0 * kin.max_velocity * cpi / c, 1.0 / b_tot, threshold),
        slow_intrapulse_doppler: AssumptionCheck::new(doppler * config.pulse_width(), 1.0, threshold),
        low_acceleration: AssumptionCheck::new(
            kin.max_acceleration * cpi,
            c / (2.0 * config.carrier_freq * cpi),
            threshold,
        ),
        narrowband_relaxed: AssumptionCheck::new(aperture_delay, 1.0 / config.channel_bandwidth, threshold),
        narrowband_strict: AssumptionCheck::new(aperture_delay, 1.0 / b_tot, threshold),
        carrier_phase_aligned: config.carrier_phase_aligned(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// T = R = 20 virtual ULA with linear carriers at the full-scale operating point.
    pub(crate) fn full_scale_like() -> RadarConfig {
        let t = 20;
        let r = 20;
        let bh = 5e6;
        RadarConfig {
            num_tx: t,
            num_rx: r,
            num_pulses: 10,
            pri: 100e-6,
            channel_bandwidth: bh,
            carrier_freq: 10e9,
            tx_positions: (0..t).map(|m| (r * m) as f64 / 2.0).collect(),
            rx_positions: (0..r).map(|q| q as f64 / 2.0).collect(),
            tx_carriers: (0..t).map(|m| (m as f64 - (t as f64 - 1.0) / 2.0) * bh).collect(),
            aperture: (t * r) as f64 / 2.0,
            synthesis_mode: SynthesisMode::Exact,
            pulse_width: None,
            seed: 0,
        }
    }

    #[test]
    fn full_scale_margins() {
        let cfg = full_scale_like();
        let rep = validate_config(&cfg, 30.0, 10e3).unwrap();
        assert!((rep.narrowband_strict.margin - 4.0).abs() < 1e-9);
        assert!(!rep.narrowband_strict.holds);
        assert!((rep.narrowband_relaxed.margin - 0.2).abs() < 1e-9);
        // 0.2 is not below the default 0.1 threshold, but it is with a looser one
        let loose = validate_config_with(
            &cfg,
            &Kinematics { max_velocity: 30.0, max_range: 10e3, max_acceleration: 0.0 },
            0.5,
        )
        .unwrap();
        assert!(loose.narrowband_relaxed.holds);
        assert!(!loose.narrowband_strict.holds);
    }

    #[test]
    fn zero_velocity_margins_vanish() {
        let rep = validate_config(&full_scale_like(), 0.0, 5e3).unwrap();
        for c in [rep.far_targets, rep.slow_range_walk, rep.slow_intrapulse_doppler, rep.low_acceleration] {
            assert_eq!(c.margin, 0.0);
            assert!(c.holds);
        }
    }

    #[test]
    fn doubling_bandwidth_doubles_narrowband_margins() {
        let mut cfg = full_scale_like();
        let a = validate_config(&cfg, 10.0, 1e3).unwrap();
        cfg.channel_bandwidth *= 2.0;
        cfg.tx_carriers.iter_mut().for_each(|f| *f *= 2.0);
        let b = validate_config(&cfg, 10.0, 1e3).unwrap();
        assert!((b.narrowband_relaxed.margin / a.narrowband_relaxed.margin - 2.0).abs() < 1e-12);
        assert!((b.narrowband_strict.margin / a.narrowband_strict.margin - 2.0).abs() < 1e-12);
    }

    #[test]
    fn odd_bin_count_rejected() {
        let cfg = RadarConfig {
            num_tx: 2,
            num_rx: 2,
            num_pulses: 1,
            pri: 1e-3,
            channel_bandwidth: 1e3,
            carrier_freq: 1e9,
            tx_positions: vec![0.0, 1.0],
            rx_positions: vec![0.0, 0.5],
            tx_carriers: vec![-500.0, 500.0],
            aperture: 2.0,
            synthesis_mode: SynthesisMode::Simplified,
            pulse_width: None,
            seed: 0,
        };
        assert!(matches!(validate_config(&cfg, 0.0, 1.0), Err(Error::NonIntegerBinCount(_))));
    }

    #[test]
    fn off_grid_and_duplicate_carriers_rejected() {
        let mut cfg = full_scale_like();
        cfg.tx_carriers[3] += 0.25 * cfg.channel_bandwidth;
        assert!(matches!(cfg.validate(), Err(Error::CarrierOffGrid { index: 3, .. })));
        let mut cfg = full_scale_like();
        cfg.tx_carriers[3] = cfg.tx_carriers[4];
        assert!(matches!(cfg.validate(), Err(Error::DuplicateCarrier(3, 4))));
        assert!(cfg.validate_layout().is_ok());
        let mut cfg = full_scale_like();
        cfg.tx_carriers[0] = -10.5 * cfg.channel_bandwidth;
        assert!(matches!(cfg.validate(), Err(Error::CarrierOffGrid { index: 0, .. })));
    }

    #[test]
    fn positions_outside_aperture_rejected() {
        let mut cfg = full_scale_like();
        cfg.rx_positions[0] = cfg.aperture + 1.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn grid_origins_and_steps() {
        let cfg = full_scale_like();
        let g = make_grids(&cfg).unwrap();
        assert_eq!(g.delay.len(), 10_000);
        assert_eq!(g.azimuth.len(), 400);
        assert_eq!(g.delay[0], 0.0);
        assert!((g.delay[1] - 10e-9).abs() < 1e-20);
        assert_eq!(g.azimuth[200], 0.0);
        assert!((g.azimuth[1] - g.azimuth[0] - 0.005).abs() < 1e-15);
        assert_eq!(g.doppler[5], 0.0);
        // P = 10, tau = 100 us: 1 kHz steps from -5 kHz to +4 kHz
        for (u, f) in g.doppler.iter().enumerate() {
            assert!((f - (-5000.0 + 1000.0 * u as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_quantization_round_trips() {
        let cfg = full_scale_like();
        for (s, r, u) in [(0, 0, 0), (9999, 399, 9), (1234, 17, 3), (5000, 200, 5)] {
            let idx = cfg.nearest_index(cfg.delay_at(s), cfg.azimuth_at(r), cfg.doppler_at(u));
            assert_eq!(idx, GridIndex::new(s, r, u));
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = full_scale_like();
        let back = RadarConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash_hex(), back.hash_hex());
    }

    #[test]
    fn scene_validation() {
        let cfg = full_scale_like();
        let one = Complex64::new(1.0, 0.0);
        let ok = TargetScene::new(vec![Target::new(one, 1, 2, 3), Target::new(one, 1, 2, 4)]);
        assert!(ok.validate(&cfg).is_ok());
        let dup = TargetScene::new(vec![Target::new(one, 1, 2, 3), Target::new(one, 1, 2, 3)]);
        assert!(dup.validate(&cfg).is_err());
        let off = TargetScene::new(vec![Target::new(one, 10_000, 0, 0)]);
        assert!(off.validate(&cfg).is_err());
    }
}
