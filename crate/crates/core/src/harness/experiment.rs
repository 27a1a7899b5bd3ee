//! Monte-Carlo experiments: sweeps, trials, methods and reports.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::scene::{random_scene, resolution_scene};
use super::score::{score_hits, TrialScore};
use super::template::ConfigTemplate;
use crate::cdma::cdma_process;
use crate::channelizer::channelize;
use crate::config::{RadarConfig, TargetScene};
use crate::dictionary::build_dictionaries;
use crate::error::{Error, Result};
use crate::io::hash_hex;
use crate::parallel;
use crate::recovery::{omp3d, omp_first_iteration, OmpOptions, RecoveryResult};
use crate::rng::derive_seed;
use crate::synth::{add_noise, synthesize, NoiseBandwidth};
use crate::waveforms::{cdma_code_search, CodeAlphabet, WaveformBank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// FDMA with iterative OMP.
    #[serde(alias = "fdma")]
    FdmaIterative,
    /// FDMA with a single projection and L-peak picking.
    #[serde(alias = "fdma-nonit")]
    FdmaNoniterative,
    /// CDMA codes with matched filtering and beamforming.
    #[serde(alias = "cdma")]
    CdmaClassic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FdmaIterative => "fdma-iterative",
            Method::FdmaNoniterative => "fdma-noniterative",
            Method::CdmaClassic => "cdma-classic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    #[default]
    None,
    /// B_h in Hz; N stays fixed so tau = N / B_h.
    Bandwidth,
    /// SNR in dB.
    Snr,
    /// Ratio of the two target amplitudes in dB.
    RcsRatio,
    /// Aperture Z in wavelengths (random layouts draw positions in [0, Z]).
    Aperture,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sweep {
    #[serde(default)]
    pub variable: SweepVariable,
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenePreset {
    #[default]
    Random,
    /// Six targets in close range, azimuth and Doppler pairs.
    Resolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub targets: usize,
    #[serde(default)]
    pub min_separation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcs_ratio_db: Option<f64>,
    #[serde(default)]
    pub preset: ScenePreset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdmaSpec {
    /// Chips per code; defaults to T N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chips: Option<usize>,
    #[serde(default = "default_search_trials")]
    pub search_trials: usize,
    #[serde(default)]
    pub alphabet: CodeAlphabet,
}

fn default_search_trials() -> usize {
    100
}

impl Default for CdmaSpec {
    fn default() -> Self {
        Self { chips: None, search_trials: default_search_trials(), alphabet: CodeAlphabet::default() }
    }
}

fn default_trials() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub config: ConfigTemplate,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub scene: SceneSpec,
    pub methods: Vec<Method>,
    /// Noiseless when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub noise_bandwidth: NoiseBandwidth,
    #[serde(default)]
    pub cdma: CdmaSpec,
    pub master_seed: u64,
    /// Include per-trial rows in the report.
    #[serde(default)]
    pub record_trials: bool,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn hash_hex(&self) -> String {
        hash_hex(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidSpec("at least one method required".into()));
        }
        let v = &self.sweep.values;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("sweep values must be finite".into()));
        }
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpec("sweep values must be sorted".into()));
        }
        match (self.sweep.variable, v.is_empty()) {
            (SweepVariable::None, false) => Err(Error::InvalidSpec("sweep values given without a sweep variable".into())),
            (SweepVariable::None, true) => Ok(()),
            (_, true) => Err(Error::InvalidSpec("sweep variable needs at least one value".into())),
            _ => Ok(()),
        }
    }

    /// Sweep values, or a single `None` point without a sweep.
    pub fn points(&self) -> Vec<Option<f64>> {
        match self.sweep.variable {
            SweepVariable::None => vec![None],
            _ => self.sweep.values.iter().map(|v| Some(*v)).collect(),
        }
    }

    fn at_point(&self, value: Option<f64>) -> (ConfigTemplate, SceneSpec, Option<f64>) {
        let (mut tmpl, mut scene, mut snr) = (self.config.clone(), self.scene.clone(), self.snr_db);
        if let Some(v) = value {
            match self.sweep.variable {
                SweepVariable::None => {}
                SweepVariable::Bandwidth => tmpl.channel_bandwidth = v,
                SweepVariable::Snr => snr = Some(v),
                SweepVariable::RcsRatio => scene.rcs_ratio_db = Some(v),
                SweepVariable::Aperture => tmpl.aperture = Some(v),
            }
        }
        (tmpl, scene, snr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub hits: usize,
    pub total: usize,
    pub hit_rate: f64,
    /// Mean |delay error| over hits, in seconds and in delay bins.
    pub mean_delay_error_s: f64,
    pub mean_delay_error_bins: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub config_hash: String,
    pub hits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub index: usize,
    pub value: Option<f64>,
    /// Delay bin tau / TN at this point, in seconds.
    pub delay_bin_s: f64,
    pub methods: Vec<MethodReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<Vec<TrialRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitReport {
    pub name: String,
    pub spec_hash: String,
    pub master_seed: u64,
    pub sweep_variable: SweepVariable,
    pub points: Vec<PointReport>,
}

impl HitReport {
    pub fn hit_rate(&self, point: usize, method: Method) -> Option<f64> {
        self.points.get(point)?.methods.iter().find(|m| m.method == method).map(|m| m.hit_rate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `index,value,method,hits,total,hit_rate` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "value", "method", "hits", "total", "hit_rate", "mean_delay_error_s", "mean_delay_error_bins"])?;
        for p in &self.points {
            for m in &p.methods {
                out.write_record([
                    p.index.to_string(),
                    p.value.map_or(String::new(), |v| v.to_string()),
                    m.method.name().to_string(),
                    m.hits.to_string(),
                    m.total.to_string(),
                    m.hit_rate.to_string(),
                    m.mean_delay_error_s.to_string(),
                    m.mean_delay_error_bins.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Run metadata that is not part of the deterministic report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRecord {
    pub name: String,
    pub spec_hash: String,
    pub master_seed: u64,
    pub cdma_code_seed: Option<u64>,
    /// Per point, the seed of each trial.
    pub trial_seeds: Vec<Vec<u64>>,
    pub wall_time_s: f64,
    pub threads: usize,
    pub parallel: bool,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: HitReport,
    pub environment: EnvironmentRecord,
}

impl ExperimentOutput {
    /// Writes `report.json`, `hit_rates.csv` and `environment.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report.to_json()?)?;
        self.report.write_csv(std::fs::File::create(dir.join("hit_rates.csv"))?)?;
        std::fs::write(dir.join("environment.json"), serde_json::to_string_pretty(&self.environment)?)?;
        Ok(())
    }
}

/// Seed of trial `trial` at sweep point `point`.
pub fn trial_seed(master: u64, point: usize, trial: usize) -> u64 {
    derive_seed(master, &[point as u64, trial as u64])
}

/// Everything one method needs for one trial.
pub struct TrialContext<'a> {
    pub config: &'a RadarConfig,
    pub scene: &'a TargetScene,
    pub snr_db: Option<f64>,
    pub noise_bandwidth: NoiseBandwidth,
    pub noise_seed: u64,
    pub cdma: Option<&'a WaveformBank>,
}

/// Synthesizes the trial data for `method` and runs its recovery.
pub fn run_method(method: Method, ctx: &TrialContext, targets: usize) -> Result<RecoveryResult> {
    let cfg = ctx.config;
    let snr = ctx.snr_db.unwrap_or(f64::INFINITY);
    let opts = OmpOptions::new(targets);
    match method {
        Method::FdmaIterative | Method::FdmaNoniterative => {
            let bank = WaveformBank::fdma_flat(cfg);
            let s = synthesize(cfg, ctx.scene, &bank, cfg.synthesis_mode)?;
            let s = add_noise(&s, cfg, snr, ctx.noise_seed, ctx.noise_bandwidth)?;
            let y = channelize(&s, &bank, cfg)?;
            let dict = build_dictionaries(cfg)?;
            if method == Method::FdmaIterative {
                omp3d(&y, &dict, cfg, &opts)
            } else {
                omp_first_iteration(&y, &dict, cfg, &opts)
            }
        }
        Method::CdmaClassic => {
            let bank = ctx.cdma.ok_or_else(|| Error::InvalidSpec("CDMA method needs a code bank".into()))?;
            let bank = match bank {
                WaveformBank::Cdma(b) => {
                    let mut b = b.clone();
                    b.chip_duration = cfg.pri / cfg.total_bins() as f64;
                    WaveformBank::Cdma(b)
                }
                other => other.clone(),
            };
            let s = synthesize(cfg, ctx.scene, &bank, cfg.synthesis_mode)?;
            let s = add_noise(&s, cfg, snr, ctx.noise_seed, ctx.noise_bandwidth)?;
            cdma_process(&s, &bank, cfg, &opts)
        }
    }
}

struct TrialOutcome {
    seed: u64,
    config_hash: String,
    delay_bin_s: f64,
    scores: Vec<TrialScore>,
}

fn run_trial(spec: &ExperimentSpec, point: usize, value: Option<f64>, trial: usize, cdma: Option<&WaveformBank>) -> Result<TrialOutcome> {
    let seed = trial_seed(spec.master_seed, point, trial);
    let (tmpl, scene_spec, snr) = spec.at_point(value);
    let config = tmpl.build(derive_seed(seed, &[0]))?;
    config.validate()?;
    let scene_seed = derive_seed(seed, &[1]);
    let scene = match scene_spec.preset {
        ScenePreset::Random => random_scene(&config, scene_spec.targets, scene_spec.rcs_ratio_db, scene_spec.min_separation, scene_seed)?,
        ScenePreset::Resolution => resolution_scene(&config, scene_seed)?,
    };
    let ctx = TrialContext {
        config: &config,
        scene: &scene,
        snr_db: snr,
        noise_bandwidth: spec.noise_bandwidth,
        noise_seed: derive_seed(seed, &[2]),
        cdma,
    };
    let scores = spec
        .methods
        .iter()
        .map(|&m| run_method(m, &ctx, scene.len()).map(|r| score_hits(&scene, &r, &config)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome {
        seed,
        config_hash: config.hash_hex(),
        delay_bin_s: config.pri / config.total_bins() as f64,
        scores,
    })
}

/// Code bank shared by every CDMA trial: searched once, sized from the first point.
fn search_codes(spec: &ExperimentSpec) -> Result<Option<(WaveformBank, u64)>> {
    if !spec.methods.contains(&Method::CdmaClassic) {
        return Ok(None);
    }
    let (tmpl, _, _) = spec.at_point(spec.points()[0]);
    let cfg = tmpl.build(0)?;
    let chips = spec.cdma.chips.unwrap_or(cfg.total_bins());
    let seed = derive_seed(spec.master_seed, &[u64::MAX]);
    let bank = cdma_code_search(cfg.num_tx, chips, spec.cdma.search_trials, seed, spec.cdma.alphabet, cfg.pri, cfg.total_bins())?;
    Ok(Some((WaveformBank::Cdma(bank), seed)))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let start = Instant::now();
    let codes = search_codes(spec)?;
    let bank = codes.as_ref().map(|(b, _)| b);
    let points = spec.points();
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect();
    let outcomes = parallel::map_range(jobs.len(), |i| {
        let (p, t) = jobs[i];
        run_trial(spec, p, points[p], t, bank).map_err(|e| Error::Trial { point: p, trial: t, source: Box::new(e) })
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::with_capacity(points.len());
    let mut trial_seeds = Vec::with_capacity(points.len());
    for (p, value) in points.iter().enumerate() {
        let trials = &outcomes[p * spec.trials..(p + 1) * spec.trials];
        let methods = spec
            .methods
            .iter()
            .enumerate()
            .map(|(mi, &method)| {
                let hits: usize = trials.iter().map(|t| t.scores[mi].hits).sum();
                let total: usize = trials.iter().map(|t| t.scores[mi].targets).sum();
                let err_s: f64 = trials.iter().map(|t| t.scores[mi].delay_error_s).sum();
                let err_b: f64 = trials.iter().map(|t| t.scores[mi].delay_error_bins).sum();
                let per_hit = |x: f64| if hits > 0 { x / hits as f64 } else { 0.0 };
                MethodReport {
                    method,
                    hits,
                    total,
                    hit_rate: if total > 0 { hits as f64 / total as f64 } else { 1.0 },
                    mean_delay_error_s: per_hit(err_s),
                    mean_delay_error_bins: per_hit(err_b),
                }
            })
            .collect();
        let records = spec.record_trials.then(|| {
            trials
                .iter()
                .enumerate()
                .map(|(t, o)| TrialRecord {
                    trial: t,
                    seed: o.seed,
                    config_hash: o.config_hash.clone(),
                    hits: o.scores.iter().map(|s| s.hits).collect(),
                })
                .collect()
        });
        trial_seeds.push(trials.iter().map(|t| t.seed).collect());
        reports.push(PointReport { index: p, value: *value, delay_bin_s: trials[0].delay_bin_s, methods, trials: records });
    }
    let report = HitReport {
        name: spec.name.clone(),
        spec_hash: spec.hash_hex(),
        master_seed: spec.master_seed,
        sweep_variable: spec.sweep.variable,
        points: reports,
    };
    let environment = EnvironmentRecord {
        name: spec.name.clone(),
        spec_hash: spec.hash_hex(),
        master_seed: spec.master_seed,
        cdma_code_seed: codes.map(|(_, s)| s),
        trial_seeds,
        wall_time_s: start.elapsed().as_secs_f64(),
        threads: parallel::current_num_threads(),
        parallel: cfg!(feature = "parallel"),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(ExperimentOutput { report, environment })
}
