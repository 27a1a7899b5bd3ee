use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fdma_mimo::cdma::cdma_process;
use fdma_mimo::channelizer::channelize;
use fdma_mimo::config::{validate_config_with, Kinematics, DEFAULT_ASSUMPTION_THRESHOLD};
use fdma_mimo::coupling::{ambiguity_map, coupling_config, psl_distribution, CouplingMode};
use fdma_mimo::dictionary::build_dictionaries;
use fdma_mimo::harness::{random_scene, run_experiment, ExperimentSpec};
use fdma_mimo::io::{write_tensor, Precision};
use fdma_mimo::recovery::{omp3d, omp_first_iteration, OmpOptions};
use fdma_mimo::synth::{add_noise, synthesize, NoiseBandwidth};
use fdma_mimo::waveforms::{cdma_bank_for, cdma_code_search, CodeAlphabet, WaveformBank};
use fdma_mimo::{parallel, GridIndex, RadarConfig, SynthesisMode};

#[derive(Parser)]
#[command(name = "fdma-mimo", version, about = "FDMA MIMO radar simulation and sparse recovery")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Simplified,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fdma,
    FdmaNonit,
    Cdma,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    UlaGrid,
    RandomCarriers,
    RandomArray,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one random scene and recover it.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "fdma")]
        method: MethodArg,
        /// Number of targets.
        #[arg(long, default_value_t = 1)]
        targets: usize,
        /// SNR in dB; noiseless when omitted.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a Monte-Carlo experiment spec.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Single-target ambiguity map and PSL statistics.
    Ambiguity {
        #[arg(long, value_enum, default_value = "random-array")]
        layout: LayoutArg,
        #[arg(long, default_value_t = 8)]
        tx: usize,
        #[arg(long, default_value_t = 8)]
        rx: usize,
        #[arg(long, default_value_t = 16)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Layouts drawn for the PSL distribution.
        #[arg(long, default_value_t = 100)]
        draws: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Random search for a CDMA code set.
    Codesearch {
        #[arg(long)]
        tx: usize,
        #[arg(long)]
        chips: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Phase count of the PSK alphabet; 0 draws continuous phases.
        #[arg(long, default_value_t = 4)]
        phases: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check the modeling assumptions for a config.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Largest target speed, m/s.
        #[arg(long, default_value_t = 0.0)]
        velocity: f64,
        /// Largest target range, m.
        #[arg(long, default_value_t = 1.0)]
        range: f64,
        #[arg(long, default_value_t = 0.0)]
        acceleration: f64,
        #[arg(long, default_value_t = DEFAULT_ASSUMPTION_THRESHOLD)]
        threshold: f64,
    },
}

fn read_config(path: &Path) -> Result<RadarConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(RadarConfig::from_toml(&text)?)
}

fn simulate(config: &Path, seed: u64, mode: ModeArg, method: MethodArg, targets: usize, snr: Option<f64>, out: &Path) -> Result<()> {
    let mut cfg = read_config(config)?;
    cfg.seed = seed;
    cfg.synthesis_mode = match mode {
        ModeArg::Exact => SynthesisMode::Exact,
        ModeArg::Simplified => SynthesisMode::Simplified,
    };
    let scene = random_scene(&cfg, targets, None, 0, seed)?;
    let bank = match method {
        MethodArg::Cdma => cdma_bank_for(&cfg, cfg.total_bins(), 100, seed, CodeAlphabet::default())?,
        _ => WaveformBank::fdma_flat(&cfg),
    };
    let spectra = synthesize(&cfg, &scene, &bank, cfg.synthesis_mode)?;
    let spectra = add_noise(&spectra, &cfg, snr.unwrap_or(f64::INFINITY), seed, NoiseBandwidth::PerChannel)?;
    let opts = OmpOptions::new(targets);
    let result = match method {
        MethodArg::Cdma => cdma_process(&spectra, &bank, &cfg, &opts)?,
        MethodArg::Fdma | MethodArg::FdmaNonit => {
            let y = channelize(&spectra, &bank, &cfg)?;
            let dict = build_dictionaries(&cfg)?;
            if matches!(method, MethodArg::Fdma) {
                omp3d(&y, &dict, &cfg, &opts)?
            } else {
                omp_first_iteration(&y, &dict, &cfg, &opts)?
            }
        }
    };
    fs::create_dir_all(out)?;
    fs::write(out.join("result.json"), result.to_json()?)?;
    fs::write(out.join("scene.json"), serde_json::to_string_pretty(&scene)?)?;
    let mut file = fs::File::create(out.join("spectra.bin"))?;
    write_tensor(&mut file, &spectra.header(), &spectra.data, Precision::Complex64)?;
    println!("{}", serde_json::to_string(&result.support)?);
    Ok(())
}

fn ambiguity(layout: LayoutArg, tx: usize, rx: usize, bins: usize, seed: u64, draws: u64, out: &Path) -> Result<()> {
    let mode = match layout {
        LayoutArg::UlaGrid => CouplingMode::UlaGridCarriers,
        LayoutArg::RandomCarriers => CouplingMode::RandomCarriersUla,
        LayoutArg::RandomArray => CouplingMode::RandomArrayGridCarriers,
    };
    let cfg = coupling_config(mode, tx, rx, bins, seed);
    let target = GridIndex::new(cfg.total_bins() / 2, cfg.num_channels() / 2, 0);
    let report = ambiguity_map(&cfg, target, mode)?;
    fs::create_dir_all(out)?;
    report.write_map_csv(fs::File::create(out.join("ambiguity_map.csv"))?)?;
    fs::write(out.join("ambiguity.json"), serde_json::to_string_pretty(&report)?)?;
    if draws > 0 {
        let seeds: Vec<u64> = (seed..seed + draws).collect();
        let dist = psl_distribution(mode, tx, rx, bins, &seeds)?;
        fs::write(out.join("psl.json"), serde_json::to_string_pretty(&dist)?)?;
        println!("PSL {:.4}, median over {draws} layouts {:.4}", report.peak_sidelobe_level, dist.median);
    } else {
        println!("PSL {:.4}", report.peak_sidelobe_level);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, mode, method, targets, snr, out } => simulate(&config, seed, mode, method, targets, snr, &out),
        Command::Experiment { spec, seed, out } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut spec = ExperimentSpec::from_toml(&text)?;
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            let output = run_experiment(&spec)?;
            output.write(&out)?;
            for p in &output.report.points {
                for m in &p.methods {
                    println!("{:>12} {:<18} {:.3}", p.value.map_or("-".into(), |v| format!("{v}")), m.method.name(), m.hit_rate);
                }
            }
            Ok(())
        }
        Command::Ambiguity { layout, tx, rx, bins, seed, draws, out } => ambiguity(layout, tx, rx, bins, seed, draws, &out),
        Command::Codesearch { tx, chips, trials, seed, phases, out } => {
            let alphabet = if phases == 0 { CodeAlphabet::Continuous } else { CodeAlphabet::Psk(phases) };
            // Chip duration is reported relative to a unit PRI.
            let bank = cdma_code_search(tx, chips, trials, seed, alphabet, 1.0, chips)?;
            fs::create_dir_all(&out)?;
            bank.write_csv(fs::File::create(out.join("codes.csv"))?)?;
            fs::write(out.join("bank.json"), serde_json::to_string_pretty(&WaveformBank::Cdma(bank.clone()))?)?;
            println!("max cross-correlation {:.4}", bank.max_cross_correlation);
            Ok(())
        }
        Command::Validate { config, velocity, range, acceleration, threshold } => {
            let cfg = read_config(&config)?;
            if !(threshold > 0.0) {
                bail!("threshold must be positive");
            }
            let kin = Kinematics { max_velocity: velocity, max_range: range, max_acceleration: acceleration };
            let report = validate_config_with(&cfg, &kin, threshold)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let threads = cli.threads;
    if threads == 0 {
        run(cli)
    } else {
        parallel::with_threads(threads, || run(cli))
    }
}
