mod common;

use fdma_mimo::cdma::cdma_map;
use fdma_mimo::dictionary::build_dictionaries;
use fdma_mimo::parallel::with_threads;
use fdma_mimo::recovery::{doppler_focus, omp3d, projection_argmax, projection_map, OmpOptions};
use fdma_mimo::synth::synthesize;
use fdma_mimo::waveforms::{cdma_bank_for, CodeAlphabet, WaveformBank};
use fdma_mimo::{SynthesisMode, TargetScene};
use num_complex::Complex64;
use proptest::prelude::*;

use common::{channels, config, scene};

fn dims() -> impl Strategy<Value = (usize, usize, usize, usize, u64)> {
    (1usize..5, 1usize..5, 1usize..5, 1usize..4, any::<u64>()).prop_map(|(t, r, half_n, p, seed)| (t, r, 2 * half_n, p, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesis_is_linear_in_the_scene((t, r, n, p, seed) in dims(), exact in any::<bool>()) {
        let cfg = config(t, r, n, p, seed);
        let count = (cfg.total_bins() * cfg.num_channels() * p).min(4);
        let sc = scene(&cfg, count, seed ^ 1);
        let bank = WaveformBank::fdma_flat(&cfg);
        let mode = if exact { SynthesisMode::Exact } else { SynthesisMode::Simplified };
        let whole = synthesize(&cfg, &sc, &bank, mode).unwrap();
        let mut sum = synthesize(&cfg, &TargetScene::default(), &bank, mode).unwrap();
        for tg in &sc.targets {
            let part = synthesize(&cfg, &TargetScene::new(vec![*tg]), &bank, mode).unwrap();
            sum = sum.add(&part).unwrap();
        }
        for (a, b) in whole.data.iter().zip(&sum.data) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn coefficients_are_a_sum_of_atoms((t, r, n, p, seed) in dims()) {
        let cfg = config(t, r, n, p, seed);
        let count = (cfg.total_bins() * cfg.num_channels() * p).min(3);
        let sc = scene(&cfg, count, seed ^ 2);
        let y = channels(&cfg, &sc, SynthesisMode::Simplified, f64::INFINITY, 0);
        let dict = build_dictionaries(&cfg).unwrap();
        let block = n * r * p;
        for m in 0..t {
            let mut model = vec![Complex64::new(0.0, 0.0); block];
            for tg in &sc.targets {
                let atom = dict.atom(m, tg.delay_index, tg.azimuth_index, tg.doppler_index).unwrap();
                for (x, a) in model.iter_mut().zip(atom) {
                    *x += tg.amplitude * a;
                }
            }
            for pp in 0..p {
                for q in 0..r {
                    for (k, v) in y.channel(m, q, pp).iter().enumerate() {
                        prop_assert!((v - model[k + q * n + pp * n * r]).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn omp_residuals_never_grow((t, r, n, p, seed) in dims(), snr in -5.0f64..20.0) {
        let cfg = config(t, r, n, p, seed);
        let cells = cfg.total_bins() * cfg.num_channels() * p;
        let count = cells.min(3);
        let sc = scene(&cfg, count, seed ^ 3);
        let y = channels(&cfg, &sc, SynthesisMode::Simplified, snr, seed);
        let dict = build_dictionaries(&cfg).unwrap();
        let res = omp3d(&y, &dict, &cfg, &OmpOptions::new(count)).unwrap();
        for w in res.residual_norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let mut support = res.support.clone();
        support.sort_by_key(|i| (i.delay, i.azimuth, i.doppler));
        support.dedup();
        prop_assert_eq!(support.len(), res.support.len());
    }

    #[test]
    fn streaming_argmax_matches_full_map((t, r, n, p, seed) in dims()) {
        let cfg = config(t, r, n, p, seed);
        let sc = scene(&cfg, 2.min(cfg.total_bins() * cfg.num_channels() * p), seed ^ 4);
        let y = channels(&cfg, &sc, SynthesisMode::Simplified, 0.0, seed);
        let dict = build_dictionaries(&cfg).unwrap();
        let phi = doppler_focus(&y);
        let (idx, value) = projection_argmax(&phi, &dict, &[]);
        let (want, want_value) = projection_map(&phi, &dict).argmax();
        prop_assert_eq!(idx, want);
        prop_assert!((value - want_value).abs() <= 1e-9 * want_value.max(1.0));
        let single = with_threads(1, || projection_map(&phi, &dict));
        prop_assert_eq!(single.values, projection_map(&phi, &dict).values);
    }

    #[test]
    fn cdma_map_ignores_a_global_phase(seed in any::<u64>(), phase in 0.0f64..std::f64::consts::TAU) {
        let cfg = config(3, 3, 8, 2, seed);
        let bank = cdma_bank_for(&cfg, cfg.total_bins(), 4, seed, CodeAlphabet::Psk(4)).unwrap();
        let sc = scene(&cfg, 2, seed ^ 5);
        let mut rotated = sc.clone();
        for tg in &mut rotated.targets {
            tg.amplitude *= Complex64::from_polar(1.0, phase);
        }
        let a = cdma_map(&synthesize(&cfg, &sc, &bank, SynthesisMode::Exact).unwrap(), &bank, &cfg).unwrap().magnitude();
        let b = cdma_map(&synthesize(&cfg, &rotated, &bank, SynthesisMode::Exact).unwrap(), &bank, &cfg).unwrap().magnitude();
        let peak = a.values.iter().cloned().fold(0.0, f64::max);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-9 * peak);
        }
    }
}
