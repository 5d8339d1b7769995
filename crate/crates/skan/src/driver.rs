//! Experiment drivers: thin orchestration between the core kernels and the
//! report writers, shared by the CLI and the integration tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use skan_core::experiments::{
    env_lambdas, run_feature_learning, run_noise_sweep, run_norm_error, run_raster,
    run_recognition, subseed, EnvPreset, NormReplayRow, ReceptiveField,
};
use skan_core::homeostasis::NormConfig;
use skan_core::params::{LsbPolicy, NormSignal};
use skan_core::stimulus::{compose_stream, gen_pattern, NoiseSpec, StimulusProgram};
use skan_core::{presets, stats, NeuronState};

use crate::mnist::CorruptionMap;

// ---------------------------------------------------------------------------
// Kernel-tuning trace
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningRow {
    pub presentation: usize,
    pub pulse_width: u32,
    /// Spread of the three kernel apex times within the presentation; zero
    /// once the apexes coincide on the output pulse.
    pub peak_spread: i64,
    pub theta: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningTrace {
    pub seed: u64,
    pub pattern_offsets: Vec<u32>,
    pub rows: Vec<TuningRow>,
}

/// Repeated noise-free presentations of one 3-channel pattern with static
/// weights; slope adaptation narrows the output pulse.
pub fn run_tuning(seed: u64, presentations: usize) -> TuningTrace {
    use rand::SeedableRng;
    let params = presets::tuning_params();
    let n = params.n_synapses;
    let window = presets::TUNING_WINDOW;
    let pattern = gen_pattern(n, window, subseed(seed, 1));
    let program = StimulusProgram::repeat(presentations, window, subseed(seed, 2));
    let raster = compose_stream(&program, &[pattern.clone()], &NoiseSpec::silent(n));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(subseed(seed, 3));
    let mut state = NeuronState::new(&params, &mut rng);
    let cfg = NormConfig::from_params(&params);

    let mut rows = Vec::with_capacity(presentations);
    let mut slot = 0usize;
    let mut width = 0u32;
    let mut peak_r = vec![0u32; n];
    let mut peak_t = vec![0i64; n];
    let mut flush = |width: &mut u32, peak_t: &[i64], theta: u64, slot: usize| {
        rows.push(TuningRow {
            presentation: slot,
            pulse_width: *width,
            peak_spread: peak_t.iter().max().unwrap() - peak_t.iter().min().unwrap(),
            theta,
        });
        *width = 0;
    };
    run_raster(&mut state, &params, &cfg, &raster, |t, st, _, _| {
        while slot + 1 < program.starts.len() && t == program.starts[slot + 1] {
            flush(&mut width, &peak_t, st.theta, slot);
            slot += 1;
            peak_r.iter_mut().for_each(|r| *r = 0);
        }
        if st.s {
            width += 1;
        }
        for (i, syn) in st.synapses.iter().enumerate() {
            if syn.r > peak_r[i] {
                peak_r[i] = syn.r;
                peak_t[i] = t as i64;
            }
        }
    });
    flush(&mut width, &peak_t, state.theta, slot);

    TuningTrace {
        seed,
        pattern_offsets: pattern.offsets,
        rows,
    }
}

// ---------------------------------------------------------------------------
// Normalization error replay
// ---------------------------------------------------------------------------

pub const NORMCHECK_POLICIES: [LsbPolicy; 2] = [LsbPolicy::ZeroedLsbHigh, LsbPolicy::AllLsbHigh];

pub fn run_normcheck(bits: &[u32], n_seeds: u64, updates: usize) -> Vec<NormReplayRow> {
    let seeds: Vec<u64> = (0..n_seeds).collect();
    run_norm_error(bits, &NORMCHECK_POLICIES, &seeds, 16, updates)
}

// ---------------------------------------------------------------------------
// Noise sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub signal: String,
    pub point: String,
    pub synapse: usize,
    pub lambda: f64,
    pub mean_w: f64,
    pub sd_w: f64,
}

fn signal_name(s: NormSignal) -> &'static str {
    match s {
        NormSignal::MaxW => "maxw",
        NormSignal::SumW => "sumw",
    }
}

/// Three-channel sweep of the noisy channel's rate.
pub fn run_sweep_grid(lambda3s: &[f64], seeds: &[u64], signals: &[NormSignal]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &signal in signals {
        for &l3 in lambda3s {
            let cfg = presets::sweep_config(l3, seeds.to_vec(), signal);
            let pt = run_noise_sweep(&cfg).expect("preset burn-in below presentations");
            for i in 0..pt.mean_w.len() {
                rows.push(SweepRow {
                    signal: signal_name(signal).into(),
                    point: format!("lambda3={l3}"),
                    synapse: i,
                    lambda: pt.lambdas[i],
                    mean_w: pt.mean_w[i],
                    sd_w: pt.sd_w[i],
                });
            }
        }
    }
    rows
}

/// Sixteen-channel graded-noise environment.
pub fn run_env_sweep(preset: EnvPreset, seeds: &[u64], signals: &[NormSignal]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &signal in signals {
        let lambdas = env_lambdas(preset, 16);
        let cfg = presets::env_config(lambdas, seeds.to_vec(), signal);
        let pt = run_noise_sweep(&cfg).expect("preset burn-in below presentations");
        for i in 0..pt.mean_w.len() {
            rows.push(SweepRow {
                signal: signal_name(signal).into(),
                point: format!("{preset:?}"),
                synapse: i,
                lambda: pt.lambdas[i],
                mean_w: pt.mean_w[i],
                sd_w: pt.sd_w[i],
            });
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Recognition benchmark
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecognitionRow {
    pub preset: String,
    pub noisy_channels: usize,
    pub snr_lambda: f64,
    pub adaptive: bool,
    pub seed: u64,
    pub error: f64,
    pub missed: u32,
    pub false_positives: u32,
    pub total_targets: u32,
    pub designated_pattern: usize,
    pub designation_tie: bool,
}

/// Fan the (noisy count, SNR, arm, seed) grid across worker threads;
/// results keep grid order regardless of completion order.
pub fn run_recognition_grid(
    bump: bool,
    noisy_counts: &[usize],
    snrs: &[f64],
    seeds: &[u64],
) -> Vec<RecognitionRow> {
    let preset_name = if bump { "bump" } else { "default" };
    let params = if bump {
        presets::recognition_bump_params()
    } else {
        presets::recognition_params()
    };
    let mut grid = Vec::new();
    for &noisy in noisy_counts {
        for &snr in snrs {
            for adaptive in [false, true] {
                for &seed in seeds {
                    grid.push((noisy, snr, adaptive, seed));
                }
            }
        }
    }
    grid.par_iter()
        .map(|&(noisy, snr, adaptive, seed)| {
            let cond = presets::recognition_condition(noisy, snr, adaptive, seed, params.clone());
            let r = run_recognition(&cond);
            RecognitionRow {
                preset: preset_name.into(),
                noisy_channels: noisy,
                snr_lambda: snr,
                adaptive,
                seed,
                error: r.error,
                missed: r.missed,
                false_positives: r.false_positives,
                total_targets: r.total_targets,
                designated_pattern: r.designated_pattern,
                designation_tie: r.designation_tie,
            }
        })
        .collect()
}

/// Mean error per (noisy count, SNR, arm) over seeds.
pub fn mean_errors(rows: &[RecognitionRow]) -> Vec<(usize, f64, bool, f64)> {
    let mut keys: Vec<(usize, f64, bool)> = rows
        .iter()
        .map(|r| (r.noisy_channels, r.snr_lambda, r.adaptive))
        .collect();
    keys.dedup();
    keys.iter()
        .map(|&(n, s, a)| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.noisy_channels == n && r.snr_lambda == s && r.adaptive == a)
                .map(|r| r.error)
                .collect();
            (n, s, a, stats::mean(&errs))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Pixel feature learning
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub images_trained: usize,
    pub corrupted_pixels: usize,
    pub corrupted_disabled: usize,
    /// Training-image index of the last corrupted-pixel disable.
    pub last_corrupted_disable: Option<usize>,
    pub clean_disabled: usize,
    /// Pearson correlation between the clean pixels' final slopes and their
    /// mean intensity over the training subset.
    pub slope_intensity_pearson: f64,
}

pub fn run_feature(
    images: &[Vec<u8>],
    corruption: &CorruptionMap,
    train_images: usize,
    seed: u64,
) -> (ReceptiveField, FeatureSummary) {
    let cfg = presets::feature_learning_config(
        corruption.pixels.clone(),
        corruption.lambdas.clone(),
        seed,
    );
    let stream = (0..train_images).map(|i| images[i % images.len()].as_slice());
    let field = run_feature_learning(stream, &cfg);

    let n = cfg.params.n_synapses;
    let mut mean_int = vec![0.0f64; n];
    for img in images {
        for (p, &v) in img.iter().enumerate() {
            mean_int[p] += v as f64;
        }
    }
    mean_int.iter_mut().for_each(|m| *m /= images.len() as f64);

    let corrupted_disabled: Vec<Option<usize>> = corruption
        .pixels
        .iter()
        .map(|&p| field.disable_time[p])
        .collect();
    let clean: Vec<usize> = (0..n).filter(|p| !corruption.pixels.contains(p)).collect();
    let drs: Vec<f64> = clean.iter().map(|&p| field.dr[p] as f64).collect();
    let ints: Vec<f64> = clean.iter().map(|&p| mean_int[p]).collect();

    let summary = FeatureSummary {
        images_trained: train_images,
        corrupted_pixels: corruption.pixels.len(),
        corrupted_disabled: corrupted_disabled.iter().filter(|d| d.is_some()).count(),
        last_corrupted_disable: corrupted_disabled.iter().filter_map(|&d| d).max(),
        clean_disabled: clean.iter().filter(|&&p| field.disabled[p]).count(),
        slope_intensity_pearson: stats::pearson(&drs, &ints),
    };
    (field, summary)
}
