//! Experiment kernels: the normalization-error replay, the noise sweep,
//! the two-pattern recognition benchmark, and pixel-level feature learning
//! with noisy-channel disabling. Every run is a pure function of its
//! config and seed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::homeostasis::{
    self, left_shift_neuron, right_shift_neuron, schedule_normalization, NormConfig, NormEvent,
    Schedule,
};
use crate::neuron::{NeuronState, StepEvents};
use crate::params::{LsbPolicy, NeuronParams, NormSignal};
use crate::stats;
use crate::stimulus::{
    compose_stream, encode_latency, gen_pattern, poisson, NoiseSpec, Raster,
    StimulusProgram,
};

/// Derive an independent stream seed from a run seed.
pub fn subseed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Advance one timestep and service normalization: right shifts run
/// immediately on overflow, left shifts wait for standby.
pub fn step_with_homeostasis(
    state: &mut NeuronState,
    params: &NeuronParams,
    cfg: &NormConfig,
    inputs: &[bool],
) -> (StepEvents, Option<NormEvent>) {
    let events = state.step(inputs, params).expect("input width fixed by caller");
    let norm = match schedule_normalization(state, &events, cfg) {
        Schedule::RightNow => Some(right_shift_neuron(state, cfg)),
        Schedule::LeftAtStandby => Some(left_shift_neuron(state, cfg).expect("standby checked")),
        Schedule::None => None,
    };
    (events, norm)
}

/// Drive a neuron over a raster, reporting every step to the observer.
pub fn run_raster<F>(
    state: &mut NeuronState,
    params: &NeuronParams,
    cfg: &NormConfig,
    raster: &Raster,
    mut observe: F,
) where
    F: FnMut(u64, &NeuronState, &StepEvents, Option<&NormEvent>),
{
    raster.scan(|t, row| {
        let (events, norm) = step_with_homeostasis(state, params, cfg, row);
        observe(t, state, &events, norm.as_ref());
    });
}

// ---------------------------------------------------------------------------
// Normalization-error replay (shift path vs division oracle)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReplayRow {
    pub bit_width: u32,
    pub lsb_policy: LsbPolicy,
    pub seed: u64,
    pub rms_error: f64,
    pub spearman_rank_corr: f64,
}

/// Random flag-gated weight updates driven through the shift-normalized
/// integer path and a double-precision division path, compared at the end.
pub fn norm_replay_run(
    bit_width: u32,
    policy: LsbPolicy,
    seed: u64,
    n_synapses: usize,
    n_updates: usize,
) -> NormReplayRow {
    let w_max = (1u64 << bit_width) - 1;
    let msb = 1u64 << (bit_width - 1);
    let step = 1u64.max(1u64 << bit_width.saturating_sub(5));

    let mut int_w = vec![msb; n_synapses];
    let mut real_w = vec![msb as f64; n_synapses];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..n_updates {
        let flags: Vec<bool> = (0..n_synapses).map(|_| rng.gen::<bool>()).collect();
        let rise = rng.gen::<bool>();

        for (i, &flagged) in flags.iter().enumerate() {
            if !flagged {
                continue;
            }
            // random magnitude so weights leave the power-of-two lattice and
            // shift truncation is actually exercised at every bit width
            let delta = rng.gen_range(1..=step);
            if rise {
                // post-rise value kept unclipped; the shift below consumes
                // the carry-out, matching a b+1 bit adder feeding the shifter
                int_w[i] += delta;
                real_w[i] += delta as f64;
            } else {
                int_w[i] = int_w[i].saturating_sub(delta);
                real_w[i] = (real_w[i] - delta as f64).max(0.0);
            }
        }

        // integer path: right shift on overflow, then LSB policy
        if int_w.iter().any(|&w| w > w_max) {
            for w in &mut int_w {
                *w >>= 1;
                match policy {
                    LsbPolicy::AllLsbHigh => *w |= 1,
                    LsbPolicy::ZeroedLsbHigh => {
                        if *w == 0 {
                            *w = 1;
                        }
                    }
                    LsbPolicy::DisableZeroed => {}
                }
            }
        }
        // the replay is permanently in standby: grow-direction shifts apply
        // as soon as every MSB clears
        while int_w.iter().max().copied().unwrap_or(0) > 0
            && int_w.iter().all(|&w| w < msb)
        {
            for w in &mut int_w {
                *w = (*w << 1).min(w_max);
            }
        }

        // oracle path: identical dynamics, exact division and multiplication
        let real_max = real_w.iter().cloned().fold(0.0, f64::max);
        if real_max > w_max as f64 {
            for w in &mut real_w {
                *w /= 2.0;
            }
        }
        let real_max = real_w.iter().cloned().fold(0.0, f64::max);
        if real_max > 0.0 && real_max < msb as f64 {
            let doublings = libm::ceil(libm::log2(msb as f64 / real_max)) as i32;
            for w in &mut real_w {
                *w *= libm::exp2(doublings as f64);
            }
        }
    }

    let int_f: Vec<f64> = int_w.iter().map(|&w| w as f64).collect();
    let rms = homeostasis::rms_relative_error(&int_f, &real_w, NormSignal::MaxW)
        .unwrap_or(f64::NAN);
    let rho = stats::spearman(&int_f, &real_w);
    NormReplayRow {
        bit_width,
        lsb_policy: policy,
        seed,
        rms_error: rms,
        spearman_rank_corr: rho,
    }
}

/// Full grid of the replay: one row per (bit width, policy, seed).
pub fn run_norm_error(
    bit_widths: &[u32],
    policies: &[LsbPolicy],
    seeds: &[u64],
    n_synapses: usize,
    n_updates: usize,
) -> Vec<NormReplayRow> {
    let mut rows = Vec::new();
    for &b in bit_widths {
        for &policy in policies {
            for &seed in seeds {
                rows.push(norm_replay_run(b, policy, seed, n_synapses, n_updates));
            }
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Noise sweep (steady-state weight encoding of afferent SNR)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub presentations: usize,
    /// Presentations discarded before steady-state averaging.
    pub burn_in: usize,
    pub window_len: u32,
    /// Pattern offsets are drawn from the first `pattern_span` steps of the
    /// window; the remainder lets kernel tails decay before the next
    /// presentation, so every target spike lands on an idle kernel.
    pub pattern_span: u32,
    pub params: NeuronParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepError {
    BurnInTooLong { burn_in: usize, presentations: usize },
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepError::BurnInTooLong { burn_in, presentations } => write!(
                f,
                "burn_in {burn_in} must be below presentations {presentations}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambdas: Vec<f64>,
    /// Steady-state weight mean per synapse, averaged over seeds.
    pub mean_w: Vec<f64>,
    pub sd_w: Vec<f64>,
}

/// One seed of the sweep: repeated single-pattern presentations under
/// per-channel Poisson noise; returns the per-synapse steady-state mean.
pub fn sweep_run(cfg: &SweepConfig, seed: u64) -> Result<Vec<f64>, SweepError> {
    if cfg.burn_in >= cfg.presentations {
        return Err(SweepError::BurnInTooLong {
            burn_in: cfg.burn_in,
            presentations: cfg.presentations,
        });
    }
    let n = cfg.params.n_synapses;
    let span = cfg.pattern_span.min(cfg.window_len).max(2);
    let pattern = gen_pattern(n, span, subseed(seed, 1));
    let program = StimulusProgram::repeat(cfg.presentations, cfg.window_len, subseed(seed, 2));
    let noise = NoiseSpec {
        lambda_per_channel: cfg.lambdas.clone(),
    };
    let raster = compose_stream(&program, &[pattern], &noise);

    let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, 3));
    let mut state = NeuronState::new(&cfg.params, &mut rng);
    let norm_cfg = NormConfig::from_params(&cfg.params);

    // sample weights at the start of each presentation window
    let mut traces: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut next_slot = 0usize;
    run_raster(&mut state, &cfg.params, &norm_cfg, &raster, |t, st, _, _| {
        while next_slot < program.starts.len() && program.starts[next_slot] == t {
            for (i, syn) in st.synapses.iter().enumerate() {
                traces[i].push(syn.w as f64);
            }
            next_slot += 1;
        }
    });

    traces
        .iter()
        .map(|trace| steady_state(trace, cfg.burn_in).map_err(|_| SweepError::BurnInTooLong {
            burn_in: cfg.burn_in,
            presentations: cfg.presentations,
        }))
        .collect()
}

/// Sweep one grid point over all seeds, reporting mean and sd per synapse.
pub fn run_noise_sweep(cfg: &SweepConfig) -> Result<SweepPoint, SweepError> {
    let n = cfg.params.n_synapses;
    let mut per_seed: Vec<Vec<f64>> = Vec::new();
    for &seed in &cfg.seeds {
        per_seed.push(sweep_run(cfg, seed)?);
    }
    let mut mean_w = Vec::with_capacity(n);
    let mut sd_w = Vec::with_capacity(n);
    for i in 0..n {
        let col: Vec<f64> = per_seed.iter().map(|run| run[i]).collect();
        mean_w.push(stats::mean(&col));
        sd_w.push(stats::std_dev(&col));
    }
    Ok(SweepPoint {
        lambdas: cfg.lambdas.clone(),
        mean_w,
        sd_w,
    })
}

/// The five noise environments of the sixteen-input weight-evolution plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvPreset {
    /// Every synapse at lambda 1/16.
    Uniform,
    /// Half the channels clean, half at lambda 1/8.
    HalfClean,
    /// Four groups of four with rising noise levels.
    FourGroups,
    /// Eight pairs with rising noise levels.
    EightPairs,
    /// Noise level increasing with synapse index.
    Ramp,
}

pub fn env_lambdas(preset: EnvPreset, n: usize) -> Vec<f64> {
    match preset {
        EnvPreset::Uniform => vec![1.0 / 16.0; n],
        EnvPreset::HalfClean => (0..n)
            .map(|i| if i < n / 2 { 0.0 } else { 1.0 / 8.0 })
            .collect(),
        EnvPreset::FourGroups => {
            let levels = [0.0, 0.125, 0.25, 0.5];
            (0..n).map(|i| levels[(i * 4 / n.max(1)).min(3)]).collect()
        }
        EnvPreset::EightPairs => {
            let groups = 8;
            (0..n)
                .map(|i| (i * groups / n.max(1)) as f64 * 0.5 / (groups - 1) as f64)
                .collect()
        }
        EnvPreset::Ramp => (0..n)
            .map(|i| i as f64 * 0.5 / (n.max(2) - 1) as f64)
            .collect(),
    }
}

/// Mean over the post-burn-in samples.
pub fn steady_state(trace: &[f64], burn_in: usize) -> Result<f64, &'static str> {
    if trace.len() <= burn_in {
        return Err("trace shorter than burn-in");
    }
    Ok(stats::mean(&trace[burn_in..]))
}

// ---------------------------------------------------------------------------
// Two-pattern recognition benchmark
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionCondition {
    pub n_channels: usize,
    /// The first `noisy_channels` channels receive noise at `snr_lambda`.
    pub noisy_channels: usize,
    pub snr_lambda: f64,
    pub adaptive: bool,
    pub seed: u64,
    pub window_len: u32,
    /// Patterns occupy the first `pattern_span` steps of each window; see
    /// [`SweepConfig::pattern_span`].
    pub pattern_span: u32,
    pub presentations: usize,
    /// Unsupervised learning slots before the target is designated.
    pub learning_presentations: usize,
    pub params: NeuronParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionReport {
    pub missed: u32,
    pub false_positives: u32,
    pub total_targets: u32,
    pub error: f64,
    pub designated_pattern: usize,
    pub designation_tie: bool,
    pub noisy_channels: usize,
    pub snr_lambda: f64,
    pub adaptive: bool,
    pub seed: u64,
}

/// Present a random sequence of two patterns; after the learning phase the
/// pattern the neuron spiked most for becomes its target; the remainder is
/// scored. A pulse is attributed to the presentation whose detection span
/// (window plus an equal-length tail for kernel completion) contains its
/// onset; pulses outside every span are false positives.
pub fn run_recognition(cond: &RecognitionCondition) -> RecognitionReport {
    let n = cond.n_channels;
    let span = cond.pattern_span.min(cond.window_len).max(2);
    let pattern_a = gen_pattern(n, span, subseed(cond.seed, 10));
    let pattern_b = gen_pattern(n, span, subseed(cond.seed, 11));

    let mut slot_rng = ChaCha8Rng::seed_from_u64(subseed(cond.seed, 12));
    let slots: Vec<Option<usize>> = (0..cond.presentations)
        .map(|_| Some(usize::from(slot_rng.gen::<bool>())))
        .collect();
    let program = StimulusProgram::new(slots.clone(), cond.window_len, subseed(cond.seed, 13));

    let mut lambdas = vec![0.0; n];
    for l in lambdas.iter_mut().take(cond.noisy_channels) {
        *l = cond.snr_lambda;
    }
    let noise = NoiseSpec {
        lambda_per_channel: lambdas,
    };
    let raster = compose_stream(&program, &[pattern_a, pattern_b], &noise);

    let params = NeuronParams {
        n_synapses: n,
        adaptive_weights: cond.adaptive,
        ..cond.params.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(cond.seed, 14));
    let mut state = NeuronState::new(&params, &mut rng);
    let norm_cfg = NormConfig::from_params(&params);

    // pulse onset = rising edge of s; prev_s is already refreshed after a
    // step, so track the previously observed value here
    let mut onsets: Vec<u64> = Vec::new();
    let mut prev = false;
    run_raster(&mut state, &params, &norm_cfg, &raster, |t, st, _, _| {
        if st.s && !prev {
            onsets.push(t);
        }
        prev = st.s;
    });

    let span = 2 * cond.window_len as u64;
    // attribute each onset to a slot (or none)
    let mut per_slot_pulses = vec![0u32; cond.presentations];
    let mut stray_pulses_after_learning = 0u32;
    for &t in &onsets {
        // slots are sorted by start; binary search for the last start <= t
        let idx = match program.starts.binary_search(&t) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        };
        match idx {
            Some(i) if t < program.starts[i] + span => per_slot_pulses[i] += 1,
            _ => {
                // pulse in a gap: count it against the scored phase only
                if idx.map_or(false, |i| i >= cond.learning_presentations) {
                    stray_pulses_after_learning += 1;
                }
            }
        }
    }

    // designate the target from the learning phase
    let mut spikes_for = [0u32; 2];
    for (i, slot) in slots.iter().enumerate().take(cond.learning_presentations) {
        if let Some(p) = slot {
            spikes_for[*p] += per_slot_pulses[i];
        }
    }
    let designation_tie = spikes_for[0] == spikes_for[1];
    let designated = if spikes_for[1] > spikes_for[0] { 1 } else { 0 };

    // score the rest
    let mut missed = 0u32;
    let mut false_positives = stray_pulses_after_learning;
    let mut total_targets = 0u32;
    for i in cond.learning_presentations..cond.presentations {
        let Some(p) = slots[i] else { continue };
        if p == designated {
            total_targets += 1;
            if per_slot_pulses[i] == 0 {
                missed += 1;
            }
        } else {
            false_positives += per_slot_pulses[i];
        }
    }
    let error = if total_targets == 0 {
        0.0
    } else {
        (missed + false_positives) as f64 / total_targets as f64
    };
    RecognitionReport {
        missed,
        false_positives,
        total_targets,
        error,
        designated_pattern: designated,
        designation_tie,
        noisy_channels: cond.noisy_channels,
        snr_lambda: cond.snr_lambda,
        adaptive: cond.adaptive,
        seed: cond.seed,
    }
}

// ---------------------------------------------------------------------------
// Feature learning on latency-coded images with noisy-pixel disabling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLearningConfig {
    pub params: NeuronParams,
    /// Latency of the darkest pixel; window length of one image.
    pub t_max: u32,
    /// Steps between the encoding window and the next image; kernel tails
    /// decay and standby normalization runs here. Part of the presentation
    /// period, so corrupted channels keep spiking through it.
    pub gap: u32,
    /// Corrupted pixel indices.
    pub corrupted: Vec<usize>,
    /// Per-corrupted-pixel noise rate, aligned with `corrupted`.
    pub lambdas: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptiveField {
    /// Final kernel slope per synapse (fixed point).
    pub dr: Vec<u32>,
    /// Final weight per synapse.
    pub w: Vec<u32>,
    pub disabled: Vec<bool>,
    /// Training-image index at which each synapse was disabled.
    pub disable_time: Vec<Option<usize>>,
}

/// Latency-encode one image and add Poisson noise on the corrupted pixels.
/// The raster covers the full presentation period — encoding window plus the
/// inter-image gap — and noise lands anywhere in it: a noisy channel does not
/// pause between images, and the spikes it fires into the kernel tail are
/// exactly the ones the membrane-return event converts into weight drops.
pub fn corrupt_image_raster(
    image: &[u8],
    cfg: &FeatureLearningConfig,
    rng: &mut ChaCha8Rng,
) -> Raster {
    let period = cfg.t_max as u64 + 1 + cfg.gap as u64;
    let mut spikes: Vec<(u64, u32)> = encode_latency(image, cfg.t_max)
        .into_iter()
        .enumerate()
        .map(|(ch, t)| (t as u64, ch as u32))
        .collect();
    for (&pixel, &lambda) in cfg.corrupted.iter().zip(&cfg.lambdas) {
        let count = poisson(lambda, rng);
        for _ in 0..count {
            spikes.push((rng.gen_range(0..period), pixel as u32));
        }
    }
    Raster::from_spikes(image.len(), period, spikes)
}

/// Stream latency-encoded images through the neuron, recording when each
/// synapse is disabled and the final slope/weight maps.
pub fn run_feature_learning<'a, I>(images: I, cfg: &FeatureLearningConfig) -> ReceptiveField
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let n = cfg.params.n_synapses;
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(cfg.seed, 20));
    let mut state = NeuronState::new(&cfg.params, &mut rng);
    let norm_cfg = NormConfig::from_params(&cfg.params);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(subseed(cfg.seed, 21));

    let mut disable_time: Vec<Option<usize>> = vec![None; n];
    let mut was_enabled: Vec<bool> = vec![true; n];

    for (img_idx, image) in images.into_iter().enumerate() {
        assert_eq!(image.len(), n, "image size must match synapse count");
        let raster = corrupt_image_raster(image, cfg, &mut noise_rng);
        run_raster(&mut state, &cfg.params, &norm_cfg, &raster, |_, _, _, _| {});
        for (i, syn) in state.synapses.iter().enumerate() {
            if was_enabled[i] && !syn.enabled {
                disable_time[i] = Some(img_idx);
                was_enabled[i] = false;
            }
        }
    }

    ReceptiveField {
        dr: state.synapses.iter().map(|s| s.dr).collect(),
        w: state.synapses.iter().map(|s| s.w).collect(),
        disabled: state.synapses.iter().map(|s| !s.enabled).collect(),
        disable_time,
    }
}
