//! Calibrated, named parameter sets for the bundled experiments. Values
//! were tuned against the acceptance properties in the integration tests;
//! treat them as a matched set rather than independent knobs — in
//! particular `theta_fall` must stay at or above `n_synapses * w_fall` or
//! a single grazing miss erodes the membrane peak faster than the
//! threshold can follow it back down.

use crate::experiments::{FeatureLearningConfig, RecognitionCondition, SweepConfig};
use crate::params::{DrInitPolicy, LsbPolicy, NeuronParams, NormSignal};

const F: u32 = 8;

fn base() -> NeuronParams {
    NeuronParams {
        n_synapses: 3,
        bit_width_b: 16,
        slope_frac_bits_f: F,
        w_rise: 4096,
        w_fall: 256,
        slope_step_ddr: 8 << F,
        slope_min: 128 << F,
        slope_max: 8192 << F,
        theta_rise: 512,
        theta_fall: 512,
        theta_min: 1024,
        theta_init: 1 << 14,
        w_init: 1 << 15,
        dr_init_policy: DrInitPolicy::Uniform(683 << F),
        lsb_policy: LsbPolicy::ZeroedLsbHigh,
        norm_signal: NormSignal::MaxW,
        adaptive_weights: true,
    }
}

/// Window length for [`tuning_params`] presentations.
pub const TUNING_WINDOW: u32 = 64;

/// Three-channel kernel tuning demo: static weights, noise-free input,
/// slopes converge until the output collapses to a unit-delta pulse.
pub fn tuning_params() -> NeuronParams {
    NeuronParams {
        dr_init_policy: DrInitPolicy::Uniform(341 << F),
        adaptive_weights: false,
        ..base()
    }
}

/// Three-channel noise sweep: steady-state weights encode per-channel SNR.
pub fn sweep_params(signal: NormSignal) -> NeuronParams {
    NeuronParams {
        w_fall: 1024,
        norm_signal: signal,
        ..base()
    }
}

/// Sweep configuration with one noisy channel at `lambda3`.
pub fn sweep_config(lambda3: f64, seeds: alloc::vec::Vec<u64>, signal: NormSignal) -> SweepConfig {
    SweepConfig {
        lambdas: alloc::vec![0.0, 0.0, lambda3],
        seeds,
        presentations: 600,
        burn_in: 300,
        window_len: 128,
        pattern_span: 64,
        params: sweep_params(signal),
    }
}

/// Sixteen-channel environment run (the graded-noise presets of
/// [`crate::experiments::EnvPreset`]).
pub fn env_params(signal: NormSignal) -> NeuronParams {
    NeuronParams {
        n_synapses: 16,
        w_rise: 512,
        w_fall: 512,
        dr_init_policy: DrInitPolicy::Uniform(2048 << F),
        norm_signal: signal,
        ..base()
    }
}

pub fn env_config(
    lambdas: alloc::vec::Vec<f64>,
    seeds: alloc::vec::Vec<u64>,
    signal: NormSignal,
) -> SweepConfig {
    SweepConfig {
        lambdas,
        seeds,
        presentations: 600,
        burn_in: 300,
        window_len: 128,
        pattern_span: 16,
        params: env_params(signal),
    }
}

/// Window length of one recognition presentation.
pub const RECOGNITION_WINDOW: u32 = 160;
/// Steps of the window that may carry pattern spikes; the remainder lets
/// kernel tails decay so every target spike lands on an idle kernel.
pub const RECOGNITION_SPAN: u32 = 16;
pub const RECOGNITION_PRESENTATIONS: usize = 1000;
pub const RECOGNITION_LEARNING: usize = 100;
/// Default SNR grid (expected noise spikes per channel per window).
pub const RECOGNITION_SNR_GRID: [f64; 7] = [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0];
/// Default noisy-channel counts.
pub const RECOGNITION_NOISY_COUNTS: [usize; 4] = [2, 4, 8, 16];

/// Two-pattern recognition, noise-robust setting: symmetric rise/fall
/// shuts noisy channels off across the whole SNR grid.
pub fn recognition_params() -> NeuronParams {
    NeuronParams {
        n_synapses: 16,
        w_rise: 64,
        w_fall: 64,
        theta_rise: 1536,
        theta_fall: 1024,
        dr_init_policy: DrInitPolicy::Uniform(2048 << F),
        lsb_policy: LsbPolicy::DisableZeroed,
        ..base()
    }
}

/// Recognition with `w_rise` above `w_fall`: channel shut-off engages only
/// once the noise rate is high enough, so the error curve shows the
/// characteristic bump at low SNR before dropping again near SNR 1:1.
pub fn recognition_bump_params() -> NeuronParams {
    NeuronParams {
        w_rise: 128,
        ..recognition_params()
    }
}

pub fn recognition_condition(
    noisy_channels: usize,
    snr_lambda: f64,
    adaptive: bool,
    seed: u64,
    params: NeuronParams,
) -> RecognitionCondition {
    RecognitionCondition {
        n_channels: 16,
        noisy_channels,
        snr_lambda,
        adaptive,
        seed,
        window_len: RECOGNITION_WINDOW,
        pattern_span: RECOGNITION_SPAN,
        presentations: RECOGNITION_PRESENTATIONS,
        learning_presentations: RECOGNITION_LEARNING,
        params,
    }
}

/// Latency of the darkest pixel in the image-learning runs.
pub const IMAGE_T_MAX: u32 = 128;
/// Gap after each encoding window. Long on purpose: corrupted channels
/// keep spiking through it, and the membrane only returns to zero — the
/// event that converts their flags into weight drops — when the noise is
/// sparse enough to leave a kernel-length quiet window.
pub const IMAGE_GAP: u32 = 1920;
pub const IMAGE_CORRUPTED_PIXELS: usize = 40;
/// Per-pixel noise-rate band for corrupted pixels.
pub const IMAGE_LAMBDA_BAND: (f64, f64) = (1.0, 3.0);

/// 784-synapse pixel feature learning with noisy-pixel disabling.
pub fn feature_learning_params() -> NeuronParams {
    NeuronParams {
        n_synapses: 784,
        w_rise: 16,
        w_fall: 256,
        slope_step_ddr: 1 << F,
        slope_min: 256 << F,
        slope_max: 4096 << F,
        theta_rise: 512,
        theta_fall: 2048,
        dr_init_policy: DrInitPolicy::Uniform(1024 << F),
        lsb_policy: LsbPolicy::DisableZeroed,
        ..base()
    }
}

pub fn feature_learning_config(
    corrupted: alloc::vec::Vec<usize>,
    lambdas: alloc::vec::Vec<f64>,
    seed: u64,
) -> FeatureLearningConfig {
    FeatureLearningConfig {
        params: feature_learning_params(),
        t_max: IMAGE_T_MAX,
        gap: IMAGE_GAP,
        corrupted,
        lambdas,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        tuning_params().validate().unwrap();
        sweep_params(NormSignal::MaxW).validate().unwrap();
        sweep_params(NormSignal::SumW).validate().unwrap();
        env_params(NormSignal::MaxW).validate().unwrap();
        recognition_params().validate().unwrap();
        recognition_bump_params().validate().unwrap();
        feature_learning_params().validate().unwrap();
    }

    #[test]
    fn bump_preset_differs_only_in_rise() {
        let a = recognition_params();
        let b = recognition_bump_params();
        assert!(b.w_rise > a.w_rise);
        assert_eq!(NeuronParams { w_rise: a.w_rise, ..b }, a);
    }
}
