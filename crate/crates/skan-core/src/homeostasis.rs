//! Division-free weight normalization: global right shifts on overflow,
//! global left shifts during standby, the zero-weight LSB policies, and
//! the double-precision division oracle used for error measurement.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::neuron::{NeuronState, Phase, StepEvents};
use crate::params::{LsbPolicy, NeuronParams, NormSignal};

/// Reference value the division oracle scales the monitored signal to.
pub const ORACLE_REFERENCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormConfig {
    pub bit_width_b: u32,
    pub norm_signal: NormSignal,
    pub lsb_policy: LsbPolicy,
    pub sum_register_bits: u32,
    pub theta_min: u64,
}

impl NormConfig {
    pub fn from_params(params: &NeuronParams) -> Self {
        NormConfig {
            bit_width_b: params.bit_width_b,
            norm_signal: params.norm_signal,
            lsb_policy: params.lsb_policy,
            sum_register_bits: params.sum_register_bits(),
            theta_min: params.theta_min,
        }
    }

    fn w_max(&self) -> u32 {
        (1u32 << self.bit_width_b) - 1
    }

    fn w_msb(&self) -> u32 {
        1u32 << (self.bit_width_b - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftDirection {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftTrigger {
    Overflow,
    StandbyMsbLow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormEvent {
    pub direction: ShiftDirection,
    pub trigger: ShiftTrigger,
    pub timestep: u64,
    pub zeroed_synapses: Vec<usize>,
    /// Number of single-bit shifts applied (left shifts repeat until the
    /// monitored signal reaches the top half of its range).
    pub shifts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormError {
    /// Left shifts may only run while no kernel is in flight.
    NotStandby,
}

impl fmt::Display for NormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormError::NotStandby => write!(f, "left shift invoked with kernels in flight"),
        }
    }
}

/// What the caller should do after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    None,
    RightNow,
    LeftAtStandby,
}

fn monitored_signal(state: &NeuronState, cfg: &NormConfig) -> u64 {
    match cfg.norm_signal {
        NormSignal::MaxW => state
            .synapses
            .iter()
            .filter(|s| s.enabled)
            .map(|s| s.w as u64)
            .max()
            .unwrap_or(0),
        NormSignal::SumW => state.weight_sum(),
    }
}

/// True when the monitored signal sits strictly below half its range.
/// Disabled synapses are excluded; an all-zero signal never triggers.
fn left_condition(state: &NeuronState, cfg: &NormConfig) -> bool {
    let signal = monitored_signal(state, cfg);
    if signal == 0 {
        return false;
    }
    match cfg.norm_signal {
        NormSignal::MaxW => signal < cfg.w_msb() as u64,
        NormSignal::SumW => signal < 1u64 << (cfg.sum_register_bits - 1),
    }
}

/// Halve every weight, kernel value, slope and the threshold, then apply
/// the zero-weight LSB policy. Kernel phases are preserved.
pub fn right_shift_neuron(state: &mut NeuronState, cfg: &NormConfig) -> NormEvent {
    let mut zeroed = Vec::new();
    for (i, syn) in state.synapses.iter_mut().enumerate() {
        if !syn.enabled {
            continue;
        }
        let was_positive = syn.w > 0;
        syn.w >>= 1;
        syn.r >>= 1;
        syn.dr = (syn.dr >> 1).max(1);
        if syn.phase == Phase::Falling && syn.r == 0 {
            syn.phase = Phase::Idle;
        }
        match cfg.lsb_policy {
            LsbPolicy::AllLsbHigh => syn.w |= 1,
            LsbPolicy::ZeroedLsbHigh => {
                if syn.w == 0 {
                    syn.w = 1;
                }
            }
            LsbPolicy::DisableZeroed => {
                if syn.w == 0 {
                    if was_positive {
                        zeroed.push(i);
                    }
                    syn.disable();
                }
            }
        }
    }
    state.theta = (state.theta >> 1).max(cfg.theta_min);
    state.sum_r = state.synapses.iter().map(|s| s.r as u64).sum();
    state.prev_sum_r = if state.prev_sum_r > 0 {
        (state.prev_sum_r >> 1).max(1)
    } else {
        0
    };
    NormEvent {
        direction: ShiftDirection::Right,
        trigger: ShiftTrigger::Overflow,
        timestep: state.t,
        zeroed_synapses: zeroed,
        shifts: 1,
    }
}

/// Double every weight, kernel value, slope and the threshold, repeating
/// until the monitored signal reaches the top half of its range.
pub fn left_shift_neuron(state: &mut NeuronState, cfg: &NormConfig) -> Result<NormEvent, NormError> {
    if !state.is_standby() {
        return Err(NormError::NotStandby);
    }
    let w_max = cfg.w_max();
    let theta_max = (1u64 << cfg.sum_register_bits) - 1;
    let mut shifts = 0;
    // Terminates in < b iterations: the signal at least doubles each pass.
    while left_condition(state, cfg) && shifts < cfg.bit_width_b {
        for syn in state.synapses.iter_mut() {
            if !syn.enabled {
                continue;
            }
            syn.w = (syn.w << 1).min(w_max);
            syn.r = syn.r.saturating_mul(2);
            syn.dr = syn.dr.saturating_mul(2);
        }
        state.theta = state.theta.saturating_mul(2).min(theta_max);
        shifts += 1;
    }
    Ok(NormEvent {
        direction: ShiftDirection::Left,
        trigger: ShiftTrigger::StandbyMsbLow,
        timestep: state.t,
        zeroed_synapses: Vec::new(),
        shifts,
    })
}

/// Decide, after a step, whether normalization is due.
pub fn schedule_normalization(
    state: &NeuronState,
    events: &StepEvents,
    cfg: &NormConfig,
) -> Schedule {
    let sum_overflow = cfg.norm_signal == NormSignal::SumW
        && state.weight_sum() > (1u64 << cfg.sum_register_bits) - 1;
    if events.weight_overflow || sum_overflow {
        return Schedule::RightNow;
    }
    if state.is_standby() && left_condition(state, cfg) {
        return Schedule::LeftAtStandby;
    }
    Schedule::None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    AllZero,
    LengthMismatch { left: usize, right: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::AllZero => write!(f, "cannot normalize an all-zero weight vector"),
            OracleError::LengthMismatch { left, right } => {
                write!(f, "vector length mismatch: {left} vs {right}")
            }
        }
    }
}

/// Reference normalization by floating-point division: scale so the
/// monitored signal equals [`ORACLE_REFERENCE`].
pub fn normalize_oracle(weights: &[f64], signal: NormSignal) -> Result<Vec<f64>, OracleError> {
    let denom = match signal {
        NormSignal::MaxW => weights.iter().cloned().fold(0.0, f64::max),
        NormSignal::SumW => weights.iter().sum(),
    };
    if denom <= 0.0 {
        return Err(OracleError::AllZero);
    }
    Ok(weights.iter().map(|w| w / denom * ORACLE_REFERENCE).collect())
}

/// RMS of the componentwise differences of the relative weights, each
/// vector first divided by its own monitored signal.
pub fn rms_relative_error(
    shifted: &[f64],
    oracle: &[f64],
    signal: NormSignal,
) -> Result<f64, OracleError> {
    if shifted.len() != oracle.len() {
        return Err(OracleError::LengthMismatch {
            left: shifted.len(),
            right: oracle.len(),
        });
    }
    let a = normalize_oracle(shifted, signal)?;
    let b = normalize_oracle(oracle, signal)?;
    let mse = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    Ok(libm::sqrt(mse))
}
