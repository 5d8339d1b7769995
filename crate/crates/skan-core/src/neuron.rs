//! The single-neuron discrete-time state machine: triangular kernel ramps,
//! slope adaptation, adaptive threshold, and the flag-gated weight update.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::params::{DrInitPolicy, LsbPolicy, NeuronParams};

/// Kernel ramp phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    Rising,
    Falling,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynapseState {
    /// Weight, `b`-bit unsigned.
    pub w: u32,
    /// Kernel value, same scale as `w`.
    pub r: u32,
    /// Kernel slope, fixed point with `f` fractional bits.
    pub dr: u32,
    pub phase: Phase,
    /// Weight-adjustment flag, set by a spike, cleared by the next edge event.
    pub d_flag: bool,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuronState {
    pub synapses: Vec<SynapseState>,
    pub theta: u64,
    pub sum_r: u64,
    /// Output pulse.
    pub s: bool,
    pub prev_s: bool,
    pub prev_sum_r: u64,
    /// Timestep counter.
    pub t: u64,
}

/// What happened during one step, for the homeostasis layer and for scoring.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepEvents {
    /// Falling edge of the output pulse.
    pub s_fell: bool,
    /// Membrane potential returned to zero.
    pub sum_fell: bool,
    /// Some weight rise saturated at `2^b - 1` (would have overflowed).
    pub weight_overflow: bool,
    /// Synapses whose weight reached zero this step.
    pub zeroed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepError {
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::DimensionMismatch { expected, got } => {
                write!(f, "input vector length {got} does not match synapse count {expected}")
            }
        }
    }
}

impl NeuronState {
    /// Fresh neuron. The RNG is consumed only under `DrInitPolicy::SeededRandom`.
    pub fn new<R: Rng>(params: &NeuronParams, rng: &mut R) -> Self {
        let synapses = (0..params.n_synapses)
            .map(|_| {
                let dr = match params.dr_init_policy {
                    DrInitPolicy::Uniform(v) => v.clamp(params.slope_min, params.slope_max),
                    DrInitPolicy::SeededRandom => {
                        rng.gen_range(params.slope_min..=params.slope_max)
                    }
                };
                SynapseState {
                    w: params.w_init,
                    r: 0,
                    dr,
                    phase: Phase::Idle,
                    d_flag: false,
                    enabled: true,
                }
            })
            .collect();
        NeuronState {
            synapses,
            theta: params.theta_init,
            sum_r: 0,
            s: false,
            prev_s: false,
            prev_sum_r: 0,
            t: 0,
        }
    }

    /// Sum of enabled weights, for the SumW normalization signal.
    pub fn weight_sum(&self) -> u64 {
        self.synapses
            .iter()
            .filter(|s| s.enabled)
            .map(|s| s.w as u64)
            .sum()
    }

    /// True when no kernel is in flight and the membrane is at zero.
    pub fn is_standby(&self) -> bool {
        self.sum_r == 0 && self.synapses.iter().all(|s| s.phase == Phase::Idle)
    }

    /// Advance one timestep. Stage order: spike intake, kernel update,
    /// soma comparison, pulse-gated adaptation, edge events.
    pub fn step(&mut self, inputs: &[bool], params: &NeuronParams) -> Result<StepEvents, StepError> {
        if inputs.len() != self.synapses.len() {
            return Err(StepError::DimensionMismatch {
                expected: self.synapses.len(),
                got: inputs.len(),
            });
        }
        let mut events = StepEvents::default();

        // (1) Spike intake. Spikes landing on an active kernel are invisible.
        for (syn, &u) in self.synapses.iter_mut().zip(inputs) {
            if u && syn.enabled && syn.phase == Phase::Idle {
                syn.phase = Phase::Rising;
                syn.d_flag = true;
            }
        }

        // (2) Kernel update. The integer slope is floored at 1 so a
        // triggered kernel always terminates.
        let f = params.slope_frac_bits_f;
        for syn in &mut self.synapses {
            let dr_int = (syn.dr >> f).max(1);
            match syn.phase {
                Phase::Idle => {}
                Phase::Rising => {
                    syn.r = syn.r.saturating_add(dr_int).min(syn.w);
                    if syn.r >= syn.w {
                        syn.phase = Phase::Falling;
                    }
                }
                Phase::Falling => {
                    syn.r = syn.r.saturating_sub(dr_int);
                    if syn.r == 0 {
                        syn.phase = Phase::Idle;
                    }
                }
            }
        }

        // (3) Soma.
        self.sum_r = self.synapses.iter().map(|s| s.r as u64).sum();
        self.s = self.sum_r > self.theta;

        // (4) Pulse-gated adaptation. The clamps never pull a slope back
        // inside [slope_min, slope_max] if a normalization shift moved it out.
        if self.s {
            self.theta = self.theta.saturating_add(params.theta_rise);
            for syn in &mut self.synapses {
                if !syn.enabled {
                    continue;
                }
                match syn.phase {
                    Phase::Rising => {
                        if syn.dr < params.slope_max {
                            syn.dr = syn
                                .dr
                                .saturating_add(params.slope_step_ddr)
                                .min(params.slope_max);
                        }
                    }
                    Phase::Falling => {
                        if syn.dr > params.slope_min {
                            syn.dr = syn
                                .dr
                                .saturating_sub(params.slope_step_ddr)
                                .max(params.slope_min);
                        }
                    }
                    Phase::Idle => {}
                }
            }
        }

        // (5) Edge events; the pulse falling edge wins over the membrane
        // return-to-zero, so flags feed at most one weight change.
        events.s_fell = self.prev_s && !self.s;
        events.sum_fell = self.prev_sum_r > 0 && self.sum_r == 0;
        if events.s_fell {
            self.apply_stdp_rise(params, &mut events);
        }
        if events.sum_fell {
            self.apply_stdp_fall(params, &mut events);
            self.theta = self.theta.saturating_sub(params.theta_fall).max(params.theta_min);
        }

        // (6) Bookkeeping for the next step's edge detection.
        self.prev_s = self.s;
        self.prev_sum_r = self.sum_r;
        self.t += 1;
        Ok(events)
    }

    /// Raise every flagged weight by `w_rise` (saturating) and clear the flags.
    fn apply_stdp_rise(&mut self, params: &NeuronParams, events: &mut StepEvents) {
        let w_max = params.w_max();
        for syn in &mut self.synapses {
            if syn.d_flag && syn.enabled {
                if params.adaptive_weights {
                    let raised = syn.w as u64 + params.w_rise as u64;
                    if raised > w_max as u64 {
                        events.weight_overflow = true;
                        syn.w = w_max;
                    } else {
                        syn.w = raised as u32;
                    }
                }
                syn.d_flag = false;
            }
        }
    }

    /// Drop every flagged weight by `w_fall` (floored at zero) and clear the flags.
    fn apply_stdp_fall(&mut self, params: &NeuronParams, events: &mut StepEvents) {
        for (i, syn) in self.synapses.iter_mut().enumerate() {
            if syn.d_flag && syn.enabled {
                if params.adaptive_weights {
                    syn.w = syn.w.saturating_sub(params.w_fall);
                    if syn.w == 0 {
                        events.zeroed.push(i);
                        if params.lsb_policy == LsbPolicy::DisableZeroed {
                            syn.disable();
                        }
                    }
                }
                syn.d_flag = false;
            }
        }
    }
}

impl SynapseState {
    /// Permanently silence the synapse.
    pub fn disable(&mut self) {
        self.w = 0;
        self.r = 0;
        self.dr = self.dr.max(1);
        self.phase = Phase::Idle;
        self.d_flag = false;
        self.enabled = false;
    }
}
