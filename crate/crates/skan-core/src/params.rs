//! Neuron configuration and its validation rules.

use core::fmt;

use serde::{Deserialize, Serialize};

/// How the per-synapse kernel slope is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DrInitPolicy {
    /// Every slope starts at the given fixed-point value.
    Uniform(u32),
    /// Slopes drawn uniformly in `[slope_min, slope_max]` from the run seed.
    SeededRandom,
}

/// What happens to weights that a right shift would zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LsbPolicy {
    /// Set the LSB of every weight after the shift; no zero checking.
    AllLsbHigh,
    /// Set the LSB only of weights the shift zeroed.
    ZeroedLsbHigh,
    /// Permanently disable synapses whose weight reaches zero.
    DisableZeroed,
}

/// Which signal the normalization machinery monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormSignal {
    /// Max of the enabled weights, range `[0, 2^b - 1]`.
    MaxW,
    /// Sum of the enabled weights, range `[0, 2^(b + ceil(log2 n)) - 1]`.
    SumW,
}

/// All constants of the neuron model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    pub n_synapses: usize,
    /// Weight register width in bits.
    pub bit_width_b: u32,
    /// Fractional bits of the fixed-point slope.
    pub slope_frac_bits_f: u32,
    pub w_rise: u32,
    pub w_fall: u32,
    /// Slope increment per timestep while the output pulse is high (fixed point).
    pub slope_step_ddr: u32,
    /// Slope clamp bounds for adaptation (fixed point).
    pub slope_min: u32,
    pub slope_max: u32,
    pub theta_rise: u64,
    pub theta_fall: u64,
    pub theta_min: u64,
    pub theta_init: u64,
    pub w_init: u32,
    pub dr_init_policy: DrInitPolicy,
    pub lsb_policy: LsbPolicy,
    pub norm_signal: NormSignal,
    /// `false` freezes all weights (static-weight baseline).
    pub adaptive_weights: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamError {
    ZeroSynapses,
    BadBitWidth(u32),
    ZeroStep(&'static str),
    BadSlopeBounds { min: u32, max: u32 },
    BadWInit { w_init: u32, max: u32 },
    BadThetaMin,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::ZeroSynapses => write!(f, "n_synapses must be >= 1"),
            ParamError::BadBitWidth(b) => write!(f, "bit_width_b {b} outside 1..=24"),
            ParamError::ZeroStep(name) => write!(f, "{name} must be >= 1"),
            ParamError::BadSlopeBounds { min, max } => {
                write!(f, "slope bounds invalid: 0 < {min} <= {max} violated")
            }
            ParamError::BadWInit { w_init, max } => {
                write!(f, "w_init {w_init} outside 1..={max}")
            }
            ParamError::BadThetaMin => write!(f, "theta_min must be >= 1"),
        }
    }
}

impl NeuronParams {
    /// Largest representable weight, `2^b - 1`.
    pub fn w_max(&self) -> u32 {
        (1u32 << self.bit_width_b) - 1
    }

    /// MSB mask of the weight register.
    pub fn w_msb(&self) -> u32 {
        1u32 << (self.bit_width_b - 1)
    }

    /// Width of the weight-sum register: `b + ceil(log2 n_synapses)`.
    pub fn sum_register_bits(&self) -> u32 {
        let n = self.n_synapses as u64;
        let extra = 64 - (n - 1).leading_zeros().min(64);
        self.bit_width_b + if n == 1 { 0 } else { extra }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n_synapses == 0 {
            return Err(ParamError::ZeroSynapses);
        }
        if self.bit_width_b == 0 || self.bit_width_b > 24 {
            return Err(ParamError::BadBitWidth(self.bit_width_b));
        }
        if self.w_rise == 0 {
            return Err(ParamError::ZeroStep("w_rise"));
        }
        if self.w_fall == 0 {
            return Err(ParamError::ZeroStep("w_fall"));
        }
        if self.slope_step_ddr == 0 {
            return Err(ParamError::ZeroStep("slope_step_ddr"));
        }
        if self.theta_rise == 0 {
            return Err(ParamError::ZeroStep("theta_rise"));
        }
        if self.theta_fall == 0 {
            return Err(ParamError::ZeroStep("theta_fall"));
        }
        if self.slope_min == 0 || self.slope_min > self.slope_max {
            return Err(ParamError::BadSlopeBounds {
                min: self.slope_min,
                max: self.slope_max,
            });
        }
        if self.w_init == 0 || self.w_init > self.w_max() {
            return Err(ParamError::BadWInit {
                w_init: self.w_init,
                max: self.w_max(),
            });
        }
        if self.theta_min == 0 {
            return Err(ParamError::BadThetaMin);
        }
        Ok(())
    }
}

impl Default for NeuronParams {
    /// Desk-scale defaults: 16-bit weights, 8 fractional slope bits,
    /// MSB-set initial weight, kernel durations spanning 4..256 steps.
    fn default() -> Self {
        let f = 8u32;
        NeuronParams {
            n_synapses: 3,
            bit_width_b: 16,
            slope_frac_bits_f: f,
            w_rise: 4096,
            w_fall: 256,
            slope_step_ddr: 16 << f,
            slope_min: 128 << f,
            slope_max: 8192 << f,
            theta_rise: 512,
            theta_fall: 512,
            theta_min: 1024,
            theta_init: 1 << 14,
            w_init: 1 << 15,
            dr_init_policy: DrInitPolicy::Uniform(683 << f),
            lsb_policy: LsbPolicy::ZeroedLsbHigh,
            norm_signal: NormSignal::MaxW,
            adaptive_weights: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        NeuronParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_zero_synapses() {
        let p = NeuronParams {
            n_synapses: 0,
            ..Default::default()
        };
        assert_eq!(p.validate(), Err(ParamError::ZeroSynapses));
    }

    #[test]
    fn rejects_inverted_slope_bounds() {
        let p = NeuronParams {
            slope_min: 10,
            slope_max: 5,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(ParamError::BadSlopeBounds { .. })));
    }

    #[test]
    fn sum_register_width() {
        let p = NeuronParams {
            n_synapses: 16,
            bit_width_b: 8,
            w_init: 128,
            ..Default::default()
        };
        assert_eq!(p.sum_register_bits(), 12);
        let p3 = NeuronParams {
            n_synapses: 3,
            bit_width_b: 8,
            w_init: 128,
            ..Default::default()
        };
        assert_eq!(p3.sum_register_bits(), 10);
    }
}
