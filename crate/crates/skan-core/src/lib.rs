//! Discrete-time simulation of a kernel-adapting spiking neuron with
//! flag-gated synaptic weight updates and division-free, shift-based
//! synaptic homeostasis.
//!
//! The crate is `no_std` (alloc required); IO, file formats and the CLI
//! live in the companion `skan` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod experiments;
pub mod homeostasis;
pub mod neuron;
pub mod params;
pub mod presets;
pub mod stats;
pub mod stimulus;

pub use neuron::{NeuronState, StepEvents, SynapseState};
pub use params::{DrInitPolicy, LsbPolicy, NeuronParams, NormSignal};
