//! Behavioral simulator of a mixed-signal FIR filter whose tap weights live
//! in memristive devices.
//!
//! The crate models the full signal path of such a filter — ADC quantization,
//! a digital shift register, per-tap DACs, the memristive weight network and
//! an inverting summing amplifier — together with the device switching model
//! and the closed-loop programming that stores the weights. Analysis helpers
//! generate stimuli, estimate frequency responses and score noise reduction,
//! and a scenario runner wires everything into reproducible experiments.
//!
//! Start with the runnable examples (`cargo run --example ...`) or the
//! module docs:
//!
//! - [`device`]: memristive device model and quasi-DC sweeps
//! - [`tuner`]: closed-loop write-verify programming
//! - [`filter`]: mixed-signal FIR pipeline and the binary-weighted variant
//! - [`analysis`]: stimuli, response curves and metrics
//! - [`scenario`]: config-driven experiment runner and CSV artifacts

// validation uses `!(x > 0.0)` so NaN fails the same branch as a bad value
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod device;
pub mod filter;
pub mod rng;
pub mod scenario;
pub mod tuner;

pub use analysis::{NoisySineSpec, ResponseCurve};
pub use device::{DeviceParams, DeviceState, VariationSpec};
pub use filter::{ConductanceBank, FilterConfig, FilterState, Signal};
pub use scenario::ScenarioConfig;
pub use tuner::{TuneConfig, TuneReport};
