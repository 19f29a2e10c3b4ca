//! Mobile molecular communication channel simulation and symbol detection.
//!
//! The crate covers the whole evaluation pipeline:
//!
//! * [`sim`]: particle-level Brownian channel with reversible receptor
//!   binding, producing bound-receptor time series.
//! * [`features`]: end-of-interval occupancy features and z-scoring.
//! * [`esn`]: leaky-integrator echo state network with a ridge readout and
//!   fixed or ROC-optimised decision thresholds.
//! * [`classical`]: fixed threshold, EMA-adaptive threshold and mismatched
//!   Viterbi sequence detection.
//! * [`neural`]: shallow feedforward baselines over raw sample windows.
//! * [`metrics`], [`latency`], [`bench`]: accuracy/BER, ROC/AUC, latency
//!   and the multi-detector sweep.

pub mod bench;
pub mod classical;
pub mod config;
pub mod detector;
pub mod error;
pub mod esn;
pub mod features;
pub mod latency;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
