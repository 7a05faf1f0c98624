//! Pulse engineering for coupled spin systems.
//!
//! Implements GRAPE gradient-ascent pulse design with two interchangeable
//! propagator backends: an exact matrix-exponential baseline and a fast
//! phase-transform + Trotter-Suzuki factorization in which every explicit
//! exponential is diagonal and each sub-propagator costs a single full
//! matrix multiplication. Offset shifting, multi-offset plans, a robustness
//! ensemble for RF inhomogeneity, and a benchmark harness quantify the
//! speed/accuracy trade.
//!
//! Conventions used throughout:
//! - frequencies are angular (rad/s) in the library API; configuration files
//!   and builders take Hz and multiply by 2 pi,
//! - spin 1 is the most significant qubit (leftmost tensor factor),
//! - pulse steps and channels are 0-based indices; spins are 1-based labels,
//! - the propagator for an n-step pulse is V = V_n ... V_2 V_1 (step 1
//!   applied first).

pub mod bench;
pub mod cli;
pub mod config;
pub mod counters;
pub mod error;
pub mod fidelity;
pub mod gates;
pub mod linalg;
pub mod optimizer;
pub mod propagator;
pub mod pulse;
pub mod pulse_io;
pub mod spin;
pub mod verify;

pub use error::{Error, Result};
pub use fidelity::{fidelity, FidelityValue, GradientField};
pub use linalg::{DenseMatrix, DiagonalVector};
pub use optimizer::{optimize, BackendPolicy, OptimizerConfig, OptimizationReport};
pub use propagator::{Backend, PropagatorPlan, StepWorkspace, Unitary};
pub use pulse::{Amplitude, ControlPulse};
pub use spin::{CouplingModel, SpinSystem};
