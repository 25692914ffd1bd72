//! Inexact gradient descent on a small zoo of test functions, with
//! adversarial noise, rate estimation and Lyapunov-decay checks.

pub mod functions;
pub mod lyapunov;
pub mod noise;
pub mod run;

pub use functions::{FunctionKind, TestFunction};
pub use lyapunov::{lyapunov_decay_check, LyapunovReport};
pub use noise::{greedy_noise, NoiseKind, NoisePolicy};
pub use run::{
    empirical_constant, empirical_rate, lower_bound_witness, run_inexact_gd, RateEstimate, Run,
    RunStatus, Witness, DIVERGENCE_BOUND,
};
