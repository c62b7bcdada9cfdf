//! Error type shared by every module of the core crate.

use thiserror::Error;

/// Failures raised by the physics kernels, the discretisation and the
/// time integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MhdError {
    #[error("non-positive density {rho}")]
    NonPositiveDensity { rho: f64 },

    #[error("inadmissible state: rho = {rho}, internal energy = {internal_energy}")]
    Inadmissible { rho: f64, internal_energy: f64 },

    #[error("negative radicand {value} in a wave-speed formula")]
    NegativeRadicand { value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature construction failed: {0}")]
    Quadrature(String),

    #[error("limiter precondition violated in cell {cell}: average rho = {rho}, internal energy = {internal_energy}")]
    LimiterPrecondition { cell: usize, rho: f64, internal_energy: f64 },

    #[error("time step {dt} exceeds the admissible bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("positivity lost at t = {t} (step {step}, cell {cell}): rho = {rho}, internal energy = {internal_energy}")]
    PositivityFailure {
        t: f64,
        step: usize,
        cell: usize,
        rho: f64,
        internal_energy: f64,
    },
}

pub type Result<T> = std::result::Result<T, MhdError>;
