//! Positivity-preserving schemes for ideal magnetohydrodynamics.

pub mod basis;
pub mod error;
pub mod flux;
pub mod limiter;
pub mod mesh;
pub mod ppcheck;
pub mod problems;
pub mod scheme;
pub mod state;

pub use error::{MhdError, Result};
pub use flux::{Direction, FluxMode, RotationFrame, WaveSpeeds};
pub use state::{ConservedState, Eos, PrimitiveState, StarArgs, Vec3, Vector8, NVAR};
