//! Time stepping: first-order and DG residuals in 1D and 2D, discrete
//! divergences, step-size selection and the SSP Runge-Kutta driver.

mod field;
mod one_d;
mod rk;
mod two_d;

pub use field::{eval_cell, DgField};
pub use one_d::{fo_step_1d, Disc1D, Interfaces1D};
pub use rk::{ssp_rk3_advance, RunOutcome, Stepper};
pub use two_d::{fo_step_2d, penalty_free_margins, Disc2D, Interfaces2D, SideData};

use crate::error::{MhdError, Result};
use crate::flux::{llf_speed_points, pp_speeds_points, FluxMode, PointState, WaveSpeeds};
use crate::limiter::{PpLimiterParams, TvbParams};
use crate::state::{Eos, Vec3, Vector8};

/// Safety factor applied to the strict step-size inequalities.
pub const PROVEN_SAFETY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CflMode {
    /// Largest step allowed by the positivity theorems, times [`PROVEN_SAFETY`].
    Proven,
    /// `CFL * h / speed` with a retry-on-failure guard.
    Practical(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OscLimiter {
    Off,
    Tvb(TvbParams),
}

/// Order of the two limiters within a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimiterOrder {
    OscillationFirst,
    PositivityFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterSettings {
    pub pp: bool,
    pub pp_params: PpLimiterParams,
    pub oscillation: OscLimiter,
    pub order: LimiterOrder,
}

impl Default for LimiterSettings {
    fn default() -> Self {
        Self {
            pp: true,
            pp_params: PpLimiterParams::default(),
            oscillation: OscLimiter::Tvb(TvbParams::default()),
            order: LimiterOrder::OscillationFirst,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub k: usize,
    pub flux: FluxMode,
    pub penalty: bool,
    pub cfl: CflMode,
    pub limiter: LimiterSettings,
    pub eos: Eos,
}

impl SolverConfig {
    pub fn new(k: usize, eos: Eos) -> Self {
        Self { k, flux: FluxMode::Hll, penalty: true, cfl: CflMode::Proven, limiter: LimiterSettings::default(), eos }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > 2 {
            return Err(MhdError::InvalidInput(format!("degree {} not supported (k <= 2)", self.k)));
        }
        if let CflMode::Practical(c) = self.cfl {
            if !(c > 0.0 && c.is_finite()) {
                return Err(MhdError::InvalidInput(format!("CFL number must be positive, got {c}")));
            }
        }
        if self.eos.gamma().is_none() {
            return Err(MhdError::Unsupported("the schemes need the ideal gas law".into()));
        }
        Ok(())
    }

    pub(crate) fn gamma(&self) -> f64 {
        self.eos.gamma().unwrap_or(1.4)
    }
}

/// Per-step record.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub min_rho: f64,
    pub min_p: f64,
    pub max_div_fo: f64,
    pub max_div_ho: f64,
    pub total_mass: f64,
    /// Cells touched by either limiter, per stage.
    pub limited: [usize; 3],
    /// Step restarts (dt reductions) before acceptance.
    pub retries: usize,
}

impl StepDiagnostics {
    pub fn limited_cells(&self) -> usize {
        self.limited.iter().sum()
    }
}

/// Residual of one stage together with the step bounds it implies.
#[derive(Debug, Clone)]
pub struct StageResidual {
    pub res: DgField,
    /// Largest step of the positivity theorem for this stage (safety included).
    pub proven_dt: f64,
    /// `CFL`-free practical bound `1 / max(speed / h)`.
    pub inv_speed_dt: f64,
    pub max_div_ho: f64,
}

/// A spatial discretization usable by the Runge-Kutta driver.
pub trait Discretization: Sync {
    fn config(&self) -> &SolverConfig;
    fn ncells(&self) -> usize;
    fn volume(&self, c: usize) -> f64;
    /// Applies the configured limiters; returns the number of cells touched.
    fn limit(&self, field: &mut DgField) -> Result<usize>;
    fn residual(&self, field: &DgField) -> Result<StageResidual>;
    /// Largest first-order discrete divergence of the cell averages.
    fn max_div_fo(&self, field: &DgField) -> Result<f64>;
}

/// Interface speeds for the configured flux; `global_a` is the mesh-wide
/// Lax-Friedrichs speed (only used in that mode).
#[inline]
pub(crate) fn interface_speeds(mode: FluxMode, um: &PointState, up: &PointState, xi: &Vec3, eos: &Eos, gamma: f64, global_a: f64) -> WaveSpeeds {
    match mode {
        FluxMode::Hll => pp_speeds_points(um, up, xi, eos, gamma),
        FluxMode::LocalLf => {
            let a = llf_speed_points(um, up, xi, eos, gamma);
            WaveSpeeds::new_unchecked(-a, a)
        }
        FluxMode::GlobalLf => WaveSpeeds::new_unchecked(-global_a, global_a),
    }
}

/// Speed used by the practical step size at one interface point.
#[inline]
pub(crate) fn practical_speed(um: &PointState, up: &PointState, xi: &Vec3, eos: &Eos, ws: &WaveSpeeds) -> f64 {
    um.alpha_star(up, xi, eos).max(up.alpha_star(um, xi, eos)).max(ws.sigma_l.abs()).max(ws.sigma_r.abs())
}

#[inline]
pub(crate) fn internal_energy(u: &Vector8) -> f64 {
    u[7] - 0.5 * ((u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / u[0] + u[4] * u[4] + u[5] * u[5] + u[6] * u[6])
}

#[inline]
pub(crate) fn is_strictly_admissible(u: &Vector8) -> bool {
    u.iter().all(|x| x.is_finite()) && u[0] > 0.0 && internal_energy(u) > 0.0
}

/// Runs the oscillation and positivity limiters in the configured order;
/// returns the number of cells whose coefficients changed.
pub(crate) fn apply_limiters<O, P>(field: &mut DgField, order: LimiterOrder, osc: O, pp: P) -> Result<usize>
where
    O: Fn(&mut DgField),
    P: Fn(&mut DgField) -> Result<()>,
{
    let before = field.clone();
    match order {
        LimiterOrder::OscillationFirst => {
            osc(field);
            pp(field)?;
        }
        LimiterOrder::PositivityFirst => {
            pp(field)?;
            osc(field);
        }
    }
    Ok((0..field.ncells()).filter(|&c| before.cell(c) != field.cell(c)).count())
}

/// First cell whose average is not strictly admissible.
pub fn first_inadmissible(field: &DgField) -> Option<(usize, f64, f64)> {
    (0..field.ncells()).find_map(|c| {
        let u = field.average_array(c);
        (!is_strictly_admissible(&u)).then(|| (c, u[0], internal_energy(&u)))
    })
}
