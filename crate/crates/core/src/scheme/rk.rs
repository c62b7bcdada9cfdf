use super::{first_inadmissible, internal_energy, CflMode, DgField, Discretization, StageResidual, StepDiagnostics};
use crate::error::{MhdError, Result};

/// Step restarts allowed before giving up.
const MAX_RETRIES: usize = 10;

/// Third-order strong-stability-preserving Runge-Kutta stepping with
/// limiting before every stage and a positivity guard after every stage.
pub struct Stepper<'a, D: Discretization> {
    pub disc: &'a D,
    pub t: f64,
    pub step: usize,
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub t: f64,
    pub steps: usize,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl<'a, D: Discretization> Stepper<'a, D> {
    pub fn new(disc: &'a D, t0: f64) -> Self {
        Self { disc, t: t0, step: 0 }
    }

    fn guard(&self, u: &DgField) -> Result<()> {
        match first_inadmissible(u) {
            None => Ok(()),
            Some((cell, rho, e)) => Err(MhdError::PositivityFailure { t: self.t, step: self.step + 1, cell, rho, internal_energy: e }),
        }
    }

    fn stage_dt_ok(&self, r: &StageResidual, dt: f64) -> Option<f64> {
        match self.disc.config().cfl {
            CflMode::Proven if dt > r.proven_dt => Some(r.proven_dt),
            _ => None,
        }
    }

    fn initial_dt(&self, r: &StageResidual) -> f64 {
        match self.disc.config().cfl {
            CflMode::Proven => r.proven_dt,
            CflMode::Practical(c) => c * r.inv_speed_dt,
        }
    }

    /// Advances `u` by one step, not past `t_end`.
    pub fn advance(&mut self, u: &mut DgField, t_end: f64) -> Result<StepDiagnostics> {
        let disc = self.disc;
        let mut limited = [0usize; 3];
        limited[0] = disc.limit(u)?;
        let r1 = disc.residual(u)?;
        let mut dt = self.initial_dt(&r1).min(t_end - self.t);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(MhdError::CflViolation { dt, bound: r1.proven_dt });
        }
        let practical = matches!(disc.config().cfl, CflMode::Practical(_));
        let mut retries = 0;
        let result = loop {
            match self.try_stages(u, &r1, dt, &mut limited) {
                Ok(Ok(u3)) => break u3,
                Ok(Err(bound)) => {
                    // A later stage needs a smaller step.
                    retries += 1;
                    if retries > MAX_RETRIES {
                        return Err(MhdError::CflViolation { dt, bound });
                    }
                    dt = bound.min(0.8 * dt);
                }
                Err(e @ MhdError::PositivityFailure { .. }) | Err(e @ MhdError::LimiterPrecondition { .. }) if practical => {
                    retries += 1;
                    if retries > MAX_RETRIES {
                        return Err(e);
                    }
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        *u = result;
        self.t = if t_end - (self.t + dt) <= 1e-14 * t_end.abs() { t_end } else { self.t + dt };
        self.step += 1;
        let mut d = StepDiagnostics {
            step: self.step,
            t: self.t,
            dt,
            min_rho: f64::INFINITY,
            min_p: f64::INFINITY,
            max_div_fo: disc.max_div_fo(u)?,
            max_div_ho: r1.max_div_ho,
            total_mass: 0.0,
            limited,
            retries,
        };
        let gm1 = disc.config().gamma() - 1.0;
        for c in 0..u.ncells() {
            let a = u.average_array(c);
            d.min_rho = d.min_rho.min(a[0]);
            d.min_p = d.min_p.min(gm1 * internal_energy(&a));
            d.total_mass += disc.volume(c) * a[0];
        }
        Ok(d)
    }

    /// The three stages at a fixed `dt`. The inner error carries a smaller
    /// admissible step when a later stage violates the proven bound.
    fn try_stages(&self, u: &DgField, r1: &StageResidual, dt: f64, limited: &mut [usize; 3]) -> Result<std::result::Result<DgField, f64>> {
        let disc = self.disc;
        let mut u1 = u.clone();
        u1.combine(1.0, dt, &r1.res);
        self.guard(&u1)?;
        limited[1] = disc.limit(&mut u1)?;
        let r2 = disc.residual(&u1)?;
        if let Some(b) = self.stage_dt_ok(&r2, dt) {
            return Ok(Err(b));
        }
        let mut u2 = u1;
        u2.combine(1.0, dt, &r2.res);
        self.guard(&u2)?;
        u2.combine(0.25, 0.75, u);
        self.guard(&u2)?;
        limited[2] = disc.limit(&mut u2)?;
        let r3 = disc.residual(&u2)?;
        if let Some(b) = self.stage_dt_ok(&r3, dt) {
            return Ok(Err(b));
        }
        let mut u3 = u2;
        u3.combine(1.0, dt, &r3.res);
        self.guard(&u3)?;
        u3.combine(2.0 / 3.0, 1.0 / 3.0, u);
        self.guard(&u3)?;
        Ok(Ok(u3))
    }
}

/// Runs to `t_end`, calling `on_step` after every accepted step. The field
/// is left in its last accepted state, with limiters applied.
pub fn ssp_rk3_advance<D, F>(disc: &D, u: &mut DgField, t0: f64, t_end: f64, mut on_step: F) -> Result<RunOutcome>
where
    D: Discretization,
    F: FnMut(&StepDiagnostics, &DgField),
{
    let mut st = Stepper::new(disc, t0);
    let mut diagnostics = Vec::new();
    while st.t < t_end {
        let d = st.advance(u, t_end)?;
        on_step(&d, u);
        diagnostics.push(d);
    }
    disc.limit(u)?;
    Ok(RunOutcome { t: st.t, steps: st.step, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::super::{Disc1D, SolverConfig};
    use super::*;
    use crate::basis::project_initial_1d;
    use crate::mesh::{build_uniform_1d, BoundaryCondition};
    use crate::state::{prim_to_cons, ConservedState, Eos, PrimitiveState};

    /// A scalar linear ODE `u' = lambda u` on the density coefficient.
    struct Linear {
        lambda: f64,
        cfg: SolverConfig,
    }

    impl Discretization for Linear {
        fn config(&self) -> &SolverConfig {
            &self.cfg
        }
        fn ncells(&self) -> usize {
            1
        }
        fn volume(&self, _c: usize) -> f64 {
            1.0
        }
        fn limit(&self, _f: &mut DgField) -> Result<usize> {
            Ok(0)
        }
        fn residual(&self, f: &DgField) -> Result<StageResidual> {
            let mut r = DgField::zeros(1, 0, 1)?;
            r.set_coeff(0, 0, 0, self.lambda * f.coeff(0, 0, 0));
            r.set_coeff(0, 0, 7, self.lambda * f.coeff(0, 0, 7));
            Ok(StageResidual { res: r, proven_dt: 0.1, inv_speed_dt: 1.0, max_div_ho: 0.0 })
        }
        fn max_div_fo(&self, _f: &DgField) -> Result<f64> {
            Ok(0.0)
        }
    }

    #[test]
    fn linear_ode_amplification() {
        let lambda = -2.0;
        let d = Linear { lambda, cfg: SolverConfig::new(0, Eos::ideal(1.4).unwrap()) };
        let mut f = DgField::from_averages(1, 0, &[ConservedState::new(1.0, [0.0; 3], [0.0; 3], 1.0)]).unwrap();
        let mut st = Stepper::new(&d, 0.0);
        let diag = st.advance(&mut f, 1.0).unwrap();
        let z: f64 = lambda * diag.dt;
        let g = 1.0 + z + z * z / 2.0 + z * z * z / 6.0;
        assert!((f.coeff(0, 0, 0) - g).abs() < 1e-15);
        assert_eq!(diag.dt, 0.1);
    }

    #[test]
    fn zero_residual_leaves_field() {
        let d = Linear { lambda: 0.0, cfg: SolverConfig::new(0, Eos::ideal(1.4).unwrap()) };
        let u = ConservedState::new(1.0, [0.0; 3], [0.0; 3], 1.0);
        let mut f = DgField::from_averages(1, 0, &[u]).unwrap();
        let out = ssp_rk3_advance(&d, &mut f, 0.0, 0.35, |_, _| {}).unwrap();
        assert_eq!(out.steps, 4);
        assert_eq!(f.average(0), u);
        assert_eq!(out.t, 0.35);
    }

    #[test]
    fn periodic_mass_and_b1_conserved() {
        let eos = Eos::ideal(1.4).unwrap();
        let mesh = build_uniform_1d(0.0, 2.0 * std::f64::consts::PI, 32, [BoundaryCondition::Periodic, BoundaryCondition::Periodic]).unwrap();
        let d = Disc1D::new(mesh.clone(), SolverConfig::new(2, eos.clone())).unwrap();
        let mut f =
            project_initial_1d(|x| prim_to_cons(&PrimitiveState::new(1.0 + 0.99 * x.sin(), [1.0, 0.0, 0.0], 1.0, [0.1, 0.0, 0.0]), &eos), &mesh, 2)
                .unwrap();
        let mass0: f64 = (0..32).map(|j| mesh.dx(j) * f.coeff(j, 0, 0)).sum();
        let b1: Vec<f64> = (0..32).map(|j| f.coeff(j, 0, 4)).collect();
        let out = ssp_rk3_advance(&d, &mut f, 0.0, 0.1, |_, _| {}).unwrap();
        let last = out.diagnostics.last().unwrap();
        assert!(((last.total_mass - mass0) / mass0).abs() < 1e-12);
        assert!((0..32).all(|j| (f.coeff(j, 0, 4) - b1[j]).abs() < 1e-16));
    }
}
