use rayon::prelude::*;

use super::{
    apply_limiters, interface_speeds, internal_energy, practical_speed, DgField, Discretization, OscLimiter, SolverConfig, StageResidual,
    PROVEN_SAFETY,
};
use crate::basis::{gauss_lobatto_rule, gauss_rule, lobatto_points_for_degree, QuadRule, ScalarBasis1D};
use crate::error::{MhdError, Result};
use crate::flux::{hll_flux_pm, llf_speed_points, FluxMode, PointState, WaveSpeeds};
use crate::limiter::{pp_limit_field, tvb_limit_1d, PointTable};
use crate::mesh::Mesh1D;
use crate::state::{ConservedState, Vector8, NVAR};

const XI: [f64; 3] = [1.0, 0.0, 0.0];

/// Precomputed tables for the 1D schemes.
#[derive(Debug, Clone)]
pub struct Disc1D {
    pub mesh: Mesh1D,
    pub cfg: SolverConfig,
    gauss: QuadRule,
    vol_phi: Vec<Vec<f64>>,
    vol_dphi: Vec<Vec<f64>>,
    phi_l: Vec<f64>,
    phi_r: Vec<f64>,
    pp_table: PointTable,
    omega1: f64,
}

/// Interface data of one stage; interface `i` is the left edge of cell `i`.
#[derive(Debug, Clone)]
pub struct Interfaces1D {
    pub um: Vec<Vector8>,
    pub up: Vec<Vector8>,
    pub flux: Vec<Vector8>,
    pub speeds: Vec<WaveSpeeds>,
    pub practical: Vec<f64>,
}

impl Disc1D {
    pub fn new(mesh: Mesh1D, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.k;
        let basis = ScalarBasis1D::new(k);
        let gauss = gauss_rule(k + 1)?;
        let gl = gauss_lobatto_rule(lobatto_points_for_degree(k))?;
        Ok(Self {
            vol_phi: gauss.nodes.iter().map(|&x| basis.eval(x)).collect(),
            vol_dphi: gauss.nodes.iter().map(|&x| basis.deriv(x)).collect(),
            phi_l: basis.eval(-0.5),
            phi_r: basis.eval(0.5),
            pp_table: PointTable::new(gl.nodes.iter().map(|&x| basis.eval(x)).collect()),
            omega1: gl.weights[0],
            gauss,
            mesh,
            cfg,
        })
    }

    pub fn k(&self) -> usize {
        self.cfg.k
    }

    /// Basis values at the Gauss-Lobatto points used by the positivity limiter.
    pub fn pp_table(&self) -> &PointTable {
        &self.pp_table
    }

    fn check_trace(u: &Vector8, cell: usize) -> Result<()> {
        let e = internal_energy(u);
        if !(u[0] > 0.0 && e > 0.0) {
            return Err(MhdError::LimiterPrecondition { cell, rho: u[0], internal_energy: e });
        }
        Ok(())
    }

    /// Traces, speeds and numerical fluxes at every interface.
    pub fn interfaces(&self, field: &DgField) -> Result<Interfaces1D> {
        let m = self.mesh.n_cells();
        let eos = &self.cfg.eos;
        let gamma = self.cfg.gamma();
        let periodic = self.mesh.is_periodic();
        let right: Vec<Vector8> = (0..m).map(|j| field.eval_with(j, &self.phi_r)).collect();
        let left: Vec<Vector8> = (0..m).map(|j| field.eval_with(j, &self.phi_l)).collect();
        for j in 0..m {
            Self::check_trace(&left[j], j)?;
            Self::check_trace(&right[j], j)?;
        }
        let mut um = Vec::with_capacity(m + 1);
        let mut up = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let (a, b) = if periodic {
                (right[(i + m - 1) % m], left[i % m])
            } else if i == 0 {
                let g = self.mesh.bcs[0].ghost(&ConservedState::from_array(&left[0]), 0, 0.0);
                (g.to_array(), left[0])
            } else if i == m {
                let g = self.mesh.bcs[1].ghost(&ConservedState::from_array(&right[m - 1]), 0, 0.0);
                (right[m - 1], g.to_array())
            } else {
                (right[i - 1], left[i])
            };
            um.push(a);
            up.push(b);
        }
        let pts: Vec<(PointState, PointState)> =
            um.iter().zip(&up).map(|(a, b)| (PointState::from_array(a, eos), PointState::from_array(b, eos))).collect();
        let global_a = if self.cfg.flux == FluxMode::GlobalLf {
            pts.iter().map(|(a, b)| llf_speed_points(a, b, &XI, eos, gamma)).fold(0.0, f64::max)
        } else {
            0.0
        };
        let mut flux = Vec::with_capacity(m + 1);
        let mut speeds = Vec::with_capacity(m + 1);
        let mut practical = Vec::with_capacity(m + 1);
        for (i, (a, b)) in pts.iter().enumerate() {
            let ws = interface_speeds(self.cfg.flux, a, b, &XI, eos, gamma, global_a);
            flux.push(hll_flux_pm(&a.flux(&XI), &b.flux(&XI), &um[i], &up[i], &ws));
            practical.push(practical_speed(a, b, &XI, eos, &ws));
            speeds.push(ws);
        }
        Ok(Interfaces1D { um, up, flux, speeds, practical })
    }

    /// Time derivative of every modal coefficient.
    pub fn residual_with(&self, field: &DgField, ifs: &Interfaces1D) -> DgField {
        let eos = &self.cfg.eos;
        let mut res = field.clone();
        let n = field.cell_len();
        let nm = field.nmodes();
        res.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(j, out)| {
            let dx = self.mesh.dx(j);
            let (fl, fr) = (&ifs.flux[j], &ifs.flux[j + 1]);
            let fluxes: Vec<Vector8> = self
                .vol_phi
                .iter()
                .map(|phi| PointState::from_array(&field.eval_with(j, phi), eos).flux(&XI))
                .collect();
            for a in 0..nm {
                for v in 0..NVAR {
                    let mut vol = 0.0;
                    for (g, f) in fluxes.iter().enumerate() {
                        vol += self.gauss.weights[g] * f[v] * self.vol_dphi[g][a];
                    }
                    out[a * NVAR + v] = (vol - (fr[v] * self.phi_r[a] - fl[v] * self.phi_l[a])) / dx;
                }
            }
        });
        res
    }

    /// Largest step allowed by the positivity theorem for this stage.
    pub fn proven_dt(&self, ifs: &Interfaces1D) -> f64 {
        let eos = &self.cfg.eos;
        let m = self.mesh.n_cells();
        (0..m)
            .map(|j| {
                let dx = self.mesh.dx(j);
                let sp = ifs.speeds[j].sigma_plus;
                let sm = ifs.speeds[j + 1].sigma_minus;
                if self.cfg.k == 0 {
                    PROVEN_SAFETY * dx / (sp - sm)
                } else {
                    let ul = PointState::from_array(&ifs.up[j], eos);
                    let ur = PointState::from_array(&ifs.um[j + 1], eos);
                    let a = ul.alpha_star(&ur, &XI, eos).max(ur.alpha_star(&ul, &XI, eos));
                    PROVEN_SAFETY * self.omega1 * dx / (a + sp).max(a - sm)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `min h / speed` over cells.
    pub fn inv_speed_dt(&self, ifs: &Interfaces1D) -> f64 {
        (0..self.mesh.n_cells())
            .map(|j| self.mesh.dx(j) / ifs.practical[j].max(ifs.practical[j + 1]))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Discretization for Disc1D {
    fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn ncells(&self) -> usize {
        self.mesh.n_cells()
    }

    fn volume(&self, c: usize) -> f64 {
        self.mesh.dx(c)
    }

    fn limit(&self, field: &mut DgField) -> Result<usize> {
        let lim = &self.cfg.limiter;
        apply_limiters(
            field,
            lim.order,
            |f| {
                if let OscLimiter::Tvb(p) = lim.oscillation {
                    tvb_limit_1d(f, &self.mesh, &p, &self.cfg.eos);
                }
            },
            |f| if lim.pp { pp_limit_field(f, &self.pp_table, &lim.pp_params).map(|_| ()) } else { Ok(()) },
        )
    }

    fn residual(&self, field: &DgField) -> Result<StageResidual> {
        let ifs = self.interfaces(field)?;
        Ok(StageResidual {
            res: self.residual_with(field, &ifs),
            proven_dt: self.proven_dt(&ifs),
            inv_speed_dt: self.inv_speed_dt(&ifs),
            max_div_ho: 0.0,
        })
    }

    fn max_div_fo(&self, _field: &DgField) -> Result<f64> {
        Ok(0.0)
    }
}

/// One forward-Euler step of the first-order finite-volume scheme.
pub fn fo_step_1d(avgs: &[ConservedState], mesh: &Mesh1D, cfg: &SolverConfig, dt: f64) -> Result<Vec<ConservedState>> {
    let mut c0 = cfg.clone();
    c0.k = 0;
    let disc = Disc1D::new(mesh.clone(), c0)?;
    let field = DgField::from_averages(1, 0, avgs)?;
    let ifs = disc.interfaces(&field)?;
    Ok(avgs
        .iter()
        .enumerate()
        .map(|(j, u)| {
            let dx = mesh.dx(j);
            let (fl, fr) = (&ifs.flux[j], &ifs.flux[j + 1]);
            let u = u.to_array();
            let new: Vector8 = std::array::from_fn(|v| u[v] + dt * ((0.0 - (fr[v] - fl[v])) / dx));
            ConservedState::from_array(&new)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::project_initial_1d;
    use crate::mesh::{build_uniform_1d, BoundaryCondition};
    use crate::state::{prim_to_cons, Eos, PrimitiveState};

    fn eos() -> Eos {
        Eos::ideal(5.0 / 3.0).unwrap()
    }

    fn tube(n: usize) -> Mesh1D {
        build_uniform_1d(-0.5, 0.5, n, [BoundaryCondition::Outflow, BoundaryCondition::Outflow]).unwrap()
    }

    fn vacuum(x: f64) -> ConservedState {
        if x < 0.0 {
            prim_to_cons(&PrimitiveState::new(1e-12, [0.0; 3], 1e-12, [0.0; 3]), &eos())
        } else {
            prim_to_cons(&PrimitiveState::new(1.0, [0.0; 3], 0.5, [0.0, 1.0, 0.0]), &eos())
        }
    }

    #[test]
    fn uniform_state_is_steady() {
        let u = prim_to_cons(&PrimitiveState::new(1.2, [0.3, -0.2, 0.1], 0.8, [0.5, 0.4, -0.3]), &eos());
        let mesh = build_uniform_1d(0.0, 1.0, 10, [BoundaryCondition::Periodic, BoundaryCondition::Periodic]).unwrap();
        let cfg = SolverConfig::new(0, eos());
        let out = fo_step_1d(&vec![u; 10], &mesh, &cfg, 1e-3).unwrap();
        for w in out {
            for (a, b) in w.to_array().iter().zip(u.to_array()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        for k in 0..=2 {
            let disc = Disc1D::new(mesh.clone(), SolverConfig::new(k, eos())).unwrap();
            let f = project_initial_1d(|_| u, &mesh, k).unwrap();
            let r = disc.residual(&f).unwrap();
            assert!(r.res.as_slice().iter().all(|x| x.abs() < 1e-13));
        }
    }

    #[test]
    fn first_order_vacuum_tube_stays_admissible() {
        let mesh = tube(200);
        let cfg = SolverConfig::new(0, eos());
        let mut avgs: Vec<ConservedState> = (0..200).map(|j| vacuum(mesh.center(j))).collect();
        let disc = Disc1D::new(mesh.clone(), cfg.clone()).unwrap();
        let b1 = avgs[0].b[0];
        let mut t = 0.0;
        let mut steps = 0;
        while t < 0.1 {
            let f = DgField::from_averages(1, 0, &avgs).unwrap();
            let dt = disc.proven_dt(&disc.interfaces(&f).unwrap()).min(0.1 - t);
            avgs = fo_step_1d(&avgs, &mesh, &cfg, dt).unwrap();
            assert!(avgs.iter().all(|u| u.rho > 0.0 && u.internal_energy_unchecked() > 0.0));
            assert!(avgs.iter().all(|u| u.b[0] == b1));
            t += dt;
            steps += 1;
        }
        assert!(steps > 10);
    }

    #[test]
    fn degree_zero_path_matches_first_order() {
        let mesh = tube(40);
        let cfg = SolverConfig::new(0, eos());
        let avgs: Vec<ConservedState> = (0..40).map(|j| vacuum(mesh.center(j) + 0.1)).collect();
        let disc = Disc1D::new(mesh.clone(), cfg.clone()).unwrap();
        let f = DgField::from_averages(1, 0, &avgs).unwrap();
        let r = disc.residual(&f).unwrap();
        let dt = 0.5 * r.proven_dt;
        let mut ho = f.clone();
        ho.combine(1.0, dt, &r.res);
        let fo = fo_step_1d(&avgs, &mesh, &cfg, dt).unwrap();
        for (j, u) in fo.iter().enumerate() {
            assert_eq!(u.to_array(), ho.average_array(j));
        }
    }

    #[test]
    fn proven_dt_satisfies_bound() {
        let mesh = tube(20);
        let disc = Disc1D::new(mesh.clone(), SolverConfig::new(2, eos())).unwrap();
        let f = project_initial_1d(|x| prim_to_cons(&PrimitiveState::new(1.0 + 0.5 * x, [x, 0.0, 0.0], 1.0, [0.3, 1.0, 0.0]), &eos()), &mesh, 2)
            .unwrap();
        let ifs = disc.interfaces(&f).unwrap();
        let dt = disc.proven_dt(&ifs);
        for j in 0..20 {
            let ul = PointState::from_array(&ifs.up[j], &eos());
            let ur = PointState::from_array(&ifs.um[j + 1], &eos());
            let a = ul.alpha_star(&ur, &XI, &eos()).max(ur.alpha_star(&ul, &XI, &eos()));
            let lhs = dt / mesh.dx(j) * (a + ifs.speeds[j].sigma_plus).max(a - ifs.speeds[j + 1].sigma_minus);
            assert!(lhs <= 1.0 / 6.0 + 1e-15);
        }
    }
}
