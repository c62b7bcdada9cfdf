use rayon::prelude::*;

use super::{
    apply_limiters, interface_speeds, internal_energy, practical_speed, DgField, Discretization, OscLimiter, SolverConfig, StageResidual,
    PROVEN_SAFETY,
};
use crate::basis::{
    gauss_lobatto_rule, gauss_rule, lobatto_points_for_degree, project_cell_b, rect_composite_quad, LdfCache, QuadRule, ScalarBasis2D,
};
use crate::error::{MhdError, Result};
use crate::flux::{hll_flux_pm, llf_speed_points, source_vector_unchecked, FluxMode, PointState};
use crate::limiter::{pp_limit_field, tvb_limit_2d, PointTable};
use crate::mesh::{BoundaryCondition, RectMesh2D};
use crate::ppcheck::alpha_hat_single;
use crate::state::{ConservedState, Vec3, Vector8, NVAR};

/// Outward normals of the edges left, right, bottom, top.
const NORMALS: [Vec3; 4] = [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 1.0, 0.0]];

/// One side of an interface quadrature point, seen from the cell on that
/// side with its outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SideData {
    /// Outward flux plus penalty: `F - eta <n, B_ext - B_int> S(U_int)`.
    pub g: Vector8,
    pub u_int: Vector8,
    pub sigma_m: f64,
    pub sigma_p: f64,
    pub bn_int: f64,
    pub bn_ext: f64,
}

impl SideData {
    pub fn eta(&self) -> f64 {
        self.sigma_m / (self.sigma_p - self.sigma_m)
    }

    /// Upwind-weighted normal field `(s+ B_int - s- B_ext) / (s+ - s-)`.
    pub fn upwind_bn(&self) -> f64 {
        (self.sigma_p * self.bn_int - self.sigma_m * self.bn_ext) / (self.sigma_p - self.sigma_m)
    }
}

/// Interface data of one stage: `[minus side, plus side]` per point, where
/// the minus cell lies at lower x (or y).
#[derive(Debug, Clone)]
pub struct Interfaces2D {
    pub vert: Vec<[SideData; 2]>,
    pub horiz: Vec<[SideData; 2]>,
    pub practical_v: Vec<f64>,
    pub practical_h: Vec<f64>,
}

/// Precomputed tables for the 2D schemes on a rectangular mesh.
#[derive(Debug, Clone)]
pub struct Disc2D {
    pub mesh: RectMesh2D,
    pub cfg: SolverConfig,
    nq: usize,
    gauss: QuadRule,
    vol: Vec<(f64, Vec<f64>, Vec<f64>, Vec<f64>)>,
    edge_phi: [Vec<Vec<f64>>; 4],
    pp_table: PointTable,
    omega1: f64,
    ldf: LdfCache,
    ldf1: Option<LdfCache>,
    periodic: [bool; 2],
    nvx: usize,
    nhy: usize,
}

impl Disc2D {
    pub fn new(mesh: RectMesh2D, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.k;
        let basis = ScalarBasis2D::new(k);
        let gauss = gauss_rule(k + 1)?;
        let gl = gauss_lobatto_rule(lobatto_points_for_degree(k))?;
        let mut vol = Vec::new();
        for (&x, &wx) in gauss.nodes.iter().zip(&gauss.weights) {
            for (&y, &wy) in gauss.nodes.iter().zip(&gauss.weights) {
                let (gx, gy) = basis.grad(x, y);
                vol.push((wx * wy, basis.eval(x, y), gx, gy));
            }
        }
        let edge_phi = [
            gauss.nodes.iter().map(|&z| basis.eval(-0.5, z)).collect(),
            gauss.nodes.iter().map(|&z| basis.eval(0.5, z)).collect(),
            gauss.nodes.iter().map(|&z| basis.eval(z, -0.5)).collect(),
            gauss.nodes.iter().map(|&z| basis.eval(z, 0.5)).collect(),
        ];
        let (dx0, dy0) = mesh.size(0);
        let comp = rect_composite_quad(k, dx0, dy0)?;
        let pp_table = PointTable::new(comp.points().iter().map(|p| basis.eval(p[0], p[1])).collect());
        let periodic = [
            matches!(mesh.bcs[0], BoundaryCondition::Periodic),
            matches!(mesh.bcs[2], BoundaryCondition::Periodic),
        ];
        let nvx = mesh.mx() + usize::from(!periodic[0]);
        let nhy = mesh.my() + usize::from(!periodic[1]);
        Ok(Self {
            nq: k + 1,
            ldf: LdfCache::for_mesh(k, &mesh)?,
            ldf1: if k >= 1 { Some(LdfCache::for_mesh(1, &mesh)?) } else { None },
            omega1: gl.weights[0],
            gauss,
            vol,
            edge_phi,
            pp_table,
            periodic,
            nvx,
            nhy,
            mesh,
            cfg,
        })
    }

    pub fn pp_table(&self) -> &PointTable {
        &self.pp_table
    }

    pub fn ldf(&self) -> &LdfCache {
        &self.ldf
    }

    /// Gauss nodes along each edge.
    pub fn edge_rule(&self) -> &QuadRule {
        &self.gauss
    }

    /// `(interface index, side)` of the four edges of cell `c`; side 0 means
    /// the cell is on the minus side of that interface.
    fn cell_edges(&self, c: usize) -> [(bool, usize, usize); 4] {
        let (i, l) = self.mesh.ij(c);
        let mx = self.mesh.mx();
        let ir = if i + 1 < self.nvx { i + 1 } else { 0 };
        let lt = if l + 1 < self.nhy { l + 1 } else { 0 };
        [(true, l * self.nvx + i, 1), (true, l * self.nvx + ir, 0), (false, l * mx + i, 1), (false, lt * mx + i, 0)]
    }

    fn side<'a>(&self, ifs: &'a Interfaces2D, e: (bool, usize, usize), q: usize) -> &'a SideData {
        let arr = if e.0 { &ifs.vert } else { &ifs.horiz };
        &arr[e.1 * self.nq + q][e.2]
    }

    fn check_trace(u: &Vector8, cell: usize) -> Result<()> {
        let e = internal_energy(u);
        if !(u[0] > 0.0 && e > 0.0) || !u.iter().all(|x| x.is_finite()) {
            return Err(MhdError::LimiterPrecondition { cell, rho: u[0], internal_energy: e });
        }
        Ok(())
    }

    /// Interior traces at every interface point, `(minus, plus)`, vertical
    /// interfaces first.
    fn traces(&self, field: &DgField) -> Result<(Vec<(Vector8, Vector8)>, Vec<(Vector8, Vector8)>)> {
        let (mx, my, nq) = (self.mesh.mx(), self.mesh.my(), self.nq);
        let z = &self.gauss.nodes;
        let vert = (0..self.nvx * my * nq)
            .into_par_iter()
            .map(|idx| {
                let (iface, q) = (idx / nq, idx % nq);
                let (i, l) = (iface % self.nvx, iface / self.nvx);
                let minus = if i > 0 { Some(self.mesh.index(i - 1, l)) } else if self.periodic[0] { Some(self.mesh.index(mx - 1, l)) } else { None };
                let plus = if i < mx { Some(self.mesh.index(i, l)) } else { None };
                let y = self.mesh.center(minus.or(plus).unwrap())[1] + self.mesh.dy(l) * z[q];
                let um = minus.map(|c| field.eval_with(c, &self.edge_phi[1][q]));
                let up = plus.map(|c| field.eval_with(c, &self.edge_phi[0][q]));
                if let (Some(c), Some(u)) = (minus, &um) {
                    Self::check_trace(u, c)?;
                }
                if let (Some(c), Some(u)) = (plus, &up) {
                    Self::check_trace(u, c)?;
                }
                Ok(match (um, up) {
                    (Some(a), Some(b)) => (a, b),
                    (None, Some(b)) => (self.mesh.bcs[0].ghost(&ConservedState::from_array(&b), 0, y).to_array(), b),
                    (Some(a), None) => (a, self.mesh.bcs[1].ghost(&ConservedState::from_array(&a), 0, y).to_array()),
                    (None, None) => unreachable!(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let horiz = (0..self.nhy * mx * nq)
            .into_par_iter()
            .map(|idx| {
                let (iface, q) = (idx / nq, idx % nq);
                let (i, l) = (iface % mx, iface / mx);
                let minus = if l > 0 { Some(self.mesh.index(i, l - 1)) } else if self.periodic[1] { Some(self.mesh.index(i, my - 1)) } else { None };
                let plus = if l < my { Some(self.mesh.index(i, l)) } else { None };
                let x = self.mesh.center(minus.or(plus).unwrap())[0] + self.mesh.dx(i) * z[q];
                let um = minus.map(|c| field.eval_with(c, &self.edge_phi[3][q]));
                let up = plus.map(|c| field.eval_with(c, &self.edge_phi[2][q]));
                if let (Some(c), Some(u)) = (minus, &um) {
                    Self::check_trace(u, c)?;
                }
                if let (Some(c), Some(u)) = (plus, &up) {
                    Self::check_trace(u, c)?;
                }
                Ok(match (um, up) {
                    (Some(a), Some(b)) => (a, b),
                    (None, Some(b)) => (self.mesh.bcs[2].ghost(&ConservedState::from_array(&b), 1, x).to_array(), b),
                    (Some(a), None) => (a, self.mesh.bcs[3].ghost(&ConservedState::from_array(&a), 1, x).to_array()),
                    (None, None) => unreachable!(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((vert, horiz))
    }

    /// Speeds, fluxes and penalty terms at every interface point.
    pub fn interfaces(&self, field: &DgField) -> Result<Interfaces2D> {
        let (vt, ht) = self.traces(field)?;
        let eos = &self.cfg.eos;
        let gamma = self.cfg.gamma();
        let xis: [Vec3; 2] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let global_a = if self.cfg.flux == FluxMode::GlobalLf {
            let m = |tr: &[(Vector8, Vector8)], xi: &Vec3| {
                tr.par_iter()
                    .map(|(a, b)| llf_speed_points(&PointState::from_array(a, eos), &PointState::from_array(b, eos), xi, eos, gamma))
                    .reduce(|| 0.0, f64::max)
            };
            m(&vt, &xis[0]).max(m(&ht, &xis[1]))
        } else {
            0.0
        };
        let penalty = self.cfg.penalty;
        let point = |(um, up): &(Vector8, Vector8), axis: usize| -> ([SideData; 2], f64) {
            let xi = &xis[axis];
            let (pm, pp) = (PointState::from_array(um, eos), PointState::from_array(up, eos));
            let ws = interface_speeds(self.cfg.flux, &pm, &pp, xi, eos, gamma, global_a);
            let f = hll_flux_pm(&pm.flux(xi), &pp.flux(xi), um, up, &ws);
            let (sm, sp) = (ws.sigma_minus, ws.sigma_plus);
            let (bm, bp) = (um[4 + axis], up[4 + axis]);
            let mut minus = SideData { g: f, u_int: *um, sigma_m: sm, sigma_p: sp, bn_int: bm, bn_ext: bp };
            let mut plus =
                SideData { g: f.map(|x| -x), u_int: *up, sigma_m: -sp, sigma_p: -sm, bn_int: -bp, bn_ext: -bm };
            if penalty {
                for (s, ps) in [(&mut minus, &pm), (&mut plus, &pp)] {
                    let w = s.eta() * (s.bn_ext - s.bn_int);
                    let src = source_vector_unchecked(&ps.u, &ps.v);
                    for v in 0..NVAR {
                        s.g[v] -= w * src[v];
                    }
                }
            }
            ([minus, plus], practical_speed(&pm, &pp, xi, eos, &ws))
        };
        let (vert, practical_v): (Vec<_>, Vec<_>) = vt.par_iter().map(|t| point(t, 0)).unzip();
        let (horiz, practical_h): (Vec<_>, Vec<_>) = ht.par_iter().map(|t| point(t, 1)).unzip();
        Ok(Interfaces2D { vert, horiz, practical_v, practical_h })
    }

    /// Time derivative of every modal coefficient, with the magnetic part
    /// projected onto the locally divergence-free space.
    pub fn residual_with(&self, field: &DgField, ifs: &Interfaces2D) -> DgField {
        let eos = &self.cfg.eos;
        let mut res = field.clone();
        let n = field.cell_len();
        let nm = field.nmodes();
        let xi_x: Vec3 = [1.0, 0.0, 0.0];
        let xi_y: Vec3 = [0.0, 1.0, 0.0];
        res.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(c, out)| {
            let (dx, dy) = self.mesh.size(c);
            let inv_h = [1.0 / dx, 1.0 / dx, 1.0 / dy, 1.0 / dy];
            let edges = self.cell_edges(c);
            let fl: Vec<(Vector8, Vector8)> = if self.cfg.k == 0 {
                Vec::new()
            } else {
                self.vol
                    .iter()
                    .map(|(_, phi, _, _)| {
                        let p = PointState::from_array(&field.eval_with(c, phi), eos);
                        (p.flux(&xi_x), p.flux(&xi_y))
                    })
                    .collect()
            };
            for a in 0..nm {
                for v in 0..NVAR {
                    let mut vol = 0.0;
                    for (g, (f1, f2)) in fl.iter().enumerate() {
                        let (w, _, gx, gy) = &self.vol[g];
                        vol += w * (f1[v] * gx[a] / dx + f2[v] * gy[a] / dy);
                    }
                    let mut acc = 0.0;
                    for (e, edge) in edges.iter().enumerate() {
                        let mut s = 0.0;
                        for q in 0..self.nq {
                            s += self.gauss.weights[q] * self.side(ifs, *edge, q).g[v] * self.edge_phi[e][q][a];
                        }
                        acc += inv_h[e] * s;
                    }
                    out[a * NVAR + v] = vol - acc;
                }
            }
            if self.cfg.k > 0 {
                project_cell_b(self.ldf.get(dx, dy), out);
            }
        });
        res
    }

    /// High-order discrete divergence of every cell.
    pub fn div_ho(&self, ifs: &Interfaces2D) -> Vec<f64> {
        (0..self.mesh.n_cells())
            .map(|c| {
                let (dx, dy) = self.mesh.size(c);
                let inv_h = [1.0 / dx, 1.0 / dx, 1.0 / dy, 1.0 / dy];
                self.cell_edges(c)
                    .iter()
                    .enumerate()
                    .map(|(e, edge)| {
                        inv_h[e] * (0..self.nq).map(|q| self.gauss.weights[q] * self.side(ifs, *edge, q).upwind_bn()).sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    /// First-order discrete divergence of the cell averages.
    pub fn div_fo(&self, field: &DgField) -> Result<Vec<f64>> {
        let mut c0 = self.cfg.clone();
        c0.k = 0;
        let d0 = Disc2D::new(self.mesh.clone(), c0)?;
        let avg = DgField::from_averages(2, 0, &field.averages())?;
        Ok(d0.div_ho(&d0.interfaces(&avg)?))
    }

    /// Largest step of the positivity theorems for this stage (safety included).
    pub fn proven_dt(&self, ifs: &Interfaces2D) -> f64 {
        let eos = &self.cfg.eos;
        let k = self.cfg.k;
        let div = if k == 0 && self.cfg.penalty { self.div_ho(ifs) } else { Vec::new() };
        (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let (dx, dy) = self.mesh.size(c);
                let inv_h = [1.0 / dx, 1.0 / dx, 1.0 / dy, 1.0 / dy];
                let edges = self.cell_edges(c);
                if k == 0 {
                    let mut s = 0.0;
                    for (e, edge) in edges.iter().enumerate() {
                        s += inv_h[e] * -self.side(ifs, *edge, 0).sigma_m;
                    }
                    if self.cfg.penalty {
                        let rho = self.side(ifs, edges[0], 0).u_int[0];
                        s += div[c].abs() / rho.sqrt();
                    }
                    return PROVEN_SAFETY / s;
                }
                let lens = [dy, dy, dx, dx];
                let per = 2.0 * (dx + dy);
                let mut amax = 0.0f64;
                for q in 0..self.nq {
                    let sides: Vec<&SideData> = edges.iter().map(|e| self.side(ifs, *e, q)).collect();
                    let pts: Vec<PointState> = sides.iter().map(|s| PointState::from_array(&s.u_int, eos)).collect();
                    for (j, s) in sides.iter().enumerate() {
                        let mut a = alpha_hat_single(j, &lens, per, &NORMALS, &pts, eos) - s.sigma_m;
                        if self.cfg.penalty {
                            a -= s.eta() * (s.bn_int - s.bn_ext).abs() / pts[j].sqrt_rho;
                        }
                        amax = amax.max(a);
                    }
                }
                PROVEN_SAFETY * self.omega1 / ((1.0 / dx + 1.0 / dy) * amax)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// `1 / max_K (s_x / dx + s_y / dy)`.
    pub fn inv_speed_dt(&self, ifs: &Interfaces2D) -> f64 {
        let m = (0..self.mesh.n_cells())
            .map(|c| {
                let (dx, dy) = self.mesh.size(c);
                let e = self.cell_edges(c);
                let mut s = [0.0f64; 2];
                for (j, edge) in e.iter().enumerate() {
                    let arr = if edge.0 { &ifs.practical_v } else { &ifs.practical_h };
                    for q in 0..self.nq {
                        s[j / 2] = s[j / 2].max(arr[edge.1 * self.nq + q]);
                    }
                }
                s[0] / dx + s[1] / dy
            })
            .fold(0.0, f64::max);
        1.0 / m
    }

    /// The time step of the penalty-free bound for the given stage data and
    /// the cell averages after one forward-Euler step.
    pub fn euler_step(&self, field: &DgField, ifs: &Interfaces2D, dt: f64) -> DgField {
        let mut out = field.clone();
        out.combine(1.0, dt, &self.residual_with(field, ifs));
        out
    }
}

/// Per-cell margins `E(U_new) + dt (m.B)/rho * div` of the penalty-free
/// positivity bound after a forward-Euler step; all must be positive.
pub fn penalty_free_margins(new: &DgField, div: &[f64], dt: f64) -> Vec<f64> {
    (0..new.ncells())
        .map(|c| {
            let u = new.average_array(c);
            let mb = u[1] * u[4] + u[2] * u[5] + u[3] * u[6];
            internal_energy(&u) + dt * mb / u[0] * div[c]
        })
        .collect()
}

impl Discretization for Disc2D {
    fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn ncells(&self) -> usize {
        self.mesh.n_cells()
    }

    fn volume(&self, c: usize) -> f64 {
        let (dx, dy) = self.mesh.size(c);
        dx * dy
    }

    fn limit(&self, field: &mut DgField) -> Result<usize> {
        let lim = &self.cfg.limiter;
        apply_limiters(
            field,
            lim.order,
            |f| {
                if let (OscLimiter::Tvb(p), Some(l1)) = (lim.oscillation, &self.ldf1) {
                    tvb_limit_2d(f, &self.mesh, &p, &self.cfg.eos, l1);
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
            max_div_ho: self.div_ho(&ifs).into_iter().map(f64::abs).fold(0.0, f64::max),
        })
    }

    fn max_div_fo(&self, field: &DgField) -> Result<f64> {
        Ok(self.div_fo(field)?.into_iter().map(f64::abs).fold(0.0, f64::max))
    }
}

/// One forward-Euler step of the first-order scheme on cell averages
/// (with or without the penalty term, per `cfg.penalty`).
pub fn fo_step_2d(avgs: &[ConservedState], mesh: &RectMesh2D, cfg: &SolverConfig, dt: f64) -> Result<Vec<ConservedState>> {
    let mut c0 = cfg.clone();
    c0.k = 0;
    let disc = Disc2D::new(mesh.clone(), c0)?;
    let field = DgField::from_averages(2, 0, avgs)?;
    let ifs = disc.interfaces(&field)?;
    Ok(avgs
        .iter()
        .enumerate()
        .map(|(c, u)| {
            let (dx, dy) = mesh.size(c);
            let inv_h = [1.0 / dx, 1.0 / dx, 1.0 / dy, 1.0 / dy];
            let edges = disc.cell_edges(c);
            let u = u.to_array();
            let new: Vector8 = std::array::from_fn(|v| {
                let mut acc = 0.0;
                for (e, edge) in edges.iter().enumerate() {
                    acc += inv_h[e] * (0.0 + disc.side(&ifs, *edge, 0).g[v]);
                }
                u[v] + dt * (0.0 - acc)
            });
            ConservedState::from_array(&new)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::project_initial_2d;
    use crate::mesh::build_rect_2d;
    use crate::state::{prim_to_cons, Eos, PrimitiveState};

    fn eos() -> Eos {
        Eos::ideal(1.4).unwrap()
    }

    fn outflow() -> [BoundaryCondition; 4] {
        std::array::from_fn(|_| BoundaryCondition::Outflow)
    }

    fn periodic() -> [BoundaryCondition; 4] {
        std::array::from_fn(|_| BoundaryCondition::Periodic)
    }

    fn prim(rho: f64, v: [f64; 3], p: f64, b: [f64; 3]) -> ConservedState {
        prim_to_cons(&PrimitiveState::new(rho, v, p, b), &eos())
    }

    #[test]
    fn uniform_state_zero_residual_and_divergence() {
        let u = prim(1.0, [0.2, 0.1, 0.0], 1.0, [0.5, -0.3, 0.2]);
        let mesh = build_rect_2d([0.0, 1.0, 0.0, 1.0], 5, 4, periodic()).unwrap();
        for k in 0..=2 {
            for penalty in [true, false] {
                let mut cfg = SolverConfig::new(k, eos());
                cfg.penalty = penalty;
                let d = Disc2D::new(mesh.clone(), cfg).unwrap();
                let f = project_initial_2d(|_| u, &mesh, k).unwrap();
                let r = d.residual(&f).unwrap();
                assert!(r.res.as_slice().iter().all(|x| x.abs() < 1e-12));
                assert!(r.max_div_ho < 1e-13);
                assert!(r.proven_dt > 0.0 && r.proven_dt.is_finite());
            }
        }
    }

    #[test]
    fn constant_field_arbitrary_gas_has_zero_fo_divergence() {
        let mesh = build_rect_2d([0.0, 1.0, 0.0, 1.0], 6, 6, outflow()).unwrap();
        let f = project_initial_2d(|p| prim(1.0 + p[0], [p[1], 0.0, 0.0], 1.0 + p[0] * p[1], [0.3, 0.7, 0.0]), &mesh, 0).unwrap();
        let d = Disc2D::new(mesh, SolverConfig::new(0, eos())).unwrap();
        assert!(d.div_fo(&f).unwrap().iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn global_lf_has_eta_minus_half() {
        let mesh = build_rect_2d([0.0, 1.0, 0.0, 1.0], 4, 4, periodic()).unwrap();
        let mut cfg = SolverConfig::new(1, eos());
        cfg.flux = FluxMode::GlobalLf;
        let d = Disc2D::new(mesh.clone(), cfg).unwrap();
        let f = project_initial_2d(|p| prim(1.0 + 0.2 * (6.0 * p[0]).sin(), [0.1, 0.0, 0.0], 1.0, [0.4, 0.1, 0.0]), &mesh, 1).unwrap();
        let ifs = d.interfaces(&f).unwrap();
        for s in ifs.vert.iter().chain(&ifs.horiz).flat_map(|p| p.iter()) {
            assert_eq!(s.eta(), -0.5);
        }
    }

    #[test]
    fn lf_divergence_is_arithmetic_mean() {
        let mesh = build_rect_2d([0.0, 1.0, 0.0, 1.0], 3, 3, periodic()).unwrap();
        let mut cfg = SolverConfig::new(0, eos());
        cfg.flux = FluxMode::GlobalLf;
        let d = Disc2D::new(mesh.clone(), cfg).unwrap();
        let f = project_initial_2d(|p| prim(1.0, [0.0; 3], 1.0, [p[0] * p[0], p[1] + p[0], 0.0]), &mesh, 0).unwrap();
        let div = d.div_fo(&f).unwrap();
        let c = mesh.index(1, 1);
        let b = |i, l, comp| f.coeff(mesh.index(i, l), 0, comp);
        let h = 1.0 / 3.0;
        let expect = ((b(2, 1, 4) - b(0, 1, 4)) + (b(1, 2, 5) - b(1, 0, 5))) / (2.0 * h);
        assert!((div[c] - expect).abs() < 1e-12);
    }

    #[test]
    fn degree_zero_matches_first_order_scheme() {
        let mesh = build_rect_2d([-0.5, 0.5, -0.5, 0.5], 8, 8, outflow()).unwrap();
        let ic = |p: [f64; 2]| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            prim(1.0 + p[1], [0.0; 3], if r < 0.2 { 50.0 } else { 0.1 }, [1.0 + p[1], 0.3 * p[0], 0.0])
        };
        for penalty in [true, false] {
            let mut cfg = SolverConfig::new(0, eos());
            cfg.penalty = penalty;
            let d = Disc2D::new(mesh.clone(), cfg.clone()).unwrap();
            let f = project_initial_2d(ic, &mesh, 0).unwrap();
            let r = d.residual(&f).unwrap();
            let mut ho = f.clone();
            ho.combine(1.0, r.proven_dt, &r.res);
            let fo = fo_step_2d(&f.averages(), &mesh, &cfg, r.proven_dt).unwrap();
            for (c, u) in fo.iter().enumerate() {
                assert_eq!(u.to_array(), ho.average_array(c));
                if penalty {
                    assert!(u.rho > 0.0 && u.internal_energy_unchecked() > 0.0);
                }
            }
        }
    }

    #[test]
    fn jumped_normal_field_divergence() {
        // Single jump in B1 across the vertical interface x = 0.5.
        let mesh = build_rect_2d([0.0, 1.0, 0.0, 1.0], 2, 1, outflow()).unwrap();
        let d = Disc2D::new(mesh.clone(), SolverConfig::new(1, eos())).unwrap();
        let f = project_initial_2d(|p| prim(1.0, [0.0; 3], 1.0, [if p[0] < 0.5 { 1.0 } else { 2.0 }, 0.0, 0.0]), &mesh, 1).unwrap();
        let ifs = d.interfaces(&f).unwrap();
        let div = d.div_ho(&ifs);
        // Direct summation over the shared edge.
        let mut expect = 0.0;
        for q in 0..2 {
            let s = &ifs.vert[1 * 2 + q][0];
            expect += d.gauss.weights[q] * (s.sigma_p * 1.0 - s.sigma_m * 2.0) / (s.sigma_p - s.sigma_m);
        }
        // Left cell: outflow left edge contributes -1 exactly.
        assert!((div[0] - (expect - 1.0) / 0.5).abs() < 1e-12);
        assert!(div[0] > 0.0 && div[1] > 0.0);
    }
}
