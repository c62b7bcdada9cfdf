//! Benchmark problems, exact-solution error norms, convergence orders and
//! robustness runs.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::basis::{gauss_rule, project_initial_1d, project_initial_2d, ScalarBasis1D, ScalarBasis2D};
use crate::error::{MhdError, Result};
use crate::mesh::{build_rect_2d, build_uniform_1d, BoundaryCondition, Mesh1D, RectMesh2D};
use crate::scheme::{ssp_rk3_advance, DgField, Disc1D, Disc2D, RunOutcome, SolverConfig, StepDiagnostics};
use crate::state::{is_admissible, prim_to_cons, ConservedState, Eos, PrimitiveState, Vector8, NVAR};

/// Names of the conserved variables, in storage order.
pub const VAR_NAMES: [&str; NVAR] = ["rho", "mx", "my", "mz", "Bx", "By", "Bz", "E"];

/// Computational domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval([f64; 2]),
    /// `[x0, x1, y0, y1]`.
    Rect([f64; 4]),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval(_) => 1,
            Domain::Rect(_) => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval([a, b]) => b - a,
            Domain::Rect([x0, x1, y0, y1]) => (x1 - x0) * (y1 - y0),
        }
    }
}

/// Initial data, in primitive variables.
#[derive(Clone)]
pub enum InitialData {
    /// `rho = 1 + amp sin(x - t)` advected with unit speed; constant `p` and `B1`.
    SineWave { amp: f64, p: f64, b1: f64 },
    /// Two constant states separated at `x0`.
    Riemann { left: PrimitiveState, right: PrimitiveState, x0: f64 },
    /// Fluid at rest with a high-pressure disc of radius `r0` at the origin.
    Blast { rho: f64, p_in: f64, p_out: f64, r0: f64, bx: f64 },
    /// A shock front at `x = x0` and a dense cloud on its right.
    ShockCloud { left: PrimitiveState, right: PrimitiveState, x0: f64, cloud_rho: f64, center: [f64; 2], radius: f64 },
    /// Static ambient gas of density `rho_factor * gamma` with a vertical
    /// field; the jet enters through the inflow boundary at speed `mach`.
    Jet { rho_factor: f64, p: f64, ba: f64, mach: f64 },
    /// User-supplied profile.
    Custom(Arc<dyn Fn(&[f64]) -> PrimitiveState + Send + Sync>),
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::SineWave { amp, p, b1 } => f.debug_struct("SineWave").field("amp", amp).field("p", p).field("b1", b1).finish(),
            InitialData::Riemann { left, right, x0 } => f.debug_struct("Riemann").field("left", left).field("right", right).field("x0", x0).finish(),
            InitialData::Blast { rho, p_in, p_out, r0, bx } => f
                .debug_struct("Blast")
                .field("rho", rho)
                .field("p_in", p_in)
                .field("p_out", p_out)
                .field("r0", r0)
                .field("bx", bx)
                .finish(),
            InitialData::ShockCloud { left, right, x0, cloud_rho, center, radius } => f
                .debug_struct("ShockCloud")
                .field("left", left)
                .field("right", right)
                .field("x0", x0)
                .field("cloud_rho", cloud_rho)
                .field("center", center)
                .field("radius", radius)
                .finish(),
            InitialData::Jet { rho_factor, p, ba, mach } => {
                f.debug_struct("Jet").field("rho_factor", rho_factor).field("p", p).field("ba", ba).field("mach", mach).finish()
            }
            InitialData::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// One benchmark setup.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Domain,
    pub gamma: f64,
    pub initial: InitialData,
    /// `[left, right]` in 1D, `[left, right, bottom, top]` in 2D.
    pub bcs: Vec<BoundaryCondition>,
    pub t_end: f64,
    /// Resolution used for the reference runs.
    pub default_cells: Vec<usize>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn eos(&self) -> Eos {
        Eos::ideal(self.gamma).expect("catalog gamma is valid")
    }

    /// Primitive initial state at `x` (length 1 or 2).
    pub fn initial_primitive(&self, x: &[f64]) -> PrimitiveState {
        match &self.initial {
            InitialData::SineWave { .. } => self.exact_primitive(x[0], 0.0).expect("sine wave has an exact solution"),
            InitialData::Riemann { left, right, x0 } => {
                if x[0] < *x0 {
                    *left
                } else {
                    *right
                }
            }
            InitialData::Blast { rho, p_in, p_out, r0, bx } => {
                let r = x[0].hypot(x[1]);
                PrimitiveState::new(*rho, [0.0; 3], if r < *r0 { *p_in } else { *p_out }, [*bx, 0.0, 0.0])
            }
            InitialData::ShockCloud { left, right, x0, cloud_rho, center, radius } => {
                if x[0] < *x0 {
                    *left
                } else {
                    let mut w = *right;
                    if (x[0] - center[0]).hypot(x[1] - center[1]) < *radius {
                        w.rho = *cloud_rho;
                    }
                    w
                }
            }
            InitialData::Jet { rho_factor, p, ba, .. } => PrimitiveState::new(rho_factor * self.gamma, [0.0; 3], *p, [0.0, *ba, 0.0]),
            InitialData::Custom(f) => f(x),
        }
    }

    pub fn initial_state(&self, x: &[f64]) -> ConservedState {
        prim_to_cons(&self.initial_primitive(x), &self.eos())
    }

    /// Exact solution in primitive variables, when known.
    pub fn exact_primitive(&self, x: f64, t: f64) -> Option<PrimitiveState> {
        match self.initial {
            InitialData::SineWave { amp, p, b1 } => Some(PrimitiveState::new(1.0 + amp * (x - t).sin(), [1.0, 0.0, 0.0], p, [b1, 0.0, 0.0])),
            _ => None,
        }
    }

    pub fn has_exact(&self) -> bool {
        matches!(self.initial, InitialData::SineWave { .. })
    }

    pub fn exact_state(&self, x: f64, t: f64) -> Option<ConservedState> {
        self.exact_primitive(x, t).map(|w| prim_to_cons(&w, &self.eos()))
    }

    /// The mesh at resolution `cells` (one entry per dimension).
    pub fn mesh(&self, cells: &[usize]) -> Result<ProblemMesh> {
        if cells.len() != self.dim() {
            return Err(MhdError::InvalidInput(format!("problem {} needs {} cell counts, got {}", self.name, self.dim(), cells.len())));
        }
        match self.domain {
            Domain::Interval([a, b]) => Ok(ProblemMesh::OneD(build_uniform_1d(a, b, cells[0], [self.bcs[0].clone(), self.bcs[1].clone()])?)),
            Domain::Rect(d) => {
                let bcs = [self.bcs[0].clone(), self.bcs[1].clone(), self.bcs[2].clone(), self.bcs[3].clone()];
                Ok(ProblemMesh::TwoD(build_rect_2d(d, cells[0], cells[1], bcs)?))
            }
        }
    }

    /// Builds the discretization and the projected initial field. The
    /// equation of state of `cfg` is replaced by the problem's.
    pub fn setup(&self, cells: &[usize], mut cfg: SolverConfig) -> Result<Simulation> {
        cfg.eos = self.eos();
        let k = cfg.k;
        match self.mesh(cells)? {
            ProblemMesh::OneD(mesh) => {
                let field = project_initial_1d(|x| self.initial_state(&[x]), &mesh, k)?;
                Ok(Simulation::OneD(Disc1D::new(mesh, cfg)?, field))
            }
            ProblemMesh::TwoD(mesh) => {
                let field = project_initial_2d(|x| self.initial_state(&x), &mesh, k)?;
                Ok(Simulation::TwoD(Disc2D::new(mesh, cfg)?, field))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ProblemMesh {
    OneD(Mesh1D),
    TwoD(RectMesh2D),
}

/// A discretized problem together with its current field.
pub enum Simulation {
    OneD(Disc1D, DgField),
    TwoD(Disc2D, DgField),
}

impl Simulation {
    pub fn field(&self) -> &DgField {
        match self {
            Simulation::OneD(_, f) | Simulation::TwoD(_, f) => f,
        }
    }

    pub fn config(&self) -> &SolverConfig {
        match self {
            Simulation::OneD(d, _) => &d.cfg,
            Simulation::TwoD(d, _) => &d.cfg,
        }
    }

    /// Advances from `t0` to `t_end`; `on_step` sees every accepted step.
    pub fn run<F>(&mut self, t0: f64, t_end: f64, on_step: F) -> Result<RunOutcome>
    where
        F: FnMut(&StepDiagnostics, &DgField),
    {
        match self {
            Simulation::OneD(d, f) => ssp_rk3_advance(d, f, t0, t_end, on_step),
            Simulation::TwoD(d, f) => ssp_rk3_advance(d, f, t0, t_end, on_step),
        }
    }
}

fn riemann(name: &str, gamma: f64, left: PrimitiveState, right: PrimitiveState, domain: [f64; 2], t_end: f64, cells: usize) -> ProblemSpec {
    ProblemSpec {
        name: name.into(),
        domain: Domain::Interval(domain),
        gamma,
        initial: InitialData::Riemann { left, right, x0: 0.0 },
        bcs: vec![BoundaryCondition::Outflow, BoundaryCondition::Outflow],
        t_end,
        default_cells: vec![cells],
    }
}

/// The smooth sine wave on a periodic interval.
pub fn smooth1d() -> ProblemSpec {
    ProblemSpec {
        name: "smooth1d".into(),
        domain: Domain::Interval([0.0, 2.0 * PI]),
        gamma: 1.4,
        initial: InitialData::SineWave { amp: 0.99, p: 1.0, b1: 0.1 },
        bcs: vec![BoundaryCondition::Periodic, BoundaryCondition::Periodic],
        t_end: 0.1,
        default_cells: vec![128],
    }
}

pub fn vacuum_tube() -> ProblemSpec {
    riemann(
        "vacuum_tube",
        5.0 / 3.0,
        PrimitiveState::new(1e-12, [0.0; 3], 1e-12, [0.0; 3]),
        PrimitiveState::new(1.0, [0.0; 3], 0.5, [0.0, 1.0, 0.0]),
        [-0.5, 0.5],
        0.1,
        200,
    )
}

/// Strongly magnetized shock tube with a pressure ratio of 1e9.
pub fn leblanc() -> ProblemSpec {
    riemann(
        "leblanc",
        1.4,
        PrimitiveState::new(2.0, [0.0; 3], 1e9, [0.0, 5000.0, 5000.0]),
        PrimitiveState::new(0.001, [0.0; 3], 1.0, [0.0, 5000.0, 5000.0]),
        [-10.0, 10.0],
        3e-5,
        2000,
    )
}

pub fn blast() -> ProblemSpec {
    ProblemSpec {
        name: "blast".into(),
        domain: Domain::Rect([-0.5, 0.5, -0.5, 0.5]),
        gamma: 1.4,
        initial: InitialData::Blast { rho: 1.0, p_in: 1000.0, p_out: 0.1, r0: 0.1, bx: 100.0 / (4.0 * PI).sqrt() },
        bcs: vec![BoundaryCondition::Outflow; 4],
        t_end: 0.01,
        default_cells: vec![320, 320],
    }
}

pub fn shock_cloud() -> ProblemSpec {
    let gamma = 5.0 / 3.0;
    let right = PrimitiveState::new(1.0, [-11.2536, 0.0, 0.0], 1.0, [0.0, 0.56418958, 0.56418958]);
    ProblemSpec {
        name: "shock_cloud".into(),
        domain: Domain::Rect([0.0, 1.0, 0.0, 1.0]),
        gamma,
        initial: InitialData::ShockCloud {
            left: PrimitiveState::new(3.86859, [0.0; 3], 167.345, [0.0, 2.1826182, -2.1826182]),
            right,
            x0: 0.6,
            cloud_rho: 10.0,
            center: [0.8, 0.5],
            radius: 0.15,
        },
        bcs: vec![
            BoundaryCondition::Outflow,
            BoundaryCondition::Inflow { state: prim_to_cons(&right, &Eos::ideal(gamma).expect("valid gamma")), span: None },
            BoundaryCondition::Outflow,
            BoundaryCondition::Outflow,
        ],
        t_end: 0.06,
        default_cells: vec![400, 400],
    }
}

/// Half-domain jet: reflecting wall on `x = 0`, nozzle `0 <= x < 0.05` on
/// the bottom side.
pub fn jet(mach: f64, ba: f64, t_end: f64) -> ProblemSpec {
    let gamma = 1.4;
    let eos = Eos::ideal(gamma).expect("valid gamma");
    let inflow = PrimitiveState::new(gamma, [0.0, mach, 0.0], 1.0, [0.0, ba, 0.0]);
    let name = format!("jet{}_b{}", mach, (ba * ba).round());
    ProblemSpec {
        name,
        domain: Domain::Rect([0.0, 0.5, 0.0, 1.5]),
        gamma,
        initial: InitialData::Jet { rho_factor: 0.1, p: 1.0, ba, mach },
        bcs: vec![
            BoundaryCondition::Reflecting,
            BoundaryCondition::Outflow,
            BoundaryCondition::Inflow { state: prim_to_cons(&inflow, &eos), span: Some([0.0, 0.05]) },
            BoundaryCondition::Outflow,
        ],
        t_end,
        default_cells: vec![200, 600],
    }
}

/// Jet inflow state `(rho, v, p, B)` of [`jet`].
pub fn jet_inflow(spec: &ProblemSpec) -> Option<ConservedState> {
    match spec.bcs.get(2) {
        Some(BoundaryCondition::Inflow { state, .. }) if matches!(spec.initial, InitialData::Jet { .. }) => Some(*state),
        _ => None,
    }
}

/// Periodic vortex setting on `[-10, 10]^2` with `gamma = 5/3`; the profile
/// is supplied by the caller.
pub fn vortex_template<F>(profile: F, t_end: f64) -> ProblemSpec
where
    F: Fn(&[f64]) -> PrimitiveState + Send + Sync + 'static,
{
    ProblemSpec {
        name: "vortex".into(),
        domain: Domain::Rect([-10.0, 10.0, -10.0, 10.0]),
        gamma: 5.0 / 3.0,
        initial: InitialData::Custom(Arc::new(profile)),
        bcs: vec![BoundaryCondition::Periodic; 4],
        t_end,
        default_cells: vec![64, 64],
    }
}

/// All named problems. Jet presets come first at Mach 800, then the faster
/// jets.
pub fn problem_catalog() -> Vec<ProblemSpec> {
    vec![
        smooth1d(),
        vacuum_tube(),
        leblanc(),
        blast(),
        shock_cloud(),
        jet(800.0, 2000f64.sqrt(), 0.002),
        jet(800.0, 20000f64.sqrt(), 0.002),
        jet(2000.0, 20000f64.sqrt(), 0.00075),
        jet(10000.0, 20000f64.sqrt(), 0.00015),
    ]
}

/// Looks a problem up by name; `jet` is an alias of the first jet preset.
pub fn find_problem(name: &str) -> Option<ProblemSpec> {
    let name = if name == "jet" { "jet800_b2000" } else { name };
    problem_catalog().into_iter().find(|p| p.name == name)
}

/// Every constant of the catalog as `(key, value)`.
pub fn catalog_constants() -> Vec<(String, f64)> {
    fn prim(out: &mut Vec<(String, f64)>, key: &str, w: &PrimitiveState) {
        let vals = [w.rho, w.v[0], w.v[1], w.v[2], w.p, w.b[0], w.b[1], w.b[2]];
        for (n, v) in ["rho", "v1", "v2", "v3", "p", "B1", "B2", "B3"].iter().zip(vals) {
            out.push((format!("{key}.{n}"), v));
        }
    }
    let mut out = Vec::new();
    for spec in problem_catalog() {
        let n = spec.name.clone();
        out.push((format!("{n}.gamma"), spec.gamma));
        out.push((format!("{n}.t_end"), spec.t_end));
        match spec.domain {
            Domain::Interval(d) => d.iter().enumerate().for_each(|(i, v)| out.push((format!("{n}.domain{i}"), *v))),
            Domain::Rect(d) => d.iter().enumerate().for_each(|(i, v)| out.push((format!("{n}.domain{i}"), *v))),
        }
        match &spec.initial {
            InitialData::SineWave { amp, p, b1 } => {
                out.push((format!("{n}.amp"), *amp));
                out.push((format!("{n}.p"), *p));
                out.push((format!("{n}.B1"), *b1));
            }
            InitialData::Riemann { left, right, x0 } => {
                prim(&mut out, &format!("{n}.left"), left);
                prim(&mut out, &format!("{n}.right"), right);
                out.push((format!("{n}.x0"), *x0));
            }
            InitialData::Blast { rho, p_in, p_out, r0, bx } => {
                out.push((format!("{n}.rho"), *rho));
                out.push((format!("{n}.p_in"), *p_in));
                out.push((format!("{n}.p_out"), *p_out));
                out.push((format!("{n}.r0"), *r0));
                out.push((format!("{n}.B1"), *bx));
            }
            InitialData::ShockCloud { left, right, x0, cloud_rho, center, radius } => {
                prim(&mut out, &format!("{n}.left"), left);
                prim(&mut out, &format!("{n}.right"), right);
                out.push((format!("{n}.x0"), *x0));
                out.push((format!("{n}.cloud_rho"), *cloud_rho));
                out.push((format!("{n}.cloud_x"), center[0]));
                out.push((format!("{n}.cloud_y"), center[1]));
                out.push((format!("{n}.cloud_r"), *radius));
            }
            InitialData::Jet { rho_factor, p, ba, mach } => {
                out.push((format!("{n}.ambient_rho_over_gamma"), *rho_factor));
                out.push((format!("{n}.ambient_p"), *p));
                out.push((format!("{n}.B2"), *ba));
                out.push((format!("{n}.jet_v2"), *mach));
                if let Some(BoundaryCondition::Inflow { span: Some(s), .. }) = spec.bcs.get(2) {
                    out.push((format!("{n}.nozzle_half_width"), s[1]));
                }
            }
            InitialData::Custom(_) => {}
        }
    }
    out
}

/// Discrete error norms of one run, averaged over the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub cells: usize,
    /// Mesh size used for the order computation.
    pub h: f64,
    pub l1: Vector8,
    pub l2: Vector8,
    pub linf: Vector8,
}

/// Observed orders between two successive reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Orders {
    pub l1: Vector8,
    pub l2: Vector8,
    pub linf: Vector8,
}

fn accumulate(rep: &mut ErrorReport, w: f64, num: &Vector8, ex: &Vector8) {
    for v in 0..NVAR {
        let e = (num[v] - ex[v]).abs();
        rep.l1[v] += w * e;
        rep.l2[v] += w * e * e;
        rep.linf[v] = rep.linf[v].max(e);
    }
}

fn finish(mut rep: ErrorReport, measure: f64) -> ErrorReport {
    for v in 0..NVAR {
        rep.l1[v] /= measure;
        rep.l2[v] = (rep.l2[v] / measure).sqrt();
    }
    rep
}

/// Norms of `field - exact` on a 1D mesh by a Gauss rule of `k + 3` points per cell.
pub fn error_norms_1d<F>(field: &DgField, mesh: &Mesh1D, exact: F) -> Result<ErrorReport>
where
    F: Fn(f64) -> ConservedState,
{
    let g = gauss_rule(field.k() + 3)?;
    let basis = ScalarBasis1D::new(field.k());
    let phis: Vec<Vec<f64>> = g.nodes.iter().map(|&x| basis.eval(x)).collect();
    let n = mesh.n_cells();
    let mut rep = ErrorReport { cells: n, h: (mesh.interfaces[n] - mesh.interfaces[0]) / n as f64, l1: [0.0; NVAR], l2: [0.0; NVAR], linf: [0.0; NVAR] };
    let mut measure = 0.0;
    for j in 0..n {
        let (xc, h) = (mesh.center(j), mesh.dx(j));
        measure += h;
        for (q, &x) in g.nodes.iter().enumerate() {
            accumulate(&mut rep, h * g.weights[q], &field.eval_with(j, &phis[q]), &exact(xc + h * x).to_array());
        }
    }
    Ok(finish(rep, measure))
}

/// Norms of `field - exact` on a rectangular mesh by a tensor Gauss rule.
pub fn error_norms_2d<F>(field: &DgField, mesh: &RectMesh2D, exact: F) -> Result<ErrorReport>
where
    F: Fn([f64; 2]) -> ConservedState,
{
    let g = gauss_rule(field.k() + 3)?;
    let basis = ScalarBasis2D::new(field.k());
    let mut pts = Vec::new();
    for (&x, &wx) in g.nodes.iter().zip(&g.weights) {
        for (&y, &wy) in g.nodes.iter().zip(&g.weights) {
            pts.push(([x, y], wx * wy, basis.eval(x, y)));
        }
    }
    let n = mesh.n_cells();
    let mut rep = ErrorReport { cells: n, h: 0.0, l1: [0.0; NVAR], l2: [0.0; NVAR], linf: [0.0; NVAR] };
    let mut measure = 0.0;
    for c in 0..n {
        let (xc, (dx, dy)) = (mesh.center(c), mesh.size(c));
        measure += dx * dy;
        for (p, w, phi) in &pts {
            accumulate(&mut rep, dx * dy * w, &field.eval_with(c, phi), &exact([xc[0] + dx * p[0], xc[1] + dy * p[1]]).to_array());
        }
    }
    rep.h = (measure / n as f64).sqrt();
    Ok(finish(rep, measure))
}

/// `log(e_coarse / e_fine) / log(h_coarse / h_fine)` for successive pairs.
/// Empty for fewer than two reports.
pub fn convergence_orders(reports: &[ErrorReport]) -> Vec<Orders> {
    let order = |a: &Vector8, b: &Vector8, r: f64| -> Vector8 { std::array::from_fn(|v| (a[v] / b[v]).ln() / r) };
    reports
        .windows(2)
        .map(|p| {
            let r = (p[0].h / p[1].h).ln();
            Orders { l1: order(&p[0].l1, &p[1].l1, r), l2: order(&p[0].l2, &p[1].l2, r), linf: order(&p[0].linf, &p[1].linf, r) }
        })
        .collect()
}

/// Runs a problem with an exact solution to its end time at every listed
/// resolution and returns the error reports.
pub fn convergence_study(spec: &ProblemSpec, cfg: &SolverConfig, resolutions: &[usize]) -> Result<Vec<ErrorReport>> {
    if !spec.has_exact() || spec.dim() != 1 {
        return Err(MhdError::Unsupported(format!("problem {} has no exact solution", spec.name)));
    }
    resolutions
        .iter()
        .map(|&m| {
            let mut sim = spec.setup(&[m], cfg.clone())?;
            sim.run(0.0, spec.t_end, |_, _| {})?;
            let Simulation::OneD(d, f) = &sim else { unreachable!("1D problem") };
            error_norms_1d(f, &d.mesh, |x| spec.exact_state(x, spec.t_end).expect("exact solution"))
        })
        .collect()
}

/// Outcome of a robustness run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub problem: String,
    pub completed: bool,
    pub t_final: f64,
    pub steps: usize,
    /// First failure, if the run stopped early.
    pub failure: Option<MhdError>,
    /// `(t, min rho, min p)` after every accepted step.
    pub minima: Vec<(f64, f64, f64)>,
    pub max_div_fo: f64,
    pub max_div_ho: f64,
    pub limited_cells: usize,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl RunSummary {
    pub fn min_rho(&self) -> f64 {
        self.minima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min)
    }

    pub fn min_p(&self) -> f64 {
        self.minima.iter().map(|m| m.2).fold(f64::INFINITY, f64::min)
    }

    /// Time of the failure, when it was a loss of positivity.
    pub fn failure_time(&self) -> Option<f64> {
        match self.failure {
            Some(MhdError::PositivityFailure { t, .. }) => Some(t),
            _ => None,
        }
    }
}

/// Runs `spec` at `cells` until `t_end` or the first failure, recording
/// the minima and divergence history. Setup errors are returned directly.
pub fn extreme_run(spec: &ProblemSpec, cfg: &SolverConfig, cells: &[usize], t_end: f64) -> Result<RunSummary> {
    let mut sim = spec.setup(cells, cfg.clone())?;
    let mut diagnostics = Vec::new();
    let res = sim.run(0.0, t_end, |d, _| diagnostics.push(*d));
    let t_final = diagnostics.last().map_or(0.0, |d| d.t);
    Ok(RunSummary {
        problem: spec.name.clone(),
        completed: res.is_ok(),
        t_final,
        steps: diagnostics.len(),
        failure: res.err(),
        minima: diagnostics.iter().map(|d| (d.t, d.min_rho, d.min_p)).collect(),
        max_div_fo: diagnostics.iter().map(|d| d.max_div_fo).fold(0.0, f64::max),
        max_div_ho: diagnostics.iter().map(|d| d.max_div_ho).fold(0.0, f64::max),
        limited_cells: diagnostics.iter().map(|d| d.limited_cells()).sum(),
        diagnostics,
    })
}

/// Whether the initial data is admissible at every projection point of
/// the mesh at `cells`.
pub fn initial_data_admissible(spec: &ProblemSpec, cells: &[usize], k: usize) -> Result<bool> {
    let g = gauss_rule(k + 3)?;
    let ok = |u: ConservedState| is_admissible(&u, 0.0, 0.0);
    Ok(match spec.mesh(cells)? {
        ProblemMesh::OneD(m) => (0..m.n_cells()).all(|j| g.nodes.iter().all(|&x| ok(spec.initial_state(&[m.center(j) + m.dx(j) * x])))),
        ProblemMesh::TwoD(m) => (0..m.n_cells()).all(|c| {
            let (xc, (dx, dy)) = (m.center(c), m.size(c));
            g.nodes.iter().all(|&x| g.nodes.iter().all(|&y| ok(spec.initial_state(&[xc[0] + dx * x, xc[1] + dy * y]))))
        }),
    })
}
