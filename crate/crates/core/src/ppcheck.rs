//! Executable checks of the auxiliary positivity theory: the multi-state
//! inequality, its two-state forms, the HLL intermediate state, the
//! source-term relations, the pairing inequality and the spectral bound of
//! the quadratic form behind the positivity speed.
//!
//! Every check reports a residual `lhs - rhs` divided by a floating-point
//! magnitude scale, so a correct implementation stays above `-1e-12`.

use nalgebra::{Matrix6, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{MhdError, Result};
use crate::flux::{self, Direction, PointState};
use crate::state::{
    dot3, norm2_3, prim_to_cons, theta_vector, ConservedState, Eos, PrimitiveState, StarArgs, Vec3,
    Vector8, NVAR,
};

/// Inputs of the multi-state inequality.
#[derive(Debug, Clone)]
pub struct MultiStateConfig {
    pub s: Vec<f64>,
    pub xis: Vec<Direction>,
    pub states: Vec<ConservedState>,
    pub alphas: Vec<f64>,
}

impl MultiStateConfig {
    pub fn n(&self) -> usize {
        self.s.len()
    }

    /// Checks sizes, positivity of the measures and `sum s_j xi_j = 0`.
    pub fn validate(&self) -> Result<()> {
        let n = self.s.len();
        if n < 2 || self.xis.len() != n || self.states.len() != n || (!self.alphas.is_empty() && self.alphas.len() != n) {
            return Err(MhdError::InvalidInput("inconsistent multi-state configuration".into()));
        }
        if self.s.iter().any(|&s| !(s > 0.0)) {
            return Err(MhdError::InvalidInput("measures must be positive".into()));
        }
        let per: f64 = self.s.iter().sum();
        let mut c = [0.0; 3];
        for (s, xi) in self.s.iter().zip(&self.xis) {
            for k in 0..3 {
                c[k] += s * xi.xi()[k];
            }
        }
        if norm2_3(&c).sqrt() > 1e-13 * per {
            return Err(MhdError::InvalidInput(format!("normals do not close: |sum s xi| = {}", norm2_3(&c).sqrt())));
        }
        Ok(())
    }
}

/// The lower bounds `alpha_hat_j` of the multi-state inequality.
pub fn multi_state_alpha_hat(s: &[f64], xis: &[Direction], states: &[ConservedState], eos: &Eos) -> Result<Vec<f64>> {
    let pts = states.iter().map(|u| PointState::checked(u, eos)).collect::<Result<Vec<_>>>()?;
    Ok(alpha_hat_points(s, xis.iter().map(|d| *d.xi()).collect::<Vec<_>>().as_slice(), &pts, eos))
}

/// Same as [`multi_state_alpha_hat`] on precomputed point states.
pub fn alpha_hat_points(s: &[f64], xis: &[Vec3], pts: &[PointState], eos: &Eos) -> Vec<f64> {
    let n = s.len();
    let per: f64 = s.iter().sum();
    (0..n)
        .map(|j| alpha_hat_single(j, s, per, xis, pts, eos))
        .collect()
}

/// `alpha_hat_j` for one index `j`; `per = sum_i s_i`.
#[inline]
pub fn alpha_hat_single(j: usize, s: &[f64], per: f64, xis: &[Vec3], pts: &[PointState], eos: &Eos) -> f64 {
    let pj = &pts[j];
    let xj = &xis[j];
    let mut avg = 0.0;
    let mut jump = 0.0;
    for i in 0..s.len() {
        let pi = &pts[i];
        let dx = [xj[0] - xis[i][0], xj[1] - xis[i][1], xj[2] - xis[i][2]];
        let w = pj.sqrt_rho + pi.sqrt_rho;
        let vroe = [
            (pj.sqrt_rho * pj.v[0] + pi.sqrt_rho * pi.v[0]) / w,
            (pj.sqrt_rho * pj.v[1] + pi.sqrt_rho * pi.v[1]) / w,
            (pj.sqrt_rho * pj.v[2] + pi.sqrt_rho * pi.v[2]) / w,
        ];
        avg += s[i] * dot3(&dx, &vroe);
        let db = [pj.u.b[0] - pi.u.b[0], pj.u.b[1] - pi.u.b[1], pj.u.b[2] - pi.u.b[2]];
        jump += s[i] * norm2_3(&db).sqrt() / w;
    }
    dot3(xj, &pj.v).max(avg / per) + pj.pp_speed(xj, eos) + 2.0 * jump / per
}

/// `U_bar = sum s_j (alpha_j U_j - <xi_j, F(U_j)>) / sum s_j alpha_j`.
pub fn multi_state_average(cfg: &MultiStateConfig, eos: &Eos) -> Result<ConservedState> {
    Ok(ConservedState::from_array(&multi_state_average_with_scale(cfg, eos)?.0))
}

/// The average together with the componentwise magnitude of its terms.
fn multi_state_average_with_scale(cfg: &MultiStateConfig, eos: &Eos) -> Result<(Vector8, Vector8)> {
    cfg.validate()?;
    if cfg.alphas.len() != cfg.n() {
        return Err(MhdError::InvalidInput("alphas missing".into()));
    }
    let mut num = [0.0; NVAR];
    let mut mag = [0.0; NVAR];
    let mut den = 0.0;
    for j in 0..cfg.n() {
        let ps = PointState::checked(&cfg.states[j], eos)?;
        let f = ps.flux(cfg.xis[j].xi());
        let u = cfg.states[j].to_array();
        let (s, a) = (cfg.s[j], cfg.alphas[j]);
        for k in 0..NVAR {
            num[k] += s * (a * u[k] - f[k]);
            mag[k] += s * ((a * u[k]).abs() + f[k].abs());
        }
        den += s * a;
    }
    if !(den > 0.0) {
        return Err(MhdError::InvalidInput(format!("sum s_j alpha_j = {den} is not positive")));
    }
    for k in 0..NVAR {
        num[k] /= den;
        mag[k] /= den;
    }
    Ok((num, mag))
}

/// A residual together with its floating-point magnitude scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    pub fn scaled(&self) -> f64 {
        self.value / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Evaluates `U.n* + |B*|^2/2 + kappa (v*.B*)`, with `mag` bounding the
/// magnitude of the terms that produced `U`.
fn kappa_functional(u: &Vector8, mag: &Vector8, kappa: f64, s: &StarArgs) -> Residual {
    let (vs, bs) = (&s.v_star, &s.b_star);
    let m = [u[1], u[2], u[3]];
    let b = [u[4], u[5], u[6]];
    let vs2 = norm2_3(vs);
    let bs2 = norm2_3(bs);
    let vb = dot3(vs, bs);
    let value = 0.5 * u[0] * vs2 - dot3(&m, vs) - dot3(&b, bs) + u[7] + 0.5 * bs2 + kappa * vb;
    let abs_dot = |a: [f64; 3], c: &Vec3| a[0].abs() * c[0].abs() + a[1].abs() * c[1].abs() + a[2].abs() * c[2].abs();
    let scale = 0.5 * mag[0] * vs2
        + abs_dot([mag[1], mag[2], mag[3]], vs)
        + abs_dot([mag[4], mag[5], mag[6]], bs)
        + mag[7]
        + 0.5 * bs2
        + (kappa * vb).abs();
    Residual { value, scale }
}

/// The `(v*, B*)` minimising `U.n* + |B*|^2/2 + kappa (v*.B*)`, if bounded below.
pub fn kappa_minimizer(u: &Vector8, kappa: f64) -> Option<StarArgs> {
    let det = u[0] - kappa * kappa;
    if !(det > 0.0) {
        return None;
    }
    let v = [
        (u[1] - kappa * u[4]) / det,
        (u[2] - kappa * u[5]) / det,
        (u[3] - kappa * u[6]) / det,
    ];
    let b = [u[4] - kappa * v[0], u[5] - kappa * v[1], u[6] - kappa * v[2]];
    Some(StarArgs::new(v, b))
}

fn unbounded_residual() -> Residual {
    Residual { value: -1.0, scale: 1.0 }
}

/// `sum_j s_j <xi_j, B_j> / sum_j s_j alpha_j`.
fn multi_state_kappa(cfg: &MultiStateConfig) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..cfg.n() {
        num += cfg.s[j] * cfg.xis[j].dot(&cfg.states[j].b);
        den += cfg.s[j] * cfg.alphas[j];
    }
    num / den
}

/// LHS minus RHS of the multi-state inequality at the given `(v*, B*)`.
pub fn multi_state_residual(cfg: &MultiStateConfig, s: &StarArgs, eos: &Eos) -> Result<Residual> {
    let (ubar, mag) = multi_state_average_with_scale(cfg, eos)?;
    Ok(kappa_functional(&ubar, &mag, multi_state_kappa(cfg), s))
}

/// Minimum of the multi-state residual over the sampled star arguments and
/// the analytic minimiser.
pub fn multi_state_min_residual(cfg: &MultiStateConfig, samples: &[StarArgs], eos: &Eos) -> Result<Residual> {
    let (ubar, mag) = multi_state_average_with_scale(cfg, eos)?;
    Ok(min_kappa_residual(&ubar, &mag, multi_state_kappa(cfg), samples))
}

fn min_kappa_residual(ubar: &Vector8, mag: &Vector8, kappa: f64, samples: &[StarArgs]) -> Residual {
    if !(ubar[0] > 0.0) {
        return Residual { value: ubar[0], scale: mag[0] };
    }
    let mut best = match kappa_minimizer(ubar, kappa) {
        Some(s) => kappa_functional(ubar, mag, kappa, &s),
        None => return unbounded_residual(),
    };
    for s in samples {
        let r = kappa_functional(ubar, mag, kappa, s);
        if r.scaled() < best.scaled() {
            best = r;
        }
    }
    best
}

/// Which two-state average to exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoStateMode {
    /// `U_bar = (alpha U - F(U) - alpha~ U~ + F(U~)) / (alpha - alpha~)`.
    Difference,
    /// `U_bar = (alpha U - F(U) + alpha~ U~ + F(U~)) / (alpha + alpha~)`.
    Sum,
}

#[derive(Debug, Clone, Copy)]
pub struct TwoStateReport {
    pub ubar: ConservedState,
    pub density_positive: bool,
    /// Minimum residual of the two-state inequality over the samples.
    pub min_residual: Residual,
    /// Closure membership of `U_bar` with slack `1e-12 max(1, |E|)`.
    pub in_closure: bool,
}

/// Checks the two-state averages for given speeds `alpha`, `alpha_t`.
pub fn two_state_checks(
    um: &ConservedState,
    up: &ConservedState,
    dir: &Direction,
    alpha: f64,
    alpha_t: f64,
    mode: TwoStateMode,
    samples: &[StarArgs],
    eos: &Eos,
) -> Result<TwoStateReport> {
    let a = PointState::checked(um, eos)?;
    let b = PointState::checked(up, eos)?;
    let xi = dir.xi();
    let (fa, fb) = (a.flux(xi), b.flux(xi));
    let (ua, ub) = (um.to_array(), up.to_array());
    let sign = match mode {
        TwoStateMode::Difference => -1.0,
        TwoStateMode::Sum => 1.0,
    };
    let den = alpha + sign * alpha_t;
    if !(den > 0.0) {
        return Err(MhdError::InvalidInput("speeds give a non-positive denominator".into()));
    }
    let mut ubar = [0.0; NVAR];
    let mut mag = [0.0; NVAR];
    for k in 0..NVAR {
        let t1 = alpha * ua[k] - fa[k];
        let t2 = sign * alpha_t * ub[k] + fb[k];
        ubar[k] = (t1 + t2) / den;
        mag[k] = ((alpha * ua[k]).abs() + fa[k].abs() + (alpha_t * ub[k]).abs() + fb[k].abs()) / den;
    }
    let kappa = (dir.dot(&um.b) - dir.dot(&up.b)) / den;
    let min_residual = min_kappa_residual(&ubar, &mag, kappa, samples);
    let u = ConservedState::from_array(&ubar);
    let slack = 1e-12 * mag[7].max(1.0);
    Ok(TwoStateReport {
        ubar: u,
        density_positive: u.rho > 0.0,
        min_residual,
        in_closure: u.rho > 0.0 && u.internal_energy_unchecked() >= -slack,
    })
}

/// Spectral radius of the 6x6 quadratic-form matrix for axis `i` (0-based)
/// together with `C(U; e_i)`.
pub fn matrix_a_check(u: &ConservedState, i: usize, eos: &Eos) -> Result<(f64, f64)> {
    if i > 2 {
        return Err(MhdError::InvalidInput(format!("axis {i} out of range")));
    }
    let ps = PointState::checked(u, eos)?;
    let cs = ps.cs(eos);
    let sr = ps.sqrt_rho;
    let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
    let (b, bi1, bi2) = (u.b[i] / sr, u.b[i1] / sr, u.b[i2] / sr);
    let mut a = Matrix6::<f64>::zeros();
    a[(0, 3)] = bi1;
    a[(0, 4)] = bi2;
    a[(0, 5)] = cs;
    a[(1, 3)] = -b;
    a[(2, 4)] = -b;
    for r in 0..6 {
        for c in 0..r {
            a[(r, c)] = a[(c, r)];
        }
    }
    let eig = SymmetricEigen::new(a);
    let radius = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut e = [0.0; 3];
    e[i] = 1.0;
    Ok((radius, ps.pp_speed(&e, eos)))
}

/// Residuals of the three source-term relations.
#[derive(Debug, Clone, Copy)]
pub struct SourceLemmaResiduals {
    /// `-|S.n* - ((v - v*).(B - B*) - v*.B*)|`.
    pub identity: Residual,
    /// `U.n* + |B*|^2/2 - |sqrt(rho)(v - v*).(B - B*)|` (strictly positive).
    pub strict: Residual,
    /// `-b S.n* - b v*.B* + |b| (U.n* + |B*|^2/2) / sqrt(rho)`.
    pub bound: Residual,
}

pub fn source_lemma_checks(u: &ConservedState, s: &StarArgs, b: f64) -> Result<SourceLemmaResiduals> {
    if !u.is_admissible_strict() {
        return Err(MhdError::Inadmissible { rho: u.rho, internal_energy: u.internal_energy_unchecked() });
    }
    let v = u.velocity();
    let src = flux::source_vector_unchecked(u, &v);
    let n = s.n_star();
    let mut sn = 0.0;
    let mut sn_mag = 0.0;
    for k in 0..NVAR {
        sn += src[k] * n[k];
        sn_mag += (src[k] * n[k]).abs();
    }
    let dv = [v[0] - s.v_star[0], v[1] - s.v_star[1], v[2] - s.v_star[2]];
    let db = [u.b[0] - s.b_star[0], u.b[1] - s.b_star[1], u.b[2] - s.b_star[2]];
    let vsbs = dot3(&s.v_star, &s.b_star);
    let rhs = dot3(&dv, &db) - vsbs;
    let rhs_mag = dv.iter().zip(&db).map(|(a, c)| (a * c).abs()).sum::<f64>() + vsbs.abs();
    let identity = Residual { value: -(sn - rhs).abs(), scale: sn_mag + rhs_mag };

    let g = crate::state::gstar_functional(u, s);
    let g_mag = u.e.abs() + 0.5 * u.rho * norm2_3(&dv) + 0.5 * norm2_3(&db);
    let cross = (u.rho.sqrt() * dot3(&dv, &db)).abs();
    let strict = Residual { value: g - cross, scale: g_mag + cross };

    let bound_val = -b * sn - b * vsbs + b.abs() / u.rho.sqrt() * g;
    let bound_mag = (b * sn_mag).abs() + (b * vsbs).abs() + b.abs() / u.rho.sqrt() * g_mag;
    let bound = Residual { value: bound_val, scale: bound_mag.max(f64::MIN_POSITIVE) };
    Ok(SourceLemmaResiduals { identity, strict, bound })
}

/// `f(U, U~; delta) = |B~ - B| / sqrt(2) * sqrt(delta^2/rho + (1-delta)^2/rho~)`.
pub fn pairing_f(u: &ConservedState, ut: &ConservedState, delta: f64) -> f64 {
    let db = [ut.b[0] - u.b[0], ut.b[1] - u.b[1], ut.b[2] - u.b[2]];
    norm2_3(&db).sqrt() * std::f64::consts::FRAC_1_SQRT_2
        * (delta * delta / u.rho + (1.0 - delta) * (1.0 - delta) / ut.rho).sqrt()
}

/// RHS minus LHS of the pairing inequality; `xi` need not be a unit vector.
pub fn pairing_lemma_check(u: &ConservedState, ut: &ConservedState, s: &StarArgs, xi: &Vec3, delta: f64) -> Result<Residual> {
    let th = theta_vector(u, s)?;
    let tt = theta_vector(ut, s)?;
    let bs = &s.b_star;
    let mag_term = |b: &Vec3| 0.5 * norm2_3(b) - dot3(b, bs);
    let xv = dot3(xi, &s.v_star);
    let lhs_inner = mag_term(&u.b) - mag_term(&ut.b);
    let lhs = xv * lhs_inner;
    let (v, vt) = (u.velocity(), ut.velocity());
    let vd = [
        delta * v[0] + (1.0 - delta) * vt[0],
        delta * v[1] + (1.0 - delta) * vt[1],
        delta * v[2] + (1.0 - delta) * vt[2],
    ];
    let xvd = dot3(xi, &vd);
    let d3: f64 = (0..3).map(|k| th[k] * th[k] - tt[k] * tt[k]).sum();
    let n2 = |t: &[f64; 7]| t.iter().map(|x| x * x).sum::<f64>();
    let (nt, ntt) = (n2(&th), n2(&tt));
    let rhs = xvd * d3 + norm2_3(xi).sqrt() * pairing_f(u, ut, delta) * (nt + ntt);
    let d3_mag: f64 = (0..3).map(|k| th[k] * th[k] + tt[k] * tt[k]).sum();
    let mag_abs = |b: &Vec3| 0.5 * norm2_3(b) + dot3(b, bs).abs();
    let scale = (xv * (mag_abs(&u.b) + mag_abs(&ut.b))).abs()
        + (xvd * d3_mag).abs()
        + norm2_3(xi).sqrt() * pairing_f(u, ut, delta) * (nt + ntt);
    Ok(Residual { value: rhs - lhs, scale })
}

/// RHS minus LHS of the one-direction flux bound
/// `F_i.n* - B_i (v*.B*) <= v_i sum_{k=4..7} theta_k^2 + v*_i (|B|^2/2 - B.B*) + C_i |theta|^2`.
pub fn flux_functional_check(u: &ConservedState, i: usize, s: &StarArgs, eos: &Eos) -> Result<Residual> {
    let ps = PointState::checked(u, eos)?;
    let th = theta_vector(u, s)?;
    let mut e = [0.0; 3];
    e[i] = 1.0;
    let f = ps.flux(&e);
    let n = s.n_star();
    let mut lhs = 0.0;
    let mut lhs_mag = 0.0;
    for k in 0..NVAR {
        lhs += f[k] * n[k];
        lhs_mag += (f[k] * n[k]).abs();
    }
    let vsbs = dot3(&s.v_star, &s.b_star);
    lhs -= u.b[i] * vsbs;
    lhs_mag += (u.b[i] * vsbs).abs();
    let t47: f64 = th[3..7].iter().map(|x| x * x).sum();
    let tn: f64 = th.iter().map(|x| x * x).sum();
    let bterm = 0.5 * norm2_3(&u.b) - dot3(&u.b, &s.b_star);
    let c = ps.pp_speed(&e, eos);
    let rhs = ps.v[i] * t47 + s.v_star[i] * bterm + c * tn;
    let rhs_mag = (ps.v[i] * t47).abs()
        + (s.v_star[i] * (0.5 * norm2_3(&u.b) + dot3(&u.b, &s.b_star).abs())).abs()
        + c * tn;
    Ok(Residual { value: rhs - lhs, scale: lhs_mag + rhs_mag })
}

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

fn heavy(rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    if rng.gen_bool(0.5) {
        z
    } else {
        10.0 * z
    }
}

/// A heavy-tailed sample of the star arguments.
pub fn sample_star(rng: &mut ChaCha8Rng) -> StarArgs {
    StarArgs::new(
        [heavy(rng), heavy(rng), heavy(rng)],
        [heavy(rng), heavy(rng), heavy(rng)],
    )
}

/// A random admissible state spanning several orders of magnitude in
/// density and pressure.
pub fn random_state(rng: &mut ChaCha8Rng, eos: &Eos) -> ConservedState {
    let rho = 10f64.powf(rng.gen_range(-3.0..2.0));
    let p = 10f64.powf(rng.gen_range(-3.0..2.0));
    let v = [heavy(rng), heavy(rng), heavy(rng)];
    let b = [heavy(rng), heavy(rng), heavy(rng)];
    prim_to_cons(&PrimitiveState::new(rho, v, p, b), eos)
}

/// Edge measures and outward unit normals of a random convex polygon with
/// `n` edges, listed counter-clockwise.
pub fn random_convex_polygon(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<Direction>) {
    assert!(n >= 3);
    let mut angles: Vec<f64>;
    loop {
        angles = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ok = true;
        for k in 0..n {
            let next = if k + 1 < n { angles[k + 1] } else { angles[0] + std::f64::consts::TAU };
            if next - angles[k] < 0.05 {
                ok = false;
            }
        }
        if ok {
            break;
        }
    }
    let (sx, sy) = (10f64.powf(rng.gen_range(-0.7..0.7)), 10f64.powf(rng.gen_range(-0.7..0.7)));
    let pts: Vec<[f64; 2]> = angles.iter().map(|a| [sx * a.cos(), sy * a.sin()]).collect();
    let mut s = Vec::with_capacity(n);
    let mut xis = Vec::with_capacity(n);
    for k in 0..n {
        let p = pts[k];
        let q = pts[(k + 1) % n];
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let len = (dx * dx + dy * dy).sqrt();
        s.push(len);
        xis.push(Direction::new(&[dy / len, -dx / len]).expect("unit normal"));
    }
    (s, xis)
}

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

/// Aggregate result of one randomised check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub name: &'static str,
    pub trials: usize,
    /// Minimum scaled residual over all trials.
    pub min_residual: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.min_residual >= -self.tolerance
    }
}

const STAR_SAMPLES: usize = 8;

fn trial_rng(seed: u64, check: u64, trial: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(check.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ trial as u64);
    r
}

fn run_check<F>(name: &'static str, id: u64, seed: u64, trials: usize, tolerance: f64, f: F) -> CheckSummary
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let min_residual = (0..trials)
        .into_par_iter()
        .map(|t| f(&mut trial_rng(seed, id, t)))
        .reduce(|| f64::INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) });
    let min_residual = if min_residual.is_nan() { f64::NEG_INFINITY } else { min_residual };
    CheckSummary { name, trials, min_residual, tolerance, seed }
}

fn stars(rng: &mut ChaCha8Rng) -> Vec<StarArgs> {
    (0..STAR_SAMPLES).map(|_| sample_star(rng)).collect()
}

fn random_multistate(rng: &mut ChaCha8Rng, eos: &Eos, ddf: bool) -> MultiStateConfig {
    let n = rng.gen_range(2..=6);
    let (s, xis) = if n == 2 {
        let d = Direction::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
        (vec![1.0, 1.0], vec![d, d.neg()])
    } else {
        random_convex_polygon(rng, n)
    };
    let mut states: Vec<ConservedState> = (0..n).map(|_| random_state(rng, eos)).collect();
    if ddf {
        // Equal normal components: B_j = B_c + t_j tau_j + b3_j e3.
        let bc = [heavy(rng), heavy(rng), 0.0];
        for (j, u) in states.iter_mut().enumerate() {
            let eint = u.internal_energy_unchecked();
            let xi = xis[j].xi();
            let t = heavy(rng);
            u.b = [bc[0] - t * xi[1], bc[1] + t * xi[0], heavy(rng)];
            u.e = eint + 0.5 * (norm2_3(&u.m) / u.rho + norm2_3(&u.b));
        }
    }
    let alphas = multi_state_alpha_hat(&s, &xis, &states, eos).expect("admissible states");
    // A quarter of the trials move strictly inside the admissible speed range.
    let extra = if rng.gen_bool(0.25) { rng.gen_range(0.0..2.0) } else { 0.0 };
    let alphas = alphas.iter().map(|a| a + extra * a.abs()).collect();
    MultiStateConfig { s, xis, states, alphas }
}

/// Runs every randomised check with `trials` trials each.
pub fn run_verification_suite(seed: u64, trials: usize, eos: &Eos) -> Vec<CheckSummary> {
    if trials == 0 {
        return Vec::new();
    }
    let tol = 1e-12;
    let mut out = Vec::new();

    out.push(run_check("multi_state_inequality", 1, seed, trials, tol, |rng| {
        let cfg = random_multistate(rng, eos, false);
        let samples = stars(rng);
        multi_state_min_residual(&cfg, &samples, eos).map(|r| r.scaled()).unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("multi_state_ddf_closure", 2, seed, trials, tol, |rng| {
        let cfg = random_multistate(rng, eos, true);
        match multi_state_average_with_scale(&cfg, eos) {
            Ok((u, mag)) => {
                if !(u[0] > 0.0) {
                    return -1.0;
                }
                let eint = ConservedState::from_array(&u).internal_energy_unchecked();
                eint / mag[7].max(1.0)
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }));

    out.push(run_check("two_state_difference", 3, seed, trials, tol, |rng| {
        let (a, b) = (random_state(rng, eos), random_state(rng, eos));
        let dir = Direction::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
        let al = flux::alpha_r(&a, &b, &dir, eos).unwrap();
        let at = flux::alpha_l(&b, &a, &dir, eos).unwrap();
        let samples = stars(rng);
        two_state_checks(&a, &b, &dir, al, at, TwoStateMode::Difference, &samples, eos)
            .map(|r| r.min_residual.scaled())
            .unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("two_state_sum", 4, seed, trials, tol, |rng| {
        let (a, b) = (random_state(rng, eos), random_state(rng, eos));
        let dir = Direction::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
        let al = flux::alpha_star(&a, &b, &dir, eos).unwrap();
        let at = flux::alpha_star(&b, &a, &dir, eos).unwrap();
        let samples = stars(rng);
        two_state_checks(&a, &b, &dir, al, at, TwoStateMode::Sum, &samples, eos)
            .map(|r| r.min_residual.scaled())
            .unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("hll_intermediate_state", 5, seed, trials, tol, |rng| {
        let (a, b) = (random_state(rng, eos), random_state(rng, eos));
        let dir = Direction::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
        let ws = flux::pp_wave_speeds(&a, &b, &dir, eos).unwrap();
        // H is the difference-form average with alpha = sigma^+, alpha~ = sigma^-,
        // taken from the right state's side.
        let samples = stars(rng);
        two_state_checks(&b, &a, &dir, ws.sigma_plus, ws.sigma_minus, TwoStateMode::Difference, &samples, eos)
            .map(|r| r.min_residual.scaled())
            .unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("source_identity", 6, seed, trials, tol, |rng| {
        let u = random_state(rng, eos);
        let s = sample_star(rng);
        source_lemma_checks(&u, &s, heavy(rng)).map(|r| r.identity.scaled()).unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("source_strict_inequality", 7, seed, trials, tol, |rng| {
        let u = random_state(rng, eos);
        let s = sample_star(rng);
        source_lemma_checks(&u, &s, heavy(rng)).map(|r| r.strict.scaled()).unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("source_bound", 8, seed, trials, tol, |rng| {
        let u = random_state(rng, eos);
        let s = sample_star(rng);
        source_lemma_checks(&u, &s, heavy(rng)).map(|r| r.bound.scaled()).unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("pairing_inequality", 9, seed, trials, tol, |rng| {
        let (a, b) = (random_state(rng, eos), random_state(rng, eos));
        let s = sample_star(rng);
        let xi = [heavy(rng), heavy(rng), 0.0];
        let delta = if rng.gen_bool(0.5) {
            a.rho.sqrt() / (a.rho.sqrt() + b.rho.sqrt())
        } else {
            rng.gen_range(-1.0..2.0)
        };
        pairing_lemma_check(&a, &b, &s, &xi, delta).map(|r| r.scaled()).unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("flux_functional_bound", 10, seed, trials, tol, |rng| {
        let u = random_state(rng, eos);
        let s = sample_star(rng);
        let i = rng.gen_range(0..3);
        flux_functional_check(&u, i, &s, eos).map(|r| r.scaled()).unwrap_or(f64::NEG_INFINITY)
    }));

    out.push(run_check("matrix_a_spectral_radius", 11, seed, trials, 1e-10, |rng| {
        let u = random_state(rng, eos);
        let i = rng.gen_range(0..3);
        match matrix_a_check(&u, i, eos) {
            Ok((r, c)) => -(r - c).abs() / (1.0 + c),
            Err(_) => f64::NEG_INFINITY,
        }
    }));

    out.push(run_check("two_state_reduction", 12, seed, trials, 1e-13, |rng| {
        let (a, b) = (random_state(rng, eos), random_state(rng, eos));
        let dir = Direction::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
        let hat = multi_state_alpha_hat(&[1.0, 1.0], &[dir, dir.neg()], &[a, b], eos).unwrap();
        let ar = flux::alpha_r(&a, &b, &dir, eos).unwrap();
        let al = flux::alpha_l(&b, &a, &dir, eos).unwrap();
        let e1 = (hat[0] - ar).abs() / ar.abs().max(1.0);
        let e2 = (hat[1] + al).abs() / al.abs().max(1.0);
        -e1.max(e2)
    }));

    out
}

/// Plain-text summary of a suite run.
pub fn format_report(rows: &[CheckSummary]) -> String {
    let mut s = String::new();
    for r in rows {
        s.push_str(&format!(
            "{:<28} trials={:<7} min_residual={:+.3e} tol={:.0e} seed={} {}\n",
            r.name,
            r.trials,
            r.min_residual,
            r.tolerance,
            r.seed,
            if r.passed() { "PASS" } else { "FAIL" }
        ));
    }
    s
}

/// CSV twin of [`format_report`].
pub fn report_csv(rows: &[CheckSummary]) -> String {
    let mut s = String::from("check,trials,min_residual,seed,tolerance,status\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{:.17e},{},{:e},{}\n",
            r.name,
            r.trials,
            r.min_residual,
            r.seed,
            r.tolerance,
            if r.passed() { "pass" } else { "fail" }
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eos() -> Eos {
        Eos::ideal(1.4).unwrap()
    }

    fn static_state(b: Vec3) -> ConservedState {
        prim_to_cons(&PrimitiveState::new(1.0, [0.0; 3], 1.0, b), &eos())
    }

    #[test]
    fn alpha_hat_equal_static_states() {
        let u = static_state([0.3, 0.4, 0.0]);
        let d = Direction::axis(0, 2);
        let hat = multi_state_alpha_hat(&[1.0, 1.0], &[d, d.neg()], &[u, u], &eos()).unwrap();
        let c = flux::pp_speed(&u, &d, &eos()).unwrap();
        assert_relative_eq!(hat[0], c, max_relative = 1e-15);
        assert_relative_eq!(hat[1], c, max_relative = 1e-15);
    }

    #[test]
    fn alpha_hat_hexagon_symmetry() {
        let u = static_state([0.0, 0.0, 0.7]);
        let xis: Vec<Direction> = (0..6).map(|k| Direction::from_angle(k as f64 * std::f64::consts::PI / 3.0)).collect();
        let hat = multi_state_alpha_hat(&[1.0; 6], &xis, &[u; 6], &eos()).unwrap();
        for h in &hat {
            assert_relative_eq!(*h, hat[0], max_relative = 1e-14);
        }
    }

    #[test]
    fn two_state_reduction_matches_alpha_r_l() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (a, b) = (random_state(&mut rng, &eos()), random_state(&mut rng, &eos()));
            let d = Direction::from_angle(rng.gen_range(0.0..6.3));
            let hat = multi_state_alpha_hat(&[1.0, 1.0], &[d, d.neg()], &[a, b], &eos()).unwrap();
            let ar = flux::alpha_r(&a, &b, &d, &eos()).unwrap();
            let al = flux::alpha_l(&b, &a, &d, &eos()).unwrap();
            assert!((hat[0] - ar).abs() <= 1e-13 * ar.abs().max(1.0));
            assert!((hat[1] + al).abs() <= 1e-13 * al.abs().max(1.0));
        }
    }

    #[test]
    fn average_of_identical_states_is_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_state(&mut rng, &eos());
        let (s, xis) = random_convex_polygon(&mut rng, 5);
        let states = vec![u; 5];
        let alphas = multi_state_alpha_hat(&s, &xis, &states, &eos()).unwrap();
        let cfg = MultiStateConfig { s, xis, states, alphas };
        let ub = multi_state_average(&cfg, &eos()).unwrap();
        let (a, b) = (ub.to_array(), u.to_array());
        let sc = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for k in 0..8 {
            assert!((a[k] - b[k]).abs() <= 1e-11 * sc, "{k}: {} vs {}", a[k], b[k]);
        }
        let r = multi_state_residual(&cfg, &StarArgs::new(u.velocity(), u.b), &eos()).unwrap();
        assert!(r.value > 0.0);
    }

    #[test]
    fn n2_average_matches_hll_intermediate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (um, up) = (random_state(&mut rng, &eos()), random_state(&mut rng, &eos()));
            let d = Direction::from_angle(rng.gen_range(0.0..6.3));
            let ws = flux::pp_wave_speeds(&um, &up, &d, &eos()).unwrap();
            let h = flux::hll_intermediate(&um, &up, &d, &ws, &eos()).unwrap();
            // H = average with U1 = U+, xi1 = xi, alpha1 = sigma^+ and
            // U2 = U-, xi2 = -xi, alpha2 = -sigma^-.
            let cfg = MultiStateConfig {
                s: vec![1.0, 1.0],
                xis: vec![d, d.neg()],
                states: vec![up, um],
                alphas: vec![ws.sigma_plus, -ws.sigma_minus],
            };
            let ub = multi_state_average(&cfg, &eos()).unwrap();
            let (a, b) = (ub.to_array(), h.to_array());
            let sc = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            for k in 0..8 {
                assert!((a[k] - b[k]).abs() <= 1e-12 * sc);
            }
        }
    }

    #[test]
    fn polygon_normals_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 3..=6 {
            for _ in 0..100 {
                let (s, xis) = random_convex_polygon(&mut rng, n);
                let cfg = MultiStateConfig { s, xis, states: vec![ConservedState::default(); n], alphas: vec![] };
                cfg.validate().unwrap();
            }
        }
    }

    #[test]
    fn minimizer_is_stationary() {
        let u = [2.0, 0.3, -0.4, 0.1, 1.0, 2.0, -1.0, 9.0];
        let kappa = 0.3;
        let s = kappa_minimizer(&u, kappa).unwrap();
        let mag = u.map(f64::abs);
        let f0 = kappa_functional(&u, &mag, kappa, &s).value;
        for k in 0..6 {
            let mut t = s;
            if k < 3 {
                t.v_star[k] += 1e-4;
            } else {
                t.b_star[k - 3] += 1e-4;
            }
            assert!(kappa_functional(&u, &mag, kappa, &t).value >= f0);
        }
        assert!(kappa_minimizer(&u, 2.0).is_none());
    }

    #[test]
    fn matrix_a_examples() {
        let u = static_state([0.0; 3]);
        let (r, c) = matrix_a_check(&u, 0, &eos()).unwrap();
        let cs = flux::cs_speed(&u, &eos()).unwrap();
        assert_relative_eq!(r, cs, max_relative = 1e-14);
        assert_relative_eq!(c, cs, max_relative = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let u = random_state(&mut rng, &eos());
            for i in 0..3 {
                let (r, c) = matrix_a_check(&u, i, &eos()).unwrap();
                assert!((r - c).abs() <= 1e-10 * (1.0 + c), "{r} vs {c}");
            }
        }
        // rho -> 4 rho at fixed p and B.
        let w = PrimitiveState::new(1.0, [0.0; 3], 2.0, [0.5, 1.0, -0.3]);
        let w4 = PrimitiveState { rho: 4.0, ..w };
        let (r1, c1) = matrix_a_check(&prim_to_cons(&w, &eos()), 1, &eos()).unwrap();
        let (r4, c4) = matrix_a_check(&prim_to_cons(&w4, &eos()), 1, &eos()).unwrap();
        assert_relative_eq!(r1 / r4, c1 / c4, max_relative = 1e-10);
        assert_relative_eq!(r1 / r4, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn source_lemma_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_state(&mut rng, &eos());
        let s = StarArgs::new(u.velocity(), u.b);
        let r = source_lemma_checks(&u, &s, 0.0).unwrap();
        assert!(r.identity.scaled() >= -1e-14);
        assert_eq!(r.bound.value, 0.0);
        assert!(r.strict.value > 0.0);
    }

    #[test]
    fn pairing_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_state(&mut rng, &eos());
        let mut b = random_state(&mut rng, &eos());
        let eint = b.internal_energy_unchecked();
        b.b = a.b;
        b.e = eint + 0.5 * (norm2_3(&b.m) / b.rho + norm2_3(&b.b));
        assert_eq!(pairing_f(&a, &b, 0.3), 0.0);
        let s = sample_star(&mut rng);
        assert!(pairing_lemma_check(&a, &b, &s, &[1.0, 0.0, 0.0], 0.3).unwrap().scaled() >= -1e-12);
        let zero = StarArgs::default();
        assert!(pairing_lemma_check(&a, &b, &zero, &[0.6, 0.8, 0.0], 0.5).unwrap().scaled() >= -1e-12);
    }

    #[test]
    fn mismatched_normal_field_closure_is_only_recorded() {
        // Large speeds with a normal-field jump: the report is produced
        // whatever the closure outcome.
        let a = static_state([1.0, 0.0, 0.0]);
        let b = static_state([-1.0, 0.0, 0.0]);
        let d = Direction::axis(0, 1);
        let r = two_state_checks(&a, &b, &d, 1e3, -1e3, TwoStateMode::Difference, &[], &eos()).unwrap();
        assert!(r.density_positive);
        assert!(r.min_residual.scaled() >= -1e-12);
    }

    #[test]
    fn suite_small_run_passes_and_is_deterministic() {
        let a = run_verification_suite(42, 300, &eos());
        let b = run_verification_suite(42, 300, &eos());
        assert_eq!(a, b);
        for r in &a {
            assert!(r.passed(), "{}", format_report(&a));
        }
        assert!(run_verification_suite(1, 0, &eos()).is_empty());
        let csv = report_csv(&a);
        assert!(csv.starts_with("check,trials,min_residual,seed"));
        assert_eq!(csv.lines().count(), a.len() + 1);
    }
}
