//! Physical MHD fluxes, rotated frames, positivity-preserving wave-speed
//! estimates, the HLL flux with its intermediate state, and the
//! Godunov-Powell source vector.

use crate::error::{MhdError, Result};
use crate::state::{dot3, norm2_3, ConservedState, Eos, Vec3, Vector8, NVAR};

/// A unit normal. Only the first `dim` components may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    xi: Vec3,
    dim: usize,
}

impl Direction {
    /// Validates that `xi` (of length 1, 2 or 3) has unit length.
    pub fn new(xi: &[f64]) -> Result<Self> {
        if xi.is_empty() || xi.len() > 3 {
            return Err(MhdError::InvalidInput(format!(
                "direction must have 1 to 3 components, got {}",
                xi.len()
            )));
        }
        let mut v = [0.0; 3];
        v[..xi.len()].copy_from_slice(xi);
        let n = norm2_3(&v).sqrt();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(MhdError::InvalidInput(format!("direction has length {n}")));
        }
        Ok(Self { xi: v, dim: xi.len() })
    }

    /// Normalises an arbitrary nonzero vector.
    pub fn normalized(xi: &[f64]) -> Result<Self> {
        let n = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(MhdError::InvalidInput("zero or non-finite direction".into()));
        }
        let scaled: Vec<f64> = xi.iter().map(|x| x / n).collect();
        let mut d = Self::new(&scaled)?;
        d.dim = xi.len();
        Ok(d)
    }

    /// Unit vector along axis `i` (0-based) in a `dim`-dimensional space.
    pub fn axis(i: usize, dim: usize) -> Self {
        assert!(i < dim && dim <= 3);
        let mut xi = [0.0; 3];
        xi[i] = 1.0;
        Self { xi, dim }
    }

    /// `(cos phi, sin phi)` in two dimensions.
    pub fn from_angle(phi: f64) -> Self {
        Self { xi: [phi.cos(), phi.sin(), 0.0], dim: 2 }
    }

    #[inline]
    pub fn xi(&self) -> &Vec3 {
        &self.xi
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn neg(&self) -> Self {
        Self { xi: [-self.xi[0], -self.xi[1], -self.xi[2]], dim: self.dim }
    }

    #[inline]
    pub fn dot(&self, v: &Vec3) -> f64 {
        self.xi[0] * v[0] + self.xi[1] * v[1] + self.xi[2] * v[2]
    }
}

/// The block rotation `diag{1, T, T, 1}` aligning a direction with `e1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationFrame {
    pub t_hat: [[f64; 3]; 3],
}

impl RotationFrame {
    pub fn new(dir: &Direction) -> Self {
        let xi = dir.xi();
        let t_hat = match dir.dim() {
            1 => [[xi[0], 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            2 => {
                let (c, s) = (xi[0], xi[1]);
                [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
            }
            _ => {
                let sin_phi = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                let cos_phi = xi[2];
                let (cv, sv) = if sin_phi > 0.0 {
                    (xi[0] / sin_phi, xi[1] / sin_phi)
                } else {
                    (1.0, 0.0)
                };
                [
                    [sin_phi * cv, sin_phi * sv, cos_phi],
                    [-sv, cv, 0.0],
                    [-cos_phi * cv, -cos_phi * sv, sin_phi],
                ]
            }
        };
        Self { t_hat }
    }

    fn rot3(m: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
        [dot3(&m[0], v), dot3(&m[1], v), dot3(&m[2], v)]
    }

    fn rot3_t(m: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    /// `T u`.
    pub fn apply(&self, u: &Vector8) -> Vector8 {
        let m = Self::rot3(&self.t_hat, &[u[1], u[2], u[3]]);
        let b = Self::rot3(&self.t_hat, &[u[4], u[5], u[6]]);
        [u[0], m[0], m[1], m[2], b[0], b[1], b[2], u[7]]
    }

    /// `T^{-1} u = T^T u`.
    pub fn apply_inverse(&self, u: &Vector8) -> Vector8 {
        let m = Self::rot3_t(&self.t_hat, &[u[1], u[2], u[3]]);
        let b = Self::rot3_t(&self.t_hat, &[u[4], u[5], u[6]]);
        [u[0], m[0], m[1], m[2], b[0], b[1], b[2], u[7]]
    }

    /// Dense 8x8 matrix form.
    pub fn matrix(&self) -> [[f64; 8]; 8] {
        let mut t = [[0.0; 8]; 8];
        t[0][0] = 1.0;
        t[7][7] = 1.0;
        for i in 0..3 {
            for j in 0..3 {
                t[1 + i][1 + j] = self.t_hat[i][j];
                t[4 + i][4 + j] = self.t_hat[i][j];
            }
        }
        t
    }
}

/// Derived pointwise quantities of an admissible state, computed once and
/// shared by the flux and wave-speed kernels.
#[derive(Debug, Clone, Copy)]
pub struct PointState {
    pub u: ConservedState,
    pub v: Vec3,
    pub p: f64,
    pub eint: f64,
    pub sqrt_rho: f64,
}

impl PointState {
    /// No admissibility check; use [`PointState::checked`] at API borders.
    #[inline]
    pub fn new(u: &ConservedState, eos: &Eos) -> Self {
        let eint = u.internal_energy_unchecked();
        Self {
            u: *u,
            v: u.velocity(),
            p: eos.pressure_from_density(u.rho, eint),
            eint,
            sqrt_rho: u.rho.sqrt(),
        }
    }

    pub fn checked(u: &ConservedState, eos: &Eos) -> Result<Self> {
        let ps = Self::new(u, eos);
        if !(u.rho > 0.0) || !(ps.eint > 0.0) {
            return Err(MhdError::Inadmissible { rho: u.rho, internal_energy: ps.eint });
        }
        Ok(ps)
    }

    #[inline]
    pub fn from_array(a: &Vector8, eos: &Eos) -> Self {
        Self::new(&ConservedState::from_array(a), eos)
    }

    /// `<xi, F(U)>`.
    #[inline]
    pub fn flux(&self, xi: &Vec3) -> Vector8 {
        let u = &self.u;
        let v = &self.v;
        let b = &u.b;
        let vn = xi[0] * v[0] + xi[1] * v[1] + xi[2] * v[2];
        let bn = xi[0] * b[0] + xi[1] * b[1] + xi[2] * b[2];
        let ptot = self.p + 0.5 * norm2_3(b);
        let vb = dot3(v, b);
        [
            u.rho * vn,
            u.m[0] * vn - b[0] * bn + ptot * xi[0],
            u.m[1] * vn - b[1] * bn + ptot * xi[1],
            u.m[2] * vn - b[2] * bn + ptot * xi[2],
            vn * b[0] - bn * v[0],
            vn * b[1] - bn * v[1],
            vn * b[2] - bn * v[2],
            vn * (u.e + ptot) - bn * vb,
        ]
    }

    /// `C_s = p / (rho sqrt(2e))`.
    #[inline]
    pub fn cs(&self, eos: &Eos) -> f64 {
        match eos {
            Eos::Ideal { gamma } => ((gamma - 1.0) * self.p / (2.0 * self.u.rho)).sqrt(),
            Eos::General(_) => {
                let e = self.eint / self.u.rho;
                self.p / (self.u.rho * (2.0 * e).sqrt())
            }
        }
    }

    /// The positivity speed `C(U; xi)`.
    #[inline]
    pub fn pp_speed(&self, xi: &Vec3, eos: &Eos) -> f64 {
        let cs = self.cs(eos);
        let cs2 = cs * cs;
        let rho = self.u.rho;
        let b = &self.u.b;
        let bn = xi[0] * b[0] + xi[1] * b[1] + xi[2] * b[2];
        let s = cs2 + norm2_3(b) / rho;
        let rad = s * s - 4.0 * cs2 * bn * bn / rho;
        (0.5 * (s + clamp_radicand(rad, s * s).sqrt())).sqrt()
    }

    /// Fast magnetosonic speed for the ideal gas law.
    #[inline]
    pub fn fast_speed(&self, xi: &Vec3, gamma: f64) -> f64 {
        let rho = self.u.rho;
        let a2 = gamma * self.p / rho;
        let b = &self.u.b;
        let bn = xi[0] * b[0] + xi[1] * b[1] + xi[2] * b[2];
        let s = a2 + norm2_3(b) / rho;
        let rad = s * s - 4.0 * a2 * bn * bn / rho;
        (0.5 * (s + clamp_radicand(rad, s * s).sqrt())).sqrt()
    }
}

#[inline]
fn clamp_radicand(rad: f64, scale: f64) -> f64 {
    if rad >= 0.0 {
        rad
    } else {
        // Cancellation at degenerate states; the exact value is >= 0.
        debug_assert!(rad >= -1e-12 * scale, "radicand {rad} at scale {scale}");
        0.0
    }
}

#[inline]
fn roe_normal_velocity(a: &PointState, b: &PointState, xi: &Vec3) -> f64 {
    let va = xi[0] * a.v[0] + xi[1] * a.v[1] + xi[2] * a.v[2];
    let vb = xi[0] * b.v[0] + xi[1] * b.v[1] + xi[2] * b.v[2];
    (a.sqrt_rho * va + b.sqrt_rho * vb) / (a.sqrt_rho + b.sqrt_rho)
}

#[inline]
fn b_jump(a: &PointState, b: &PointState) -> f64 {
    let d = [a.u.b[0] - b.u.b[0], a.u.b[1] - b.u.b[1], a.u.b[2] - b.u.b[2]];
    norm2_3(&d).sqrt() / (a.sqrt_rho + b.sqrt_rho)
}

impl PointState {
    #[inline]
    pub fn alpha_r(&self, other: &PointState, xi: &Vec3, eos: &Eos) -> f64 {
        let vn = xi[0] * self.v[0] + xi[1] * self.v[1] + xi[2] * self.v[2];
        vn.max(roe_normal_velocity(self, other, xi)) + self.pp_speed(xi, eos) + b_jump(self, other)
    }

    #[inline]
    pub fn alpha_l(&self, other: &PointState, xi: &Vec3, eos: &Eos) -> f64 {
        let vn = xi[0] * self.v[0] + xi[1] * self.v[1] + xi[2] * self.v[2];
        vn.min(roe_normal_velocity(self, other, xi)) - self.pp_speed(xi, eos) - b_jump(self, other)
    }

    #[inline]
    pub fn alpha_star(&self, other: &PointState, xi: &Vec3, eos: &Eos) -> f64 {
        let vn = xi[0] * self.v[0] + xi[1] * self.v[1] + xi[2] * self.v[2];
        vn.abs().max(roe_normal_velocity(self, other, xi).abs())
            + self.pp_speed(xi, eos)
            + b_jump(self, other)
    }
}

/// Interface speed pair with the derived `sigma^- <= 0 <= sigma^+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpeeds {
    pub sigma_l: f64,
    pub sigma_r: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
}

impl WaveSpeeds {
    pub fn new(sigma_l: f64, sigma_r: f64) -> Result<Self> {
        if !(sigma_r > sigma_l) {
            return Err(MhdError::InvalidInput(format!(
                "wave speeds must satisfy sigma_r > sigma_l, got ({sigma_l}, {sigma_r})"
            )));
        }
        Ok(Self::new_unchecked(sigma_l, sigma_r))
    }

    #[inline]
    pub fn new_unchecked(sigma_l: f64, sigma_r: f64) -> Self {
        Self { sigma_l, sigma_r, sigma_minus: sigma_l.min(0.0), sigma_plus: sigma_r.max(0.0) }
    }

    /// Speeds seen from the other side of the interface (normal reversed).
    #[inline]
    pub fn reversed(&self) -> Self {
        Self::new_unchecked(-self.sigma_r, -self.sigma_l)
    }

    /// Upwind penalty weight `sigma^- / (sigma^+ - sigma^-)`.
    #[inline]
    pub fn eta(&self) -> f64 {
        self.sigma_minus / (self.sigma_plus - self.sigma_minus)
    }
}

/// Wave-speed choice for the HLL-type numerical flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxMode {
    /// HLL with the positivity-preserving speed choice.
    Hll,
    /// Local Lax-Friedrichs.
    LocalLf,
    /// Global Lax-Friedrichs: mesh-wide maximum of the local LF speed.
    GlobalLf,
}

impl std::str::FromStr for FluxMode {
    type Err = MhdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hll" => Ok(FluxMode::Hll),
            "local_lf" | "llf" => Ok(FluxMode::LocalLf),
            "global_lf" | "glf" => Ok(FluxMode::GlobalLf),
            _ => Err(MhdError::InvalidInput(format!("unknown flux mode '{s}'"))),
        }
    }
}

/// HLL positivity speeds from precomputed point states (requires the ideal
/// gas law for the Davis part).
#[inline]
pub fn pp_speeds_points(um: &PointState, up: &PointState, xi: &Vec3, eos: &Eos, gamma: f64) -> WaveSpeeds {
    let cfm = um.fast_speed(xi, gamma);
    let cfp = up.fast_speed(xi, gamma);
    let vm = xi[0] * um.v[0] + xi[1] * um.v[1] + xi[2] * um.v[2];
    let vp = xi[0] * up.v[0] + xi[1] * up.v[1] + xi[2] * up.v[2];
    let std_l = (vm - cfm).min(vp - cfp);
    let std_r = (vm + cfm).max(vp + cfp);
    let sl = um.alpha_l(up, xi, eos).min(std_l);
    let sr = up.alpha_r(um, xi, eos).max(std_r);
    WaveSpeeds::new_unchecked(sl, sr)
}

/// Local Lax-Friedrichs speed `max{alpha*(U-,U+), alpha*(U+,U-), sigma_std}`.
#[inline]
pub fn llf_speed_points(um: &PointState, up: &PointState, xi: &Vec3, eos: &Eos, gamma: f64) -> f64 {
    let vm = xi[0] * um.v[0] + xi[1] * um.v[1] + xi[2] * um.v[2];
    let vp = xi[0] * up.v[0] + xi[1] * up.v[1] + xi[2] * up.v[2];
    let std = (vm.abs() + um.fast_speed(xi, gamma)).max(vp.abs() + up.fast_speed(xi, gamma));
    um.alpha_star(up, xi, eos).max(up.alpha_star(um, xi, eos)).max(std)
}

/// HLL flux in the branch-free `sigma^{+/-}` form, written so that equal
/// fluxes and `sigma^- = 0` reproduce `<xi, F(U-)>` exactly.
#[inline]
pub fn hll_flux_pm(fm: &Vector8, fp: &Vector8, um: &Vector8, up: &Vector8, ws: &WaveSpeeds) -> Vector8 {
    let sm = ws.sigma_minus;
    let sp = ws.sigma_plus;
    let inv = 1.0 / (sp - sm);
    let smp = sm * sp;
    let mut out = [0.0; NVAR];
    for i in 0..NVAR {
        out[i] = fm[i] + (sm * (fm[i] - fp[i]) + smp * (up[i] - um[i])) * inv;
    }
    out
}

fn require_ideal(eos: &Eos) -> Result<f64> {
    eos.gamma()
        .ok_or_else(|| MhdError::Unsupported("fast magnetosonic speed needs the ideal gas law".into()))
}

/// `F_i(U)` for axis `i` (0-based) in three space dimensions.
pub fn physical_flux(u: &ConservedState, i: usize, eos: &Eos) -> Result<Vector8> {
    if !(u.rho > 0.0) {
        return Err(MhdError::NonPositiveDensity { rho: u.rho });
    }
    if i > 2 {
        return Err(MhdError::InvalidInput(format!("axis index {i} out of range")));
    }
    let mut xi = [0.0; 3];
    xi[i] = 1.0;
    Ok(PointState::new(u, eos).flux(&xi))
}

/// `<xi, F(U)>`.
pub fn directional_flux(u: &ConservedState, dir: &Direction, eos: &Eos) -> Result<Vector8> {
    if !(u.rho > 0.0) {
        return Err(MhdError::NonPositiveDensity { rho: u.rho });
    }
    Ok(PointState::new(u, eos).flux(dir.xi()))
}

pub fn cs_speed(u: &ConservedState, eos: &Eos) -> Result<f64> {
    Ok(PointState::checked(u, eos)?.cs(eos))
}

pub fn pp_speed(u: &ConservedState, dir: &Direction, eos: &Eos) -> Result<f64> {
    Ok(PointState::checked(u, eos)?.pp_speed(dir.xi(), eos))
}

pub fn alpha_r(u: &ConservedState, ut: &ConservedState, dir: &Direction, eos: &Eos) -> Result<f64> {
    let a = PointState::checked(u, eos)?;
    let b = PointState::checked(ut, eos)?;
    Ok(a.alpha_r(&b, dir.xi(), eos))
}

pub fn alpha_l(u: &ConservedState, ut: &ConservedState, dir: &Direction, eos: &Eos) -> Result<f64> {
    let a = PointState::checked(u, eos)?;
    let b = PointState::checked(ut, eos)?;
    Ok(a.alpha_l(&b, dir.xi(), eos))
}

pub fn alpha_star(u: &ConservedState, ut: &ConservedState, dir: &Direction, eos: &Eos) -> Result<f64> {
    let a = PointState::checked(u, eos)?;
    let b = PointState::checked(ut, eos)?;
    Ok(a.alpha_star(&b, dir.xi(), eos))
}

/// `(min lambda_1, max lambda_8)` over the two states.
pub fn davis_speeds(um: &ConservedState, up: &ConservedState, dir: &Direction, eos: &Eos) -> Result<(f64, f64)> {
    let gamma = require_ideal(eos)?;
    let a = PointState::checked(um, eos)?;
    let b = PointState::checked(up, eos)?;
    let xi = dir.xi();
    let (va, vb) = (dir.dot(&a.v), dir.dot(&b.v));
    let (ca, cb) = (a.fast_speed(xi, gamma), b.fast_speed(xi, gamma));
    Ok(((va - ca).min(vb - cb), (va + ca).max(vb + cb)))
}

/// Positivity-preserving HLL speeds.
pub fn pp_wave_speeds(um: &ConservedState, up: &ConservedState, dir: &Direction, eos: &Eos) -> Result<WaveSpeeds> {
    let gamma = require_ideal(eos)?;
    let a = PointState::checked(um, eos)?;
    let b = PointState::checked(up, eos)?;
    Ok(pp_speeds_points(&a, &b, dir.xi(), eos, gamma))
}

/// Symmetric local Lax-Friedrichs speeds.
pub fn local_lf_wave_speeds(um: &ConservedState, up: &ConservedState, dir: &Direction, eos: &Eos) -> Result<WaveSpeeds> {
    let gamma = require_ideal(eos)?;
    let a = PointState::checked(um, eos)?;
    let b = PointState::checked(up, eos)?;
    let s = llf_speed_points(&a, &b, dir.xi(), eos, gamma);
    Ok(WaveSpeeds::new_unchecked(-s, s))
}

/// The three-branch HLL flux.
pub fn hll_flux(um: &ConservedState, up: &ConservedState, dir: &Direction, ws: &WaveSpeeds, eos: &Eos) -> Result<Vector8> {
    if !(ws.sigma_r > ws.sigma_l) {
        return Err(MhdError::InvalidInput("HLL flux needs sigma_r > sigma_l".into()));
    }
    let fm = directional_flux(um, dir, eos)?;
    let fp = directional_flux(up, dir, eos)?;
    if ws.sigma_l >= 0.0 {
        return Ok(fm);
    }
    if ws.sigma_r <= 0.0 {
        return Ok(fp);
    }
    Ok(hll_flux_pm(&fm, &fp, &um.to_array(), &up.to_array(), ws))
}

/// The HLL intermediate state `H(U-, U+; xi)`.
pub fn hll_intermediate(um: &ConservedState, up: &ConservedState, dir: &Direction, ws: &WaveSpeeds, eos: &Eos) -> Result<ConservedState> {
    let (sm, sp) = (ws.sigma_minus, ws.sigma_plus);
    if !(sp > sm) {
        return Err(MhdError::InvalidInput("sigma^+ must exceed sigma^-".into()));
    }
    let fm = directional_flux(um, dir, eos)?;
    let fp = directional_flux(up, dir, eos)?;
    let (a, b) = (um.to_array(), up.to_array());
    let mut h = [0.0; NVAR];
    for i in 0..NVAR {
        h[i] = (sp * b[i] - fp[i] - sm * a[i] + fm[i]) / (sp - sm);
    }
    Ok(ConservedState::from_array(&h))
}

/// Godunov-Powell source vector `S(U) = (0, B, v, v.B)`.
pub fn source_vector(u: &ConservedState) -> Result<Vector8> {
    if !(u.rho > 0.0) {
        return Err(MhdError::NonPositiveDensity { rho: u.rho });
    }
    Ok(source_vector_unchecked(u, &u.velocity()))
}

#[inline]
pub fn source_vector_unchecked(u: &ConservedState, v: &Vec3) -> Vector8 {
    let b = &u.b;
    [0.0, b[0], b[1], b[2], v[0], v[1], v[2], dot3(v, b)]
}
