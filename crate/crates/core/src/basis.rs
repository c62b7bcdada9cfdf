//! Quadrature rules, orthonormal modal bases, composite cell-average
//! decompositions and the locally divergence-free vector basis.
//!
//! Reference cells are `[-1/2, 1/2]` in 1D and `[-1/2, 1/2]^2` in 2D, and
//! quadrature weights sum to one so that they produce cell means directly.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{MhdError, Result};
use crate::mesh::{Mesh1D, RectMesh2D};
use crate::scheme::DgField;
use crate::state::{ConservedState, NVAR};

/// Legendre polynomial `P_n(x)` and its derivative on `[-1, 1]`.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    // P_n' from the three-term identity; the endpoints use the closed form.
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-14 {
        let s = if x > 0.0 { 1.0 } else if n % 2 == 0 { -1.0 } else { 1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, d)
}

/// A 1D rule on `[-1/2, 1/2]` with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted mean of `f` over the reference interval.
    pub fn mean<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// `q`-point Gauss-Legendre rule, exact to degree `2q - 1`.
pub fn gauss_rule(q: usize) -> Result<QuadRule> {
    if q == 0 {
        return Err(MhdError::Quadrature("Gauss rule needs at least one point".into()));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        nodes[i] = 0.5 * x;
        weights[i] = 1.0 / ((1.0 - x * x) * d * d);
    }
    symmetrize(&mut nodes, &mut weights);
    Ok(QuadRule { nodes, weights })
}

/// `l`-point Gauss-Lobatto rule, exact to degree `2l - 3`.
pub fn gauss_lobatto_rule(l: usize) -> Result<QuadRule> {
    if l < 2 {
        return Err(MhdError::Quadrature("Gauss-Lobatto rule needs at least two points".into()));
    }
    let n = l - 1;
    let nf = n as f64;
    let lf = l as f64;
    let mut nodes = vec![0.0; l];
    let mut weights = vec![0.0; l];
    for i in 0..l {
        let x = if i == 0 {
            -1.0
        } else if i == n {
            1.0
        } else {
            // Interior nodes are the roots of P_n'.
            let mut x = -(std::f64::consts::PI * i as f64 / nf).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dd = (2.0 * x * d - nf * (nf + 1.0) * p) / (1.0 - x * x);
                let dx = d / dd;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            x
        };
        let (p, _) = legendre(n, x);
        nodes[i] = 0.5 * x;
        weights[i] = 1.0 / (lf * (lf - 1.0) * p * p);
    }
    symmetrize(&mut nodes, &mut weights);
    Ok(QuadRule { nodes, weights })
}

fn symmetrize(nodes: &mut [f64], weights: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// Number of Gauss-Lobatto points used for degree `k`: `ceil((k + 3) / 2)`.
pub fn lobatto_points_for_degree(k: usize) -> usize {
    (k + 4) / 2
}

/// Orthonormal Legendre basis `sqrt(2a+1) P_a(2 xi)` on `[-1/2, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarBasis1D {
    pub k: usize,
}

impl ScalarBasis1D {
    pub fn new(k: usize) -> Self {
        Self { k }
    }

    pub fn nmodes(&self) -> usize {
        self.k + 1
    }

    pub fn eval(&self, xi: f64) -> Vec<f64> {
        (0..=self.k).map(|a| ((2 * a + 1) as f64).sqrt() * legendre(a, 2.0 * xi).0).collect()
    }

    /// Derivatives with respect to the reference coordinate.
    pub fn deriv(&self, xi: f64) -> Vec<f64> {
        (0..=self.k).map(|a| 2.0 * ((2 * a + 1) as f64).sqrt() * legendre(a, 2.0 * xi).1).collect()
    }
}

/// Total-degree orthonormal basis `phi_a(xi) phi_b(eta)`, `a + b <= k`, ordered
/// by total degree and then by decreasing `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarBasis2D {
    pub k: usize,
    pub modes: Vec<(usize, usize)>,
}

impl ScalarBasis2D {
    pub fn new(k: usize) -> Self {
        let mut modes = Vec::new();
        for d in 0..=k {
            for a in (0..=d).rev() {
                modes.push((a, d - a));
            }
        }
        Self { k, modes }
    }

    pub fn nmodes(&self) -> usize {
        self.modes.len()
    }

    pub fn eval(&self, xi: f64, eta: f64) -> Vec<f64> {
        let b = ScalarBasis1D::new(self.k);
        let (px, py) = (b.eval(xi), b.eval(eta));
        self.modes.iter().map(|&(a, c)| px[a] * py[c]).collect()
    }

    /// Reference-coordinate gradients `(d/dxi, d/deta)` of every mode.
    pub fn grad(&self, xi: f64, eta: f64) -> (Vec<f64>, Vec<f64>) {
        let b = ScalarBasis1D::new(self.k);
        let (px, py) = (b.eval(xi), b.eval(eta));
        let (dx, dy) = (b.deriv(xi), b.deriv(eta));
        (
            self.modes.iter().map(|&(a, c)| dx[a] * py[c]).collect(),
            self.modes.iter().map(|&(a, c)| px[a] * dy[c]).collect(),
        )
    }

    /// Index of mode `(a, b)`.
    pub fn index_of(&self, a: usize, b: usize) -> Option<usize> {
        self.modes.iter().position(|&m| m == (a, b))
    }
}

/// A boundary node of a composite rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub point: [f64; 2],
    pub weight: f64,
    pub edge: usize,
    pub q: usize,
}

/// Positive-weight rule writing the cell mean as a combination of edge Gauss
/// points and interior points, exact on polynomials of degree `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeQuad {
    pub boundary: Vec<BoundaryNode>,
    pub interior: Vec<([f64; 2], f64)>,
}

impl CompositeQuad {
    pub fn total_weight(&self) -> f64 {
        self.boundary.iter().map(|b| b.weight).sum::<f64>() + self.interior.iter().map(|i| i.1).sum::<f64>()
    }

    pub fn mean<F: Fn([f64; 2]) -> f64>(&self, f: F) -> f64 {
        self.boundary.iter().map(|b| b.weight * f(b.point)).sum::<f64>()
            + self.interior.iter().map(|(p, w)| w * f(*p)).sum::<f64>()
    }

    /// All nodes (the point set used by the positivity limiter).
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.boundary.iter().map(|b| b.point).chain(self.interior.iter().map(|i| i.0)).collect()
    }

    /// Boundary weight of edge `j`, node `q`.
    pub fn boundary_weight(&self, edge: usize, q: usize) -> Option<f64> {
        self.boundary.iter().find(|b| b.edge == edge && b.q == q).map(|b| b.weight)
    }
}

/// Edge order 0 = left, 1 = right, 2 = bottom, 3 = top; the `q`-th node of an
/// edge follows the increasing tangential coordinate.
pub fn rect_composite_quad(k: usize, dx: f64, dy: f64) -> Result<CompositeQuad> {
    if !(dx > 0.0 && dy > 0.0) {
        return Err(MhdError::InvalidInput("cell sizes must be positive".into()));
    }
    let g = gauss_rule(k + 1)?;
    let l = gauss_lobatto_rule(lobatto_points_for_degree(k))?;
    let ln = l.len();
    let (fx, fy) = (dx / (dx + dy), dy / (dx + dy));
    let mut boundary = Vec::new();
    let mut interior = Vec::new();
    for (q, (&z, &w)) in g.nodes.iter().zip(&g.weights).enumerate() {
        boundary.push(BoundaryNode { point: [-0.5, z], weight: fy * l.weights[0] * w, edge: 0, q });
        boundary.push(BoundaryNode { point: [0.5, z], weight: fy * l.weights[ln - 1] * w, edge: 1, q });
        boundary.push(BoundaryNode { point: [z, -0.5], weight: fx * l.weights[0] * w, edge: 2, q });
        boundary.push(BoundaryNode { point: [z, 0.5], weight: fx * l.weights[ln - 1] * w, edge: 3, q });
        for mu in 1..ln - 1 {
            interior.push(([z, l.nodes[mu]], fx * l.weights[mu] * w));
            interior.push(([l.nodes[mu], z], fy * l.weights[mu] * w));
        }
    }
    Ok(CompositeQuad { boundary, interior })
}

/// Composite rule on the reference triangle with vertices `(0,0)`, `(1,0)`,
/// `(0,1)`; points are stored as `(lambda_2, lambda_3)` and edge `j` is the
/// one opposite vertex `j`. Interior weights come from averaging the three
/// collapsed-coordinate (Gauss x Gauss-Lobatto) rules, which is exact on
/// degree `k` and positive by construction.
pub fn tri_composite_quad(k: usize) -> Result<CompositeQuad> {
    let g = gauss_rule(k + 1)?;
    let l = gauss_lobatto_rule(lobatto_points_for_degree(k))?;
    let ln = l.len();
    let w1 = l.weights[0];
    let mut boundary = Vec::new();
    // Edge j (lambda_j = 0): node q sits at parameter zeta_q along the edge
    // from vertex j+1 toward vertex j+2.
    for j in 0..3 {
        for (q, (&z, &w)) in g.nodes.iter().zip(&g.weights).enumerate() {
            let mut lam = [0.0; 3];
            lam[(j + 1) % 3] = 0.5 - z;
            lam[(j + 2) % 3] = 0.5 + z;
            boundary.push(BoundaryNode { point: [lam[1], lam[2]], weight: 2.0 / 3.0 * w1 * w, edge: j, q });
        }
    }
    let mut interior = Vec::new();
    for r in 0..3 {
        for (&z, &w) in g.nodes.iter().zip(&g.weights) {
            for mu in 1..ln - 1 {
                let zh = l.nodes[mu];
                let mut lam = [0.0; 3];
                lam[r] = 0.5 + z;
                lam[(r + 1) % 3] = (0.5 + zh) * (0.5 - z);
                lam[(r + 2) % 3] = (0.5 - zh) * (0.5 - z);
                let weight = 2.0 / 3.0 * (0.5 - z) * w * l.weights[mu];
                if !(weight > 0.0) {
                    return Err(MhdError::Quadrature(format!("non-positive interior weight {weight} at rotation {r}")));
                }
                interior.push(([lam[1], lam[2]], weight));
            }
        }
    }
    Ok(CompositeQuad { boundary, interior })
}

/// Orthonormal basis of `{(B1, B2) in (P^k)^2 : d_x B1 + d_y B2 = 0}` on a
/// `dx x dy` rectangle, expressed in the coefficients of [`ScalarBasis2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct LdfBasis {
    pub k: usize,
    pub dx: f64,
    pub dy: f64,
    nm: usize,
    /// Column-major `2 nm x dim` coefficients; rows `0..nm` hold B1, the rest B2.
    cols: Vec<Vec<f64>>,
    /// Orthogonal projector onto the span, row-major `2 nm x 2 nm`.
    proj: Vec<f64>,
}

impl LdfBasis {
    pub fn new(k: usize, dx: f64, dy: f64) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0) {
            return Err(MhdError::InvalidInput("cell sizes must be positive".into()));
        }
        let sb = ScalarBasis2D::new(k);
        let nm = sb.nmodes();
        let g = gauss_rule(k + 2)?;
        // Stream functions psi = xi^a eta^b, 1 <= a + b <= k + 1, scaled by dy:
        // B1 = d_eta psi, B2 = -(dy/dx) d_xi psi.
        let ratio = dy / dx;
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for d in 1..=k + 1 {
            for a in (0..=d).rev() {
                let b = d - a;
                let mut v = vec![0.0; 2 * nm];
                for (&x, &wx) in g.nodes.iter().zip(&g.weights) {
                    for (&y, &wy) in g.nodes.iter().zip(&g.weights) {
                        let phi = sb.eval(x, y);
                        let dpsi_x = if a > 0 { a as f64 * x.powi(a as i32 - 1) * y.powi(b as i32) } else { 0.0 };
                        let dpsi_y = if b > 0 { b as f64 * x.powi(a as i32) * y.powi(b as i32 - 1) } else { 0.0 };
                        let (b1, b2) = (dpsi_y, -ratio * dpsi_x);
                        for i in 0..nm {
                            v[i] += wx * wy * phi[i] * b1;
                            v[nm + i] += wx * wy * phi[i] * b2;
                        }
                    }
                }
                // Two Gram-Schmidt passes for orthogonality to roundoff.
                for _ in 0..2 {
                    for c in &cols {
                        let dot: f64 = c.iter().zip(&v).map(|(p, q)| p * q).sum();
                        for (vi, ci) in v.iter_mut().zip(c) {
                            *vi -= dot * ci;
                        }
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-10 {
                    v.iter_mut().for_each(|x| *x /= norm);
                    cols.push(v);
                }
            }
        }
        let expected = (k + 2) * (k + 3) / 2 - 1;
        if cols.len() != expected {
            return Err(MhdError::Quadrature(format!("LDF basis has dimension {} instead of {expected}", cols.len())));
        }
        let n2 = 2 * nm;
        let mut proj = vec![0.0; n2 * n2];
        for c in &cols {
            for r in 0..n2 {
                for s in 0..n2 {
                    proj[r * n2 + s] += c[r] * c[s];
                }
            }
        }
        Ok(Self { k, dx, dy, nm, cols, proj })
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    /// Scalar-basis coefficients `(B1, B2)` of member `i`.
    pub fn member(&self, i: usize) -> (&[f64], &[f64]) {
        let c = &self.cols[i];
        (&c[..self.nm], &c[self.nm..])
    }

    /// Orthogonal projection of `(B1, B2)` coefficient vectors onto the span.
    pub fn project(&self, b1: &mut [f64], b2: &mut [f64]) {
        let n2 = 2 * self.nm;
        let mut r = [0.0; 64];
        let r = &mut r[..n2];
        r[..self.nm].copy_from_slice(&b1[..self.nm]);
        r[self.nm..].copy_from_slice(&b2[..self.nm]);
        for i in 0..self.nm {
            let (mut s1, mut s2) = (0.0, 0.0);
            let row1 = &self.proj[i * n2..(i + 1) * n2];
            let row2 = &self.proj[(self.nm + i) * n2..(self.nm + i + 1) * n2];
            for j in 0..n2 {
                s1 += row1[j] * r[j];
                s2 += row2[j] * r[j];
            }
            b1[i] = s1;
            b2[i] = s2;
        }
    }
}

/// Pointwise divergence `d_x B1 + d_y B2` of scalar-basis coefficients on a
/// `dx x dy` cell at reference point `(xi, eta)`.
pub fn divergence_at(basis: &ScalarBasis2D, b1: &[f64], b2: &[f64], dx: f64, dy: f64, xi: f64, eta: f64) -> f64 {
    let (gx, gy) = basis.grad(xi, eta);
    let mut d = 0.0;
    for i in 0..basis.nmodes() {
        d += b1[i] * gx[i] / dx + b2[i] * gy[i] / dy;
    }
    d
}

/// Locally divergence-free bases keyed by cell size.
#[derive(Debug, Clone, Default)]
pub struct LdfCache {
    k: usize,
    map: HashMap<(u64, u64), LdfBasis>,
}

impl LdfCache {
    pub fn new(k: usize) -> Self {
        Self { k, map: HashMap::new() }
    }

    /// Builds the bases for every distinct cell size of `mesh`.
    pub fn for_mesh(k: usize, mesh: &RectMesh2D) -> Result<Self> {
        let mut c = Self::new(k);
        for cell in 0..mesh.n_cells() {
            let (dx, dy) = mesh.size(cell);
            c.insert(dx, dy)?;
        }
        Ok(c)
    }

    fn insert(&mut self, dx: f64, dy: f64) -> Result<()> {
        let key = (dx.to_bits(), dy.to_bits());
        if !self.map.contains_key(&key) {
            self.map.insert(key, LdfBasis::new(self.k, dx, dy)?);
        }
        Ok(())
    }

    /// Basis for a `dx x dy` cell; panics if the size was never inserted.
    pub fn get(&self, dx: f64, dy: f64) -> &LdfBasis {
        &self.map[&(dx.to_bits(), dy.to_bits())]
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Applies the divergence-free projection to the `(B1, B2)` coefficients of one cell block.
pub fn project_cell_b(ldf: &LdfBasis, cell: &mut [f64]) {
    let nm = cell.len() / NVAR;
    let mut b1 = [0.0; 32];
    let mut b2 = [0.0; 32];
    for m in 0..nm {
        b1[m] = cell[m * NVAR + 4];
        b2[m] = cell[m * NVAR + 5];
    }
    ldf.project(&mut b1[..nm], &mut b2[..nm]);
    for m in 0..nm {
        cell[m * NVAR + 4] = b1[m];
        cell[m * NVAR + 5] = b2[m];
    }
}

fn projection_rule(k: usize) -> Result<QuadRule> {
    gauss_rule(k + 3)
}

/// Local L2 projection of `f` onto piecewise polynomials of degree `k`.
pub fn project_initial_1d<F>(f: F, mesh: &Mesh1D, k: usize) -> Result<DgField>
where
    F: Fn(f64) -> ConservedState + Sync,
{
    let basis = ScalarBasis1D::new(k);
    let g = projection_rule(k)?;
    let phis: Vec<Vec<f64>> = g.nodes.iter().map(|&x| basis.eval(x)).collect();
    let mut field = DgField::zeros(1, k, mesh.n_cells())?;
    let n = field.cell_len();
    field.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(j, cell)| {
        let (xc, h) = (mesh.center(j), mesh.dx(j));
        for (q, &x) in g.nodes.iter().enumerate() {
            let u = f(xc + h * x).to_array();
            for (m, p) in phis[q].iter().enumerate() {
                for v in 0..NVAR {
                    cell[m * NVAR + v] += g.weights[q] * p * u[v];
                }
            }
        }
    });
    Ok(field)
}

/// Local L2 projection on a rectangular mesh; `(B1, B2)` is projected onto
/// the locally divergence-free subspace.
pub fn project_initial_2d<F>(f: F, mesh: &RectMesh2D, k: usize) -> Result<DgField>
where
    F: Fn([f64; 2]) -> ConservedState + Sync,
{
    let ldf = LdfCache::for_mesh(k, mesh)?;
    let basis = ScalarBasis2D::new(k);
    let g = projection_rule(k)?;
    let mut pts = Vec::new();
    for (&x, &wx) in g.nodes.iter().zip(&g.weights) {
        for (&y, &wy) in g.nodes.iter().zip(&g.weights) {
            pts.push(([x, y], wx * wy, basis.eval(x, y)));
        }
    }
    let mut field = DgField::zeros(2, k, mesh.n_cells())?;
    let n = field.cell_len();
    field.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(c, cell)| {
        let (xc, (dx, dy)) = (mesh.center(c), mesh.size(c));
        for (p, w, phi) in &pts {
            let u = f([xc[0] + dx * p[0], xc[1] + dy * p[1]]).to_array();
            for (m, ph) in phi.iter().enumerate() {
                for v in 0..NVAR {
                    cell[m * NVAR + v] += w * ph * u[v];
                }
            }
        }
        project_cell_b(ldf.get(dx, dy), cell);
    });
    Ok(field)
}

/// Point value of `field` in `cell` at reference coordinates `point`.
pub fn evaluate(field: &DgField, cell: usize, point: &[f64]) -> ConservedState {
    let phi = match field.dim() {
        1 => ScalarBasis1D::new(field.k()).eval(point[0]),
        _ => ScalarBasis2D::new(field.k()).eval(point[0], point[1]),
    };
    ConservedState::from_array(&field.eval_with(cell, &phi))
}

/// Pointwise `div B` of a 2D field in a `dx x dy` cell.
pub fn divergence_b_at(field: &DgField, cell: usize, dx: f64, dy: f64, point: [f64; 2]) -> f64 {
    let basis = ScalarBasis2D::new(field.k());
    let c = field.cell(cell);
    let b1: Vec<f64> = (0..field.nmodes()).map(|m| c[m * NVAR + 4]).collect();
    let b2: Vec<f64> = (0..field.nmodes()).map(|m| c[m * NVAR + 5]).collect();
    divergence_at(&basis, &b1, &b2, dx, dy, point[0], point[1])
}


#[cfg(test)]
mod projection_tests {
    use super::*;
    use crate::mesh::{build_rect_2d, build_uniform_1d, BoundaryCondition};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn periodic2() -> [BoundaryCondition; 4] {
        std::array::from_fn(|_| BoundaryCondition::Periodic)
    }

    #[test]
    fn constant_state_has_mean_only() {
        let u = ConservedState::new(2.0, [0.1, -0.2, 0.3], [0.5, 0.25, -1.0], 7.0);
        let mesh = build_rect_2d([0.0, 1.0, 0.0, 2.0], 3, 4, periodic2()).unwrap();
        let f = project_initial_2d(|_| u, &mesh, 2).unwrap();
        for c in 0..mesh.n_cells() {
            for v in 0..NVAR {
                assert!((f.coeff(c, 0, v) - u.to_array()[v]).abs() < 1e-14);
                for m in 1..f.nmodes() {
                    assert!(f.coeff(c, m, v).abs() < 1e-14);
                }
            }
            let e = evaluate(&f, c, &[0.3, -0.1]);
            assert!((e.e - 7.0).abs() < 1e-13);
        }
    }

    #[test]
    fn ldf_field_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mesh = build_rect_2d([-1.0, 1.0, -0.5, 1.5], 4, 3, periodic2()).unwrap();
        let g = |p: [f64; 2]| ConservedState::new(1.0 + 0.1 * p[0], [p[1], 0.0, 0.0], [p[1], -p[0], 0.2], 5.0 + p[0] * p[1]);
        for k in 1..=2 {
            let f = project_initial_2d(g, &mesh, k).unwrap();
            for _ in 0..200 {
                let c = rng.gen_range(0..mesh.n_cells());
                let p = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
                let (dx, dy) = mesh.size(c);
                let xc = mesh.center(c);
                let exact = g([xc[0] + dx * p[0], xc[1] + dy * p[1]]);
                let num = evaluate(&f, c, &p);
                for v in [0, 1, 4, 5, 6] {
                    assert!((num.to_array()[v] - exact.to_array()[v]).abs() < 1e-12);
                }
                if k == 2 {
                    assert!((num.e - exact.e).abs() < 1e-12);
                }
                assert!(divergence_b_at(&f, c, dx, dy, p).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sine_cell_averages() {
        let mesh = build_uniform_1d(0.0, 2.0 * std::f64::consts::PI, 16, [BoundaryCondition::Periodic, BoundaryCondition::Periodic]).unwrap();
        let f = project_initial_1d(|x| ConservedState::new(1.0 + 0.99 * x.sin(), [0.0; 3], [0.0; 3], 1.0), &mesh, 2).unwrap();
        for j in 0..16 {
            let (a, b) = (mesh.interfaces[j], mesh.interfaces[j + 1]);
            let exact = 1.0 + 0.99 * (a.cos() - b.cos()) / (b - a);
            assert!((f.coeff(j, 0, 0) - exact).abs() < 1e-9);
        }
    }
}
