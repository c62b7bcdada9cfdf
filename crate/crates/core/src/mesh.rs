//! Mesh geometry: 1D interval partitions, rectangular 2D meshes and a
//! general convex-polygon cell description.

use crate::error::{MhdError, Result};
use crate::flux::Direction;
use crate::state::ConservedState;

/// Boundary treatment of one side of the domain.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    Periodic,
    /// Zero-order extrapolation of the interior trace.
    Outflow,
    /// Mirror with normal velocity and normal magnetic field negated.
    Reflecting,
    /// Fixed state; with a span, only the part of the side whose tangential
    /// coordinate lies in `[lo, hi)` is inflow and the rest is outflow.
    Inflow { state: ConservedState, span: Option<[f64; 2]> },
}

impl BoundaryCondition {
    /// Exterior state seen across a boundary edge with normal along `axis`,
    /// at tangential coordinate `tangential`.
    pub fn ghost(&self, interior: &ConservedState, axis: usize, tangential: f64) -> ConservedState {
        match self {
            BoundaryCondition::Periodic | BoundaryCondition::Outflow => *interior,
            BoundaryCondition::Reflecting => {
                let mut g = *interior;
                g.m[axis] = -g.m[axis];
                g.b[axis] = -g.b[axis];
                g
            }
            BoundaryCondition::Inflow { state, span } => match span {
                Some([lo, hi]) if !(tangential >= *lo && tangential < *hi) => *interior,
                _ => *state,
            },
        }
    }
}

/// Where an edge leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    /// Domain side: 0 = left (x-min), 1 = right, 2 = bottom (y-min), 3 = top.
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGeom {
    pub measure: f64,
    pub normal: Direction,
    pub neighbor: Neighbor,
}

/// A polytope cell: area, edges with outward unit normals, perimeter.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeom {
    pub area: f64,
    pub edges: Vec<EdgeGeom>,
    pub perimeter: f64,
}

impl CellGeom {
    /// `|sum_j |E_j| xi_j|`, zero for a closed cell.
    pub fn closure_residual(&self) -> f64 {
        let mut c = [0.0; 3];
        for e in &self.edges {
            for k in 0..3 {
                c[k] += e.measure * e.normal.xi()[k];
            }
        }
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    }

    /// Cell from counter-clockwise polygon vertices; all edges are boundary
    /// edges tagged with their index.
    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(MhdError::InvalidInput("a polygon needs at least 3 vertices".into()));
        }
        let mut area = 0.0;
        let mut edges = Vec::with_capacity(n);
        let mut perimeter = 0.0;
        for j in 0..n {
            let p = vertices[j];
            let q = vertices[(j + 1) % n];
            area += 0.5 * (p[0] * q[1] - q[0] * p[1]);
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = dx.hypot(dy);
            if !(len > 0.0) {
                return Err(MhdError::InvalidInput("degenerate polygon edge".into()));
            }
            perimeter += len;
            edges.push(EdgeGeom { measure: len, normal: Direction::normalized(&[dy, -dx])?, neighbor: Neighbor::Boundary(j) });
        }
        if !(area > 0.0) {
            return Err(MhdError::InvalidInput("polygon vertices must be counter-clockwise".into()));
        }
        Ok(CellGeom { area, edges, perimeter })
    }
}

/// A partition of `[a, b]` into intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub interfaces: Vec<f64>,
    /// Left and right boundary conditions.
    pub bcs: [BoundaryCondition; 2],
}

pub fn build_uniform_1d(a: f64, b: f64, m: usize, bcs: [BoundaryCondition; 2]) -> Result<Mesh1D> {
    if !(b > a) || m == 0 || !a.is_finite() || !b.is_finite() {
        return Err(MhdError::InvalidInput(format!("invalid 1D mesh [{a}, {b}] with {m} cells")));
    }
    check_periodic_pair(&bcs[0], &bcs[1])?;
    let h = (b - a) / m as f64;
    let mut interfaces: Vec<f64> = (0..=m).map(|j| a + j as f64 * h).collect();
    interfaces[m] = b;
    Ok(Mesh1D { interfaces, bcs })
}

fn check_periodic_pair(lo: &BoundaryCondition, hi: &BoundaryCondition) -> Result<()> {
    let (pl, ph) = (matches!(lo, BoundaryCondition::Periodic), matches!(hi, BoundaryCondition::Periodic));
    if pl != ph {
        return Err(MhdError::InvalidInput("periodic boundaries must come in pairs".into()));
    }
    Ok(())
}

impl Mesh1D {
    pub fn n_cells(&self) -> usize {
        self.interfaces.len() - 1
    }

    pub fn dx(&self, j: usize) -> f64 {
        self.interfaces[j + 1] - self.interfaces[j]
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.interfaces[j] + self.interfaces[j + 1])
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.bcs[0], BoundaryCondition::Periodic)
    }

    /// Neighbor across the left (`side = 0`) or right (`side = 1`) interface.
    pub fn neighbor(&self, j: usize, side: usize) -> Neighbor {
        let m = self.n_cells();
        match side {
            0 if j > 0 => Neighbor::Cell(j - 1),
            0 if self.is_periodic() => Neighbor::Cell(m - 1),
            0 => Neighbor::Boundary(0),
            _ if j + 1 < m => Neighbor::Cell(j + 1),
            _ if self.is_periodic() => Neighbor::Cell(0),
            _ => Neighbor::Boundary(1),
        }
    }

    pub fn cell_geom(&self, j: usize) -> CellGeom {
        let left = Direction::new(&[-1.0]).unwrap();
        let right = Direction::new(&[1.0]).unwrap();
        CellGeom {
            area: self.dx(j),
            edges: vec![
                EdgeGeom { measure: 1.0, normal: left, neighbor: self.neighbor(j, 0) },
                EdgeGeom { measure: 1.0, normal: right, neighbor: self.neighbor(j, 1) },
            ],
            perimeter: 2.0,
        }
    }
}

/// A tensor-product rectangular mesh, cells indexed `i + mx * l`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMesh2D {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Left, right, bottom, top.
    pub bcs: [BoundaryCondition; 4],
}

/// Builds a uniform `mx x my` mesh on `[x0, x1] x [y0, y1]`.
pub fn build_rect_2d(domain: [f64; 4], mx: usize, my: usize, bcs: [BoundaryCondition; 4]) -> Result<RectMesh2D> {
    let [x0, x1, y0, y1] = domain;
    if !(x1 > x0) || !(y1 > y0) || mx == 0 || my == 0 || domain.iter().any(|v| !v.is_finite()) {
        return Err(MhdError::InvalidInput(format!("invalid 2D mesh {domain:?} with {mx}x{my} cells")));
    }
    check_periodic_pair(&bcs[0], &bcs[1])?;
    check_periodic_pair(&bcs[2], &bcs[3])?;
    let line = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        let mut v: Vec<f64> = (0..=n).map(|j| a + j as f64 * h).collect();
        v[n] = b;
        v
    };
    Ok(RectMesh2D { x: line(x0, x1, mx), y: line(y0, y1, my), bcs })
}

impl RectMesh2D {
    pub fn mx(&self) -> usize {
        self.x.len() - 1
    }

    pub fn my(&self) -> usize {
        self.y.len() - 1
    }

    pub fn n_cells(&self) -> usize {
        self.mx() * self.my()
    }

    pub fn index(&self, i: usize, l: usize) -> usize {
        i + self.mx() * l
    }

    pub fn ij(&self, c: usize) -> (usize, usize) {
        (c % self.mx(), c / self.mx())
    }

    pub fn dx(&self, i: usize) -> f64 {
        self.x[i + 1] - self.x[i]
    }

    pub fn dy(&self, l: usize) -> f64 {
        self.y[l + 1] - self.y[l]
    }

    /// Cell width and height.
    pub fn size(&self, c: usize) -> (f64, f64) {
        let (i, l) = self.ij(c);
        (self.dx(i), self.dy(l))
    }

    pub fn center(&self, c: usize) -> [f64; 2] {
        let (i, l) = self.ij(c);
        [0.5 * (self.x[i] + self.x[i + 1]), 0.5 * (self.y[l] + self.y[l + 1])]
    }

    /// Neighbor across side `s` (0 = left, 1 = right, 2 = bottom, 3 = top).
    pub fn neighbor(&self, c: usize, s: usize) -> Neighbor {
        let (i, l) = self.ij(c);
        let (mx, my) = (self.mx(), self.my());
        let periodic = |k: usize| matches!(self.bcs[k], BoundaryCondition::Periodic);
        match s {
            0 if i > 0 => Neighbor::Cell(self.index(i - 1, l)),
            0 if periodic(0) => Neighbor::Cell(self.index(mx - 1, l)),
            1 if i + 1 < mx => Neighbor::Cell(self.index(i + 1, l)),
            1 if periodic(1) => Neighbor::Cell(self.index(0, l)),
            2 if l > 0 => Neighbor::Cell(self.index(i, l - 1)),
            2 if periodic(2) => Neighbor::Cell(self.index(i, my - 1)),
            3 if l + 1 < my => Neighbor::Cell(self.index(i, l + 1)),
            3 if periodic(3) => Neighbor::Cell(self.index(i, 0)),
            _ => Neighbor::Boundary(s),
        }
    }

    pub fn cell_geom(&self, c: usize) -> CellGeom {
        let (dx, dy) = self.size(c);
        let normals = [[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]];
        let measures = [dy, dy, dx, dx];
        CellGeom {
            area: dx * dy,
            edges: (0..4)
                .map(|s| EdgeGeom {
                    measure: measures[s],
                    normal: Direction::new(&normals[s]).unwrap(),
                    neighbor: self.neighbor(c, s),
                })
                .collect(),
            perimeter: 2.0 * (dx + dy),
        }
    }
}

/// Exterior trace source across an edge: a cell or a ghost state built from
/// the interior trace.
pub enum ExteriorTrace<'a> {
    Cell(usize),
    Ghost(&'a BoundaryCondition),
}

/// Resolves the exterior of side `s` of cell `c` on a rectangular mesh.
pub fn neighbor_state_lookup(mesh: &RectMesh2D, c: usize, s: usize) -> ExteriorTrace<'_> {
    match mesh.neighbor(c, s) {
        Neighbor::Cell(n) => ExteriorTrace::Cell(n),
        Neighbor::Boundary(b) => ExteriorTrace::Ghost(&mesh.bcs[b]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{prim_to_cons, Eos, PrimitiveState};
    use BoundaryCondition::*;

    #[test]
    fn uniform_1d_examples() {
        let m = build_uniform_1d(0.0, 2.0 * std::f64::consts::PI, 4, [Periodic, Periodic]).unwrap();
        assert!((m.dx(0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(build_uniform_1d(-0.5, 0.5, 200, [Outflow, Outflow]).unwrap().n_cells(), 200);
        let one = build_uniform_1d(0.0, 1.0, 1, [Outflow, Outflow]).unwrap();
        assert_eq!(one.neighbor(0, 0), Neighbor::Boundary(0));
        assert_eq!(one.neighbor(0, 1), Neighbor::Boundary(1));
        assert!(build_uniform_1d(1.0, 0.0, 3, [Outflow, Outflow]).is_err());
        assert!(build_uniform_1d(0.0, 1.0, 0, [Outflow, Outflow]).is_err());
        assert!(build_uniform_1d(0.0, 1.0, 3, [Periodic, Outflow]).is_err());
    }

    #[test]
    fn periodic_neighbors_are_involutions() {
        let m = build_uniform_1d(0.0, 1.0, 5, [Periodic, Periodic]).unwrap();
        assert_eq!(m.neighbor(4, 1), Neighbor::Cell(0));
        assert_eq!(m.neighbor(0, 0), Neighbor::Cell(4));
        let r = build_rect_2d([0.0, 1.0, 0.0, 2.0], 3, 4, [Periodic, Periodic, Periodic, Periodic]).unwrap();
        for c in 0..r.n_cells() {
            for s in 0..4 {
                let Neighbor::Cell(n) = r.neighbor(c, s) else { panic!() };
                assert_eq!(r.neighbor(n, s ^ 1), Neighbor::Cell(c));
            }
        }
    }

    #[test]
    fn rect_examples() {
        let out = [Outflow, Outflow, Outflow, Outflow];
        let b = build_rect_2d([-0.5, 0.5, -0.5, 0.5], 320, 320, out.clone()).unwrap();
        assert_eq!(b.n_cells(), 320 * 320);
        let j = build_rect_2d([0.0, 0.5, 0.0, 1.5], 200, 600, out.clone()).unwrap();
        assert_eq!((j.mx(), j.my()), (200, 600));
        let u = build_rect_2d([0.0, 1.0, 0.0, 1.0], 1, 1, out).unwrap();
        let g = u.cell_geom(0);
        assert_eq!(g.area, 1.0);
        assert_eq!(g.perimeter, 4.0);
        assert!(g.edges.iter().all(|e| e.measure == 1.0));
        assert_eq!(g.closure_residual(), 0.0);
        for c in 0..j.n_cells() {
            let g = j.cell_geom(c);
            assert!(g.closure_residual() <= 1e-13 * g.perimeter);
            assert!((g.area - j.size(c).0 * j.size(c).1).abs() < 1e-18);
        }
    }

    #[test]
    fn polygon_closure() {
        let g = CellGeom::polygon(&[[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]]).unwrap();
        assert!(g.closure_residual() <= 1e-13 * g.perimeter);
        assert!((g.area - 0.4).abs() < 1e-15);
        assert!(CellGeom::polygon(&[[0.0, 0.0], [0.3, 0.8], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn ghost_states() {
        let eos = Eos::ideal(1.4).unwrap();
        let u = prim_to_cons(&PrimitiveState::new(1.0, [1.0, 2.0, 3.0], 1.0, [4.0, 5.0, 6.0]), &eos);
        assert_eq!(Outflow.ghost(&u, 0, 0.0), u);
        let r = Reflecting.ghost(&u, 0, 0.0);
        assert_eq!(r.m, [-1.0, 2.0, 3.0]);
        assert_eq!(r.b, [-4.0, 5.0, 6.0]);
        assert_eq!(r.e, u.e);
        let jet = ConservedState::new(1.4, [0.0, 1.0, 0.0], [0.0; 3], 9.0);
        let inflow = Inflow { state: jet, span: Some([-0.05, 0.05]) };
        assert_eq!(inflow.ghost(&u, 1, 0.01), jet);
        assert_eq!(inflow.ghost(&u, 1, 0.2), u);
        let r2 = build_rect_2d([0.0, 1.0, 0.0, 1.0], 2, 2, [Reflecting, Outflow, inflow.clone(), Outflow]).unwrap();
        assert!(matches!(neighbor_state_lookup(&r2, 0, 2), ExteriorTrace::Ghost(Inflow { .. })));
        assert!(matches!(neighbor_state_lookup(&r2, 0, 1), ExteriorTrace::Cell(1)));
    }
}
