use crate::error::{MhdError, Result};
use crate::state::{ConservedState, Vector8, NVAR};

/// Piecewise-polynomial solution stored as modal coefficients laid out
/// `[cell][mode][variable]`.
///
/// Mode 0 is the constant function 1, so its coefficients are the cell
/// averages. All eight variables use the scalar orthonormal basis; in 2D the
/// magnetic pair is kept inside the locally divergence-free subspace by the
/// scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct DgField {
    dim: usize,
    k: usize,
    nmodes: usize,
    ncells: usize,
    coeffs: Vec<f64>,
}

impl DgField {
    pub fn zeros(dim: usize, k: usize, ncells: usize) -> Result<Self> {
        let nmodes = match dim {
            1 => k + 1,
            2 => (k + 1) * (k + 2) / 2,
            _ => return Err(MhdError::Unsupported(format!("{dim}-dimensional fields"))),
        };
        Ok(Self { dim, k, nmodes, ncells, coeffs: vec![0.0; ncells * nmodes * NVAR] })
    }

    pub fn from_averages(dim: usize, k: usize, avgs: &[ConservedState]) -> Result<Self> {
        let mut f = Self::zeros(dim, k, avgs.len())?;
        for (c, u) in avgs.iter().enumerate() {
            f.set_average(c, u);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nmodes(&self) -> usize {
        self.nmodes
    }

    pub fn ncells(&self) -> usize {
        self.ncells
    }

    pub fn cell_len(&self) -> usize {
        self.nmodes * NVAR
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        let n = self.cell_len();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.cell_len();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    pub fn coeff(&self, c: usize, mode: usize, var: usize) -> f64 {
        self.coeffs[(c * self.nmodes + mode) * NVAR + var]
    }

    pub fn set_coeff(&mut self, c: usize, mode: usize, var: usize, value: f64) {
        self.coeffs[(c * self.nmodes + mode) * NVAR + var] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn average_array(&self, c: usize) -> Vector8 {
        let mut a = [0.0; NVAR];
        a.copy_from_slice(&self.cell(c)[..NVAR]);
        a
    }

    pub fn average(&self, c: usize) -> ConservedState {
        ConservedState::from_array(&self.average_array(c))
    }

    pub fn averages(&self) -> Vec<ConservedState> {
        (0..self.ncells).map(|c| self.average(c)).collect()
    }

    pub fn set_average(&mut self, c: usize, u: &ConservedState) {
        self.cell_mut(c)[..NVAR].copy_from_slice(&u.to_array());
    }

    /// Point value from precomputed basis values `phi` (length `nmodes`).
    #[inline]
    pub fn eval_with(&self, c: usize, phi: &[f64]) -> Vector8 {
        eval_cell(self.cell(c), phi)
    }

    /// `self = a * self + b * other`.
    pub fn combine(&mut self, a: f64, b: f64, other: &DgField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x = a * *x + b * y;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|x| x.is_finite())
    }

    pub fn same_shape(&self, other: &DgField) -> bool {
        self.dim == other.dim && self.k == other.k && self.ncells == other.ncells
    }
}

/// Point value of one cell's coefficient block.
#[inline]
pub fn eval_cell(cell: &[f64], phi: &[f64]) -> Vector8 {
    let mut u = [0.0; NVAR];
    for (m, &p) in phi.iter().enumerate() {
        let row = &cell[m * NVAR..(m + 1) * NVAR];
        for v in 0..NVAR {
            u[v] += p * row[v];
        }
    }
    u
}
