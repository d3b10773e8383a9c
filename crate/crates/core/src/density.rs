//! Dense density matrices of small blocks of sites.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

/// Density matrix of `sites` consecutive sites in the `2^sites` product
/// basis (first site most significant, `|0>` before `|1>`).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    first_site: usize,
    sites: usize,
    mat: Mat<C64>,
}

impl DensityMatrix {
    pub fn new(first_site: usize, sites: usize, mat: Mat<C64>) -> Self {
        assert_eq!(mat.nrows(), 1 << sites);
        assert_eq!(mat.ncols(), 1 << sites);
        Self { first_site, sites, mat }
    }

    /// Pure product state on the block.
    pub fn from_bits(first_site: usize, bits: &[bool]) -> Self {
        let n = bits.len();
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let mut mat = Mat::zeros(1 << n, 1 << n);
        mat[(index, index)] = C64::new(1.0, 0.0);
        Self { first_site, sites: n, mat }
    }

    pub fn first_site(&self) -> usize {
        self.first_site
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn as_mat(&self) -> faer::MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                worst = worst.max((self.mat[(r, c)] - self.mat[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(self.mat.as_ref())
    }

    /// `-Tr(rho ln rho)`.
    pub fn von_neumann_entropy(&self) -> f64 {
        entropy_of_weights(&self.eigenvalues())
    }

    /// Largest entry of `|self - other|`; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                worst = worst.max((self.mat[(r, c)] - other.mat[(r, c)]).norm());
            }
        }
        worst
    }
}

pub(crate) fn hermitian_eigenvalues(mat: faer::MatRef<'_, C64>) -> Vec<f64> {
    mat.self_adjoint_eigenvalues(Side::Lower)
        .expect("self-adjoint eigenvalue iteration converges")
        .into_iter()
        .collect()
}

/// `-sum p ln p` over the strictly positive weights.
pub fn entropy_of_weights(weights: &[f64]) -> f64 {
    weights.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

/// Entanglement entropy from Schmidt coefficients `s` (weights `s^2`).
pub fn entropy_of_schmidt(values: &[f64]) -> f64 {
    let weights: Vec<f64> = values.iter().map(|s| s * s).collect();
    entropy_of_weights(&weights)
}
