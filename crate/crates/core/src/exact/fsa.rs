//! Forward-scattering ladder built by repeated `H+` application to `|Z2>`.

use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use super::ExactError;
use crate::basis::{build_z2, enumerate_basis, StateVector};
use crate::operators::{apply_hplus, apply_pxp};

/// Largest chain for which the ladder is built.
pub const MAX_FSA_SITES: usize = 24;

/// Orthonormal ladder `|0> = |Z2>, |1>, ..., |L>` with `H+|n> = beta_{n+1} |n+1>`.
#[derive(Clone, Debug)]
pub struct FsaBasis {
    pub vectors: Vec<StateVector>,
    /// `beta_1 ..= beta_L`.
    pub betas: Vec<f64>,
}

impl FsaBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// `<n|H_PXP|m>` evaluated by applying the full Hamiltonian.
    pub fn projected_hamiltonian(&self) -> Mat<f64> {
        let images: Vec<StateVector> = self.vectors.iter().map(apply_pxp).collect();
        let d = self.dim();
        Mat::from_fn(d, d, |n, m| self.vectors[n].inner(&images[m]).re)
    }
}

pub fn fsa_build(sites: usize) -> Result<FsaBasis, ExactError> {
    if sites > MAX_FSA_SITES {
        return Err(crate::basis::BasisError::TooLarge(sites).into());
    }
    let basis = Arc::new(enumerate_basis(sites)?);
    let start = StateVector::from_config(basis, &build_z2(sites)?)?;
    let mut vectors = vec![start];
    let mut betas = Vec::with_capacity(sites);
    for n in 0..sites {
        let mut next = apply_hplus(&vectors[n]);
        // rungs are graded by Hamming distance, so this pass only removes rounding
        for v in &vectors {
            let overlap = v.inner(&next);
            if overlap.norm() > 1e-12 {
                for (x, y) in next.amplitudes_mut().iter_mut().zip(v.amplitudes()) {
                    *x -= overlap * y;
                }
            }
        }
        let beta = next.norm();
        if beta < 1e-12 {
            return Err(ExactError::TruncatedLadder(n + 1));
        }
        next.amplitudes_mut().iter_mut().for_each(|x| *x /= C64::new(beta, 0.0));
        betas.push(beta);
        vectors.push(next);
    }
    Ok(FsaBasis { vectors, betas })
}

/// Eigenvalues of the ladder Hamiltonian and their weights on `|Z2>`.
#[derive(Clone, Debug)]
pub struct FsaSpectrum {
    /// Ascending.
    pub energies: Vec<f64>,
    /// `|<Z2|E>|^2`, aligned with `energies`.
    pub overlaps: Vec<f64>,
}

pub fn fsa_spectrum(sites: usize) -> Result<FsaSpectrum, ExactError> {
    let ladder = fsa_build(sites)?;
    let h = ladder.projected_hamiltonian();
    let evd = h.self_adjoint_eigen(Side::Lower).expect("small symmetric eigenproblem converges");
    let d = ladder.dim();
    let energies = (0..d).map(|k| evd.S()[k]).collect();
    let overlaps = (0..d).map(|k| evd.U()[(0, k)].powi(2)).collect();
    Ok(FsaSpectrum { energies, overlaps })
}
