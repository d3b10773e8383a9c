//! Reference propagation in the full constrained Hilbert space.
//!
//! Used directly for chains up to a few dozen sites and as the oracle the
//! MPS engine is checked against.

mod fsa;
mod krylov;
mod partial;

use std::sync::Arc;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::basis::{BasisError, ConstrainedBasis, StateVector};
use crate::operators::{flippable, is_forward_flip, DriveParams};

pub use fsa::{fsa_build, fsa_spectrum, FsaBasis, FsaSpectrum};
pub use krylov::{expm_krylov, KrylovReport};
pub use partial::{bipartite_entropy, reduced_density_matrix, schmidt_values, MAX_RDM_SITES};

/// Krylov residual target per step.
pub const KRYLOV_TOLERANCE: f64 = 1e-10;
/// Largest Lanczos subspace tried before a step is declared failed.
pub const KRYLOV_MAX_DIM: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("Krylov exponential did not converge at t = {t}: dimension {dim}, error estimate {estimate:e}")]
    KrylovNotConverged { t: f64, dim: usize, estimate: f64 },
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("forward-scattering ladder vanished at rung {0}")]
    TruncatedLadder(usize),
    #[error("block of {0} sites exceeds the supported maximum of {MAX_RDM_SITES}")]
    BlockTooLarge(usize),
    #[error("block {first}..={last} is not inside a chain of {sites} sites")]
    InvalidBlock { first: usize, last: usize, sites: usize },
}

/// Off-diagonal structure of `H_PXP` in CSR form.
///
/// Each entry remembers whether it belongs to `H+` so the driven phases
/// `e^{± i gamma t}` can be applied on the fly.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    basis: Arc<ConstrainedBasis>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    forward: Vec<bool>,
}

impl SparseHamiltonian {
    pub fn new(basis: Arc<ConstrainedBasis>) -> Self {
        let sites = basis.sites();
        let mut row_start = Vec::with_capacity(basis.dim() + 1);
        let mut cols = Vec::new();
        let mut forward = Vec::new();
        row_start.push(0);
        for &row_mask in basis.configs() {
            for site in 1..=sites {
                if !flippable(row_mask, sites, site) {
                    continue;
                }
                let bit = basis.site_bit(site);
                let col_mask = row_mask ^ bit;
                let col = basis.index_of_mask(col_mask).expect("flip stays inside the constrained space");
                // matrix element <row|H|col>: col -> row excites the site iff row has it set
                let excite = row_mask & bit != 0;
                cols.push(col as u32);
                forward.push(is_forward_flip(site, excite));
            }
            row_start.push(cols.len());
        }
        Self { basis, row_start, cols, forward }
    }

    pub fn basis(&self) -> &Arc<ConstrainedBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `(row, col, forward)` triples.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_start[r]..self.row_start[r + 1]).map(move |k| (r, self.cols[k] as usize, self.forward[k]))
        })
    }

    /// `y = H(t) x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64], t: f64, params: &DriveParams) {
        let fwd = C64::from_polar(1.0, params.phase(t));
        let bwd = fwd.conj();
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_start[r]..self.row_start[r + 1] {
                let phase = if self.forward[k] { fwd } else { bwd };
                acc += phase * x[self.cols[k] as usize];
            }
            *yr = acc;
        }
    }

    /// `<psi|H(t)|psi>`.
    pub fn expectation(&self, psi: &StateVector, t: f64, params: &DriveParams) -> f64 {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(psi.amplitudes(), &mut y, t, params);
        psi.amplitudes().iter().zip(&y).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }

    /// Dense `H(t)`, row-major; intended for small chains.
    pub fn to_dense(&self, t: f64, params: &DriveParams) -> Vec<C64> {
        let d = self.dim();
        let fwd = C64::from_polar(1.0, params.phase(t));
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for (r, c, f) in self.entries() {
            out[r * d + c] = if f { fwd } else { fwd.conj() };
        }
        out
    }
}

/// Midpoint propagator `exp(-i dt H(t + dt/2))` evaluated with Lanczos.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    hamiltonian: SparseHamiltonian,
    params: DriveParams,
    dt: f64,
    tol: f64,
    max_dim: usize,
}

impl ExactPropagator {
    pub fn new(hamiltonian: SparseHamiltonian, params: DriveParams, dt: f64) -> Result<Self, ExactError> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(ExactError::InvalidTimeGrid(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { hamiltonian, params, dt, tol: KRYLOV_TOLERANCE, max_dim: KRYLOV_MAX_DIM })
    }

    pub fn with_tolerance(mut self, tol: f64, max_dim: usize) -> Self {
        self.tol = tol;
        self.max_dim = max_dim;
        self
    }

    pub fn hamiltonian(&self) -> &SparseHamiltonian {
        &self.hamiltonian
    }

    pub fn params(&self) -> &DriveParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `state` from `t` to `t + dt`.
    pub fn step(&self, state: &mut StateVector, t: f64) -> Result<KrylovReport, ExactError> {
        let t_mid = t + 0.5 * self.dt;
        let ham = &self.hamiltonian;
        let params = &self.params;
        let report = expm_krylov(
            |x, y| ham.apply(x, y, t_mid, params),
            state.amplitudes_mut(),
            self.dt,
            self.tol,
            self.max_dim,
        );
        if !report.converged {
            return Err(ExactError::KrylovNotConverged { t, dim: report.dim, estimate: report.estimate });
        }
        Ok(report)
    }
}

/// Number of `dt` steps that make up `t_max`.
pub fn step_count(dt: f64, t_max: f64) -> Result<usize, ExactError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(ExactError::InvalidTimeGrid(format!("time step must be positive, got {dt}")));
    }
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(ExactError::InvalidTimeGrid(format!("final time must be non-negative, got {t_max}")));
    }
    let n = (t_max / dt).round();
    if (n * dt - t_max).abs() > 1e-9 * t_max.max(1.0) {
        return Err(ExactError::InvalidTimeGrid(format!("t_max = {t_max} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// Evolves `state` to `t_max`, returning the states at `t = 0`, every
/// `stride` steps, and at `t_max`.
pub fn evolve_exact(
    state: &StateVector,
    params: &DriveParams,
    dt: f64,
    t_max: f64,
    stride: usize,
) -> Result<Vec<(f64, StateVector)>, ExactError> {
    let steps = step_count(dt, t_max)?;
    let stride = stride.max(1);
    let propagator = ExactPropagator::new(SparseHamiltonian::new(state.basis().clone()), *params, dt)?;
    let mut psi = state.clone();
    let mut out = vec![(0.0, psi.clone())];
    for n in 0..steps {
        propagator.step(&mut psi, n as f64 * dt)?;
        if (n + 1) % stride == 0 || n + 1 == steps {
            out.push(((n + 1) as f64 * dt, psi.clone()));
        }
    }
    Ok(out)
}
