//! Reduced density matrices and Schmidt spectra of constrained-basis states.

use faer::Mat;
use num_complex::Complex64 as C64;

use super::ExactError;
use crate::basis::StateVector;
use crate::density::{entropy_of_schmidt, DensityMatrix};

/// Largest block for [`reduced_density_matrix`].
pub const MAX_RDM_SITES: usize = 12;

/// Density matrix of sites `first..=last` (1-based) with the rest traced out.
pub fn reduced_density_matrix(state: &StateVector, first: usize, last: usize) -> Result<DensityMatrix, ExactError> {
    let sites = state.basis().sites();
    if first == 0 || last < first || last > sites {
        return Err(ExactError::InvalidBlock { first, last, sites });
    }
    let n = last - first + 1;
    if n > MAX_RDM_SITES {
        return Err(ExactError::BlockTooLarge(n));
    }
    let shift = sites - last;
    let block_mask = ((1u64 << n) - 1) << shift;
    let mut entries: Vec<(u64, usize, C64)> = state
        .basis()
        .configs()
        .iter()
        .zip(state.amplitudes())
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(&m, &a)| (m & !block_mask, ((m & block_mask) >> shift) as usize, a))
        .collect();
    // sort so the accumulation order (and hence rounding) is deterministic
    entries.sort_by_key(|&(env, a, _)| (env, a));
    let dim = 1usize << n;
    let mut rho = Mat::<C64>::zeros(dim, dim);
    for group in entries.chunk_by(|x, y| x.0 == y.0) {
        for &(_, a, va) in group {
            for &(_, b, vb) in group {
                rho[(a, b)] += va * vb.conj();
            }
        }
    }
    Ok(DensityMatrix::new(first, n, rho))
}

/// Schmidt coefficients across the cut between sites `bond` and `bond + 1`,
/// in descending order.
pub fn schmidt_values(state: &StateVector, bond: usize) -> Result<Vec<f64>, ExactError> {
    let sites = state.basis().sites();
    if bond == 0 || bond >= sites {
        return Err(ExactError::InvalidBlock { first: 1, last: bond, sites });
    }
    let shift = sites - bond;
    let right_mask = (1u64 << shift) - 1;
    let configs = state.basis().configs();
    let mut lefts: Vec<u64> = configs.iter().map(|m| m >> shift).collect();
    lefts.sort_unstable();
    lefts.dedup();
    let mut rights: Vec<u64> = configs.iter().map(|m| m & right_mask).collect();
    rights.sort_unstable();
    rights.dedup();
    let mut mat = Mat::<C64>::zeros(lefts.len(), rights.len());
    for (&m, &a) in configs.iter().zip(state.amplitudes()) {
        let r = lefts.binary_search(&(m >> shift)).expect("left part enumerated");
        let c = rights.binary_search(&(m & right_mask)).expect("right part enumerated");
        mat[(r, c)] = a;
    }
    let mut values: Vec<f64> = mat.singular_values().expect("singular value iteration converges");
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Von Neumann entropy of sites `1..=bond`.
pub fn bipartite_entropy(state: &StateVector, bond: usize) -> Result<f64, ExactError> {
    Ok(entropy_of_schmidt(&schmidt_values(state, bond)?))
}
