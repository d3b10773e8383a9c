//! Truncated factorisation `theta ~ left * right` with `left` an isometry.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{MpsError, TruncationPolicy};

/// Factorisation used to obtain the Schmidt basis of a cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMethod {
    /// Eigendecomposition of `theta theta^dagger` (after a QR when tall).
    /// About twice as fast as a thin SVD but cannot resolve singular values
    /// below roughly `1e-7` of the largest.
    Gram,
    /// Thin SVD.
    Svd,
}

/// Relative Gram eigenvalues below this are rounding noise.
const GRAM_NOISE_FLOOR: f64 = 1e-14;

pub(crate) struct Split {
    /// `m x k`, orthonormal columns.
    pub left: Mat<C64>,
    /// `k x n`, rescaled to unit Frobenius norm.
    pub right: Mat<C64>,
    /// Relative weight of the dropped Schmidt components.
    pub discarded: f64,
}

/// Row sectors of an MPS split: the occupation of the site left of the cut.
pub(crate) const BY_OCCUPATION: usize = 2;

/// Truncated split of `theta`, whose rows form `sectors` equal contiguous
/// blocks. The left factor is block diagonal: each kept column lives in one
/// block. Rows are blocked by the occupation of the site left of the cut in
/// the MPS (`sectors = 2`); entries of `theta` that vanish because of the
/// blockade then stay zero in `left * right`, which an unrestricted
/// truncation would not guarantee.
pub(crate) fn split(theta: MatRef<'_, C64>, policy: &TruncationPolicy, sectors: usize) -> Result<Split, MpsError> {
    let m = theta.nrows();
    if sectors == 0 || m % sectors != 0 {
        return Err(MpsError::Shape(format!("{m} rows do not divide into {sectors} sectors")));
    }
    let block = m / sectors;
    let (floor, spectra) = match policy.method() {
        SplitMethod::Gram => (
            GRAM_NOISE_FLOOR,
            (0..sectors).map(|b| gram_spectrum(theta.subrows(b * block, block))).collect::<Result<Vec<_>, _>>()?,
        ),
        SplitMethod::Svd => (
            0.0,
            (0..sectors).map(|b| svd_spectrum(theta.subrows(b * block, block))).collect::<Result<Vec<_>, _>>()?,
        ),
    };
    // all candidate vectors, heaviest first; ties broken by position
    let mut order: Vec<(usize, usize)> =
        spectra.iter().enumerate().flat_map(|(b, sp)| (0..sp.weights.len()).map(move |i| (b, i))).collect();
    order.sort_by(|x, y| spectra[y.0].weights[y.1].total_cmp(&spectra[x.0].weights[x.1]).then(x.cmp(y)));
    let weights: Vec<f64> = order.iter().map(|&(b, i)| spectra[b].weights[i]).collect();
    let total: f64 = weights.iter().sum();
    let keep = kept(&weights, total, policy, floor);
    let discarded = if total > 0.0 { weights[keep..].iter().sum::<f64>() / total } else { 0.0 };
    let mut left = Mat::<C64>::zeros(m, keep);
    for (c, &(b, i)) in order[..keep].iter().enumerate() {
        let v = &spectra[b].vectors;
        for r in 0..block {
            left[(b * block + r, c)] = v[(r, i)];
        }
    }
    fix_gauge(&mut left);
    Ok(finish(left, theta, discarded))
}

/// Number of descending weights to keep.
fn kept(weights: &[f64], total: f64, policy: &TruncationPolicy, floor: f64) -> usize {
    let cut = (policy.s_min() * policy.s_min()).max(floor) * total;
    let n = weights.iter().take_while(|&&w| w > cut).count();
    n.clamp(1, policy.chi_max().min(weights.len()))
}

/// Makes the largest-magnitude entry of every column real and positive.
fn fix_gauge(u: &mut Mat<C64>) {
    for c in 0..u.ncols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for r in 0..u.nrows() {
            let a = u[(r, c)].norm();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if best_abs > 0.0 {
            let phase = (u[(best, c)] / best_abs).conj();
            for r in 0..u.nrows() {
                u[(r, c)] *= phase;
            }
        }
    }
}

fn finish(left: Mat<C64>, theta: MatRef<'_, C64>, discarded: f64) -> Split {
    let mut right = left.adjoint() * theta;
    let norm = right.norm_l2();
    if norm > 0.0 {
        right *= faer::Scale(C64::new(1.0 / norm, 0.0));
    }
    Split { left, right, discarded }
}

/// Orthonormal column-space vectors of a block with their squared singular
/// values, in descending order.
struct Spectrum {
    vectors: Mat<C64>,
    weights: Vec<f64>,
}

/// Eigenvectors of `theta theta^dagger`, after a QR when `theta` is tall.
fn gram_spectrum(theta: MatRef<'_, C64>) -> Result<Spectrum, MpsError> {
    if theta.nrows() > theta.ncols() {
        // the column space of the square triangular factor is all we need
        let qr = theta.qr();
        let inner = gram_spectrum(qr.thin_R())?;
        return Ok(Spectrum { vectors: qr.compute_thin_Q() * inner.vectors, weights: inner.weights });
    }
    let m = theta.nrows();
    let gram = theta * theta.adjoint();
    let evd = gram
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| MpsError::Decomposition(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    Ok(Spectrum {
        vectors: Mat::from_fn(m, m, |r, c| u[(r, m - 1 - c)]),
        weights: (0..m).map(|k| s[m - 1 - k].re.max(0.0)).collect(),
    })
}

fn svd_spectrum(theta: MatRef<'_, C64>) -> Result<Spectrum, MpsError> {
    let svd = theta.thin_svd().map_err(|e| MpsError::Decomposition(format!("{e:?}")))?;
    let s = svd.S();
    let k = theta.nrows().min(theta.ncols());
    Ok(Spectrum { vectors: svd.U().to_owned(), weights: (0..k).map(|i| s[i].re * s[i].re).collect() })
}
