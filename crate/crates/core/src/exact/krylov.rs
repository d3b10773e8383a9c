//! Lanczos approximation of `exp(-i dt H) |psi>` for Hermitian `H`.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

/// Outcome of one Krylov exponential.
#[derive(Clone, Debug)]
pub struct KrylovReport {
    /// Subspace dimension that was used.
    pub dim: usize,
    /// A-posteriori error estimate `beta_m |e_m^T exp(-i dt T_m) e_1|`.
    pub estimate: f64,
    pub converged: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i dt T) e_1` for the real symmetric tridiagonal `T`.
fn tridiagonal_propagate(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<C64> {
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r == c + 1 {
            beta[c]
        } else if c == r + 1 {
            beta[r]
        } else {
            0.0
        }
    });
    let evd = t.self_adjoint_eigen(Side::Lower).expect("tridiagonal eigenproblem converges");
    let (u, s) = (evd.U(), evd.S());
    let mut out = vec![C64::new(0.0, 0.0); m];
    for k in 0..m {
        let w = C64::from_polar(u[(0, k)], -dt * s[k]);
        for (r, o) in out.iter_mut().enumerate() {
            *o += w * u[(r, k)];
        }
    }
    out
}

/// Applies `exp(-i dt H)` to `psi` in place using at most `max_dim` Lanczos
/// vectors; stops as soon as the error estimate drops below `tol`.
///
/// `apply` must write `H x` into its second argument. Full
/// reorthogonalization keeps the basis orthonormal to rounding.
pub fn expm_krylov(
    mut apply: impl FnMut(&[C64], &mut [C64]),
    psi: &mut [C64],
    dt: f64,
    tol: f64,
    max_dim: usize,
) -> KrylovReport {
    let n = psi.len();
    let scale = norm(psi);
    if scale == 0.0 {
        return KrylovReport { dim: 0, estimate: 0.0, converged: true };
    }
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_dim + 1);
    basis.push(psi.iter().map(|x| x / scale).collect());
    let mut alpha = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut coeffs = vec![C64::new(1.0, 0.0)];
    let mut estimate = f64::INFINITY;
    let mut converged = false;

    for j in 0..max_dim.min(n) {
        apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= vi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= vi * b;
            }
        }
        for v in &basis {
            let c = dot(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= vi * c;
            }
        }
        alpha.push(a);
        let b = norm(&w);
        coeffs = tridiagonal_propagate(&alpha, &beta, dt);
        estimate = b * coeffs[j].norm();
        // happy breakdown: the Krylov space is invariant
        if b <= 1e-14 * scale.max(1.0) || estimate < tol {
            converged = true;
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }

    psi.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
    for (c, v) in coeffs.iter().zip(&basis) {
        let c = c * scale;
        for (p, vi) in psi.iter_mut().zip(v) {
            *p += c * vi;
        }
    }
    KrylovReport { dim: coeffs.len(), estimate, converged }
}
