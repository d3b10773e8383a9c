//! Gate application and the second-order Trotter schedule.

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64 as C64;

use super::split::{split, BY_OCCUPATION};
use super::{MpsError, MpsState, SiteTensor, TruncationPolicy};
use crate::operators::{gate_exponential, LocalOperator, LocalTerm};
use crate::operators::DriveParams;

/// `lhs * rhs` written into a fresh column-major buffer.
pub(crate) fn mul_into(lhs: MatRef<'_, C64>, rhs: MatRef<'_, C64>) -> Vec<C64> {
    let (m, n) = (lhs.nrows(), rhs.ncols());
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    matmul(
        MatMut::from_column_major_slice_mut(&mut out, m, n),
        Accum::Replace,
        lhs,
        rhs,
        C64::new(1.0, 0.0),
        Par::Seq,
    );
    out
}

/// Reverses the lowest `n` bits: converts between the first-site-fastest
/// tensor index and the first-site-most-significant operator index.
pub(crate) fn reverse_bits(p: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, i| acc | (((p >> i) & 1) << (n - 1 - i)))
}

/// Whether the local configuration (first site fastest) has two adjacent
/// excitations.
fn blocked(p: usize, n: usize) -> bool {
    (0..n - 1).any(|i| (p >> i) & 3 == 3)
}

/// Applies a local operator in place to `theta` laid out as
/// `l + dl * (p + 2^n r)` and zeroes blockade-violating components.
fn apply_local(theta: &mut [C64], dl: usize, op: &LocalOperator) {
    let n = op.sites();
    let d = 1usize << n;
    let entries: Vec<(usize, usize, C64)> = (0..d)
        .flat_map(|po| (0..d).map(move |pi| (po, pi)))
        .filter(|&(po, pi)| !blocked(po, n) && !blocked(pi, n))
        .map(|(po, pi)| (po, pi, op.get(reverse_bits(po, n), reverse_bits(pi, n))))
        .filter(|e| e.2 != C64::new(0.0, 0.0))
        .collect();
    let block = dl * d;
    let mut out = vec![C64::new(0.0, 0.0); block];
    for chunk in theta.chunks_exact_mut(block) {
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for &(po, pi, v) in &entries {
            let src = &chunk[pi * dl..(pi + 1) * dl];
            let dst = &mut out[po * dl..(po + 1) * dl];
            for (o, x) in dst.iter_mut().zip(src) {
                *o += v * x;
            }
        }
        chunk.copy_from_slice(&out);
    }
}

impl MpsState {
    /// Applies a 2- or 3-site operator (typically a PXP gate), splitting the
    /// result back with `policy`. The center ends on the last site of the
    /// support.
    pub fn apply_gate(&mut self, op: &LocalOperator, policy: &TruncationPolicy) -> Result<(), MpsError> {
        let f = op.first_site() - 1;
        let n = op.sites();
        if !(2..=3).contains(&n) || op.first_site() == 0 || f + n > self.sites() {
            return Err(MpsError::InvalidGate { first: op.first_site(), end: op.first_site() + n, sites: self.sites() });
        }
        self.move_center(f + 1);
        let dl = self.tensors[f].left;
        let dr = self.tensors[f + n - 1].right;
        let ab = mul_into(self.tensors[f].as_left_matrix(), self.tensors[f + 1].as_right_matrix());
        if n == 2 {
            let mut theta = ab;
            apply_local(&mut theta, dl, op);
            let cut = split(MatRef::from_column_major_slice(&theta, 2 * dl, 2 * dr), policy, BY_OCCUPATION)?;
            self.tensors[f] = SiteTensor::from_left_matrix(cut.left.as_ref());
            self.tensors[f + 1] = SiteTensor::from_right_matrix(cut.right.as_ref());
            self.discarded += cut.discarded;
            self.center = f + 1;
            return Ok(());
        }
        let mid = self.tensors[f + 1].right;
        let mut theta = mul_into(
            MatRef::from_column_major_slice(&ab, 4 * dl, mid),
            self.tensors[f + 2].as_right_matrix(),
        );
        apply_local(&mut theta, dl, op);

        // first cut: (l, s1) | (s2, s3, r); columns with s2 = s3 = 1 vanish
        let rows = 2 * dl;
        let kept_cols: Vec<usize> = (0..4 * dr).filter(|c| c % 4 != 3).collect();
        let mut packed = Vec::with_capacity(rows * kept_cols.len());
        for &c in &kept_cols {
            packed.extend_from_slice(&theta[c * rows..(c + 1) * rows]);
        }
        let first = split(MatRef::from_column_major_slice(&packed, rows, kept_cols.len()), policy, BY_OCCUPATION)?;
        let k = first.left.ncols();
        let mut rest = vec![C64::new(0.0, 0.0); k * 4 * dr];
        for (q, &c) in kept_cols.iter().enumerate() {
            for j in 0..k {
                rest[c * k + j] = first.right[(j, q)];
            }
        }
        // second cut: (j, s2) | (s3, r)
        let second = split(MatRef::from_column_major_slice(&rest, 2 * k, 2 * dr), policy, BY_OCCUPATION)?;
        self.tensors[f] = SiteTensor::from_left_matrix(first.left.as_ref());
        self.tensors[f + 1] = SiteTensor::from_left_matrix(second.left.as_ref());
        self.tensors[f + 2] = SiteTensor::from_right_matrix(second.right.as_ref());
        self.discarded += first.discarded + second.discarded;
        self.center = f + 2;
        Ok(())
    }

    /// Applies the gates of a layer from left to right.
    pub fn apply_layer(&mut self, layer: &Layer, policy: &TruncationPolicy) -> Result<(), MpsError> {
        for op in &layer.gates {
            self.apply_gate(op, policy)?;
        }
        Ok(())
    }

    /// One second-order Trotter step from `t` to `t + dt`.
    pub fn tebd_step(&mut self, plan: &TrotterPlan, t: f64, params: &DriveParams, policy: &TruncationPolicy) -> Result<(), MpsError> {
        plan.evolve(self, t, 1, params, policy)
    }
}

/// Mutually commuting gates (terms whose centers differ by at least 2).
#[derive(Clone, Debug)]
pub struct Layer {
    gates: Vec<LocalOperator>,
}

impl Layer {
    /// `exp(-i tau h_i(t_mid))` for every term whose center has the given
    /// parity (`odd = true` for centers 1, 3, 5, ...).
    pub fn new(sites: usize, odd: bool, t_mid: f64, tau: f64, params: &DriveParams) -> Result<Self, MpsError> {
        let start = if odd { 1 } else { 2 };
        let gates = (start..=sites)
            .step_by(2)
            .map(|c| {
                let term = LocalTerm::new(sites, c).map_err(|e| MpsError::Shape(e.to_string()))?;
                gate_exponential(term, t_mid, tau, params).map(|g| g.op).map_err(|_| MpsError::InvalidStep(tau))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { gates })
    }

    pub fn gates(&self) -> &[LocalOperator] {
        &self.gates
    }

    /// The layer `later * self`, gate by gate.
    fn then(&self, later: &Layer) -> Layer {
        let gates = self.gates.iter().zip(&later.gates).map(|(a, b)| b.matmul(a)).collect();
        Layer { gates }
    }
}

/// Second-order splitting: odd-center half step, even-center full step,
/// odd-center half step, each evaluated at its own midpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterPlan {
    dt: f64,
}

impl TrotterPlan {
    pub fn new(dt: f64) -> Result<Self, MpsError> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(MpsError::InvalidStep(dt));
        }
        Ok(Self { dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn order(&self) -> usize {
        2
    }

    /// The three layers of the step starting at `t`.
    pub fn layers(&self, sites: usize, t: f64, params: &DriveParams) -> Result<[Layer; 3], MpsError> {
        let dt = self.dt;
        Ok([
            Layer::new(sites, true, t + 0.25 * dt, 0.5 * dt, params)?,
            Layer::new(sites, false, t + 0.5 * dt, dt, params)?,
            Layer::new(sites, true, t + 0.75 * dt, 0.5 * dt, params)?,
        ])
    }

    /// Advances `steps` steps from `t0`. The closing half layer of each step
    /// is multiplied into the opening half layer of the next, so only the
    /// last step ends with a separate half layer.
    pub fn evolve(
        &self,
        mps: &mut MpsState,
        t0: f64,
        steps: usize,
        params: &DriveParams,
        policy: &TruncationPolicy,
    ) -> Result<(), MpsError> {
        if steps == 0 {
            return Ok(());
        }
        let sites = mps.sites();
        let [mut opening, _, _] = self.layers(sites, t0, params)?;
        for n in 0..steps {
            let t = t0 + n as f64 * self.dt;
            let [_, even, closing] = self.layers(sites, t, params)?;
            mps.apply_layer(&opening, policy)?;
            mps.apply_layer(&even, policy)?;
            if n + 1 < steps {
                let [next, _, _] = self.layers(sites, t0 + (n + 1) as f64 * self.dt, params)?;
                opening = closing.then(&next);
            } else {
                mps.apply_layer(&closing, policy)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_single_dw, build_z2, enumerate_basis, StateVector};
    use crate::exact::{evolve_exact, SparseHamiltonian};
    use std::sync::Arc;

    fn wide() -> TruncationPolicy {
        TruncationPolicy::new(512, 0.0).unwrap()
    }

    #[test]
    fn bit_reversal() {
        assert_eq!(reverse_bits(0b001, 3), 0b100);
        assert_eq!(reverse_bits(0b110, 3), 0b011);
        assert_eq!(reverse_bits(0b01, 2), 0b10);
    }

    #[test]
    fn identity_gate_keeps_state() {
        let cfg = build_single_dw(8, 4).unwrap();
        let mut mps = MpsState::from_config(&cfg);
        let reference = mps.clone();
        for first in 1..=6 {
            mps.apply_gate(&LocalOperator::identity(first, 3), &wide()).unwrap();
        }
        mps.apply_gate(&LocalOperator::identity(7, 2), &wide()).unwrap();
        assert!((mps.overlap(&reference).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_gate_matches_dense_amplitudes() {
        // |0 0 0> on sites 2..4 of a 5-site chain: only site 3 can flip
        let cfg: crate::basis::SpinConfig = "00000".parse().unwrap();
        let params = DriveParams::new(1.3).unwrap();
        let term = LocalTerm::new(5, 3).unwrap();
        let gate = gate_exponential(term, 0.4, 0.1, &params).unwrap();
        let mut mps = MpsState::from_config(&cfg);
        mps.apply_gate(&gate.op, &wide()).unwrap();
        let basis = Arc::new(enumerate_basis(5).unwrap());
        let psi = mps.to_state_vector(basis).unwrap();
        // column 000 of the local gate
        let stay = gate.op.get(0b000, 0b000);
        let flip = gate.op.get(0b010, 0b000);
        assert!((psi.amplitude(&"00000".parse().unwrap()) - stay).norm() < 1e-14);
        assert!((psi.amplitude(&"00100".parse().unwrap()) - flip).norm() < 1e-14);
        assert!((psi.norm() - 1.0).abs() < 1e-13);
        assert_eq!(mps.center(), 4);
        assert!(mps.canonical_residual() < 1e-13);
    }

    #[test]
    fn rejects_gates_outside_the_chain() {
        let mut mps = MpsState::from_config(&build_z2(4).unwrap());
        assert!(mps.apply_gate(&LocalOperator::identity(3, 3), &wide()).is_err());
        assert!(TrotterPlan::new(0.0).is_err());
        assert!(TrotterPlan::new(f64::NAN).is_err());
    }

    fn trotter_error(sites: usize, gamma: f64, dt: f64, t: f64) -> f64 {
        let cfg = build_single_dw(sites, sites / 2 - (sites / 2) % 2).unwrap();
        let basis = Arc::new(enumerate_basis(sites).unwrap());
        let params = DriveParams::new(gamma).unwrap();
        let psi = StateVector::from_config(basis.clone(), &cfg).unwrap();
        let exact = evolve_exact(&psi, &params, 0.0025, t, usize::MAX).unwrap().pop().unwrap().1;
        let mut mps = MpsState::from_config(&cfg);
        let plan = TrotterPlan::new(dt).unwrap();
        plan.evolve(&mut mps, 0.0, (t / dt).round() as usize, &params, &wide()).unwrap();
        let got = mps.to_state_vector(basis).unwrap();
        got.amplitudes().iter().zip(exact.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn fused_evolution_equals_stepwise() {
        let cfg = build_single_dw(9, 4).unwrap();
        let params = DriveParams::new(0.8).unwrap();
        let plan = TrotterPlan::new(0.05).unwrap();
        let mut fused = MpsState::from_config(&cfg);
        plan.evolve(&mut fused, 0.3, 12, &params, &wide()).unwrap();
        let mut stepped = MpsState::from_config(&cfg);
        for n in 0..12 {
            stepped.tebd_step(&plan, 0.3 + n as f64 * 0.05, &params, &wide()).unwrap();
        }
        assert!((fused.overlap(&stepped).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_convergence() {
        for gamma in [0.0, 1.5] {
            let e1 = trotter_error(8, gamma, 0.1, 1.0);
            let e2 = trotter_error(8, gamma, 0.05, 1.0);
            let order = (e1 / e2).log2();
            assert!(order > 1.8 && order < 2.3, "gamma {gamma}: errors {e1} {e2}, order {order}");
        }
    }

    #[test]
    fn energy_conserved_at_zero_drive() {
        let cfg = build_single_dw(10, 4).unwrap();
        let basis = Arc::new(enumerate_basis(10).unwrap());
        let h = SparseHamiltonian::new(basis.clone());
        let mut mps = MpsState::from_config(&cfg);
        let plan = TrotterPlan::new(0.05).unwrap();
        plan.evolve(&mut mps, 0.0, 40, &DriveParams::bare(), &wide()).unwrap();
        let psi = mps.to_state_vector(basis).unwrap();
        // product start has zero energy; Trotter error bounds the drift
        assert!(h.expectation(&psi, 0.0, &DriveParams::bare()).abs() < 1e-3);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }
}
