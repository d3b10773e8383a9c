//! Matrix-product states of spin-1/2 chains with TEBD time evolution.
//!
//! Site tensors are stored column-major with index `l + dl * (s + 2 r)`, so
//! a tensor reads both as a `(2 dl) x dr` matrix (left-grouped) and as a
//! `dl x (2 dr)` matrix (right-grouped) without copying.

mod measure;
mod split;
mod tebd;

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{SpinConfig, StateVector};

pub use measure::{Measurement, MAX_MPS_RDM_SITES};
pub use split::SplitMethod;
pub use tebd::{Layer, TrotterPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
    #[error("bond {bond} does not exist in a chain of {sites} sites")]
    InvalidBond { bond: usize, sites: usize },
    #[error("block {first}..={last} is not inside a chain of {sites} sites")]
    InvalidBlock { first: usize, last: usize, sites: usize },
    #[error("block of {0} sites exceeds the reduced-density-matrix limit")]
    BlockTooLarge(usize),
    #[error("gate on sites {first}..{end} does not fit a chain of {sites} sites")]
    InvalidGate { first: usize, end: usize, sites: usize },
    #[error("time step must be finite and positive, got {0}")]
    InvalidStep(f64),
    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),
    #[error("tensor shapes are inconsistent: {0}")]
    Shape(String),
}

/// How Schmidt spectra are cut after each gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    chi_max: usize,
    s_min: f64,
    /// Discarded weight per unit time above which a run is flagged.
    weight_budget: f64,
    method: SplitMethod,
}

impl TruncationPolicy {
    pub fn new(chi_max: usize, s_min: f64) -> Result<Self, MpsError> {
        if chi_max < 2 {
            return Err(MpsError::InvalidPolicy(format!("chi_max must be at least 2, got {chi_max}")));
        }
        if !s_min.is_finite() || s_min < 0.0 {
            return Err(MpsError::InvalidPolicy(format!("s_min must be finite and non-negative, got {s_min}")));
        }
        Ok(Self { chi_max, s_min, weight_budget: f64::INFINITY, method: SplitMethod::Gram })
    }

    pub fn with_weight_budget(mut self, budget: f64) -> Result<Self, MpsError> {
        if budget.is_nan() || budget < 0.0 {
            return Err(MpsError::InvalidPolicy(format!("weight budget must be non-negative, got {budget}")));
        }
        self.weight_budget = budget;
        Ok(self)
    }

    pub fn with_method(mut self, method: SplitMethod) -> Self {
        self.method = method;
        self
    }

    pub fn chi_max(&self) -> usize {
        self.chi_max
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn weight_budget(&self) -> f64 {
        self.weight_budget
    }

    pub fn method(&self) -> SplitMethod {
        self.method
    }

    /// Whether `discarded` accumulated over `elapsed` time stays in budget.
    pub fn within_budget(&self, discarded: f64, elapsed: f64) -> bool {
        elapsed <= 0.0 || discarded / elapsed <= self.weight_budget
    }
}

/// One rank-3 site tensor of physical dimension 2.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    left: usize,
    right: usize,
    data: Vec<C64>,
}

impl SiteTensor {
    pub fn new(left: usize, right: usize, data: Vec<C64>) -> Result<Self, MpsError> {
        if left == 0 || right == 0 || data.len() != 2 * left * right {
            return Err(MpsError::Shape(format!("{} entries for bond dimensions {left} x {right}", data.len())));
        }
        Ok(Self { left, right, data })
    }

    fn product(up: bool) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); 2];
        data[up as usize] = C64::new(1.0, 0.0);
        Self { left: 1, right: 1, data }
    }

    /// Takes a `(2 dl) x dr` matrix.
    fn from_left_matrix(m: MatRef<'_, C64>) -> Self {
        let left = m.nrows() / 2;
        Self { left, right: m.ncols(), data: column_major(m) }
    }

    /// Takes a `dl x (2 dr)` matrix.
    fn from_right_matrix(m: MatRef<'_, C64>) -> Self {
        let right = m.ncols() / 2;
        Self { left: m.nrows(), right, data: column_major(m) }
    }

    pub fn left_dim(&self) -> usize {
        self.left
    }

    pub fn right_dim(&self) -> usize {
        self.right
    }

    pub fn get(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[l + self.left * (s + 2 * r)]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn as_left_matrix(&self) -> MatRef<'_, C64> {
        MatRef::from_column_major_slice(&self.data, 2 * self.left, self.right)
    }

    pub fn as_right_matrix(&self) -> MatRef<'_, C64> {
        MatRef::from_column_major_slice(&self.data, self.left, 2 * self.right)
    }

    /// `dl x dr` slice for physical state `s`.
    fn physical(&self, s: usize) -> Mat<C64> {
        Mat::from_fn(self.left, self.right, |l, r| self.get(l, s, r))
    }
}

pub(crate) fn column_major(m: MatRef<'_, C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for c in 0..m.ncols() {
        out.extend(m.col(c).iter().copied());
    }
    out
}

/// Mixed-canonical MPS: sites left of `center` are left isometries, sites
/// right of it right isometries.
#[derive(Clone, Debug)]
pub struct MpsState {
    tensors: Vec<SiteTensor>,
    /// 0-based site holding the norm.
    center: usize,
    discarded: f64,
}

impl MpsState {
    /// Bond-dimension-1 product state.
    pub fn from_config(config: &SpinConfig) -> Self {
        let tensors = config.bits().iter().map(|&b| SiteTensor::product(b)).collect();
        Self { tensors, center: 0, discarded: 0.0 }
    }

    /// Exact MPS of a constrained-basis state built by successive splits;
    /// `policy` caps the bond dimensions.
    pub fn from_state_vector(state: &StateVector, policy: &TruncationPolicy) -> Result<Self, MpsError> {
        let sites = state.basis().sites();
        if sites > 20 {
            return Err(MpsError::Shape(format!("dense conversion limited to 20 sites, got {sites}")));
        }
        // amplitude array in the site-1-fastest layout used by the tensors
        let full = 1usize << sites;
        let mut psi = vec![C64::new(0.0, 0.0); full];
        for (&mask, &a) in state.basis().configs().iter().zip(state.amplitudes()) {
            let mut idx = 0usize;
            for i in 1..=sites {
                if mask & state.basis().site_bit(i) != 0 {
                    idx |= 1 << (i - 1);
                }
            }
            psi[idx] = a;
        }
        let mut tensors = Vec::with_capacity(sites);
        let mut rest = Mat::from_fn(1, full, |_, c| psi[c]);
        let mut discarded = 0.0;
        for _ in 0..sites - 1 {
            let dl = rest.nrows();
            let cols = rest.ncols() / 2;
            let data = column_major(rest.as_ref());
            let m = MatRef::from_column_major_slice(&data, 2 * dl, cols);
            let cut = split::split(m, policy, split::BY_OCCUPATION)?;
            discarded += cut.discarded;
            tensors.push(SiteTensor::from_left_matrix(cut.left.as_ref()));
            rest = cut.right;
        }
        let dl = rest.nrows();
        let data = column_major(rest.as_ref());
        tensors.push(SiteTensor::new(dl, 1, data)?);
        let center = sites - 1;
        Ok(Self { tensors, center, discarded })
    }

    pub fn from_tensors(tensors: Vec<SiteTensor>, center: usize) -> Result<Self, MpsError> {
        if tensors.is_empty() || center >= tensors.len() {
            return Err(MpsError::Shape("center outside the chain".into()));
        }
        if tensors[0].left != 1 || tensors[tensors.len() - 1].right != 1 {
            return Err(MpsError::Shape("outer bonds must have dimension 1".into()));
        }
        for w in tensors.windows(2) {
            if w[0].right != w[1].left {
                return Err(MpsError::Shape(format!("bond mismatch {} vs {}", w[0].right, w[1].left)));
            }
        }
        Ok(Self { tensors, center, discarded: 0.0 })
    }

    pub fn sites(&self) -> usize {
        self.tensors.len()
    }

    /// 1-based site of the orthogonality center.
    pub fn center(&self) -> usize {
        self.center + 1
    }

    pub fn tensor(&self, site: usize) -> &SiteTensor {
        &self.tensors[site - 1]
    }

    /// Dimensions of the `L - 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.right).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Cumulative weight dropped by truncations (relative, summed per cut).
    pub fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    /// Norm read from the center tensor (valid in canonical form).
    pub fn norm(&self) -> f64 {
        self.tensors[self.center].data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>` by full transfer-matrix contraction.
    pub fn overlap(&self, other: &MpsState) -> Result<C64, MpsError> {
        if self.sites() != other.sites() {
            return Err(MpsError::Shape(format!("{} vs {} sites", self.sites(), other.sites())));
        }
        let mut env = Mat::<C64>::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            let mut next = Mat::<C64>::zeros(a.right, b.right);
            for s in 0..2 {
                let tmp = env.as_ref() * b.physical(s);
                next += a.physical(s).adjoint() * tmp;
            }
            env = next;
        }
        Ok(env[(0, 0)])
    }

    /// Moves the orthogonality center to 1-based `site` by QR steps.
    pub fn move_center(&mut self, site: usize) {
        let target = site - 1;
        while self.center < target {
            self.shift_right();
        }
        while self.center > target {
            self.shift_left();
        }
    }

    fn shift_right(&mut self) {
        let j = self.center;
        let (q, r) = {
            let m = self.tensors[j].as_left_matrix();
            let qr = m.qr();
            (qr.compute_thin_Q(), qr.thin_R().to_owned())
        };
        let next = &self.tensors[j + 1];
        let merged = r.as_ref() * next.as_right_matrix();
        self.tensors[j] = SiteTensor::from_left_matrix(q.as_ref());
        self.tensors[j + 1] = SiteTensor::from_right_matrix(merged.as_ref());
        self.center += 1;
    }

    fn shift_left(&mut self) {
        let j = self.center;
        let (q, r) = {
            let m = self.tensors[j].as_right_matrix();
            let qr = m.adjoint().qr();
            (qr.compute_thin_Q(), qr.thin_R().to_owned())
        };
        let prev = &self.tensors[j - 1];
        let merged = prev.as_left_matrix() * r.adjoint();
        self.tensors[j] = SiteTensor::from_right_matrix(q.adjoint().to_owned().as_ref());
        self.tensors[j - 1] = SiteTensor::from_left_matrix(merged.as_ref());
        self.center -= 1;
    }

    /// Largest deviation from the isometry conditions around the center.
    pub fn canonical_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (j, t) in self.tensors.iter().enumerate() {
            let gram = if j < self.center {
                let m = t.as_left_matrix();
                m.adjoint() * m
            } else if j > self.center {
                let m = t.as_right_matrix();
                m * m.adjoint()
            } else {
                continue;
            };
            for r in 0..gram.nrows() {
                for c in 0..gram.ncols() {
                    let expected = if r == c { 1.0 } else { 0.0 };
                    worst = worst.max((gram[(r, c)] - C64::new(expected, 0.0)).norm());
                }
            }
        }
        worst
    }

    /// Dense constrained-basis amplitudes (small chains only).
    pub fn to_state_vector(&self, basis: std::sync::Arc<crate::basis::ConstrainedBasis>) -> Result<StateVector, MpsError> {
        if basis.sites() != self.sites() {
            return Err(MpsError::Shape(format!("basis has {} sites, state {}", basis.sites(), self.sites())));
        }
        let slices: Vec<[Mat<C64>; 2]> = self.tensors.iter().map(|t| [t.physical(0), t.physical(1)]).collect();
        let amps = basis
            .configs()
            .iter()
            .map(|&mask| {
                let mut row = Mat::<C64>::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
                for (i, pair) in slices.iter().enumerate() {
                    let s = (mask & basis.site_bit(i + 1) != 0) as usize;
                    row = row.as_ref() * pair[s].as_ref();
                }
                row[(0, 0)]
            })
            .collect();
        Ok(StateVector::from_amplitudes(basis, amps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_single_dw, build_z2, enumerate_basis};
    use crate::exact::evolve_exact;
    use crate::operators::DriveParams;
    use std::sync::Arc;

    fn wide() -> TruncationPolicy {
        TruncationPolicy::new(1024, 0.0).unwrap()
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(1, 0.0).is_err());
        assert!(TruncationPolicy::new(4, -1.0).is_err());
        assert!(TruncationPolicy::new(4, f64::NAN).is_err());
        assert!(TruncationPolicy::new(2, 0.0).unwrap().with_weight_budget(-1.0).is_err());
    }

    #[test]
    fn product_state_basics() {
        let mps = MpsState::from_config(&build_z2(6).unwrap());
        assert_eq!(mps.bond_dims(), vec![1; 5]);
        assert!((mps.norm() - 1.0).abs() < 1e-15);
        assert!((mps.overlap(&mps).unwrap().re - 1.0).abs() < 1e-15);
        let basis = Arc::new(enumerate_basis(6).unwrap());
        let psi = mps.to_state_vector(basis).unwrap();
        assert!((psi.amplitude(&build_z2(6).unwrap()).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dense_round_trip_and_center_moves() {
        let basis = Arc::new(enumerate_basis(10).unwrap());
        let psi0 = StateVector::from_config(basis.clone(), &build_single_dw(10, 4).unwrap()).unwrap();
        let traj = evolve_exact(&psi0, &DriveParams::new(0.7).unwrap(), 0.05, 2.0, 40).unwrap();
        let psi = &traj.last().unwrap().1;
        let mut mps = MpsState::from_state_vector(psi, &wide()).unwrap();
        assert!(mps.canonical_residual() < 1e-12);
        for site in [1, 7, 3, 10, 5] {
            mps.move_center(site);
            assert_eq!(mps.center(), site);
            assert!(mps.canonical_residual() < 1e-12);
            let back = mps.to_state_vector(basis.clone()).unwrap();
            assert!((back.inner(psi).norm() - 1.0).abs() < 1e-12);
        }
        assert!((mps.overlap(&mps).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_shape_validation() {
        assert!(SiteTensor::new(2, 2, vec![C64::new(0.0, 0.0); 7]).is_err());
        let t = SiteTensor::new(1, 1, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let u = SiteTensor::new(2, 1, vec![C64::new(1.0, 0.0); 4]).unwrap();
        assert!(MpsState::from_tensors(vec![t.clone(), u], 0).is_err());
        assert!(MpsState::from_tensors(vec![t.clone(), t], 2).is_err());
    }
}
