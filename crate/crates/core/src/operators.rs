//! PXP Hamiltonian, its forward/backward split, the driven local generators
//! and their closed-form gate exponentials.
//!
//! Local operators act on the 2 or 3 consecutive sites of one PXP term. Their
//! matrices are indexed by the local bit string with the first site as the
//! most significant bit, in the `|0>, |1>` single-site order.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::basis::StateVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("drive frequency must be finite and non-negative, got {0}")]
    InvalidGamma(f64),
    #[error("site {site} is outside a chain of {sites} sites")]
    InvalidSite { site: usize, sites: usize },
    #[error("time step must be finite and positive, got {0}")]
    InvalidStep(f64),
}

/// Drive frequency `gamma` of `H(t) = e^{i gamma t} H+ + e^{-i gamma t} H-`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct DriveParams {
    gamma: f64,
}

impl DriveParams {
    pub fn new(gamma: f64) -> Result<Self, OperatorError> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(OperatorError::InvalidGamma(gamma));
        }
        Ok(Self { gamma })
    }

    /// The undriven PXP model.
    pub fn bare() -> Self {
        Self { gamma: 0.0 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_static(&self) -> bool {
        self.gamma == 0.0
    }

    /// Phase `gamma * t` carried by the forward part at time `t`.
    pub fn phase(&self, t: f64) -> f64 {
        self.gamma * t
    }
}

/// Whether flipping 1-based `site` in the given direction belongs to `H+`.
///
/// `H+` raises even sites and lowers odd sites; every such move increases
/// the Hamming distance from `|Z2>` by one.
pub fn is_forward_flip(site: usize, excite: bool) -> bool {
    (site % 2 == 0) == excite
}

/// Matrix element of the driven generator for a single allowed flip.
pub fn flip_amplitude(site: usize, excite: bool, theta: f64) -> C64 {
    if is_forward_flip(site, excite) {
        C64::from_polar(1.0, theta)
    } else {
        C64::from_polar(1.0, -theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TermKind {
    /// `X_1 P_2`
    LeftEdge,
    /// `P_{i-1} X_i P_{i+1}`
    Bulk,
    /// `P_{L-1} X_L`
    RightEdge,
}

/// One term of the PXP sum, identified by its flipped site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalTerm {
    center: usize,
    kind: TermKind,
}

impl LocalTerm {
    pub fn new(sites: usize, center: usize) -> Result<Self, OperatorError> {
        if sites < 2 || center == 0 || center > sites {
            return Err(OperatorError::InvalidSite { site: center, sites });
        }
        let kind = if center == 1 {
            TermKind::LeftEdge
        } else if center == sites {
            TermKind::RightEdge
        } else {
            TermKind::Bulk
        };
        Ok(Self { center, kind })
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn kind(&self) -> TermKind {
        self.kind
    }

    /// First (1-based) site of the operator support.
    pub fn first_site(&self) -> usize {
        match self.kind {
            TermKind::LeftEdge => 1,
            _ => self.center - 1,
        }
    }

    /// Number of sites in the support.
    pub fn support(&self) -> usize {
        match self.kind {
            TermKind::Bulk => 3,
            _ => 2,
        }
    }

    fn center_offset(&self) -> usize {
        self.center - self.first_site()
    }

    /// Local basis states on which the neighbour projectors pass, paired with
    /// the state reached by flipping the center.
    fn allowed_flips(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        let n = self.support();
        let c = self.center_offset();
        let center_bit = 1usize << (n - 1 - c);
        let neighbours = (0..n).filter(|&j| j != c).fold(0usize, |m, j| m | 1 << (n - 1 - j));
        (0..1usize << n)
            .filter(move |s| s & neighbours == 0)
            .map(move |s| (s, s ^ center_bit, s & center_bit == 0))
    }
}

/// All terms of an `sites`-site open chain, ordered by center.
pub fn chain_terms(sites: usize) -> Vec<LocalTerm> {
    (1..=sites).map(|i| LocalTerm::new(sites, i).expect("center within chain")).collect()
}

/// Dense operator on `n` consecutive sites starting at `first_site`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    first_site: usize,
    sites: usize,
    data: Vec<C64>,
}

impl LocalOperator {
    pub fn zeros(first_site: usize, sites: usize) -> Self {
        let dim = 1 << sites;
        Self { first_site, sites, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(first_site: usize, sites: usize) -> Self {
        let mut op = Self::zeros(first_site, sites);
        for s in 0..op.dim() {
            op.set(s, s, C64::new(1.0, 0.0));
        }
        op
    }

    pub fn from_rows(first_site: usize, sites: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), 1 << (2 * sites), "operator data has the wrong size");
        Self { first_site, sites, data }
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
        self.data[row * self.dim() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        let dim = self.dim();
        self.data[row * dim + col] = value;
    }

    /// Row-major entries.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// `self * rhs`; both must act on the same sites.
    pub fn matmul(&self, rhs: &LocalOperator) -> LocalOperator {
        assert_eq!((self.first_site, self.sites), (rhs.first_site, rhs.sites), "operators act on different sites");
        let dim = self.dim();
        let mut out = Self::zeros(self.first_site, self.sites);
        for r in 0..dim {
            for k in 0..dim {
                let a = self.get(r, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..dim {
                    out.data[r * dim + c] += a * rhs.get(k, c);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> LocalOperator {
        let dim = self.dim();
        let mut out = Self::zeros(self.first_site, self.sites);
        for r in 0..dim {
            for c in 0..dim {
                out.data[c * dim + r] = self.get(r, c).conj();
            }
        }
        out
    }

    /// Largest entry of `|self - other|`.
    pub fn max_abs_diff(&self, other: &LocalOperator) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |U^† U - 1|`.
    pub fn unitarity_residual(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.first_site, self.sites))
    }
}

/// Local generator `h_i(t) = P A_i(t) P` of the driven Hamiltonian.
///
/// `A_i(t) = cos(gamma t) X_i - sin(gamma t) Y_i` on even sites and
/// `cos(gamma t) X_i + sin(gamma t) Y_i` on odd sites; at `gamma = 0` this is
/// the bare PXP term.
pub fn driven_generator(term: LocalTerm, t: f64, params: &DriveParams) -> LocalOperator {
    let theta = params.phase(t);
    let mut op = LocalOperator::zeros(term.first_site(), term.support());
    for (from, to, excite) in term.allowed_flips() {
        op.set(to, from, flip_amplitude(term.center, excite, theta));
    }
    op
}

/// `exp(-i dt h_i(t_mid))` for one PXP term.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeSiteGate {
    pub term: LocalTerm,
    pub t_mid: f64,
    pub dt: f64,
    pub op: LocalOperator,
}

/// Closed form `U = (1 - Q) + Q (cos dt - i sin dt A)`, valid since `A^2 = 1`
/// on the range of the neighbour projector `Q` and `[Q, A] = 0`.
pub fn gate_exponential(
    term: LocalTerm,
    t_mid: f64,
    dt: f64,
    params: &DriveParams,
) -> Result<ThreeSiteGate, OperatorError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(OperatorError::InvalidStep(dt));
    }
    let theta = params.phase(t_mid);
    let (sin, cos) = dt.sin_cos();
    let mut op = LocalOperator::identity(term.first_site(), term.support());
    for (from, to, excite) in term.allowed_flips() {
        op.set(from, from, C64::new(cos, 0.0));
        op.set(to, from, C64::new(0.0, -sin) * flip_amplitude(term.center, excite, theta));
    }
    Ok(ThreeSiteGate { term, t_mid, dt, op })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Full,
    Forward,
    Backward,
}

fn apply_part(state: &StateVector, part: Part) -> StateVector {
    let basis = state.basis().clone();
    let sites = basis.sites();
    let mut out = StateVector::zeros(basis.clone());
    let amps = state.amplitudes();
    let out_amps = out.amplitudes_mut();
    for (idx, &mask) in basis.configs().iter().enumerate() {
        let amp = amps[idx];
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        for site in 1..=sites {
            if !flippable(mask, sites, site) {
                continue;
            }
            let bit = basis.site_bit(site);
            let excite = mask & bit == 0;
            let keep = match part {
                Part::Full => true,
                Part::Forward => is_forward_flip(site, excite),
                Part::Backward => !is_forward_flip(site, excite),
            };
            if keep {
                let target = basis.index_of_mask(mask ^ bit).expect("flip stays inside the constrained space");
                out_amps[target] += amp;
            }
        }
    }
    out
}

/// Whether the neighbour projectors of 1-based `site` pass on `mask`.
pub(crate) fn flippable(mask: u64, sites: usize, site: usize) -> bool {
    let left = site > 1 && (mask >> (sites - site + 1)) & 1 == 1;
    let right = site < sites && (mask >> (sites - site - 1)) & 1 == 1;
    !left && !right
}

/// `H_PXP |psi>` with open-boundary edge terms `X_1 P_2` and `P_{L-1} X_L`.
pub fn apply_pxp(state: &StateVector) -> StateVector {
    apply_part(state, Part::Full)
}

/// `H+ |psi>`: raises even sites, lowers odd sites.
pub fn apply_hplus(state: &StateVector) -> StateVector {
    apply_part(state, Part::Forward)
}

/// `H- |psi>`: lowers even sites, raises odd sites.
pub fn apply_hminus(state: &StateVector) -> StateVector {
    apply_part(state, Part::Backward)
}
