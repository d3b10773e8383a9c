//! Blockade-constrained configurations, the enumerated Hilbert space, and the
//! product states used as initial conditions.
//!
//! Sites are numbered from 1. Bit value `1` is the Rydberg state (Pauli `Z =
//! +1`), `0` the atomic ground state (`Z = -1`). Inside a [`ConstrainedBasis`]
//! configurations are packed into a `u64` with site 1 in the most significant
//! of the `L` used bits, so numeric order coincides with lexicographic order on
//! the bit strings.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Largest chain that can be enumerated into a [`ConstrainedBasis`].
pub const MAX_BASIS_SITES: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("chain length {0} is invalid: at least 2 sites are required")]
    InvalidSize(usize),
    #[error("chain length {0} exceeds the enumerable maximum of {MAX_BASIS_SITES} sites")]
    TooLarge(usize),
    #[error("adjacent Rydberg excitations at sites {site} and {next}", site = .0, next = .0 + 1)]
    BlockadeViolation(usize),
    #[error("invalid domain-wall junction: {0}")]
    InvalidJunction(String),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("configuration has {got} sites but the basis has {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// A classical bit pattern on `L >= 2` sites with no two adjacent excitations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    bits: Vec<bool>,
}

impl SpinConfig {
    pub fn new(bits: Vec<bool>) -> Result<Self, BasisError> {
        if bits.len() < 2 {
            return Err(BasisError::InvalidSize(bits.len()));
        }
        if let Some(j) = bits.windows(2).position(|w| w[0] && w[1]) {
            return Err(BasisError::BlockadeViolation(j + 1));
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Occupation of 1-based site `i`.
    pub fn site(&self, i: usize) -> bool {
        self.bits[i - 1]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Pauli `Z` eigenvalue of every site, in site order.
    pub fn z_values(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect()
    }

    /// Packed representation used by [`ConstrainedBasis`] (site 1 is the most
    /// significant bit).
    pub fn to_mask(&self) -> u64 {
        assert!(self.len() <= 64, "configuration too long to pack");
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn from_mask(mask: u64, len: usize) -> Result<Self, BasisError> {
        if len > 64 {
            return Err(BasisError::TooLarge(len));
        }
        let bits = (0..len).map(|j| (mask >> (len - 1 - j)) & 1 == 1).collect();
        Self::new(bits)
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for SpinConfig {
    type Err = BasisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BasisError::Parse(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bits)
    }
}

/// Number of sites at which `config` differs from `|Z2> = |1010...>`.
pub fn hamming_distance(config: &SpinConfig) -> usize {
    config
        .bits
        .iter()
        .enumerate()
        .filter(|&(j, &b)| b != z2_bit(j + 1))
        .count()
}

/// Occupation of 1-based site `i` in `|Z2>`.
fn z2_bit(i: usize) -> bool {
    i % 2 == 1
}

pub fn build_z2(len: usize) -> Result<SpinConfig, BasisError> {
    SpinConfig::new((1..=len).map(z2_bit).collect())
}

pub fn build_z2prime(len: usize) -> Result<SpinConfig, BasisError> {
    SpinConfig::new((1..=len).map(|i| !z2_bit(i)).collect())
}

/// Single wall between sites `bond` and `bond + 1`: `|Z2>` on the left,
/// `|Z2'>` on the right, so the junction reads `...1001...`.
pub fn build_single_dw(len: usize, bond: usize) -> Result<SpinConfig, BasisError> {
    if len < 2 {
        return Err(BasisError::InvalidSize(len));
    }
    if bond % 2 != 0 || bond < 2 || bond + 2 > len {
        return Err(BasisError::InvalidJunction(format!(
            "single wall bond must be even and within 2..={}, got {bond}",
            len.saturating_sub(2)
        )));
    }
    let config = SpinConfig::new((1..=len).map(|i| if i <= bond { z2_bit(i) } else { !z2_bit(i) }).collect())?;
    let expected = [(bond / 2, 1.0)];
    check_wall_profile(&config, &expected)?;
    Ok(config)
}

/// Two walls enclosing a `|Z2'>` region of `middle_sites` sites.
///
/// Sites `1..=left_bond` follow `|Z2>`, the next `middle_sites` sites follow
/// `|Z2'>`, and the remainder resumes `|Z2>`. The middle region must have odd
/// length so that the right junction is the `...1001...` pair of zeros at
/// sites `left_bond + middle_sites` and `left_bond + middle_sites + 1`. The
/// inhomogeneity profile then has unit peaks of opposite sign at
/// `k = left_bond / 2` and `k = (left_bond + middle_sites + 1) / 2`.
pub fn build_double_dw(len: usize, left_bond: usize, middle_sites: usize) -> Result<SpinConfig, BasisError> {
    if len < 2 {
        return Err(BasisError::InvalidSize(len));
    }
    if left_bond % 2 != 0 || left_bond < 2 {
        return Err(BasisError::InvalidJunction(format!("left bond must be even and >= 2, got {left_bond}")));
    }
    if middle_sites % 2 != 1 {
        return Err(BasisError::InvalidJunction(format!(
            "the enclosed region must hold an odd number of sites, got {middle_sites}"
        )));
    }
    let right_bond = left_bond + middle_sites;
    if right_bond + 2 > len {
        return Err(BasisError::InvalidJunction(format!(
            "right wall at bond {right_bond} does not fit in {len} sites"
        )));
    }
    let bits = (1..=len)
        .map(|i| if i <= left_bond || i > right_bond { z2_bit(i) } else { !z2_bit(i) })
        .collect();
    let config = SpinConfig::new(bits)?;
    let expected = [(left_bond / 2, 1.0), (right_bond.div_ceil(2), -1.0)];
    check_wall_profile(&config, &expected)?;
    Ok(config)
}

/// Positions and signs of the nonzero entries of the classical inhomogeneity
/// profile `(Z_{2k-1} - Z_{2k+1}) / 2`, `k = 1..=(L-1)/2`.
pub fn wall_positions(config: &SpinConfig) -> Vec<(usize, f64)> {
    let z = config.z_values();
    (1..=(config.len() - 1) / 2)
        .filter_map(|k| {
            let delta = 0.5 * (z[2 * k - 2] - z[2 * k]);
            (delta != 0.0).then_some((k, delta))
        })
        .collect()
}

fn check_wall_profile(config: &SpinConfig, expected: &[(usize, f64)]) -> Result<(), BasisError> {
    let found = wall_positions(config);
    if found != expected {
        return Err(BasisError::InvalidJunction(format!(
            "expected walls {expected:?} in {config}, found {found:?}"
        )));
    }
    Ok(())
}

/// All blockade-allowed configurations of an `L`-site open chain, in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstrainedBasis {
    sites: usize,
    configs: Vec<u64>,
}

impl ConstrainedBasis {
    pub fn new(sites: usize) -> Result<Self, BasisError> {
        if sites < 2 {
            return Err(BasisError::InvalidSize(sites));
        }
        if sites > MAX_BASIS_SITES {
            return Err(BasisError::TooLarge(sites));
        }
        let mut configs = Vec::with_capacity(fibonacci(sites + 2) as usize);
        // Depth-first, 0 before 1, site 1 first: emits in lexicographic order.
        fn grow(prefix: u64, placed: usize, sites: usize, last: bool, out: &mut Vec<u64>) {
            if placed == sites {
                out.push(prefix);
                return;
            }
            grow(prefix << 1, placed + 1, sites, false, out);
            if !last {
                grow((prefix << 1) | 1, placed + 1, sites, true, out);
            }
        }
        grow(0, 0, sites, false, &mut configs);
        Ok(Self { sites, configs })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn mask(&self, index: usize) -> u64 {
        self.configs[index]
    }

    pub fn config(&self, index: usize) -> SpinConfig {
        SpinConfig::from_mask(self.configs[index], self.sites).expect("basis holds valid configurations")
    }

    pub fn index_of_mask(&self, mask: u64) -> Option<usize> {
        self.configs.binary_search(&mask).ok()
    }

    pub fn index_of(&self, config: &SpinConfig) -> Option<usize> {
        if config.len() != self.sites {
            return None;
        }
        self.index_of_mask(config.to_mask())
    }

    /// Bit mask selecting 1-based site `i`.
    pub fn site_bit(&self, i: usize) -> u64 {
        1u64 << (self.sites - i)
    }
}

pub fn enumerate_basis(sites: usize) -> Result<ConstrainedBasis, BasisError> {
    ConstrainedBasis::new(sites)
}

/// Fibonacci numbers with `F(1) = F(2) = 1`.
pub fn fibonacci(n: usize) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

/// Dimension of the constrained space for `sites` sites, `F(L + 2)`.
pub fn constrained_dim(sites: usize) -> u64 {
    fibonacci(sites + 2)
}

/// Complex amplitudes over a shared [`ConstrainedBasis`].
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<ConstrainedBasis>,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(basis: Arc<ConstrainedBasis>) -> Self {
        let amps = vec![C64::new(0.0, 0.0); basis.dim()];
        Self { basis, amps }
    }

    pub fn from_amplitudes(basis: Arc<ConstrainedBasis>, amps: Vec<C64>) -> Self {
        assert_eq!(amps.len(), basis.dim(), "amplitude vector does not match basis dimension");
        Self { basis, amps }
    }

    pub fn from_config(basis: Arc<ConstrainedBasis>, config: &SpinConfig) -> Result<Self, BasisError> {
        let index = basis
            .index_of(config)
            .ok_or(BasisError::LengthMismatch { expected: basis.sites(), got: config.len() })?;
        let mut state = Self::zeros(basis);
        state.amps[index] = C64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn basis(&self) -> &Arc<ConstrainedBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn amplitude(&self, config: &SpinConfig) -> C64 {
        self.basis.index_of(config).map_or(C64::new(0.0, 0.0), |i| self.amps[i])
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `⟨Z_i⟩` for every site (Pauli units).
    pub fn z_profile(&self) -> Vec<f64> {
        let l = self.basis.sites();
        let mut z = vec![0.0; l];
        for (&mask, a) in self.basis.configs().iter().zip(&self.amps) {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (j, zj) in z.iter_mut().enumerate() {
                let occupied = (mask >> (l - 1 - j)) & 1 == 1;
                *zj += if occupied { p } else { -p };
            }
        }
        z
    }

    /// `⟨Z_i Z_{i+1}⟩` for `i = 1..L-1`.
    pub fn zz_profile(&self) -> Vec<f64> {
        let l = self.basis.sites();
        let mut zz = vec![0.0; l - 1];
        for (&mask, a) in self.basis.configs().iter().zip(&self.amps) {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (j, v) in zz.iter_mut().enumerate() {
                let left = (mask >> (l - 1 - j)) & 1;
                let right = (mask >> (l - 2 - j)) & 1;
                *v += if left == right { p } else { -p };
            }
        }
        zz
    }
}
