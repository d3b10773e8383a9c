//! Local expectation values, Schmidt spectra and block density matrices.

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use super::tebd::{mul_into, reverse_bits};
use super::{MpsError, MpsState};
use crate::density::{entropy_of_schmidt, DensityMatrix};
use crate::operators::{chain_terms, driven_generator, DriveParams};

/// Largest block for [`MpsState::rdm_block`].
pub const MAX_MPS_RDM_SITES: usize = 8;

/// Profiles gathered in one left-to-right sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    /// `<Z_i>` (Pauli, +1 for a Rydberg excitation), `i = 1..=L`.
    pub z: Vec<f64>,
    /// `<Z_i Z_{i+1}>`, `i = 1..L`.
    pub zz: Vec<f64>,
    /// `<n_i n_{i+1}>`, `i = 1..L`; vanishes under the blockade.
    pub nn: Vec<f64>,
    /// `(bond, entropy)` for each requested bond.
    pub entropies: Vec<(usize, f64)>,
}

impl Measurement {
    pub fn mean_zz(&self) -> f64 {
        self.zz.iter().sum::<f64>() / self.zz.len() as f64
    }

    pub fn max_nn(&self) -> f64 {
        self.nn.iter().copied().fold(0.0, f64::max)
    }
}

fn zsign(s: usize) -> f64 {
    if s == 1 {
        1.0
    } else {
        -1.0
    }
}

impl MpsState {
    fn check_bond(&self, bond: usize) -> Result<(), MpsError> {
        if bond == 0 || bond >= self.sites() {
            return Err(MpsError::InvalidBond { bond, sites: self.sites() });
        }
        Ok(())
    }

    /// Schmidt coefficients across the cut between sites `bond` and
    /// `bond + 1`, descending, normalized to unit total weight.
    pub fn schmidt_values(&mut self, bond: usize) -> Result<Vec<f64>, MpsError> {
        self.check_bond(bond)?;
        self.move_center(bond);
        self.center_schmidt_values()
    }

    fn center_schmidt_values(&self) -> Result<Vec<f64>, MpsError> {
        let mut values = self.tensors[self.center]
            .as_left_matrix()
            .singular_values()
            .map_err(|e| MpsError::Decomposition(format!("{e:?}")))?;
        let total = values.iter().map(|s| s * s).sum::<f64>().sqrt();
        values.iter_mut().for_each(|s| *s /= total);
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(values)
    }

    /// Von Neumann entropy (natural log) of sites `1..=bond`.
    pub fn entanglement_entropy(&mut self, bond: usize) -> Result<f64, MpsError> {
        Ok(entropy_of_schmidt(&self.schmidt_values(bond)?))
    }

    /// `<Z_i>`, nearest-neighbour `<Z_i Z_{i+1}>`, `<n_i n_{i+1}>` and the
    /// entropies at `bonds`, in one sweep. The center ends at the last site.
    pub fn measure(&mut self, bonds: &[usize]) -> Result<Measurement, MpsError> {
        for &b in bonds {
            self.check_bond(b)?;
        }
        let sites = self.sites();
        self.move_center(1);
        let mut m = Measurement { z: Vec::with_capacity(sites), zz: Vec::new(), nn: Vec::new(), entropies: Vec::new() };
        let norm2 = self.norm().powi(2);
        for j in 0..sites {
            let c = &self.tensors[j];
            let (dl, dr) = (c.left, c.right);
            let mut z = 0.0;
            for r in 0..dr {
                for s in 0..2 {
                    for l in 0..dl {
                        z += zsign(s) * c.get(l, s, r).norm_sqr();
                    }
                }
            }
            m.z.push(z / norm2);
            if bonds.contains(&(j + 1)) {
                m.entropies.push((j + 1, entropy_of_schmidt(&self.center_schmidt_values()?)));
            }
            if j + 1 < sites {
                let next = &self.tensors[j + 1];
                let dr2 = next.right;
                let theta = mul_into(c.as_left_matrix(), next.as_right_matrix());
                // index (l + dl s1) + 2 dl (s2 + 2 r)
                let (mut zz, mut nn) = (0.0, 0.0);
                for r in 0..dr2 {
                    for s2 in 0..2 {
                        for s1 in 0..2 {
                            let base = dl * s1 + 2 * dl * (s2 + 2 * r);
                            let w: f64 = theta[base..base + dl].iter().map(|x| x.norm_sqr()).sum();
                            zz += zsign(s1) * zsign(s2) * w;
                            if s1 == 1 && s2 == 1 {
                                nn += w;
                            }
                        }
                    }
                }
                m.zz.push(zz / norm2);
                m.nn.push(nn / norm2);
                self.shift_right();
            }
        }
        m.entropies.sort_by_key(|e| bonds.iter().position(|&b| b == e.0));
        Ok(m)
    }

    /// Contracted tensor of sites `first..=last` with the center moved to
    /// `first`: layout `l + dl * (p + 2^n r)`, `p` first-site-fastest.
    fn block_tensor(&mut self, first: usize, last: usize) -> (Vec<C64>, usize, usize) {
        self.move_center(first);
        let f = first - 1;
        let dl = self.tensors[f].left;
        let mut acc = self.tensors[f].data.clone();
        let mut rows = 2 * dl;
        for j in f + 1..last {
            let t = &self.tensors[j];
            acc = mul_into(MatRef::from_column_major_slice(&acc, rows, t.left), t.as_right_matrix());
            rows *= 2;
        }
        let dr = self.tensors[last - 1].right;
        (acc, dl, dr)
    }

    /// Density matrix of sites `first..=last` (at most 8 sites) in the
    /// first-site-most-significant product basis.
    pub fn rdm_block(&mut self, first: usize, last: usize) -> Result<DensityMatrix, MpsError> {
        let sites = self.sites();
        if first == 0 || last < first || last > sites {
            return Err(MpsError::InvalidBlock { first, last, sites });
        }
        let n = last - first + 1;
        if n > MAX_MPS_RDM_SITES {
            return Err(MpsError::BlockTooLarge(n));
        }
        let (t, dl, dr) = self.block_tensor(first, last);
        let d = 1usize << n;
        // rows: local state (operator order); columns: environment (l, r)
        let z = Mat::<C64>::from_fn(d, dl * dr, |p, e| {
            let (l, r) = (e % dl, e / dl);
            t[l + dl * (reverse_bits(p, n) + d * r)]
        });
        let mut rho = z.as_ref() * z.adjoint();
        let trace: C64 = (0..d).map(|i| rho[(i, i)]).sum();
        rho *= faer::Scale(C64::new(1.0 / trace.re, 0.0));
        Ok(DensityMatrix::new(first, n, rho))
    }

    /// `<H(t)>` summed over all local terms.
    pub fn energy(&mut self, t: f64, params: &DriveParams) -> f64 {
        let norm2 = self.norm().powi(2);
        let mut total = 0.0;
        for term in chain_terms(self.sites()) {
            let h = driven_generator(term, t, params);
            let n = h.sites();
            let d = 1usize << n;
            let first = h.first_site();
            let (theta, dl, dr) = self.block_tensor(first, first + n - 1);
            for r in 0..dr {
                for po in 0..d {
                    for pi in 0..d {
                        let v = h.get(reverse_bits(po, n), reverse_bits(pi, n));
                        if v == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let a = &theta[dl * (po + d * r)..dl * (po + d * r + 1)];
                        let b = &theta[dl * (pi + d * r)..dl * (pi + d * r + 1)];
                        let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                        total += (v * overlap).re;
                    }
                }
            }
        }
        total / norm2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_single_dw, build_z2, enumerate_basis, SpinConfig, StateVector};
    use crate::exact::{bipartite_entropy, evolve_exact, reduced_density_matrix, SparseHamiltonian};
    use crate::mps::{SiteTensor, TruncationPolicy};
    use std::sync::Arc;

    fn wide() -> TruncationPolicy {
        TruncationPolicy::new(1024, 0.0).unwrap()
    }

    fn evolved(sites: usize, gamma: f64, t: f64) -> StateVector {
        let cfg = build_single_dw(sites, sites / 2 - (sites / 2) % 2).unwrap();
        let basis = Arc::new(enumerate_basis(sites).unwrap());
        let psi = StateVector::from_config(basis, &cfg).unwrap();
        evolve_exact(&psi, &DriveParams::new(gamma).unwrap(), 0.05, t, usize::MAX).unwrap().pop().unwrap().1
    }

    #[test]
    fn product_profiles() {
        let mut mps = MpsState::from_config(&build_z2(6).unwrap());
        let m = mps.measure(&[3]).unwrap();
        assert_eq!(m.z, vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        assert_eq!(m.zz, vec![-1.0; 5]);
        assert_eq!(m.mean_zz(), -1.0);
        assert_eq!(m.entropies, vec![(3, 0.0)]);
        let mut empty = MpsState::from_config(&"0000".parse::<SpinConfig>().unwrap());
        assert_eq!(empty.measure(&[]).unwrap().mean_zz(), 1.0);
        for b in 1..6 {
            assert_eq!(mps.entanglement_entropy(b).unwrap(), 0.0);
        }
    }

    #[test]
    fn bell_pair_entropy() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // (|10> + |01>)/sqrt 2 with bond dimension 2
        let z = C64::new(0.0, 0.0);
        let a = SiteTensor::new(1, 2, vec![z, C64::new(h, 0.0), C64::new(h, 0.0), z]).unwrap();
        let b = SiteTensor::new(2, 1, vec![C64::new(1.0, 0.0), z, z, C64::new(1.0, 0.0)]).unwrap();
        let mut mps = MpsState::from_tensors(vec![a, b], 0).unwrap();
        assert!((mps.entanglement_entropy(1).unwrap() - 2f64.ln()).abs() < 1e-14);
        let rho = mps.rdm_block(1, 1).unwrap();
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-15 && (rho.get(1, 1).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn profiles_match_exact_state() {
        let psi = evolved(12, 0.9, 2.5);
        let mut mps = MpsState::from_state_vector(&psi, &wide()).unwrap();
        let m = mps.measure(&[6, 3]).unwrap();
        let z = psi.z_profile();
        let zz = psi.zz_profile();
        for (a, b) in m.z.iter().zip(&z) {
            assert!((a - b).abs() < 1e-10);
        }
        for (i, (a, b)) in m.zz.iter().zip(&zz).enumerate() {
            assert!((a - b).abs() < 1e-10);
            assert!(m.nn[i].abs() < 1e-12, "{}", m.nn[i]);
        }
        assert_eq!(m.entropies[0].0, 6);
        assert!((m.entropies[0].1 - bipartite_entropy(&psi, 6).unwrap()).abs() < 1e-8);
        assert!((m.entropies[1].1 - bipartite_entropy(&psi, 3).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn rdm_matches_exact_partial_trace() {
        let psi = evolved(12, 0.0, 5.0);
        let mut mps = MpsState::from_state_vector(&psi, &wide()).unwrap();
        for (first, last) in [(1, 1), (4, 8), (5, 12), (1, 8)] {
            let got = mps.rdm_block(first, last).unwrap();
            let want = reduced_density_matrix(&psi, first, last).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-10, "{first}..{last}");
            assert!((got.trace().re - 1.0).abs() < 1e-12);
        }
        assert!(matches!(mps.rdm_block(1, 9), Err(MpsError::BlockTooLarge(9))));
        assert!(mps.rdm_block(0, 2).is_err());
    }

    #[test]
    fn energy_matches_sparse_expectation() {
        let psi = evolved(10, 1.1, 1.7);
        let mut mps = MpsState::from_state_vector(&psi, &wide()).unwrap();
        let params = DriveParams::new(1.1).unwrap();
        let h = SparseHamiltonian::new(psi.basis().clone());
        for t in [0.0, 0.8, 2.3] {
            assert!((mps.energy(t, &params) - h.expectation(&psi, t, &params)).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_bonds_are_rejected() {
        let mut mps = MpsState::from_config(&build_z2(4).unwrap());
        assert!(mps.entanglement_entropy(0).is_err());
        assert!(mps.entanglement_entropy(4).is_err());
        assert!(mps.measure(&[5]).is_err());
    }
}
