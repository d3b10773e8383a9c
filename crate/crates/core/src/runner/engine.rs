//! One trajectory, sampled on the configured grid.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{EngineKind, Observable, ScenarioConfig};
use super::RunError;
use crate::basis::{enumerate_basis, StateVector};
use crate::density::DensityMatrix;
use crate::exact::{bipartite_entropy, reduced_density_matrix, ExactPropagator, SparseHamiltonian};
use crate::mps::{MpsState, TrotterPlan, TruncationPolicy};
use crate::observables::{dw_amplitudes, trace_distance, EnvelopeTracker, InhomogeneityProfile};
use crate::operators::DriveParams;

/// Observables at one sample time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// Pauli `<Z_i>`, `i = 1..=L`.
    pub z: Vec<f64>,
    pub entropy: Option<f64>,
    pub trace_distance: Option<f64>,
    pub energy: Option<f64>,
    /// Largest `<n_i n_{i+1}>`.
    pub max_nn: f64,
    /// Cumulative discarded weight (0 for the exact engine).
    pub discarded: f64,
    pub bond_dim: usize,
}

/// Samples of a finished (or interrupted) run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub samples: Vec<Sample>,
    pub steps_completed: usize,
    pub wall_clock_seconds: f64,
}

impl RunResult {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn inhomogeneity(&self) -> Vec<InhomogeneityProfile> {
        self.samples
            .iter()
            .map(|s| InhomogeneityProfile::from_z(s.t, &s.z).expect("validated chains have at least 4 sites"))
            .collect()
    }

    /// `(t, value)` pairs of a scalar observable, skipping samples where it
    /// was not recorded.
    pub fn scalar(&self, pick: impl Fn(&Sample) -> Option<f64>) -> Vec<(f64, f64)> {
        self.samples.iter().filter_map(|s| pick(s).map(|v| (s.t, v))).collect()
    }

    pub fn entropy(&self) -> Vec<(f64, f64)> {
        self.scalar(|s| s.entropy)
    }

    /// `Delta_+` and `Delta_-` for a single-wall start.
    pub fn amplitudes(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let k0 = *self.config.initial.wall_ks().first()?;
        let tracker = EnvelopeTracker::new(k0 as f64, self.config.tracker_velocity);
        Some(dw_amplitudes(&self.inhomogeneity(), &tracker))
    }

    pub fn discarded_weight(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.discarded)
    }

    pub fn max_bond_dim(&self) -> usize {
        self.samples.iter().map(|s| s.bond_dim).max().unwrap_or(1)
    }
}

enum State {
    Exact { psi: StateVector, propagator: Box<ExactPropagator> },
    Mps { mps: Box<MpsState>, plan: TrotterPlan, policy: TruncationPolicy },
}

struct Engine {
    state: State,
    params: DriveParams,
    sites: usize,
    entropy: bool,
    energy: bool,
    block: Option<(usize, usize)>,
    initial_block: Option<DensityMatrix>,
}

impl Engine {
    fn new(config: &ScenarioConfig) -> Result<Self, RunError> {
        let spins = config.initial.build(config.sites).map_err(crate::exact::ExactError::from)?;
        let params = DriveParams::new(config.gamma)?;
        let state = match config.engine {
            EngineKind::Exact => {
                let basis = Arc::new(enumerate_basis(config.sites).map_err(crate::exact::ExactError::from)?);
                let psi = StateVector::from_config(basis.clone(), &spins).map_err(crate::exact::ExactError::from)?;
                let propagator = ExactPropagator::new(SparseHamiltonian::new(basis), params, config.dt)?;
                State::Exact { psi, propagator: Box::new(propagator) }
            }
            EngineKind::Mps => State::Mps {
                mps: Box::new(MpsState::from_config(&spins)),
                plan: TrotterPlan::new(config.dt)?,
                policy: TruncationPolicy::new(config.chi_max, config.s_min)?.with_method(config.split),
            },
        };
        Ok(Self {
            state,
            params,
            sites: config.sites,
            entropy: config.records(Observable::Entropy),
            energy: config.records(Observable::Energy),
            block: config.block.filter(|_| config.records(Observable::TraceDistance)),
            initial_block: None,
        })
    }

    fn advance(&mut self, t: f64, steps: usize) -> Result<(), RunError> {
        match &mut self.state {
            State::Exact { psi, propagator } => {
                let dt = propagator.dt();
                for n in 0..steps {
                    propagator.step(psi, t + n as f64 * dt)?;
                }
            }
            State::Mps { mps, plan, policy } => plan.evolve(mps, t, steps, &self.params, policy)?,
        }
        Ok(())
    }

    fn block_rdm(&mut self) -> Result<Option<DensityMatrix>, RunError> {
        let Some((first, last)) = self.block else { return Ok(None) };
        Ok(Some(match &mut self.state {
            State::Exact { psi, .. } => reduced_density_matrix(psi, first, last)?,
            State::Mps { mps, .. } => mps.rdm_block(first, last)?,
        }))
    }

    fn sample(&mut self, t: f64) -> Result<Sample, RunError> {
        let half = self.sites / 2;
        let rho = self.block_rdm()?;
        let (z, entropy, max_nn, discarded, bond_dim, energy) = match &mut self.state {
            State::Exact { psi, propagator } => {
                let z = psi.z_profile();
                let zz = psi.zz_profile();
                let nn = (0..zz.len())
                    .map(|i| 0.25 * (1.0 + z[i] + z[i + 1] + zz[i]))
                    .fold(0.0, f64::max);
                let entropy = if self.entropy { Some(bipartite_entropy(psi, half)?) } else { None };
                let energy = self.energy.then(|| propagator.hamiltonian().expectation(psi, t, &self.params));
                (z, entropy, nn, 0.0, 0, energy)
            }
            State::Mps { mps, .. } => {
                let bonds = if self.entropy { vec![half] } else { Vec::new() };
                let m = mps.measure(&bonds)?;
                let energy = self.energy.then(|| mps.energy(t, &self.params));
                let entropy = m.entropies.first().map(|e| e.1);
                (m.z.clone(), entropy, m.max_nn(), mps.discarded_weight(), mps.max_bond_dim(), energy)
            }
        };
        let trace_distance = match (&rho, &self.initial_block) {
            (Some(r), Some(r0)) => Some(trace_distance(r, r0)?),
            (Some(r), None) => {
                self.initial_block = Some(r.clone());
                Some(0.0)
            }
            _ => None,
        };
        Ok(Sample { t, z, entropy, trace_distance, energy, max_nn, discarded, bond_dim })
    }
}

/// Runs `config`, calling `progress` after every sample. On failure the
/// samples taken so far are returned alongside the error.
pub fn simulate_with(
    config: &ScenarioConfig,
    mut progress: impl FnMut(&Sample),
) -> (RunResult, Option<RunError>) {
    let start = Instant::now();
    let mut result = RunResult { config: config.clone(), samples: Vec::new(), steps_completed: 0, wall_clock_seconds: 0.0 };
    let error = (|| -> Result<(), RunError> {
        config.validate()?;
        let (steps, stride) = config.step_grid()?;
        let mut engine = Engine::new(config)?;
        let first = engine.sample(0.0)?;
        progress(&first);
        result.samples.push(first);
        let mut n = 0;
        while n < steps {
            let chunk = stride.min(steps - n);
            engine.advance(n as f64 * config.dt, chunk)?;
            n += chunk;
            result.steps_completed = n;
            let s = engine.sample(n as f64 * config.dt)?;
            progress(&s);
            result.samples.push(s);
        }
        Ok(())
    })()
    .err();
    result.wall_clock_seconds = start.elapsed().as_secs_f64();
    (result, error)
}

pub fn simulate(config: &ScenarioConfig) -> Result<RunResult, RunError> {
    match simulate_with(config, |_| {}) {
        (result, None) => Ok(result),
        (_, Some(e)) => Err(e),
    }
}
