//! Domain-wall diagnostics derived from magnetisation profiles and reduced
//! density matrices.

use rustfft::FftPlanner;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{hermitian_eigenvalues, DensityMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("profile of {0} sites is too short (need at least 4)")]
    TooShort(usize),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("no resolvable peak at t = {t} (largest |delta| = {max})")]
    TrackingFailure { t: f64, max: f64 },
    #[error("dominant frequencies disagree: {first} vs {second}")]
    IndeterminatePhase { first: f64, second: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sample times must be strictly increasing (got {next} after {prev})")]
    NonIncreasingTime { prev: f64, next: f64 },
    #[error("sample times are not uniformly spaced")]
    NonUniformSampling,
}

/// Peaks below this are treated as absent.
pub const MIN_PEAK: f64 = 0.05;

/// `Delta_k = (<Z_{2k-1}> - <Z_{2k+1}>) / 2` for `k = 1..=(L-1)/2`, from
/// Pauli `<Z_i>` (+1 for an excitation). A sharp wall reads exactly 1.
pub fn z2_inhomogeneity(z: &[f64]) -> Result<Vec<f64>, ObservableError> {
    if z.len() < 4 {
        return Err(ObservableError::TooShort(z.len()));
    }
    let kmax = (z.len() - 1) / 2;
    Ok((1..=kmax).map(|k| 0.5 * (z[2 * k - 2] - z[2 * k])).collect())
}

/// `Delta_k` at one time; `values[k - 1]` holds `Delta_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneityProfile {
    pub t: f64,
    pub values: Vec<f64>,
}

impl InhomogeneityProfile {
    pub fn from_z(t: f64, z: &[f64]) -> Result<Self, ObservableError> {
        Ok(Self { t, values: z2_inhomogeneity(z)? })
    }

    pub fn kmax(&self) -> usize {
        self.values.len()
    }

    /// `|Delta_k|` for 1-based `k`.
    pub fn magnitude(&self, k: usize) -> f64 {
        self.values[k - 1].abs()
    }

    /// Sub-grid position of the largest `|Delta_k|` over `k` in `range`
    /// (1-based, inclusive), refined by a parabola through the three points
    /// around the maximum (neighbours may lie outside the range). Returns
    /// `(k, |Delta|)`.
    pub fn peak_in(&self, lo: usize, hi: usize) -> Option<(f64, f64)> {
        let lo = lo.max(1);
        let hi = hi.min(self.kmax());
        if lo > hi {
            return None;
        }
        let mut best = lo;
        for k in lo..=hi {
            if self.magnitude(k) > self.magnitude(best) {
                best = k;
            }
        }
        let peak = self.magnitude(best);
        if best == 1 || best == self.kmax() {
            return Some((best as f64, peak));
        }
        let (a, b, c) = (self.magnitude(best - 1), peak, self.magnitude(best + 1));
        let denom = a - 2.0 * b + c;
        let shift = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        Some((best as f64 + shift.clamp(-0.5, 0.5), peak))
    }

    /// The outermost local maximum of `|Delta_k|` in `lo..=hi` of height at
    /// least [`MIN_PEAK`], refined as in [`Self::peak_in`]. A moving wall leaves
    /// a tail behind it that can briefly outgrow the wall itself.
    pub fn leading_peak(&self, lo: usize, hi: usize) -> Option<(f64, f64)> {
        let lo = lo.max(1);
        let hi = hi.min(self.kmax());
        let m = |k: usize| if k == 0 || k > self.kmax() { 0.0 } else { self.magnitude(k) };
        (lo..=hi)
            .rev()
            .find(|&k| m(k) >= MIN_PEAK && m(k) >= m(k - 1) && m(k) >= m(k + 1))
            .and_then(|k| self.peak_in(k, k))
    }
}

/// Least-squares line `k = intercept + velocity * t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityFit {
    pub velocity: f64,
    pub intercept: f64,
}

impl VelocityFit {
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, ObservableError> {
        if points.len() < 2 {
            return Err(ObservableError::InsufficientSamples { needed: 2, got: points.len() });
        }
        let n = points.len() as f64;
        let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
        let mk = points.iter().map(|p| p.1).sum::<f64>() / n;
        let stt: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let stk: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - mk)).sum();
        if stt == 0.0 {
            return Err(ObservableError::InsufficientSamples { needed: 2, got: 1 });
        }
        let velocity = stk / stt;
        Ok(Self { velocity, intercept: mk - velocity * mt })
    }
}

/// Samples needed by [`dw_velocity`].
pub const MIN_VELOCITY_SAMPLES: usize = 10;

/// Fits the speed of the right-moving wall: its leading peak over
/// `k0 < k < kmax` at each sample, then a straight line through the peak
/// positions. The last bin is left out because the open edge alone drives
/// `|Delta_kmax|` to several tenths. The two halves of a split wall trade
/// amplitude back and forth, so samples without a peak of at least
/// [`MIN_PEAK`] are skipped; tracking fails only when fewer than
/// [`MIN_VELOCITY_SAMPLES`] remain.
pub fn dw_velocity(profiles: &[InhomogeneityProfile], k0: f64) -> Result<VelocityFit, ObservableError> {
    if profiles.len() < MIN_VELOCITY_SAMPLES {
        return Err(ObservableError::InsufficientSamples { needed: MIN_VELOCITY_SAMPLES, got: profiles.len() });
    }
    let lo = k0.floor() as usize + 1;
    let mut points = Vec::with_capacity(profiles.len());
    let mut lost = None;
    for p in profiles {
        let hi = p.kmax().saturating_sub(1);
        match p.leading_peak(lo, hi) {
            Some((k, _)) => points.push((p.t, k)),
            None if lost.is_none() => {
                let max = p.peak_in(lo, hi).map_or(0.0, |x| x.1);
                lost = Some(ObservableError::TrackingFailure { t: p.t, max });
            }
            None => {}
        }
    }
    match lost {
        Some(e) if points.len() < MIN_VELOCITY_SAMPLES => Err(e),
        _ => VelocityFit::from_points(&points),
    }
}

/// Follows one peak: at each sample the maximum of `|Delta_k|` within
/// `halfwidth` of `predicted(t)`.
pub fn track_peak(
    profiles: &[InhomogeneityProfile],
    predicted: impl Fn(f64) -> f64,
    halfwidth: f64,
) -> Result<Vec<(f64, f64)>, ObservableError> {
    profiles
        .iter()
        .map(|p| {
            let centre = predicted(p.t);
            let lo = (centre - halfwidth).ceil().max(1.0) as usize;
            let hi = (centre + halfwidth).floor().max(0.0) as usize;
            match p.peak_in(lo, hi) {
                Some((k, h)) if h >= MIN_PEAK => Ok((p.t, k)),
                other => Err(ObservableError::TrackingFailure { t: p.t, max: other.map_or(0.0, |x| x.1) }),
            }
        })
        .collect()
}

/// Unit-width Gaussians following the two dissociated walls; `plus` is
/// centred at `k0 + v t`, `minus` at `k0 - v t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTracker {
    pub k0: f64,
    pub velocity: f64,
}

/// `f(k)` normalised over `k = 1..=kmax`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeWeights {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

fn gaussian(centre: f64, kmax: usize) -> Vec<f64> {
    // shift exponents so the largest is 0; nothing underflows to all-zero
    let exps: Vec<f64> = (1..=kmax).map(|k| -(k as f64 - centre).powi(2)).collect();
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = exps.iter().map(|e| (e - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

impl EnvelopeTracker {
    pub fn new(k0: f64, velocity: f64) -> Self {
        Self { k0, velocity }
    }

    pub fn weights(&self, t: f64, kmax: usize) -> EnvelopeWeights {
        EnvelopeWeights {
            plus: gaussian(self.k0 + self.velocity * t, kmax),
            minus: gaussian(self.k0 - self.velocity * t, kmax),
        }
    }
}

/// `Delta_pm(t) = sum_k f_pm(t, k) |Delta_k(t)|`.
pub fn dw_amplitudes(profiles: &[InhomogeneityProfile], tracker: &EnvelopeTracker) -> (Vec<f64>, Vec<f64>) {
    profiles
        .iter()
        .map(|p| {
            let w = tracker.weights(p.t, p.kmax());
            let dot = |f: &[f64]| f.iter().zip(&p.values).map(|(a, d)| a * d.abs()).sum::<f64>();
            (dot(&w.plus), dot(&w.minus))
        })
        .unzip()
}

fn check_uniform(times: &[f64]) -> Result<(), ObservableError> {
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(ObservableError::NonIncreasingTime { prev: w[0], next: w[1] });
        }
    }
    if times.len() > 2 {
        let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if times.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step) {
            return Err(ObservableError::NonUniformSampling);
        }
    }
    Ok(())
}

fn spectrum(values: &[f64]) -> Vec<C64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut buf: Vec<C64> = values.iter().map(|v| C64::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn dominant_bin(spec: &[C64]) -> usize {
    let half = spec.len() / 2;
    (1..=half).max_by(|&a, &b| spec[a].norm().total_cmp(&spec[b].norm())).unwrap_or(1)
}

/// Relative phase in `[0, pi]` of two uniformly sampled series restricted to
/// `window` (inclusive), read off the cross spectrum at the shared dominant
/// frequency of the mean-subtracted signals.
pub fn phase_relation(
    times: &[f64],
    first: &[f64],
    second: &[f64],
    window: (f64, f64),
) -> Result<f64, ObservableError> {
    if times.len() != first.len() || times.len() != second.len() {
        return Err(ObservableError::Shape(format!("{} times, {} and {} values", times.len(), first.len(), second.len())));
    }
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= window.0 - 1e-9 && times[i] <= window.1 + 1e-9).collect();
    if idx.len() < 8 {
        return Err(ObservableError::InsufficientSamples { needed: 8, got: idx.len() });
    }
    let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    check_uniform(&t)?;
    let a = spectrum(&idx.iter().map(|&i| first[i]).collect::<Vec<_>>());
    let b = spectrum(&idx.iter().map(|&i| second[i]).collect::<Vec<_>>());
    let (fa, fb) = (dominant_bin(&a) as f64, dominant_bin(&b) as f64);
    if (fa - fb).abs() > 0.2 * fa.max(fb) {
        return Err(ObservableError::IndeterminatePhase { first: fa, second: fb });
    }
    let half = a.len() / 2;
    let common = (1..=half).max_by(|&i, &j| (a[i].norm() * b[i].norm()).total_cmp(&(a[j].norm() * b[j].norm()))).unwrap_or(1);
    Ok((a[common] * b[common].conj()).arg().abs())
}

/// `D = (1/2) ||rho - sigma||_1`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, ObservableError> {
    if rho.dim() != sigma.dim() {
        return Err(ObservableError::Shape(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    let diff = rho.as_mat() - sigma.as_mat();
    Ok(0.5 * hermitian_eigenvalues(diff.as_ref()).iter().map(|x| x.abs()).sum::<f64>())
}

/// Largest `|x_{i+1} - x_i|`.
pub fn max_increment(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

/// Values of one observable on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries<T> {
    name: String,
    times: Vec<f64>,
    values: Vec<T>,
}

impl<T> ObservableSeries<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), times: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, t: f64, value: T) -> Result<(), ObservableError> {
        if let Some(&prev) = self.times.last() {
            if t <= prev {
                return Err(ObservableError::NonIncreasingTime { prev, next: t });
            }
        }
        self.times.push(t);
        self.values.push(value);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at the sample closest to `t`.
    pub fn at(&self, t: f64) -> Option<&T> {
        let i = (0..self.times.len()).min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))?;
        self.values.get(i)
    }
}
