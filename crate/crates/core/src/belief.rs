//! Weighted particle beliefs.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance used when checking that a belief is normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A state together with its (non-negative) belief weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle<S> {
    pub state: S,
    pub weight: f64,
}

/// A sampled approximation of a distribution over states.
///
/// A belief is `degenerate` when every particle received zero likelihood during
/// an update; such beliefs carry uniform fallback weights and the flag records
/// that the weights are not a posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBelief<S> {
    particles: Vec<Particle<S>>,
    degenerate: bool,
}

impl<S> WeightedBelief<S> {
    pub fn new(particles: Vec<Particle<S>>) -> Self {
        Self { particles, degenerate: false }
    }

    /// Equal weights over the given states.
    pub fn uniform(states: Vec<S>) -> Self {
        let w = 1.0 / states.len().max(1) as f64;
        Self::new(states.into_iter().map(|state| Particle { state, weight: w }).collect())
    }

    pub fn point_mass(state: S) -> Self {
        Self::new(vec![Particle { state, weight: 1.0 }])
    }

    pub fn from_weighted(pairs: impl IntoIterator<Item = (S, f64)>) -> Self {
        Self::new(pairs.into_iter().map(|(state, weight)| Particle { state, weight }).collect())
    }

    pub(crate) fn with_degenerate(mut self, degenerate: bool) -> Self {
        self.degenerate = degenerate;
        self
    }

    pub fn particles(&self) -> &[Particle<S>] {
        &self.particles
    }

    pub fn into_particles(self) -> Vec<Particle<S>> {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// Rescales weights to sum to one. When the total weight is zero the
    /// belief falls back to uniform weights and is flagged degenerate.
    pub fn normalize(&mut self) {
        let total = self.total_weight();
        if total > 0.0 && total.is_finite() {
            for p in &mut self.particles {
                p.weight /= total;
            }
        } else {
            let w = 1.0 / self.particles.len().max(1) as f64;
            for p in &mut self.particles {
                p.weight = w;
            }
            self.degenerate = true;
        }
    }

    /// Checks the planner/filter precondition: non-empty and normalized.
    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyBelief);
        }
        let total = self.total_weight();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::UnnormalizedBelief(total));
        }
        Ok(())
    }

    /// `1 / Σ w²`.
    pub fn effective_sample_size(&self) -> f64 {
        effective_sample_size(self.particles.iter().map(|p| p.weight))
    }

    /// Draws a particle index with probability proportional to its weight.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.total_weight();
        let mut u = rng.random::<f64>() * total;
        for (i, p) in self.particles.iter().enumerate() {
            if u < p.weight {
                return i;
            }
            u -= p.weight;
        }
        // Rounding can leave u marginally above the last weight.
        self.particles.iter().rposition(|p| p.weight > 0.0).unwrap_or(0)
    }

    /// Sampler over particle indices, proportional to weight, for repeated
    /// draws from the same belief.
    pub fn index_sampler(&self) -> Result<WeightedIndex<f64>> {
        WeightedIndex::new(self.particles.iter().map(|p| p.weight))
            .map_err(|e| Error::Config(format!("cannot sample from belief: {e}")))
    }

    /// Weighted mean of a scalar feature of the state.
    pub fn mean_by(&self, f: impl Fn(&S) -> f64) -> f64 {
        self.particles.iter().map(|p| p.weight * f(&p.state)).sum::<f64>() / self.total_weight()
    }
}

/// `1 / Σ w²` over normalized weights.
pub fn effective_sample_size(weights: impl IntoIterator<Item = f64>) -> f64 {
    let sum_sq: f64 = weights.into_iter().map(|w| w * w).sum();
    1.0 / sum_sq
}

/// Systematic resampling: returns `n` ancestor indices drawn proportionally to
/// `weights` using a single uniform offset.
pub fn systematic_indices<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let step = total / n as f64;
    let mut u = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut cumulative = 0.0;
    let mut i = 0;
    let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    for _ in 0..n {
        while i < last && cumulative + weights[i] <= u {
            cumulative += weights[i];
            i += 1;
        }
        out.push(i);
        u += step;
    }
    out
}
