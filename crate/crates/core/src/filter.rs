//! Belief tracking between executed steps.
//!
//! [`sir_update`] is the sequential-importance-resampling filter used while
//! executing a policy. [`exact_update`] is the exact Bayes filter for
//! enumerable models and serves as its test oracle.

use rand::Rng;

use crate::belief::{systematic_indices, Particle, WeightedBelief};
use crate::error::{Error, Result};
use crate::model::{EnumerableModel, Observation, PomdpModel};

/// Extra propagation attempts when every particle has zero likelihood.
pub const DEPLETION_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResamplePolicy {
    /// Resample to uniform weights after every update.
    Always,
    /// Resample when the effective sample size drops below this fraction of
    /// the particle count.
    EssBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub particle_count: usize,
    pub resample: ResamplePolicy,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { particle_count: 10_000, resample: ResamplePolicy::Always }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particle_count == 0 {
            return Err(Error::Config("particle_count must be at least 1".into()));
        }
        if let ResamplePolicy::EssBelow(t) = self.resample {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("ESS threshold {t} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// One SIR step: draw ancestors proportionally to weight, propagate them
/// through the generative model, weight by `Z(s', a, o)` against the real
/// observation and resample according to `config.resample`.
///
/// The filter runs only after executed steps that did not terminate, so
/// propagated particles that reach a terminal state get zero weight. If every
/// particle ends up with zero weight the ancestors are re-propagated up to
/// [`DEPLETION_RETRIES`] times; failing that, the propagated particles are
/// returned with uniform weights and the belief is flagged degenerate.
pub fn sir_update<M, R>(
    belief: &WeightedBelief<M::State>,
    action: usize,
    observation: &Observation,
    model: &M,
    config: &FilterConfig,
    rng: &mut R,
) -> Result<WeightedBelief<M::State>>
where
    M: PomdpModel,
    R: Rng + ?Sized,
{
    belief.validate()?;
    config.validate()?;
    let n = config.particle_count;
    let weights: Vec<f64> = belief.particles().iter().map(|p| p.weight).collect();
    let ancestors = systematic_indices(&weights, n, rng);

    let mut states = Vec::with_capacity(n);
    let mut log_w = Vec::with_capacity(n);
    let mut depleted = true;
    for _ in 0..=DEPLETION_RETRIES {
        states.clear();
        log_w.clear();
        for &i in &ancestors {
            let next = model.step(&belief.particles()[i].state, action, rng)?.next_state;
            let lw = if model.is_terminal(&next) {
                f64::NEG_INFINITY
            } else {
                model.log_observation_density(&next, action, observation)
            };
            states.push(next);
            log_w.push(lw);
        }
        if log_w.iter().any(|w| *w > f64::NEG_INFINITY) {
            depleted = false;
            break;
        }
    }

    if depleted {
        return Ok(WeightedBelief::uniform(states).with_degenerate(true));
    }

    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_w.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);

    let resample = match config.resample {
        ResamplePolicy::Always => true,
        ResamplePolicy::EssBelow(t) => crate::belief::effective_sample_size(w.iter().copied()) < t * n as f64,
    };
    if resample {
        let picks = systematic_indices(&w, n, rng);
        Ok(WeightedBelief::uniform(picks.into_iter().map(|i| states[i].clone()).collect()))
    } else {
        Ok(WeightedBelief::new(
            states.into_iter().zip(w).map(|(state, weight)| Particle { state, weight }).collect(),
        ))
    }
}

/// `Σ_s T(s, a, s') b(s)` over the model's state enumeration.
pub fn predict<M: EnumerableModel>(model: &M, belief: &[f64], action: usize) -> Vec<f64> {
    let states = model.states();
    let mut predicted = vec![0.0; states.len()];
    for (s, &p) in states.iter().zip(belief) {
        if p == 0.0 {
            continue;
        }
        for (next, mass) in model.transition(s, action) {
            predicted[model.state_index(&next)] += mass * p;
        }
    }
    predicted
}

/// Exact Bayes update `b'(s') ∝ Z(s', a, o) Σ_s T(s, a, s') b(s)`.
pub fn exact_update<M: EnumerableModel>(
    model: &M,
    belief: &[f64],
    action: usize,
    observation: &Observation,
) -> Result<Vec<f64>> {
    let states = model.states();
    let mut posterior = predict(model, belief, action);
    for (p, s) in posterior.iter_mut().zip(&states) {
        if *p > 0.0 {
            *p *= model.observation_density(s, action, observation);
        }
    }
    let total: f64 = posterior.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ImpossibleObservation);
    }
    posterior.iter_mut().for_each(|p| *p /= total);
    Ok(posterior)
}

/// Histogram of a particle belief over an enumerable model's states.
pub fn to_distribution<M: EnumerableModel>(model: &M, belief: &WeightedBelief<M::State>) -> Vec<f64> {
    let mut dist = vec![0.0; model.states().len()];
    for p in belief.particles() {
        dist[model.state_index(&p.state)] += p.weight;
    }
    dist
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
