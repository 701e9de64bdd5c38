//! The problem-side interface consumed by every planner and filter.
//!
//! A model is a generative black box `(s', o, r) = G(s, a)` together with an
//! explicit observation density `Z(s', a, o)`, an initial belief, a terminal
//! predicate and a heuristic used to value truncated trajectories. Transition
//! densities are never evaluated by the planners.

use std::fmt::Debug;

use rand::Rng;

use crate::belief::WeightedBelief;
use crate::error::{Error, Result};

/// An observation vector. Problems declare a fixed length; the empty vector is
/// reserved as the null observation emitted by actions that carry no sensing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn scalar(value: f64) -> Self {
        Self(vec![value])
    }

    pub fn null() -> Self {
        Self(Vec::new())
    }

    pub fn is_null(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &Observation) -> f64 {
        if self.0.len() != other.0.len() {
            return f64::INFINITY;
        }
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// Result of one call to the generative model.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<S> {
    pub next_state: S,
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
}

/// How an executed run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Goal,
    Collision,
    Stop,
    StepLimit,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Goal => "goal",
            Outcome::Collision => "collision",
            Outcome::Stop => "stop",
            Outcome::StepLimit => "step-limit",
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "goal" => Ok(Outcome::Goal),
            "collision" => Ok(Outcome::Collision),
            "stop" => Ok(Outcome::Stop),
            "step-limit" => Ok(Outcome::StepLimit),
            other => Err(Error::Config(format!("unknown outcome {other:?}"))),
        }
    }
}

/// A POMDP with a finite, dense action set `0..action_count()`.
///
/// Implementations must be immutable after construction; all randomness comes
/// from the caller's rng so that replaying with a cloned rng reproduces the
/// exact same results.
pub trait PomdpModel: Send + Sync {
    type State: Clone + Debug + Send + Sync;

    fn action_count(&self) -> usize;

    fn action_label(&self, action: usize) -> String {
        action.to_string()
    }

    /// Discount factor, strictly inside (0, 1).
    fn discount(&self) -> f64;

    /// Length of non-null observation vectors.
    fn observation_dim(&self) -> usize;

    /// Samples `G(s, a)`. `state` must be non-terminal.
    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: usize,
        rng: &mut R,
    ) -> Result<StepResult<Self::State>>;

    /// `Z(s', a, o)`: density (or mass, for discrete observations) of `o`.
    fn observation_density(&self, next_state: &Self::State, action: usize, observation: &Observation) -> f64;

    /// Natural log of [`PomdpModel::observation_density`]. Models with
    /// closed-form log densities override this to avoid underflow.
    fn log_observation_density(&self, next_state: &Self::State, action: usize, observation: &Observation) -> f64 {
        self.observation_density(next_state, action, observation).ln()
    }

    /// `s' ↦ Z(s', a, o)` for one fixed action and observation, for scoring
    /// many successor states against the same observation.
    fn likelihood<'a>(&'a self, action: usize, observation: &'a Observation) -> impl Fn(&Self::State) -> f64 + 'a {
        move |s| self.observation_density(s, action, observation)
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Particle approximation of the initial belief. The default draws
    /// `particle_count` i.i.d. samples from [`PomdpModel::sample_initial`].
    fn initial_belief<R: Rng + ?Sized>(&self, particle_count: usize, rng: &mut R) -> WeightedBelief<Self::State> {
        WeightedBelief::uniform((0..particle_count.max(1)).map(|_| self.sample_initial(rng)).collect())
    }

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Estimated discounted value of taking `action` in `state` and
    /// continuing. Must be 0 for terminal states and scale linearly with the
    /// model's rewards.
    fn heuristic_value(&self, state: &Self::State, action: usize) -> f64;

    /// Heuristic value of a state, used as the tail value of truncated
    /// trajectories: the best [`PomdpModel::heuristic_value`] over actions.
    fn heuristic_state_value(&self, state: &Self::State) -> f64 {
        if self.is_terminal(state) {
            return 0.0;
        }
        (0..self.action_count())
            .map(|a| self.heuristic_value(state, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Classifies a terminal state for run records.
    fn outcome(&self, _terminal_state: &Self::State) -> Outcome {
        Outcome::Stop
    }
}

/// Returns an error unless `action < count`.
pub fn check_action(action: usize, count: usize) -> Result<()> {
    if action < count {
        Ok(())
    } else {
        Err(Error::InvalidAction { action, count })
    }
}

/// Models whose states can be enumerated with exact transition masses.
pub trait EnumerableModel: PomdpModel {
    fn states(&self) -> Vec<Self::State>;

    /// Position of `state` in [`EnumerableModel::states`].
    fn state_index(&self, state: &Self::State) -> usize;

    /// Successor states with their probabilities; masses sum to one.
    fn transition(&self, state: &Self::State, action: usize) -> Vec<(Self::State, f64)>;

    /// Deterministic immediate reward `R(s, a)`.
    fn reward(&self, state: &Self::State, action: usize) -> f64;
}

/// Models with a finite observation set; their observation density is a mass
/// function over [`DiscreteObservations::observations`].
pub trait DiscreteObservations: PomdpModel {
    fn observations(&self) -> Vec<Observation>;
}

/// Wraps a model, multiplying every reward and heuristic value by `factor`.
#[derive(Debug, Clone)]
pub struct RewardScaled<M> {
    pub inner: M,
    pub factor: f64,
}

impl<M> RewardScaled<M> {
    pub fn new(inner: M, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl<M: PomdpModel> PomdpModel for RewardScaled<M> {
    type State = M::State;

    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    fn action_label(&self, action: usize) -> String {
        self.inner.action_label(action)
    }

    fn discount(&self) -> f64 {
        self.inner.discount()
    }

    fn observation_dim(&self) -> usize {
        self.inner.observation_dim()
    }

    fn step<R: Rng + ?Sized>(&self, state: &M::State, action: usize, rng: &mut R) -> Result<StepResult<M::State>> {
        let mut res = self.inner.step(state, action, rng)?;
        res.reward *= self.factor;
        Ok(res)
    }

    fn observation_density(&self, next_state: &M::State, action: usize, observation: &Observation) -> f64 {
        self.inner.observation_density(next_state, action, observation)
    }

    fn log_observation_density(&self, next_state: &M::State, action: usize, observation: &Observation) -> f64 {
        self.inner.log_observation_density(next_state, action, observation)
    }

    fn likelihood<'a>(&'a self, action: usize, observation: &'a Observation) -> impl Fn(&M::State) -> f64 + 'a {
        self.inner.likelihood(action, observation)
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> M::State {
        self.inner.sample_initial(rng)
    }

    fn initial_belief<R: Rng + ?Sized>(&self, particle_count: usize, rng: &mut R) -> WeightedBelief<M::State> {
        self.inner.initial_belief(particle_count, rng)
    }

    fn is_terminal(&self, state: &M::State) -> bool {
        self.inner.is_terminal(state)
    }

    fn heuristic_value(&self, state: &M::State, action: usize) -> f64 {
        self.factor * self.inner.heuristic_value(state, action)
    }

    fn heuristic_state_value(&self, state: &M::State) -> f64 {
        self.factor * self.inner.heuristic_state_value(state)
    }

    fn outcome(&self, terminal_state: &M::State) -> Outcome {
        self.inner.outcome(terminal_state)
    }
}

/// Density of `Normal(mean, sd)` at `x`.
pub fn gaussian_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    gaussian_log_pdf(x, mean, sd).exp()
}

pub fn gaussian_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_peak_value() {
        let peak = gaussian_pdf(0.0, 0.0, 1.0);
        assert!((peak - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!((peak - 0.3989).abs() < 1e-4);
    }

    #[test]
    fn gaussian_pdf_is_pure() {
        let a = gaussian_pdf(1.3, 0.2, 0.7);
        let b = gaussian_pdf(1.3, 0.2, 0.7);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn observation_distance() {
        let a = Observation::new(vec![0.0, 0.0, 0.0]);
        let b = Observation::new(vec![1.0, 1.0, 1.0]);
        assert!((a.distance(&b) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(Observation::null().distance(&Observation::null()), 0.0);
        assert!(a.distance(&Observation::null()).is_infinite());
    }

    #[test]
    fn check_action_bounds() {
        assert!(check_action(2, 3).is_ok());
        assert!(matches!(check_action(3, 3), Err(Error::InvalidAction { action: 3, count: 3 })));
    }

    #[test]
    fn outcome_round_trips_through_str() {
        for o in [Outcome::Goal, Outcome::Collision, Outcome::Stop, Outcome::StepLimit] {
            assert_eq!(o.as_str().parse::<Outcome>().unwrap(), o);
        }
    }
}
