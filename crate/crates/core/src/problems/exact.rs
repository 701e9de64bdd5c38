//! Brute-force expectimax over the belief tree of a small enumerable POMDP.

use crate::error::{Error, Result};
use crate::filter::predict;
use crate::model::{DiscreteObservations, EnumerableModel};

/// Largest horizon accepted by [`solve_exact`].
pub const MAX_EXACT_HORIZON: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    /// Optimal value of the root belief.
    pub value: f64,
    /// Optimal `Q(b, a)` for every root action.
    pub q: Vec<f64>,
    /// Smallest and largest optimal value over all non-terminal belief nodes.
    pub min_value: f64,
    pub max_value: f64,
}

impl ExactSolution {
    pub fn value_range(&self) -> f64 {
        self.max_value - self.min_value
    }

    pub fn best_action(&self) -> usize {
        let mut best = 0;
        for (a, &q) in self.q.iter().enumerate() {
            if q > self.q[best] {
                best = a;
            }
        }
        best
    }
}

/// Enumerates every action/observation sequence up to `horizon`, computing
/// beliefs with the exact Bayes filter and values by finite-horizon backup.
pub fn solve_exact<M>(model: &M, belief: &[f64], horizon: usize) -> Result<ExactSolution>
where
    M: EnumerableModel + DiscreteObservations,
{
    if horizon > MAX_EXACT_HORIZON {
        return Err(Error::HorizonTooLarge(horizon));
    }
    let mut solver = Expectimax { model, min: f64::INFINITY, max: f64::NEG_INFINITY };
    let q: Vec<f64> = if horizon == 0 || solver.is_terminal(belief) {
        vec![0.0; model.action_count()]
    } else {
        (0..model.action_count()).map(|a| solver.q_value(belief, a, horizon)).collect()
    };
    let value = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if horizon > 0 && !solver.is_terminal(belief) {
        solver.record(value);
    }
    let (min_value, max_value) = if solver.min.is_finite() { (solver.min, solver.max) } else { (0.0, 0.0) };
    Ok(ExactSolution { value, q, min_value, max_value })
}

struct Expectimax<'a, M> {
    model: &'a M,
    min: f64,
    max: f64,
}

impl<M: EnumerableModel + DiscreteObservations> Expectimax<'_, M> {
    fn record(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn is_terminal(&self, belief: &[f64]) -> bool {
        self.model
            .states()
            .iter()
            .zip(belief)
            .all(|(s, &p)| p == 0.0 || self.model.is_terminal(s))
    }

    fn value(&mut self, belief: &[f64], steps: usize) -> f64 {
        if steps == 0 || self.is_terminal(belief) {
            return 0.0;
        }
        let v = (0..self.model.action_count())
            .map(|a| self.q_value(belief, a, steps))
            .fold(f64::NEG_INFINITY, f64::max);
        self.record(v);
        v
    }

    fn q_value(&mut self, belief: &[f64], action: usize, steps: usize) -> f64 {
        let model = self.model;
        let states = model.states();
        let immediate: f64 = states.iter().zip(belief).map(|(s, &p)| p * model.reward(s, action)).sum();
        let predicted = predict(model, belief, action);
        let mut future = 0.0;
        for o in model.observations() {
            let joint: Vec<f64> = states
                .iter()
                .zip(&predicted)
                .map(|(s, &p)| if p > 0.0 { p * model.observation_density(s, action, &o) } else { 0.0 })
                .collect();
            let p_obs: f64 = joint.iter().sum();
            if p_obs <= 0.0 {
                continue;
            }
            let next: Vec<f64> = joint.iter().map(|p| p / p_obs).collect();
            future += p_obs * self.value(&next, steps - 1);
        }
        immediate + model.discount() * future
    }
}
