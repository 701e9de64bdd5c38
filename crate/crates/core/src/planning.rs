//! Pieces shared by the online planners: budgets, plan results and
//! tie-aware argmax.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::belief::WeightedBelief;
use crate::error::Result;
use crate::model::PomdpModel;

/// Discount mass below which the remainder of a trajectory is truncated.
pub const TRUNCATION_TOLERANCE: f64 = 0.01;

/// Relative tolerance under which two scores count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Smallest depth `d` with `γ^d ≤ 0.01`.
pub fn default_max_depth(discount: f64) -> usize {
    (TRUNCATION_TOLERANCE.ln() / discount.ln()).ceil() as usize
}

/// How much search a planner may perform per decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// A fixed number of sampled episodes (or simulations); reproducible.
    Episodes(usize),
    /// A wall-clock allowance.
    WallClock(Duration),
}

impl Budget {
    pub(crate) fn start(self) -> BudgetClock {
        BudgetClock { budget: self, started: Instant::now(), used: 0 }
    }
}

pub(crate) struct BudgetClock {
    budget: Budget,
    started: Instant,
    used: usize,
}

impl BudgetClock {
    /// Consumes one unit, returning false once the budget is spent.
    pub(crate) fn tick(&mut self) -> bool {
        let more = match self.budget {
            Budget::Episodes(n) => self.used < n,
            Budget::WallClock(d) => self.started.elapsed() < d,
        };
        if more {
            self.used += 1;
        }
        more
    }
}

/// What a planner decided at one belief.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub action: usize,
    /// Estimated `Q(b, a)` per action; `None` for actions never tried.
    pub q_values: Vec<Option<f64>>,
    /// Visit weight per root action (`W(b, a)` or `N(b, a)`).
    pub action_weights: Vec<f64>,
    /// Episodes or simulations performed.
    pub samples: usize,
    /// True when no root action was ever tried and the action is random.
    pub unconverged: bool,
}

/// An online planner that picks an action for a belief.
pub trait Planner<M: PomdpModel> {
    fn plan<R: Rng + ?Sized>(
        &mut self,
        belief: &WeightedBelief<M::State>,
        model: &M,
        rng: &mut R,
    ) -> Result<PlanResult>;
}

/// Picks uniformly at random among all actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPlanner;

impl<M: PomdpModel> Planner<M> for RandomPlanner {
    fn plan<R: Rng + ?Sized>(&mut self, _belief: &WeightedBelief<M::State>, model: &M, rng: &mut R) -> Result<PlanResult> {
        let n = model.action_count();
        Ok(PlanResult {
            action: rng.random_range(0..n),
            q_values: vec![None; n],
            action_weights: vec![0.0; n],
            samples: 0,
            unconverged: false,
        })
    }
}

fn tied(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Index of the largest score, breaking (relative) ties uniformly at random.
/// Returns `None` for an empty iterator.
pub(crate) fn argmax_random_tie<R: Rng + ?Sized>(
    scores: impl IntoIterator<Item = (usize, f64)>,
    rng: &mut R,
) -> Option<usize> {
    let scores: Vec<(usize, f64)> = scores.into_iter().collect();
    let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = scores.iter().filter(|s| tied(s.1, best)).map(|s| s.0).collect();
    match ties.len() {
        0 => scores.first().map(|s| s.0),
        1 => Some(ties[0]),
        n => Some(ties[rng.random_range(0..n)]),
    }
}

/// Uniform choice from a non-empty slice.
pub(crate) fn choose<R: Rng + ?Sized>(items: &[usize], rng: &mut R) -> usize {
    items[rng.random_range(0..items.len())]
}
