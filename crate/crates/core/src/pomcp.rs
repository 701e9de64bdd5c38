//! Monte-Carlo tree search over a belief tree whose observation branches are
//! keyed by a discretisation of the continuous observation space.

use std::collections::HashMap;

use rand::distr::Distribution;
use rand::Rng;

use crate::belief::WeightedBelief;
use crate::error::{Error, Result};
use crate::model::{Observation, PomdpModel};
use crate::planning::{argmax_random_tie, choose, default_max_depth, Budget, PlanResult, Planner};

/// How observations are mapped to branch keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscretisationScheme {
    /// Component-wise `floor(o_j / resolution)`.
    Grid { resolution: f64 },
    /// Observations within `distance` (euclidean) of a stored representative
    /// share its key; representatives are kept per (node, action) in arrival
    /// order.
    Threshold { distance: f64 },
}

impl DiscretisationScheme {
    pub fn resolution(&self) -> f64 {
        match *self {
            DiscretisationScheme::Grid { resolution } => resolution,
            DiscretisationScheme::Threshold { distance } => distance,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DiscretisationScheme::Grid { .. } => "grid",
            DiscretisationScheme::Threshold { .. } => "threshold",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.resolution();
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("discretisation resolution {r} must be positive and finite")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ObservationKey {
    Cell(Vec<i64>),
    Representative(usize),
}

/// Maps `observation` to its branch key. `representatives` is the
/// per-(node, action) list used by the threshold scheme and is extended
/// when the observation matches none of its entries.
pub fn discretise_observation(
    observation: &Observation,
    scheme: &DiscretisationScheme,
    representatives: &mut Vec<Observation>,
) -> ObservationKey {
    match *scheme {
        DiscretisationScheme::Grid { resolution } => {
            ObservationKey::Cell(observation.values().iter().map(|o| (o / resolution).floor() as i64).collect())
        }
        DiscretisationScheme::Threshold { distance } => {
            let index = match representatives.iter().position(|r| r.distance(observation) < distance) {
                Some(i) => i,
                None => {
                    representatives.push(observation.clone());
                    representatives.len() - 1
                }
            };
            ObservationKey::Representative(index)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PomcpConfig {
    pub exploration: f64,
    /// Search and rollout depth cap; `None` uses the smallest depth with
    /// `γ^d ≤ 0.01`.
    pub max_depth: Option<usize>,
    pub budget: Budget,
    pub scheme: DiscretisationScheme,
}

impl Default for PomcpConfig {
    fn default() -> Self {
        Self {
            exploration: 40.0,
            max_depth: None,
            budget: Budget::Episodes(3000),
            scheme: DiscretisationScheme::Grid { resolution: 1.0 },
        }
    }
}

impl PomcpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exploration >= 0.0) {
            return Err(Error::Config(format!("exploration constant {} must be non-negative", self.exploration)));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be positive".into()));
        }
        self.scheme.validate()
    }
}

/// Statistics of one action at a belief node.
#[derive(Debug, Clone, Default)]
pub struct ActionEdge {
    pub visits: u64,
    pub mean: f64,
    pub return_sum: f64,
    pub children: HashMap<ObservationKey, usize>,
    pub representatives: Vec<Observation>,
}

#[derive(Debug, Clone)]
pub struct BeliefNode<S> {
    pub visits: u64,
    pub edges: Vec<ActionEdge>,
    /// States that reached this node during search.
    pub particles: Vec<S>,
}

impl<S> BeliefNode<S> {
    fn new(action_count: usize) -> Self {
        Self { visits: 0, edges: vec![ActionEdge::default(); action_count], particles: Vec::new() }
    }

    pub fn q_estimate(&self, action: usize) -> Option<f64> {
        let e = &self.edges[action];
        (e.visits > 0).then_some(e.mean)
    }
}

#[derive(Debug, Clone)]
pub struct PomcpPlanner<S> {
    config: PomcpConfig,
    nodes: Vec<BeliefNode<S>>,
}

impl<S: Clone> PomcpPlanner<S> {
    pub fn new(config: PomcpConfig) -> Self {
        Self { config, nodes: Vec::new() }
    }

    pub fn config(&self) -> &PomcpConfig {
        &self.config
    }

    /// Belief nodes of the last search; index 0 is the root.
    pub fn nodes(&self) -> &[BeliefNode<S>] {
        &self.nodes
    }

    /// Checks `N(b) = Σ_a N(b, a)` and `mean = return_sum / N(b, a)` for every node.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (i, node) in self.nodes.iter().enumerate() {
            let total: u64 = node.edges.iter().map(|e| e.visits).sum();
            if total != node.visits {
                return Err(format!("node {i}: N(b) = {} but Σ N(b,a) = {total}", node.visits));
            }
            for (a, e) in node.edges.iter().enumerate() {
                if e.visits > 0 {
                    let exact = e.return_sum / e.visits as f64;
                    if (exact - e.mean).abs() > 1e-9 * exact.abs().max(1.0) {
                        return Err(format!("node {i} action {a}: mean {} vs {exact}", e.mean));
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds a fresh tree at `belief` by running simulations until the
    /// budget is spent, then picks the root action with the highest mean
    /// return among tried actions.
    pub fn plan<M, R>(&mut self, belief: &WeightedBelief<S>, model: &M, rng: &mut R) -> Result<PlanResult>
    where
        M: PomdpModel<State = S>,
        R: Rng + ?Sized,
    {
        belief.validate()?;
        self.config.validate()?;
        let action_count = model.action_count();
        self.nodes.clear();
        self.nodes.push(BeliefNode::new(action_count));
        let max_depth = self.config.max_depth.unwrap_or_else(|| default_max_depth(model.discount()));
        let mut clock = self.config.budget.start();
        let mut samples = 0;
        let sampler = belief.index_sampler()?;
        while clock.tick() {
            let state = belief.particles()[sampler.sample(rng)].state.clone();
            self.simulate(0, state, 0, max_depth, model, rng)?;
            samples += 1;
        }

        let root = &self.nodes[0];
        let q_values: Vec<Option<f64>> = (0..action_count).map(|a| root.q_estimate(a)).collect();
        let best = argmax_random_tie(q_values.iter().enumerate().filter_map(|(a, q)| q.map(|q| (a, q))), rng);
        let (action, unconverged) = match best {
            Some(a) => (a, false),
            None => (rng.random_range(0..action_count), true),
        };
        Ok(PlanResult {
            action,
            q_values,
            action_weights: root.edges.iter().map(|e| e.visits as f64).collect(),
            samples,
            unconverged,
        })
    }

    fn select<R: Rng + ?Sized>(&self, node: usize, rng: &mut R) -> usize {
        let node = &self.nodes[node];
        let unvisited: Vec<usize> = (0..node.edges.len()).filter(|&a| node.edges[a].visits == 0).collect();
        if !unvisited.is_empty() {
            return choose(&unvisited, rng);
        }
        let log_n = (node.visits as f64).ln();
        let c = self.config.exploration;
        let scores = node.edges.iter().enumerate().map(|(a, e)| (a, e.mean + c * (log_n / e.visits as f64).sqrt()));
        argmax_random_tie(scores, rng).expect("at least one action")
    }

    fn simulate<M, R>(&mut self, node: usize, state: S, depth: usize, max_depth: usize, model: &M, rng: &mut R) -> Result<f64>
    where
        M: PomdpModel<State = S>,
        R: Rng + ?Sized,
    {
        if model.is_terminal(&state) {
            return Ok(0.0);
        }
        if depth >= max_depth {
            return Ok(model.heuristic_state_value(&state));
        }
        self.nodes[node].particles.push(state.clone());
        let action = self.select(node, rng);
        let step = model.step(&state, action, rng)?;
        let future = if step.terminal {
            0.0
        } else {
            let scheme = self.config.scheme;
            let fresh_index = self.nodes.len();
            let edge = &mut self.nodes[node].edges[action];
            let key = discretise_observation(&step.observation, &scheme, &mut edge.representatives);
            match edge.children.get(&key) {
                Some(&child) => self.simulate(child, step.next_state, depth + 1, max_depth, model, rng)?,
                None => {
                    edge.children.insert(key, fresh_index);
                    let mut fresh = BeliefNode::new(model.action_count());
                    fresh.particles.push(step.next_state.clone());
                    self.nodes.push(fresh);
                    rollout(step.next_state, depth + 1, max_depth, model, rng)?
                }
            }
        };
        let total = step.reward + model.discount() * future;
        let node = &mut self.nodes[node];
        node.visits += 1;
        let edge = &mut node.edges[action];
        edge.visits += 1;
        edge.return_sum += total;
        edge.mean += (total - edge.mean) / edge.visits as f64;
        Ok(total)
    }
}

/// Discounted return of uniform-random actions from `state` until a terminal
/// state or the depth cap, where the heuristic supplies the remainder.
fn rollout<M, R>(mut state: M::State, mut depth: usize, max_depth: usize, model: &M, rng: &mut R) -> Result<f64>
where
    M: PomdpModel,
    R: Rng + ?Sized,
{
    let discount = model.discount();
    let mut total = 0.0;
    let mut scale = 1.0;
    loop {
        if model.is_terminal(&state) {
            return Ok(total);
        }
        if depth >= max_depth {
            return Ok(total + scale * model.heuristic_state_value(&state));
        }
        let action = rng.random_range(0..model.action_count());
        let step = model.step(&state, action, rng)?;
        total += scale * step.reward;
        scale *= discount;
        state = step.next_state;
        depth += 1;
    }
}

impl<M: PomdpModel> Planner<M> for PomcpPlanner<M::State> {
    fn plan<R: Rng + ?Sized>(&mut self, belief: &WeightedBelief<M::State>, model: &M, rng: &mut R) -> Result<PlanResult> {
        PomcpPlanner::plan(self, belief, model, rng)
    }
}
