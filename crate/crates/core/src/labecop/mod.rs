//! Online planning by lazy belief extraction from re-weighted episodes.
//!
//! The planner keeps no search tree. It stores complete sampled episodes and,
//! while sampling a new one, re-derives the sequence of beliefs that episode
//! visits by re-weighting the stored episodes that share its action prefix
//! against each newly sampled observation. Actions are chosen with a UCB1
//! rule over weighted visit counts and weighted value averages, and every
//! finished episode is backed up once.

mod episode;
mod extraction;
mod selection;

use rand::Rng;

use crate::belief::WeightedBelief;
use crate::error::{Error, Result};
use crate::model::PomdpModel;
use crate::planning::{argmax_random_tie, default_max_depth, Budget, PlanResult, Planner};

pub use episode::{backup_episode, Episode, EpisodeSet, Quadruple};
use extraction::{extract_from, Candidates};
pub use extraction::{extract_belief, ExtractedBelief};
pub use selection::{q_estimate, select_action, ucb_score, ActionStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabecopConfig {
    /// UCB1 exploration constant `c`.
    pub exploration: f64,
    /// Episode length cap; `None` uses the smallest depth with `γ^d ≤ 0.01`.
    pub max_depth: Option<usize>,
    pub budget: Budget,
}

impl Default for LabecopConfig {
    fn default() -> Self {
        Self { exploration: 20.0, max_depth: None, budget: Budget::Episodes(3000) }
    }
}

impl LabecopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exploration >= 0.0) {
            return Err(Error::Config(format!("exploration constant {} must be non-negative", self.exploration)));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LabecopPlanner<S> {
    config: LabecopConfig,
    episodes: EpisodeSet<S>,
}

impl<S: Clone> LabecopPlanner<S> {
    pub fn new(config: LabecopConfig) -> Self {
        Self { config, episodes: EpisodeSet::new() }
    }

    pub fn config(&self) -> &LabecopConfig {
        &self.config
    }

    pub fn episodes(&self) -> &EpisodeSet<S> {
        &self.episodes
    }

    /// Clears the episode set and samples episodes from `belief` until the
    /// budget runs out, then picks the action with the highest `Q̂` among
    /// actions with positive root weight.
    pub fn plan<M, R>(&mut self, belief: &WeightedBelief<S>, model: &M, rng: &mut R) -> Result<PlanResult>
    where
        M: PomdpModel<State = S>,
        R: Rng + ?Sized,
    {
        belief.validate()?;
        self.config.validate()?;
        self.episodes.clear();
        let mut clock = self.config.budget.start();
        while clock.tick() {
            self.sample_episode(belief, model, rng)?;
        }
        Ok(self.root_decision(model.action_count(), rng))
    }

    fn root_decision<R: Rng + ?Sized>(&self, action_count: usize, rng: &mut R) -> PlanResult {
        let stats = self.episodes.root_stats(action_count);
        let q_values: Vec<Option<f64>> = (0..action_count).map(|a| stats.q_estimate(a)).collect();
        let best = argmax_random_tie(q_values.iter().enumerate().filter_map(|(a, q)| q.map(|q| (a, q))), rng);
        let (action, unconverged) = match best {
            Some(a) => (a, false),
            None => (rng.random_range(0..action_count), true),
        };
        PlanResult {
            action,
            q_values,
            action_weights: stats.action_weight,
            samples: self.episodes.len(),
            unconverged,
        }
    }

    /// Samples one episode from `belief`, extending it while the selected
    /// actions are visited, the state is non-terminal and the depth cap is
    /// not reached. The finished, backed-up episode is appended to the set.
    pub fn sample_episode<M, R>(&mut self, belief: &WeightedBelief<S>, model: &M, rng: &mut R) -> Result<&Episode<S>>
    where
        M: PomdpModel<State = S>,
        R: Rng + ?Sized,
    {
        let discount = model.discount();
        let action_count = model.action_count();
        let max_depth = self.config.max_depth.unwrap_or_else(|| default_max_depth(discount));
        let exploration = self.config.exploration;

        let root = &belief.particles()[rng.random_range(0..belief.len())];
        let mut state = root.state.clone();
        let mut episode = Episode::new(root.weight);

        // `None` stands for the root belief, whose statistics come from the
        // running sums of the episode set.
        let mut current: Option<ExtractedBelief> = None;
        let mut next_stats: Option<ActionStats> = None;
        self.episodes.recycle_scratch();
        let mut depth = 0;
        let (tail, reached_terminal) = loop {
            if model.is_terminal(&state) {
                break (0.0, true);
            }
            if depth >= max_depth {
                break (model.heuristic_state_value(&state), false);
            }
            let stats = match (next_stats.take(), &current) {
                (Some(stats), _) => stats,
                (None, None) => self.episodes.root_stats(action_count),
                (None, Some(b)) => self.episodes.stats(b, action_count),
            };
            let (action, unvisited) = stats.select(exploration, rng);
            let step = model.step(&state, action, rng)?;
            if !unvisited {
                let out = self.episodes.spare_buffer();
                let set = &self.episodes;
                let (depth, members, weights) = match &current {
                    None => {
                        let (m, w) = set.root_members(action);
                        (0, m, w)
                    }
                    Some(b) => (b.depth, &b.members[..], &b.weights[..]),
                };
                let actions = set.actions_at(depth);
                let states = set.states_at(depth + 1);
                let candidates = Candidates {
                    depth,
                    members,
                    weights,
                    took: |h: usize| actions.get(h) == Some(&(action as u32)),
                    next_state: |h: usize| &states[h],
                };
                // Statistics of the new belief are summed while its weights
                // are normalized, in the order `EpisodeSet::stats` uses.
                let (next_actions, next_values) = set.column_at(depth + 1);
                let mut acc = ActionStats::empty(action_count);
                let next = extract_from(&candidates, action, &step.observation, model, out, |h, w| {
                    acc.add(w, next_actions.get(h).copied(), || next_values[h]);
                });
                next_stats = Some(acc);
                if let Some(previous) = current.replace(next) {
                    self.episodes.scratch_mut().push(previous);
                }
            }
            episode.push(std::mem::replace(&mut state, step.next_state), action, step.observation, step.reward);
            depth += 1;
            if unvisited {
                break if model.is_terminal(&state) {
                    (0.0, true)
                } else {
                    (model.heuristic_state_value(&state), false)
                };
            }
        };
        if let Some(last) = current {
            self.episodes.scratch_mut().push(last);
        }
        episode.finish(state, tail, reached_terminal, discount);
        self.episodes.push(episode);
        Ok(self.episodes.last().expect("just pushed"))
    }
}

impl<M: PomdpModel> Planner<M> for LabecopPlanner<M::State> {
    fn plan<R: Rng + ?Sized>(&mut self, belief: &WeightedBelief<M::State>, model: &M, rng: &mut R) -> Result<PlanResult> {
        LabecopPlanner::plan(self, belief, model, rng)
    }
}
