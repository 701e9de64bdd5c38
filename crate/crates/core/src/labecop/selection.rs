use rand::Rng;

use crate::planning::{argmax_random_tie, choose};

use super::episode::Episode;
use super::extraction::ExtractedBelief;

/// Weighted visit statistics of an extracted belief.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionStats {
    /// `N₊(b)`: members with strictly positive weight.
    pub positive_count: usize,
    /// `W(b)`.
    pub total_weight: f64,
    /// `W(b, a)` per action.
    pub action_weight: Vec<f64>,
    /// `Σ w(h_d.s) V(h_d)` over members that took each action.
    pub weighted_value: Vec<f64>,
}

impl ActionStats {
    pub(crate) fn empty(action_count: usize) -> Self {
        Self {
            positive_count: 0,
            total_weight: 0.0,
            action_weight: vec![0.0; action_count],
            weighted_value: vec![0.0; action_count],
        }
    }

    /// Adds one member of weight `w` whose episode took `action` (encoded
    /// as in the episode set's columns, `u32::MAX` for none) with value
    /// `values[h]`.
    #[inline]
    pub(crate) fn add(&mut self, w: f64, action: Option<u32>, value: impl FnOnce() -> f64) {
        if w <= 0.0 {
            return;
        }
        self.positive_count += 1;
        self.total_weight += w;
        if let Some(a) = action.filter(|&a| a != u32::MAX) {
            self.action_weight[a as usize] += w;
            self.weighted_value[a as usize] += w * value();
        }
    }

    pub fn compute<S>(belief: &ExtractedBelief, episodes: &[Episode<S>], action_count: usize) -> Self {
        let depth = belief.depth;
        let mut stats = Self {
            positive_count: 0,
            total_weight: 0.0,
            action_weight: vec![0.0; action_count],
            weighted_value: vec![0.0; action_count],
        };
        for (&h, &w) in belief.members.iter().zip(&belief.weights) {
            if w <= 0.0 {
                continue;
            }
            stats.positive_count += 1;
            stats.total_weight += w;
            let episode = &episodes[h];
            if let Some(a) = episode.action_at(depth) {
                stats.action_weight[a] += w;
                stats.weighted_value[a] += w * episode.value_at(depth);
            }
        }
        stats
    }

    /// `W̃(b, a) = W(b, a) / W(b) · N₊(b)`.
    pub fn scaled_weight(&self, action: usize) -> f64 {
        if self.total_weight > 0.0 {
            self.action_weight[action] / self.total_weight * self.positive_count as f64
        } else {
            0.0
        }
    }

    /// `Q̂(b, a)`, or `None` when `W(b, a) = 0`.
    pub fn q_estimate(&self, action: usize) -> Option<f64> {
        let w = self.action_weight[action];
        (w > 0.0).then(|| self.weighted_value[action] / w)
    }

    /// Actions with `W̃(b, a) = 0`; every action when `N₊(b) = 0`.
    pub fn unvisited(&self) -> Vec<usize> {
        (0..self.action_weight.len()).filter(|&a| self.scaled_weight(a) == 0.0).collect()
    }

    pub fn ucb_score(&self, action: usize, exploration: f64) -> Option<f64> {
        let q = self.q_estimate(action)?;
        Some(ucb_score(q, exploration, self.positive_count, self.scaled_weight(action)))
    }

    /// Weighted UCB1 choice. Returns `(action, unvisited)`: an unvisited
    /// action drawn uniformly when one exists, otherwise the UCB maximizer
    /// with ties broken uniformly.
    pub fn select<R: Rng + ?Sized>(&self, exploration: f64, rng: &mut R) -> (usize, bool) {
        let unvisited = self.unvisited();
        if !unvisited.is_empty() {
            return (choose(&unvisited, rng), true);
        }
        let scores = (0..self.action_weight.len()).filter_map(|a| self.ucb_score(a, exploration).map(|s| (a, s)));
        let action = argmax_random_tie(scores, rng).expect("every action is visited");
        (action, false)
    }
}

/// `Q̂ + c √(ln N₊ / W̃)`.
pub fn ucb_score(q: f64, exploration: f64, positive_count: usize, scaled_weight: f64) -> f64 {
    q + exploration * ((positive_count as f64).ln() / scaled_weight).sqrt()
}

/// Selects the next action at an extracted belief.
pub fn select_action<S, R: Rng + ?Sized>(
    belief: &ExtractedBelief,
    episodes: &[Episode<S>],
    action_count: usize,
    exploration: f64,
    rng: &mut R,
) -> (usize, bool) {
    ActionStats::compute(belief, episodes, action_count).select(exploration, rng)
}

/// Weighted mean of `V(h_d)` over the members that took `action` at the
/// belief's depth; `None` when their total weight is zero.
pub fn q_estimate<S>(belief: &ExtractedBelief, episodes: &[Episode<S>], action: usize) -> Option<f64> {
    let mut weight = 0.0;
    let mut value = 0.0;
    for (&h, &w) in belief.members.iter().zip(&belief.weights) {
        if episodes[h].action_at(belief.depth) == Some(action) {
            weight += w;
            value += w * episodes[h].value_at(belief.depth);
        }
    }
    (weight > 0.0).then(|| value / weight)
}
