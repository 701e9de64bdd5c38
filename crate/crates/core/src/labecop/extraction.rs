use crate::belief::WeightedBelief;
use crate::model::{Observation, PomdpModel};

use super::episode::Episode;

/// A belief extracted from the episode set at some depth: the member episodes
/// and the normalized weight of each member's state at that depth.
///
/// Members whose weight is exactly zero are dropped; they contribute to no
/// statistic. A `degenerate` belief has no members because every likelihood
/// was zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractedBelief {
    pub depth: usize,
    pub members: Vec<usize>,
    pub weights: Vec<f64>,
    pub degenerate: bool,
}

impl ExtractedBelief {
    /// Depth-0 belief over every episode, using each episode's root particle
    /// weight normalized over the whole set.
    pub fn root<S>(episodes: &[Episode<S>]) -> Self {
        let total: f64 = episodes.iter().map(|e| e.root_weight()).sum();
        let mut members = Vec::with_capacity(episodes.len());
        let mut weights = Vec::with_capacity(episodes.len());
        if total > 0.0 {
            for (i, e) in episodes.iter().enumerate() {
                if e.root_weight() > 0.0 {
                    members.push(i);
                    weights.push(e.root_weight() / total);
                }
            }
        }
        Self { depth: 0, members, weights, degenerate: false }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The `(state, weight)` pairs this belief stands for.
    pub fn to_weighted_belief<S: Clone>(&self, episodes: &[Episode<S>]) -> WeightedBelief<S> {
        WeightedBelief::from_weighted(
            self.members
                .iter()
                .zip(&self.weights)
                .map(|(&h, &w)| (episodes[h].state_at(self.depth).clone(), w)),
        )
        .with_degenerate(self.degenerate)
    }
}

/// Restricts `parent` to the episodes that took `action` at its depth and
/// re-weights their next states by `w(h_i.s) · Z(h_{i+1}.s, a, o)`, normalized
/// over that subset.
pub fn extract_belief<M: PomdpModel>(
    parent: &ExtractedBelief,
    episodes: &[Episode<M::State>],
    action: usize,
    observation: &Observation,
    model: &M,
) -> ExtractedBelief {
    let depth = parent.depth;
    let candidates = Candidates {
        depth,
        members: &parent.members,
        weights: &parent.weights,
        took: |h: usize| episodes[h].action_at(depth) == Some(action),
        next_state: |h: usize| episodes[h].state_at(depth + 1),
    };
    extract_from(&candidates, action, observation, model, ExtractedBelief::default(), |_, _| {})
}

/// Unnormalized totals below this are recomputed in log space, so that
/// densities which underflowed to zero on their own still get their share.
const LINEAR_FLOOR: f64 = 1e-200;

/// The episodes an extraction may keep, with their parent weights at
/// `depth`. The weights need not be normalized.
pub(crate) struct Candidates<'a, T, N> {
    pub depth: usize,
    pub members: &'a [usize],
    pub weights: &'a [f64],
    /// Whether a candidate took the extraction's action at `depth`.
    pub took: T,
    /// A candidate's state at `depth + 1`.
    pub next_state: N,
}

/// Extraction over explicit candidates. Candidates with zero weight, or
/// that took another action, are skipped.
///
/// Weights are formed from plain densities. When their total is tiny or not
/// finite they are recomputed from log densities, shifted by the maximum.
/// The result is written into `out`, whose allocations are reused, and
/// `visit` sees every kept member with its final weight, in order.
pub(crate) fn extract_from<'e, M, T, N>(
    c: &Candidates<'_, T, N>,
    action: usize,
    observation: &Observation,
    model: &M,
    out: ExtractedBelief,
    mut visit: impl FnMut(usize, f64),
) -> ExtractedBelief
where
    M: PomdpModel,
    M::State: 'e,
    T: Fn(usize) -> bool,
    N: Fn(usize) -> &'e M::State,
{
    let ExtractedBelief { members: mut kept, weights: mut kept_w, .. } = out;
    kept.clear();
    kept_w.clear();
    kept.reserve(c.members.len());
    kept_w.reserve(c.members.len());
    let mut total = 0.0;
    let mut any_zero = false;
    let likelihood = model.likelihood(action, observation);
    for (&h, &w) in c.members.iter().zip(c.weights) {
        if w <= 0.0 || !(c.took)(h) {
            continue;
        }
        let x = w * likelihood((c.next_state)(h));
        any_zero |= x == 0.0;
        kept.push(h);
        kept_w.push(x);
        total += x;
    }
    if !(total >= LINEAR_FLOOR && total.is_finite()) {
        let next = extract_in_log_space(c, action, observation, model);
        next.members.iter().zip(&next.weights).for_each(|(&h, &w)| visit(h, w));
        return next;
    }
    if any_zero {
        let mut j = 0;
        for i in 0..kept.len() {
            if kept_w[i] > 0.0 {
                kept[j] = kept[i];
                kept_w[j] = kept_w[i];
                j += 1;
            }
        }
        kept.truncate(j);
        kept_w.truncate(j);
    }
    for (&h, w) in kept.iter().zip(kept_w.iter_mut()) {
        *w /= total;
        visit(h, *w);
    }
    ExtractedBelief { depth: c.depth + 1, members: kept, weights: kept_w, degenerate: false }
}

fn extract_in_log_space<'e, M, T, N>(c: &Candidates<'_, T, N>, action: usize, observation: &Observation, model: &M) -> ExtractedBelief
where
    M: PomdpModel,
    M::State: 'e,
    T: Fn(usize) -> bool,
    N: Fn(usize) -> &'e M::State,
{
    let mut kept = Vec::new();
    let mut log_w = Vec::new();
    for (&h, &w) in c.members.iter().zip(c.weights) {
        if w <= 0.0 || !(c.took)(h) {
            continue;
        }
        let lz = model.log_observation_density((c.next_state)(h), action, observation);
        if lz > f64::NEG_INFINITY {
            kept.push(h);
            log_w.push(w.ln() + lz);
        }
    }
    if kept.is_empty() {
        return ExtractedBelief { depth: c.depth + 1, members: kept, weights: Vec::new(), degenerate: true };
    }
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = log_w.iter().map(|lw| (lw - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    ExtractedBelief { depth: c.depth + 1, members: kept, weights, degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::lightdark::{LightDark1D, LightDarkState};

    fn one_step(from: i64, action: usize, to: i64) -> Episode<LightDarkState> {
        let mut e = Episode::new(1.0);
        e.push(LightDarkState::at(from), action, Observation::scalar(0.0), 0.0);
        e.finish(LightDarkState::at(to), 0.0, false, 0.95);
        e
    }

    #[test]
    fn far_observation_falls_back_to_log_space() {
        let m = LightDark1D::default();
        let episodes = vec![one_step(0, 3, 1), one_step(1, 3, 2), one_step(2, 3, 3)];
        let parent = ExtractedBelief { depth: 0, members: vec![0, 1, 2], weights: vec![1.0 / 3.0; 3], degenerate: false };
        let far = Observation::scalar(1e4);
        assert!(episodes.iter().all(|e| m.observation_density(e.state_at(1), 3, &far) == 0.0));
        let next = extract_belief(&parent, &episodes, 3, &far, &m);
        assert!(!next.degenerate);
        assert!((next.total_weight() - 1.0).abs() < 1e-12);
        // So far out, the state with the widest observation noise dominates.
        let best = next.weights.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let widest = (0..3).max_by(|&a, &b| {
            let sd = |h: usize| m.sigma(episodes[h].state_at(1).position);
            sd(a).total_cmp(&sd(b))
        });
        assert_eq!(Some(next.members[best]), widest);
    }

    #[test]
    fn linear_and_log_weights_agree() {
        let m = LightDark1D::default();
        let episodes: Vec<_> = (0..6).map(|i| one_step(i, 3, i + 1)).collect();
        let parent = ExtractedBelief {
            depth: 0,
            members: (0..6).collect(),
            weights: vec![0.1, 0.2, 0.1, 0.3, 0.2, 0.1],
            degenerate: false,
        };
        let o = Observation::scalar(3.4);
        let linear = extract_belief(&parent, &episodes, 3, &o, &m);
        let candidates = Candidates {
            depth: 0,
            members: &parent.members,
            weights: &parent.weights,
            took: |h: usize| episodes[h].action_at(0) == Some(3),
            next_state: |h: usize| episodes[h].state_at(1),
        };
        let log = extract_in_log_space(&candidates, 3, &o, &m);
        assert_eq!(linear.members, log.members);
        for (a, b) in linear.weights.iter().zip(&log.weights) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn visit_sees_final_weights_in_order() {
        let m = LightDark1D::default();
        let episodes: Vec<_> = (0..4).map(|i| one_step(i, 3, i + 1)).collect();
        let parent = ExtractedBelief { depth: 0, members: (0..4).collect(), weights: vec![0.25; 4], degenerate: false };
        let candidates = Candidates {
            depth: 0,
            members: &parent.members,
            weights: &parent.weights,
            took: |_: usize| true,
            next_state: |h: usize| episodes[h].state_at(1),
        };
        let mut seen = Vec::new();
        let next =
            extract_from(&candidates, 3, &Observation::scalar(2.0), &m, ExtractedBelief::default(), |h, w| seen.push((h, w)));
        let expected: Vec<(usize, f64)> = next.members.iter().copied().zip(next.weights.iter().copied()).collect();
        assert_eq!(seen, expected);
    }
}
