use crate::model::Observation;

use super::extraction::ExtractedBelief;
use super::selection::ActionStats;

/// One `(state, action, observation, reward)` entry of an episode plus its
/// backed-up value. The final entry of every episode has no action or
/// observation and zero reward; its value is the episode's tail value.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadruple<S> {
    pub state: S,
    pub action: Option<usize>,
    pub observation: Option<Observation>,
    pub reward: f64,
    pub value: f64,
}

/// A sampled trajectory starting at a particle of the planning root.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode<S> {
    quadruples: Vec<Quadruple<S>>,
    root_weight: f64,
    reached_terminal: bool,
}

impl<S> Episode<S> {
    /// Starts an episode from a root particle of the given weight.
    pub fn new(root_weight: f64) -> Self {
        Self { quadruples: Vec::new(), root_weight, reached_terminal: false }
    }

    pub fn push(&mut self, state: S, action: usize, observation: Observation, reward: f64) {
        self.quadruples.push(Quadruple {
            state,
            action: Some(action),
            observation: Some(observation),
            reward,
            value: f64::NAN,
        });
    }

    /// Appends the terminal entry `(s, -, -, 0)` and backs the episode up.
    pub fn finish(&mut self, state: S, tail_value: f64, reached_terminal: bool, discount: f64) {
        self.quadruples.push(Quadruple { state, action: None, observation: None, reward: 0.0, value: f64::NAN });
        self.reached_terminal = reached_terminal;
        backup_episode(self, tail_value, discount);
    }

    pub fn quadruples(&self) -> &[Quadruple<S>] {
        &self.quadruples
    }

    /// Number of entries, including the terminal entry.
    pub fn len(&self) -> usize {
        self.quadruples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quadruples.is_empty()
    }

    /// Number of actions taken.
    pub fn depth(&self) -> usize {
        self.quadruples.len().saturating_sub(1)
    }

    pub fn root_weight(&self) -> f64 {
        self.root_weight
    }

    /// True when the episode ended in a terminal state rather than being cut
    /// off with a heuristic tail.
    pub fn reached_terminal(&self) -> bool {
        self.reached_terminal
    }

    #[inline]
    pub fn action_at(&self, depth: usize) -> Option<usize> {
        self.quadruples.get(depth).and_then(|q| q.action)
    }

    #[inline]
    pub fn state_at(&self, depth: usize) -> &S {
        &self.quadruples[depth].state
    }

    #[inline]
    pub fn value_at(&self, depth: usize) -> f64 {
        self.quadruples[depth].value
    }
}

/// Writes `V` for every entry: the terminal entry gets `tail_value`, then
/// `V(i) = r_i + γ V(i+1)` from back to front.
pub fn backup_episode<S>(episode: &mut Episode<S>, tail_value: f64, discount: f64) {
    let Some(last) = episode.quadruples.last_mut() else {
        return;
    };
    last.value = tail_value;
    let mut next = tail_value;
    for q in episode.quadruples.iter_mut().rev().skip(1) {
        q.value = q.reward + discount * next;
        next = q.value;
    }
}

/// Running sums over the root belief, updated as episodes are added, so the
/// root never has to be rebuilt from the whole set.
#[derive(Debug, Clone, Default)]
struct RootIndex {
    /// Sum of all root particle weights.
    total: f64,
    /// Episodes with a positive root weight.
    positive: usize,
    /// Per first action: the episodes that took it, their root weights, the
    /// sum of those weights and the root-weighted value sum.
    members: Vec<Vec<usize>>,
    member_weights: Vec<Vec<f64>>,
    weight: Vec<f64>,
    value: Vec<f64>,
}

impl RootIndex {
    fn add<S>(&mut self, index: usize, episode: &Episode<S>) {
        let w = episode.root_weight();
        self.total += w;
        if w <= 0.0 {
            return;
        }
        self.positive += 1;
        if let Some(a) = episode.action_at(0) {
            if self.members.len() <= a {
                self.members.resize_with(a + 1, Vec::new);
                self.member_weights.resize_with(a + 1, Vec::new);
                self.weight.resize(a + 1, 0.0);
                self.value.resize(a + 1, 0.0);
            }
            self.members[a].push(index);
            self.member_weights[a].push(w);
            self.weight[a] += w;
            self.value[a] += w * episode.value_at(0);
        }
    }
}

const NO_ACTION: u32 = u32::MAX;

/// Actions, values and states of every episode at one depth, indexed by
/// episode. Entries for episodes too short to reach the depth hold
/// `NO_ACTION` and a copy of some other state; entries past the end are
/// absent. Members of a belief are scanned in increasing episode order, so
/// reading these arrays stays sequential.
#[derive(Debug, Clone)]
struct Column<S> {
    action: Vec<u32>,
    value: Vec<f64>,
    state: Vec<S>,
}

impl<S> Default for Column<S> {
    fn default() -> Self {
        Self { action: Vec::new(), value: Vec::new(), state: Vec::new() }
    }
}

/// The episodes sampled from the current planning root, plus the beliefs
/// extracted while sampling the most recent episode.
#[derive(Debug, Clone)]
pub struct EpisodeSet<S> {
    episodes: Vec<Episode<S>>,
    scratch: Vec<ExtractedBelief>,
    root: RootIndex,
    columns: Vec<Column<S>>,
    /// Beliefs of earlier episodes kept only for their allocations.
    spare: Vec<ExtractedBelief>,
}

impl<S> Default for EpisodeSet<S> {
    fn default() -> Self {
        Self { episodes: Vec::new(), scratch: Vec::new(), root: RootIndex::default(), columns: Vec::new(), spare: Vec::new() }
    }
}

impl<S> EpisodeSet<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.episodes.clear();
        self.scratch.clear();
        self.root = RootIndex::default();
        self.columns.clear();
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn episodes(&self) -> &[Episode<S>] {
        &self.episodes
    }

    pub fn last(&self) -> Option<&Episode<S>> {
        self.episodes.last()
    }

    /// Beliefs extracted (depth 1 onwards) while sampling the latest episode.
    pub fn scratch(&self) -> &[ExtractedBelief] {
        &self.scratch
    }

    /// Root belief over all stored episodes, weighted by the weight of the
    /// root particle each episode started from.
    pub fn root_belief(&self) -> ExtractedBelief {
        ExtractedBelief::root(&self.episodes)
    }

    /// Statistics of the root belief, from running sums. They agree with
    /// `ActionStats::compute` on `root_belief()` up to rounding.
    pub fn root_stats(&self, action_count: usize) -> ActionStats {
        let root = &self.root;
        let per_action = |sums: &[f64]| -> Vec<f64> {
            (0..action_count).map(|a| sums.get(a).map_or(0.0, |x| x / root.total)).collect()
        };
        let positive = root.total > 0.0;
        ActionStats {
            positive_count: if positive { root.positive } else { 0 },
            total_weight: if positive { 1.0 } else { 0.0 },
            action_weight: if positive { per_action(&root.weight) } else { vec![0.0; action_count] },
            weighted_value: if positive { per_action(&root.value) } else { vec![0.0; action_count] },
        }
    }

    /// Episodes that took `action` first and their unnormalized root
    /// weights.
    pub fn root_members(&self, action: usize) -> (&[usize], &[f64]) {
        match (self.root.members.get(action), self.root.member_weights.get(action)) {
            (Some(m), Some(w)) => (m, w),
            _ => (&[], &[]),
        }
    }

    /// Statistics of an extracted belief, read from the per-depth columns.
    /// Same sums, in the same order, as `ActionStats::compute`.
    pub fn stats(&self, belief: &ExtractedBelief, action_count: usize) -> ActionStats {
        let Some(column) = self.columns.get(belief.depth) else {
            return ActionStats::compute(belief, &self.episodes, action_count);
        };
        let mut stats = ActionStats::empty(action_count);
        for (&h, &w) in belief.members.iter().zip(&belief.weights) {
            stats.add(w, column.action.get(h).copied(), || column.value[h]);
        }
        stats
    }

    /// Per-episode actions at `depth`, `u32::MAX` where none was taken.
    /// Episodes past the end of the slice took no action there.
    pub(crate) fn actions_at(&self, depth: usize) -> &[u32] {
        self.columns.get(depth).map_or(&[], |c| &c.action)
    }

    /// Per-episode actions and values at `depth`.
    pub(crate) fn column_at(&self, depth: usize) -> (&[u32], &[f64]) {
        self.columns.get(depth).map_or((&[], &[]), |c| (&c.action, &c.value))
    }

    /// Per-episode states at `depth`; only entries of episodes that reached
    /// the depth are meaningful.
    pub(crate) fn states_at(&self, depth: usize) -> &[S] {
        self.columns.get(depth).map_or(&[], |c| &c.state)
    }

    pub(crate) fn push(&mut self, episode: Episode<S>)
    where
        S: Clone,
    {
        let index = self.episodes.len();
        self.root.add(index, &episode);
        if self.columns.len() < episode.len() {
            self.columns.resize_with(episode.len(), Column::default);
        }
        for (column, q) in self.columns.iter_mut().zip(episode.quadruples()) {
            column.action.resize(index, NO_ACTION);
            column.value.resize(index, f64::NAN);
            column.state.resize(index, q.state.clone());
            column.action.push(q.action.map_or(NO_ACTION, |a| a as u32));
            column.value.push(q.value);
            column.state.push(q.state.clone());
        }
        self.episodes.push(episode);
    }

    pub(crate) fn scratch_mut(&mut self) -> &mut Vec<ExtractedBelief> {
        &mut self.scratch
    }

    /// Empties the scratch list, keeping its beliefs as spare buffers.
    pub(crate) fn recycle_scratch(&mut self) {
        self.spare.append(&mut self.scratch);
    }

    pub(crate) fn spare_buffer(&mut self) -> ExtractedBelief {
        self.spare.pop().unwrap_or_default()
    }
}
