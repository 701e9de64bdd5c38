//! A five-cell chain with noisy discrete position readings and a fixed
//! horizon, small enough to solve exactly by belief-tree enumeration.

use rand::Rng;

use crate::belief::WeightedBelief;
use crate::error::Result;
use crate::model::{
    check_action, DiscreteObservations, EnumerableModel, Observation, PomdpModel, StepResult,
};

pub const CELLS: usize = 5;
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Reward for acting while in each cell.
const CELL_REWARD: [f64; CELLS] = [3.0, 0.0, -1.0, 0.0, 2.0];

/// P(observation | cell); rows sum to one.
const EMISSION: [[f64; 3]; CELLS] = [
    [0.80, 0.15, 0.05],
    [0.60, 0.30, 0.10],
    [0.20, 0.60, 0.20],
    [0.10, 0.30, 0.60],
    [0.05, 0.15, 0.80],
];

const INITIAL: [f64; CELLS] = [0.0, 0.25, 0.35, 0.40, 0.0];

/// Probability that a move succeeds; otherwise the agent stays put.
const MOVE_SUCCESS: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChainState {
    pub cell: usize,
    pub time: usize,
}

#[derive(Debug, Clone)]
pub struct OracleChain {
    horizon: usize,
    discount: f64,
    /// `full_info[k][cell]`: optimal value with `k` steps left when the cell
    /// is observed directly.
    full_info: Vec<[f64; CELLS]>,
}

impl Default for OracleChain {
    fn default() -> Self {
        let (horizon, discount) = (4, 0.95);
        let mut full_info = vec![[0.0; CELLS]];
        for k in 1..=horizon {
            let next = &full_info[k - 1];
            let row = std::array::from_fn(|cell| {
                [LEFT, RIGHT]
                    .into_iter()
                    .map(|a| Self::full_info_q(cell, a, next, discount))
                    .fold(f64::NEG_INFINITY, f64::max)
            });
            full_info.push(row);
        }
        Self { horizon, discount, full_info }
    }
}

impl OracleChain {
    fn full_info_q(cell: usize, action: usize, next: &[f64; CELLS], discount: f64) -> f64 {
        let moved = Self::intended(cell, action);
        let expected = MOVE_SUCCESS * next[moved] + (1.0 - MOVE_SUCCESS) * next[cell];
        CELL_REWARD[cell] + discount * expected
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_distribution(&self) -> Vec<f64> {
        let mut v = vec![0.0; CELLS * (self.horizon + 1)];
        for (cell, &p) in INITIAL.iter().enumerate() {
            v[self.state_index(&ChainState { cell, time: 0 })] = p;
        }
        v
    }

    fn intended(cell: usize, action: usize) -> usize {
        match action {
            LEFT => cell.saturating_sub(1),
            _ => (cell + 1).min(CELLS - 1),
        }
    }

    fn observation_index(observation: &Observation) -> Option<usize> {
        match observation.values() {
            [o] if *o == 0.0 || *o == 1.0 || *o == 2.0 => Some(*o as usize),
            _ => None,
        }
    }
}

impl PomdpModel for OracleChain {
    type State = ChainState;

    fn action_count(&self) -> usize {
        2
    }

    fn action_label(&self, action: usize) -> String {
        match action {
            LEFT => "left".into(),
            RIGHT => "right".into(),
            _ => format!("invalid({action})"),
        }
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn observation_dim(&self) -> usize {
        1
    }

    fn step<R: Rng + ?Sized>(&self, state: &ChainState, action: usize, rng: &mut R) -> Result<StepResult<ChainState>> {
        check_action(action, self.action_count())?;
        let cell = if rng.random::<f64>() < MOVE_SUCCESS {
            Self::intended(state.cell, action)
        } else {
            state.cell
        };
        let next_state = ChainState { cell, time: state.time + 1 };
        let u = rng.random::<f64>();
        let row = &EMISSION[cell];
        let o = if u < row[0] {
            0
        } else if u < row[0] + row[1] {
            1
        } else {
            2
        };
        Ok(StepResult {
            next_state,
            observation: Observation::scalar(o as f64),
            reward: CELL_REWARD[state.cell],
            terminal: self.is_terminal(&next_state),
        })
    }

    fn observation_density(&self, next_state: &ChainState, _action: usize, observation: &Observation) -> f64 {
        Self::observation_index(observation).map_or(0.0, |o| EMISSION[next_state.cell][o])
    }

    fn likelihood<'a>(&'a self, _action: usize, observation: &'a Observation) -> impl Fn(&ChainState) -> f64 + 'a {
        let reading = Self::observation_index(observation);
        move |s| reading.map_or(0.0, |o| EMISSION[s.cell][o])
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> ChainState {
        let b = self.initial_belief(0, rng);
        b.particles()[b.sample_index(rng)].state
    }

    fn initial_belief<R: Rng + ?Sized>(&self, _particle_count: usize, _rng: &mut R) -> WeightedBelief<ChainState> {
        WeightedBelief::from_weighted(
            INITIAL
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(cell, &p)| (ChainState { cell, time: 0 }, p)),
        )
    }

    fn is_terminal(&self, state: &ChainState) -> bool {
        state.time >= self.horizon
    }

    /// Value of `action` followed by optimal play when the cell is observed
    /// directly. An upper bound on the true value.
    fn heuristic_value(&self, state: &ChainState, action: usize) -> f64 {
        let remaining = self.horizon.saturating_sub(state.time);
        if remaining == 0 {
            return 0.0;
        }
        Self::full_info_q(state.cell, action, &self.full_info[remaining - 1], self.discount)
    }
}

impl EnumerableModel for OracleChain {
    fn states(&self) -> Vec<ChainState> {
        (0..=self.horizon)
            .flat_map(|time| (0..CELLS).map(move |cell| ChainState { cell, time }))
            .collect()
    }

    fn state_index(&self, state: &ChainState) -> usize {
        state.time * CELLS + state.cell
    }

    fn transition(&self, state: &ChainState, action: usize) -> Vec<(ChainState, f64)> {
        if self.is_terminal(state) {
            return vec![(*state, 1.0)];
        }
        let time = state.time + 1;
        let target = Self::intended(state.cell, action);
        if target == state.cell {
            vec![(ChainState { cell: target, time }, 1.0)]
        } else {
            vec![
                (ChainState { cell: target, time }, MOVE_SUCCESS),
                (ChainState { cell: state.cell, time }, 1.0 - MOVE_SUCCESS),
            ]
        }
    }

    fn reward(&self, state: &ChainState, _action: usize) -> f64 {
        if self.is_terminal(state) {
            0.0
        } else {
            CELL_REWARD[state.cell]
        }
    }
}

impl DiscreteObservations for OracleChain {
    fn observations(&self) -> Vec<Observation> {
        (0..3).map(|o| Observation::scalar(o as f64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn emission_rows_are_distributions() {
        for row in EMISSION {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((INITIAL.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn likelihood_matches_density() {
        let m = OracleChain::default();
        for o in [0.0, 1.0, 2.0, 0.5, 3.0] {
            let observation = Observation::scalar(o);
            let z = m.likelihood(RIGHT, &observation);
            for cell in 0..CELLS {
                let s = ChainState { cell, time: 1 };
                assert_eq!(z(&s), m.observation_density(&s, RIGHT, &observation));
            }
        }
    }

    #[test]
    fn heuristic_on_the_last_step_is_the_cell_reward() {
        let m = OracleChain::default();
        for cell in 0..CELLS {
            let s = ChainState { cell, time: 3 };
            assert_eq!(m.heuristic_value(&s, LEFT), CELL_REWARD[cell]);
            assert_eq!(m.heuristic_value(&ChainState { cell, time: 4 }, LEFT), 0.0);
        }
        // With two steps left, going left from the second cell reaches the
        // +3 cell with probability 0.8 and collects it on the final step.
        let s = ChainState { cell: 1, time: 2 };
        assert!((m.heuristic_value(&s, LEFT) - 0.95 * 2.4).abs() < 1e-12);
    }

    #[test]
    fn heuristic_bounds_the_exact_root_values() {
        let m = OracleChain::default();
        let exact = crate::problems::solve_exact(&m, &m.initial_distribution(), m.horizon()).unwrap();
        let b = m.initial_belief(0, &mut ChaCha8Rng::seed_from_u64(0));
        for a in 0..2 {
            let bound: f64 = b.particles().iter().map(|p| p.weight * m.heuristic_value(&p.state, a)).sum();
            assert!(bound >= exact.q[a] - 1e-12, "action {a}: {bound} < {}", exact.q[a]);
        }
    }

    #[test]
    fn transitions_sum_to_one() {
        let m = OracleChain::default();
        for s in m.states() {
            for a in 0..2 {
                let total: f64 = m.transition(&s, a).iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn episode_terminates_at_horizon() {
        let m = OracleChain::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = m.sample_initial(&mut rng);
        let mut steps = 0;
        while !m.is_terminal(&s) {
            s = m.step(&s, RIGHT, &mut rng).unwrap().next_state;
            steps += 1;
        }
        assert_eq!(steps, 4);
    }

    #[test]
    fn generative_frequencies_match_mass_functions() {
        let m = OracleChain::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = ChainState { cell: 2, time: 0 };
        let n = 200_000;
        let mut counts = [[0usize; 3]; CELLS];
        for _ in 0..n {
            let r = m.step(&s, LEFT, &mut rng).unwrap();
            counts[r.next_state.cell][r.observation.0[0] as usize] += 1;
        }
        for (next, p_next) in m.transition(&s, LEFT) {
            for o in 0..3 {
                let p = p_next * m.observation_density(&next, LEFT, &Observation::scalar(o as f64));
                let freq = counts[next.cell][o] as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((freq - p).abs() < 3.0 * se + 1e-12, "cell {} obs {o}: {freq} vs {p}", next.cell);
            }
        }
    }
}
