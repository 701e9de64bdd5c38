//! One-dimensional light-dark localisation problem.
//!
//! The agent moves deterministically on the integers and must stop exactly at
//! the origin. Observations are Gaussian around the true position with a noise
//! level that grows with the distance from the light at `light_position`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::belief::WeightedBelief;
use crate::error::Result;
use crate::model::{
    check_action, gaussian_log_pdf, EnumerableModel, Observation, PomdpModel, StepResult,
};

/// Motion of each action index. Index 2 is the terminating stop action.
pub const ACTION_OFFSETS: [i64; 5] = [-10, -1, 0, 1, 10];
pub const STOP: usize = 2;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightDarkConfig {
    pub discount: f64,
    pub sigma_min: f64,
    pub sigma_slope: f64,
    pub light_position: i64,
    pub init_low: i64,
    pub init_high: i64,
    pub domain_low: i64,
    pub domain_high: i64,
    pub stop_reward: f64,
    pub wrong_stop_penalty: f64,
    pub step_penalty: f64,
}

impl Default for LightDarkConfig {
    fn default() -> Self {
        Self {
            discount: 0.95,
            sigma_min: 0.1,
            sigma_slope: 0.5,
            light_position: 10,
            init_low: -10,
            init_high: 20,
            domain_low: -60,
            domain_high: 60,
            stop_reward: 100.0,
            wrong_stop_penalty: -100.0,
            step_penalty: -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LightDarkState {
    pub position: i64,
    pub stopped: bool,
}

impl LightDarkState {
    pub fn at(position: i64) -> Self {
        Self { position, stopped: false }
    }
}

#[derive(Debug, Clone)]
pub struct LightDark1D {
    config: LightDarkConfig,
}

impl Default for LightDark1D {
    fn default() -> Self {
        Self::new(LightDarkConfig::default())
    }
}

impl LightDark1D {
    pub fn new(config: LightDarkConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &LightDarkConfig {
        &self.config
    }

    /// Observation noise standard deviation at `position`.
    pub fn sigma(&self, position: i64) -> f64 {
        self.config.sigma_min + self.config.sigma_slope * (position - self.config.light_position).abs() as f64
    }

    fn clamp(&self, position: i64) -> i64 {
        position.clamp(self.config.domain_low, self.config.domain_high)
    }

    fn transition_state(&self, state: &LightDarkState, action: usize) -> LightDarkState {
        if action == STOP {
            LightDarkState { position: state.position, stopped: true }
        } else {
            LightDarkState::at(self.clamp(state.position + ACTION_OFFSETS[action]))
        }
    }

    fn immediate_reward(&self, state: &LightDarkState, action: usize) -> f64 {
        if action == STOP {
            if state.position == 0 {
                self.config.stop_reward
            } else {
                self.config.wrong_stop_penalty
            }
        } else {
            self.config.step_penalty
        }
    }

    /// Fewest ±1/±10 moves covering a distance `d`.
    pub fn min_moves(d: i64) -> u32 {
        let d = d.unsigned_abs();
        let (tens, rest) = (d / 10, d % 10);
        if rest == 0 {
            tens as u32
        } else {
            (tens + rest).min(tens + 1 + (10 - rest)) as u32
        }
    }

    /// Perfect-information value: move to the origin along a shortest path,
    /// then stop.
    pub fn greedy_value(&self, position: i64) -> f64 {
        let g = self.config.discount;
        let m = Self::min_moves(position);
        let mut value = 0.0;
        let mut disc = 1.0;
        for _ in 0..m {
            value += disc * self.config.step_penalty;
            disc *= g;
        }
        value + disc * self.config.stop_reward
    }
}

impl PomdpModel for LightDark1D {
    type State = LightDarkState;

    fn action_count(&self) -> usize {
        ACTION_OFFSETS.len()
    }

    fn action_label(&self, action: usize) -> String {
        match ACTION_OFFSETS.get(action) {
            Some(0) => "stop".into(),
            Some(d) => format!("{d:+}"),
            None => format!("invalid({action})"),
        }
    }

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn observation_dim(&self) -> usize {
        1
    }

    fn step<R: Rng + ?Sized>(&self, state: &LightDarkState, action: usize, rng: &mut R) -> Result<StepResult<LightDarkState>> {
        check_action(action, self.action_count())?;
        let next_state = self.transition_state(state, action);
        let noise = Normal::new(0.0, self.sigma(next_state.position)).expect("positive sigma");
        let observation = Observation::scalar(next_state.position as f64 + noise.sample(rng));
        Ok(StepResult {
            next_state,
            observation,
            reward: self.immediate_reward(state, action),
            terminal: next_state.stopped,
        })
    }

    fn observation_density(&self, next_state: &LightDarkState, action: usize, observation: &Observation) -> f64 {
        self.log_observation_density(next_state, action, observation).exp()
    }

    fn log_observation_density(&self, next_state: &LightDarkState, _action: usize, observation: &Observation) -> f64 {
        match observation.values() {
            [o] => gaussian_log_pdf(*o, next_state.position as f64, self.sigma(next_state.position)),
            _ => f64::NEG_INFINITY,
        }
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> LightDarkState {
        LightDarkState::at(rng.random_range(self.config.init_low..=self.config.init_high))
    }

    /// The exact initial belief: uniform over the integer support.
    fn initial_belief<R: Rng + ?Sized>(&self, _particle_count: usize, _rng: &mut R) -> WeightedBelief<LightDarkState> {
        WeightedBelief::uniform((self.config.init_low..=self.config.init_high).map(LightDarkState::at).collect())
    }

    fn is_terminal(&self, state: &LightDarkState) -> bool {
        state.stopped
    }

    fn heuristic_value(&self, state: &LightDarkState, action: usize) -> f64 {
        if state.stopped {
            return 0.0;
        }
        let reward = self.immediate_reward(state, action);
        if action == STOP {
            reward
        } else {
            let next = self.transition_state(state, action);
            reward + self.config.discount * self.greedy_value(next.position)
        }
    }
}

impl EnumerableModel for LightDark1D {
    fn states(&self) -> Vec<LightDarkState> {
        (self.config.domain_low..=self.config.domain_high)
            .flat_map(|position| [false, true].map(|stopped| LightDarkState { position, stopped }))
            .collect()
    }

    fn state_index(&self, state: &LightDarkState) -> usize {
        ((state.position - self.config.domain_low) * 2) as usize + usize::from(state.stopped)
    }

    fn transition(&self, state: &LightDarkState, action: usize) -> Vec<(LightDarkState, f64)> {
        if state.stopped {
            return vec![(*state, 1.0)];
        }
        vec![(self.transition_state(state, action), 1.0)]
    }

    fn reward(&self, state: &LightDarkState, action: usize) -> f64 {
        if state.stopped {
            0.0
        } else {
            self.immediate_reward(state, action)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PLUS_ONE: usize = 3;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn stopping_at_origin_pays_100() {
        let m = LightDark1D::default();
        let r = m.step(&LightDarkState::at(0), STOP, &mut rng()).unwrap();
        assert!(r.terminal);
        assert_eq!(r.reward, 100.0);
    }

    #[test]
    fn stopping_elsewhere_costs_100() {
        let m = LightDark1D::default();
        let r = m.step(&LightDarkState::at(3), STOP, &mut rng()).unwrap();
        assert!(r.terminal);
        assert_eq!(r.reward, -100.0);
    }

    #[test]
    fn motion_is_deterministic_with_step_penalty() {
        let m = LightDark1D::default();
        let r = m.step(&LightDarkState::at(3), PLUS_ONE, &mut rng()).unwrap();
        assert_eq!(r.next_state, LightDarkState::at(4));
        assert_eq!(r.reward, -1.0);
        assert!(!r.terminal);
    }

    #[test]
    fn out_of_range_action_is_rejected() {
        let m = LightDark1D::default();
        assert!(m.step(&LightDarkState::at(0), 5, &mut rng()).is_err());
    }

    #[test]
    fn motion_is_clamped_to_domain() {
        let m = LightDark1D::default();
        let r = m.step(&LightDarkState::at(55), 4, &mut rng()).unwrap();
        assert_eq!(r.next_state.position, 60);
    }

    #[test]
    fn density_at_light_uses_sigma_min() {
        let m = LightDark1D::default();
        assert_eq!(m.sigma(10), 0.1);
        let d = m.observation_density(&LightDarkState::at(10), PLUS_ONE, &Observation::scalar(10.0));
        // 1 / (0.1 * sqrt(2 pi))
        assert!((d - 3.989_422_804_014_327).abs() < 1e-12, "{d}");
    }

    #[test]
    fn replay_with_cloned_rng_is_bitwise_identical() {
        let m = LightDark1D::default();
        let mut a = rng();
        let mut b = a.clone();
        let ra = m.step(&LightDarkState::at(-4), 1, &mut a).unwrap();
        let rb = m.step(&LightDarkState::at(-4), 1, &mut b).unwrap();
        assert_eq!(ra.observation.0[0].to_bits(), rb.observation.0[0].to_bits());
        assert_eq!(ra, rb);
    }

    #[test]
    fn min_moves_uses_overshoot() {
        assert_eq!(LightDark1D::min_moves(0), 0);
        assert_eq!(LightDark1D::min_moves(11), 2);
        assert_eq!(LightDark1D::min_moves(9), 2);
        assert_eq!(LightDark1D::min_moves(-5), 5);
        assert_eq!(LightDark1D::min_moves(6), 5);
        assert_eq!(LightDark1D::min_moves(20), 2);
    }

    #[test]
    fn heuristic_values() {
        let m = LightDark1D::default();
        assert_eq!(m.heuristic_state_value(&LightDarkState::at(0)), 100.0);
        // -1 - 0.95 + 0.95^2 * 100
        assert!((m.heuristic_state_value(&LightDarkState::at(11)) - 88.3).abs() < 1e-9);
        assert_eq!(m.heuristic_state_value(&LightDarkState { position: 4, stopped: true }), 0.0);
        assert_eq!(m.heuristic_value(&LightDarkState::at(4), STOP), -100.0);
    }

    #[test]
    fn heuristic_scales_with_rewards() {
        let base = LightDark1D::default();
        let doubled = LightDark1D::new(LightDarkConfig {
            stop_reward: 200.0,
            wrong_stop_penalty: -200.0,
            step_penalty: -2.0,
            ..LightDarkConfig::default()
        });
        for p in [-12, -3, 0, 7, 19] {
            let s = LightDarkState::at(p);
            for a in 0..5 {
                let (h1, h2) = (base.heuristic_value(&s, a), doubled.heuristic_value(&s, a));
                assert!((2.0 * h1 - h2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn initial_belief_is_uniform_over_support() {
        let m = LightDark1D::default();
        let b = m.initial_belief(10, &mut rng());
        assert_eq!(b.len(), 31);
        assert!(b.is_normalized());
    }

    #[test]
    fn enumeration_indices_are_consistent() {
        let m = LightDark1D::default();
        for (i, s) in m.states().iter().enumerate() {
            assert_eq!(m.state_index(s), i);
        }
    }
}
