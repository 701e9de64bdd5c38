//! Navigation through a field of three obstacles with uncertain positions.
//!
//! The robot knows its own grid position but not where the obstacles are. A
//! costly SCAN action returns noisy distances to the three obstacle centers;
//! the noise grows with distance. Motion actions return the null observation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::Result;
use crate::model::{check_action, gaussian_log_pdf, Observation, Outcome, PomdpModel, StepResult};

pub const FORWARD: usize = 0;
pub const LEFT: usize = 1;
pub const RIGHT: usize = 2;
pub const SCAN: usize = 3;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassageConfig {
    pub discount: f64,
    /// Robot positions outside `[free_low, free_high]²` are in the border.
    pub free_low: i32,
    pub free_high: i32,
    pub start_x: i32,
    pub start_y: i32,
    pub goal_x_low: f64,
    pub goal_x_high: f64,
    pub goal_y_low: f64,
    pub goal_y_high: f64,
    pub obstacle_half_size: f64,
    pub obstacle_x_low: f64,
    pub obstacle_x_high: f64,
    /// Obstacle `j` has its center's y drawn from `[edges[j], edges[j+1]]`.
    pub obstacle_y_edges: [f64; 4],
    pub sigma0: f64,
    pub sigma_per_distance: f64,
    pub collision_reward: f64,
    pub goal_reward: f64,
    pub scan_reward: f64,
    pub step_reward: f64,
    pub heuristic: PassageHeuristic,
}

/// Tail value estimate used by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassageHeuristic {
    /// Discounted goal reward after the fewest moves to the goal region,
    /// ignoring obstacles.
    IgnoreObstacles,
    /// Discounted return of driving forward to the goal column and then
    /// sideways into the goal region, against the state's own obstacles.
    FixedPath,
}

impl Default for PassageConfig {
    fn default() -> Self {
        Self {
            discount: 0.95,
            free_low: 1,
            free_high: 19,
            start_x: 2,
            start_y: 10,
            goal_x_low: 18.0,
            goal_x_high: 20.0,
            goal_y_low: 8.0,
            goal_y_high: 12.0,
            obstacle_half_size: 1.0,
            obstacle_x_low: 8.0,
            obstacle_x_high: 12.0,
            obstacle_y_edges: [1.0, 7.0, 13.0, 19.0],
            sigma0: 0.25,
            sigma_per_distance: 0.25,
            collision_reward: -1000.0,
            goal_reward: 1000.0,
            scan_reward: -50.0,
            step_reward: -1.0,
            heuristic: PassageHeuristic::FixedPath,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassageStatus {
    Active,
    Collided,
    ReachedGoal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageState {
    pub robot: (i32, i32),
    pub obstacles: [(f64, f64); 3],
    pub status: PassageStatus,
}

#[derive(Debug, Clone)]
pub struct Passage {
    config: PassageConfig,
}

impl Default for Passage {
    fn default() -> Self {
        Self::new(PassageConfig::default())
    }
}

impl Passage {
    pub fn new(config: PassageConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &PassageConfig {
        &self.config
    }

    /// Sensor noise standard deviation at distance `d`.
    pub fn sigma(&self, d: f64) -> f64 {
        self.config.sigma0 + self.config.sigma_per_distance * d
    }

    pub fn distances(state: &PassageState) -> [f64; 3] {
        let (x, y) = (state.robot.0 as f64, state.robot.1 as f64);
        state.obstacles.map(|(cx, cy)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt())
    }

    fn in_goal(&self, (x, y): (i32, i32)) -> bool {
        let c = &self.config;
        let (x, y) = (x as f64, y as f64);
        x >= c.goal_x_low && x <= c.goal_x_high && y >= c.goal_y_low && y <= c.goal_y_high
    }

    fn collides(&self, (x, y): (i32, i32), obstacles: &[(f64, f64); 3]) -> bool {
        let c = &self.config;
        if x < c.free_low || x > c.free_high || y < c.free_low || y > c.free_high {
            return true;
        }
        let (px, py) = (x as f64, y as f64);
        obstacles
            .iter()
            .any(|&(cx, cy)| (px - cx).abs() <= c.obstacle_half_size && (py - cy).abs() <= c.obstacle_half_size)
    }

    fn move_robot(&self, state: &PassageState, action: usize) -> (PassageState, f64) {
        let (x, y) = state.robot;
        let robot = match action {
            FORWARD => (x + 1, y),
            LEFT => (x, y + 1),
            RIGHT => (x, y - 1),
            _ => (x, y),
        };
        let (status, reward) = if self.in_goal(robot) {
            (PassageStatus::ReachedGoal, self.config.goal_reward)
        } else if self.collides(robot, &state.obstacles) {
            (PassageStatus::Collided, self.config.collision_reward)
        } else {
            (PassageStatus::Active, self.config.step_reward)
        };
        (PassageState { robot, status, ..*state }, reward)
    }

    /// Moves needed to enter the goal region, ignoring obstacles.
    fn moves_to_goal(&self, (x, y): (i32, i32)) -> u32 {
        let c = &self.config;
        let dx = (c.goal_x_low - x as f64).max(0.0).ceil();
        let dy = (c.goal_y_low - y as f64).max(y as f64 - c.goal_y_high).max(0.0).ceil();
        (dx + dy) as u32
    }

    /// Tail value of `state` under the configured heuristic.
    pub fn greedy_value(&self, state: &PassageState) -> f64 {
        if state.status != PassageStatus::Active {
            return 0.0;
        }
        match self.config.heuristic {
            PassageHeuristic::IgnoreObstacles => self.obstacle_free_value(state),
            PassageHeuristic::FixedPath => self.fixed_path_value(state),
        }
    }

    /// Value of driving straight to the goal region, ignoring obstacles.
    pub fn obstacle_free_value(&self, state: &PassageState) -> f64 {
        let g = self.config.discount;
        let m = self.moves_to_goal(state.robot);
        let mut value = 0.0;
        let mut disc = 1.0;
        for _ in 1..m {
            value += disc * self.config.step_reward;
            disc *= g;
        }
        value + disc * self.config.goal_reward
    }

    /// Discounted return of FORWARD moves up to the goal column followed by
    /// LEFT or RIGHT moves into the goal band, stopping at the first
    /// collision.
    pub fn fixed_path_value(&self, state: &PassageState) -> f64 {
        let c = &self.config;
        let g = c.discount;
        let mut state = *state;
        let mut value = 0.0;
        let mut disc = 1.0;
        while state.status == PassageStatus::Active {
            let (x, y) = state.robot;
            let action = if (x as f64) < c.goal_x_low {
                FORWARD
            } else if (y as f64) < c.goal_y_low {
                LEFT
            } else {
                RIGHT
            };
            let (next, reward) = self.move_robot(&state, action);
            value += disc * reward;
            disc *= g;
            state = next;
        }
        value
    }
}

impl PomdpModel for Passage {
    type State = PassageState;

    fn action_count(&self) -> usize {
        4
    }

    fn action_label(&self, action: usize) -> String {
        match action {
            FORWARD => "FORWARD".into(),
            LEFT => "LEFT".into(),
            RIGHT => "RIGHT".into(),
            SCAN => "SCAN".into(),
            _ => format!("invalid({action})"),
        }
    }

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn observation_dim(&self) -> usize {
        3
    }

    fn step<R: Rng + ?Sized>(&self, state: &PassageState, action: usize, rng: &mut R) -> Result<StepResult<PassageState>> {
        check_action(action, self.action_count())?;
        if action == SCAN {
            let values = Self::distances(state)
                .iter()
                .map(|&d| d + Normal::new(0.0, self.sigma(d)).expect("positive sigma").sample(rng))
                .collect();
            return Ok(StepResult {
                next_state: *state,
                observation: Observation::new(values),
                reward: self.config.scan_reward,
                terminal: false,
            });
        }
        let (next_state, reward) = self.move_robot(state, action);
        Ok(StepResult {
            next_state,
            observation: Observation::null(),
            reward,
            terminal: next_state.status != PassageStatus::Active,
        })
    }

    fn observation_density(&self, next_state: &PassageState, action: usize, observation: &Observation) -> f64 {
        self.log_observation_density(next_state, action, observation).exp()
    }

    fn log_observation_density(&self, next_state: &PassageState, action: usize, observation: &Observation) -> f64 {
        if action != SCAN {
            return if observation.is_null() { 0.0 } else { f64::NEG_INFINITY };
        }
        match observation.values() {
            [_, _, _] => Self::distances(next_state)
                .iter()
                .zip(observation.values())
                .map(|(&d, &o)| gaussian_log_pdf(o, d, self.sigma(d)))
                .sum(),
            _ => f64::NEG_INFINITY,
        }
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> PassageState {
        let c = &self.config;
        let mut obstacles = [(0.0, 0.0); 3];
        for (j, o) in obstacles.iter_mut().enumerate() {
            let x = c.obstacle_x_low + rng.random::<f64>() * (c.obstacle_x_high - c.obstacle_x_low);
            let (lo, hi) = (c.obstacle_y_edges[j], c.obstacle_y_edges[j + 1]);
            let y = lo + rng.random::<f64>() * (hi - lo);
            *o = (x, y);
        }
        PassageState {
            robot: (c.start_x, c.start_y),
            obstacles,
            status: PassageStatus::Active,
        }
    }

    fn is_terminal(&self, state: &PassageState) -> bool {
        state.status != PassageStatus::Active
    }

    fn heuristic_value(&self, state: &PassageState, action: usize) -> f64 {
        if self.is_terminal(state) {
            return 0.0;
        }
        let g = self.config.discount;
        if action == SCAN {
            return self.config.scan_reward + g * self.greedy_value(state);
        }
        let (next, reward) = self.move_robot(state, action);
        reward + g * self.greedy_value(&next)
    }

    fn heuristic_state_value(&self, state: &PassageState) -> f64 {
        self.greedy_value(state)
    }

    fn outcome(&self, terminal_state: &PassageState) -> Outcome {
        match terminal_state.status {
            PassageStatus::ReachedGoal => Outcome::Goal,
            PassageStatus::Collided => Outcome::Collision,
            PassageStatus::Active => Outcome::Stop,
        }
    }
}
