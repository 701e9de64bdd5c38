//! Cross-checks between independent implementations of the exact oracles.

use std::collections::HashMap;

use labecop::filter::{exact_update, predict};
use labecop::model::{DiscreteObservations, EnumerableModel};
use labecop::problems::lightdark::{LightDark1D, LightDarkState};
use labecop::problems::oracle_chain::OracleChain;
use labecop::problems::solve_exact;
use labecop::{Observation, PomdpModel};

/// Belief key robust to last-bit differences between paths that reach the
/// same posterior.
fn key(belief: &[f64]) -> Vec<i64> {
    belief.iter().map(|p| (p * 1e9).round() as i64).collect()
}

/// Value iteration over the finite, layered belief MDP reachable from the
/// initial belief of the oracle chain, one layer per time step.
fn belief_mdp_values(model: &OracleChain, initial: Vec<f64>) -> (f64, Vec<f64>) {
    let horizon = model.horizon();
    let actions = model.action_count();
    let observations = model.observations();
    let states = model.states();

    // Forward pass: reachable beliefs per layer and their successors.
    let mut layers: Vec<Vec<Vec<f64>>> = vec![vec![initial]];
    let mut edges: Vec<Vec<Vec<Vec<(f64, usize)>>>> = Vec::new();
    for _ in 0..horizon {
        let mut next_layer: Vec<Vec<f64>> = Vec::new();
        let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut layer_edges = Vec::new();
        for b in layers.last().unwrap() {
            let mut per_action = Vec::new();
            for a in 0..actions {
                let predicted = predict(model, b, a);
                let mut succ = Vec::new();
                for o in &observations {
                    let p_obs: f64 =
                        states.iter().zip(&predicted).map(|(s, p)| p * model.observation_density(s, a, o)).sum();
                    if p_obs <= 0.0 {
                        continue;
                    }
                    let posterior = exact_update(model, b, a, o).unwrap();
                    let id = *index.entry(key(&posterior)).or_insert_with(|| {
                        next_layer.push(posterior.clone());
                        next_layer.len() - 1
                    });
                    succ.push((p_obs, id));
                }
                per_action.push(succ);
            }
            layer_edges.push(per_action);
        }
        edges.push(layer_edges);
        layers.push(next_layer);
    }

    // Backward pass.
    let mut values = vec![0.0; layers[horizon].len()];
    let mut root_q = Vec::new();
    for t in (0..horizon).rev() {
        let mut layer_values = Vec::with_capacity(layers[t].len());
        for (i, b) in layers[t].iter().enumerate() {
            let q: Vec<f64> = (0..actions)
                .map(|a| {
                    let reward: f64 = states.iter().zip(b).map(|(s, p)| p * model.reward(s, a)).sum();
                    let future: f64 = edges[t][i][a].iter().map(|&(p, j)| p * values[j]).sum();
                    reward + model.discount() * future
                })
                .collect();
            layer_values.push(q.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            if t == 0 {
                root_q = q;
            }
        }
        values = layer_values;
    }
    (values[0], root_q)
}

#[test]
fn solve_exact_matches_belief_mdp_value_iteration() {
    let model = OracleChain::default();
    let initial = model.initial_distribution();
    let exact = solve_exact(&model, &initial, model.horizon()).unwrap();
    let (value, q) = belief_mdp_values(&model, initial);
    assert!((exact.value - value).abs() < 1e-10, "{} vs {value}", exact.value);
    for (a, (x, y)) in exact.q.iter().zip(&q).enumerate() {
        assert!((x - y).abs() < 1e-10, "action {a}: {x} vs {y}");
    }
}

#[test]
fn solve_exact_matches_frozen_fixture() {
    let model = OracleChain::default();
    let exact = solve_exact(&model, &model.initial_distribution(), model.horizon()).unwrap();
    assert!((exact.q[0] - 2.913_577_75).abs() < 1e-9);
    assert!((exact.q[1] - 2.434_252_286).abs() < 1e-9);
    assert_eq!(exact.best_action(), 0);
}

/// `P(s_T | b_0, a_1..T, o_1..T)` by summing the joint probability of every
/// state path, normalized once at the end.
fn path_sum_posterior<M: EnumerableModel>(model: &M, initial: &[f64], steps: &[(usize, Observation)]) -> Vec<f64> {
    let states = model.states();
    let mut paths: Vec<(usize, f64)> =
        initial.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, p)| (i, *p)).collect();
    for (a, o) in steps {
        let mut extended = Vec::new();
        for &(i, mass) in &paths {
            for (next, t) in model.transition(&states[i], *a) {
                let z = model.observation_density(&next, *a, o);
                if t * z > 0.0 {
                    extended.push((model.state_index(&next), mass * t * z));
                }
            }
        }
        paths = extended;
    }
    let mut posterior = vec![0.0; states.len()];
    for (i, mass) in paths {
        posterior[i] += mass;
    }
    let total: f64 = posterior.iter().sum();
    posterior.iter_mut().for_each(|p| *p /= total);
    posterior
}

fn incremental_posterior<M: EnumerableModel>(model: &M, initial: &[f64], steps: &[(usize, Observation)]) -> Vec<f64> {
    steps.iter().fold(initial.to_vec(), |b, (a, o)| exact_update(model, &b, *a, o).unwrap())
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() < tol, "entry {i}: {x} vs {y}");
    }
}

#[test]
fn incremental_exact_updates_equal_the_batch_posterior_on_the_chain() {
    let model = OracleChain::default();
    let initial = model.initial_distribution();
    let o = |v: f64| Observation::scalar(v);
    let steps = vec![(1, o(2.0)), (0, o(1.0)), (0, o(0.0)), (1, o(1.0))];
    assert_close(&incremental_posterior(&model, &initial, &steps), &path_sum_posterior(&model, &initial, &steps), 1e-12);
}

#[test]
fn incremental_exact_updates_equal_the_batch_posterior_on_lightdark() {
    let model = LightDark1D::default();
    let mut initial = vec![0.0; model.states().len()];
    for x in -10..=20 {
        initial[model.state_index(&LightDarkState::at(x))] = 1.0 / 31.0;
    }
    let steps = vec![(3, Observation::scalar(7.0)), (3, Observation::scalar(9.2)), (1, Observation::scalar(8.1))];
    assert_close(&incremental_posterior(&model, &initial, &steps), &path_sum_posterior(&model, &initial, &steps), 1e-12);
}
