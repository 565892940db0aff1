//! Monte Carlo cost of randomized, history-dependent policies in the mean
//! field model.

use super::{DeviationMap, DeviationQuery, SuggestionAtoms};
use crate::error::{Error, Result};
use crate::game::{GameSpec, NoiseForm};
use crate::stats::{reduce_runs, Estimate, MeanVar};
use crate::streams::{lane_noise, lane_randomization, lanes_for_horizon, RunStreams, LANE_INITIAL, LANE_SUGGESTION};

/// Policy that may consume one uniform per step on top of the history.
pub trait RandomizedPolicy: Sync {
    fn action(&self, q: &DeviationQuery<'_>, u: f64) -> usize;
}

/// Wraps a deterministic deviation; undefined nodes follow the suggestion.
pub struct DeterministicPolicy<D>(pub D);

impl<D: DeviationMap + Sync> RandomizedPolicy for DeterministicPolicy<D> {
    fn action(&self, q: &DeviationQuery<'_>, _u: f64) -> usize {
        self.0
            .action(q)
            .unwrap_or_else(|| q.suggested.action(q.t, q.history[q.t]))
    }
}

/// Uniformly random action at every step.
pub struct UniformRandomPolicy {
    pub num_actions: usize,
}

impl RandomizedPolicy for UniformRandomPolicy {
    fn action(&self, _q: &DeviationQuery<'_>, u: f64) -> usize {
        ((u * self.num_actions as f64) as usize).min(self.num_actions - 1)
    }
}

/// Index of the first weight whose cumulative sum reaches `u`.
pub(crate) fn pick_weighted(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u <= acc {
            return i;
        }
    }
    last
}

/// Estimates `E[Σ_t f + F]` when the representative player receives
/// `(Φ, μ) ~ ρ` and plays `policy`. Replication `r` uses stream `r` of
/// `seed`, so the result is reproducible and thread-count independent.
pub fn mc_policy_cost(
    game: &GameSpec<f64>,
    rho: &SuggestionAtoms<f64>,
    policy: &dyn RandomizedPolicy,
    reps: u64,
    seed: u64,
) -> Result<Estimate> {
    if reps < 2 {
        return Err(Error::InvalidParameter("reps must be at least 2".into()));
    }
    let horizon = game.horizon;
    let lanes = lanes_for_horizon(horizon);
    let total: f64 = rho.atoms().iter().map(|a| a.weight).sum();
    let tree = rho.tree();
    let acc = reduce_runs(
        reps,
        MeanVar::default,
        |acc, run| {
            let mut streams = RunStreams::new(seed, run, lanes);
            let mut u = vec![0.0; lanes];
            streams.fill_slot(0, &mut u);
            let atom = &rho.atoms()[pick_weighted(
                rho.atoms().iter().map(|a| a.weight / total),
                u[LANE_SUGGESTION],
            )];
            let flow = &rho.flows()[atom.flow];
            let path = tree.path(atom.flow);
            let suggested = &rho.strategies()[atom.strategy];
            let mut history = Vec::with_capacity(horizon + 1);
            history.push(NoiseForm::sample(&game.initial, u[LANE_INITIAL]));
            let mut cost = 0.0;
            for t in 0..horizon {
                let q = DeviationQuery {
                    strategy: atom.strategy,
                    suggested,
                    t,
                    history: &history,
                    flow_node: path[t],
                };
                let a = policy.action(&q, u[lane_randomization(horizon, t)]);
                let x = history[t];
                cost += game.running_cost(t, x, flow.at(t), a);
                let law = game
                    .transition_nearest(t, x, flow.at(t), a)
                    .expect("indices checked by game validation");
                history.push(NoiseForm::sample(law, u[lane_noise(t + 1)]));
            }
            cost += game.terminal_cost(history[horizon], flow.at(horizon));
            acc.push(cost);
        },
        |a, b| a.merge(&b),
    );
    Ok(acc.estimate())
}
