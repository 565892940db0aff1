//! The induced N-player game: every run draws one flow atom from the flow
//! marginal of the suggestion and then i.i.d. strategies for the players
//! from the conditional strategy law given that flow. Players see the
//! empirical measure of the *other* players (denominator `N - 1`).
//!
//! Randomness follows the stream layout of [`crate::streams`]: slot 0 of a
//! run holds the flow draw, slot `p + 1` holds player `p`'s suggestion,
//! initial state, noise and randomization uniforms.

mod epsilon;
mod exact;
mod rules;

pub use epsilon::{epsilon_report, EpsilonReport, EpsilonRow, EpsilonSummary};
pub use exact::{best_response_bruteforce, exact_j1n, gamma_n_atoms, info_tree_value, BestResponse};
pub use rules::{
    default_family, ConstantAction, DeviationRule, FollowSuggestion, InfoKey, Myopic, RuleContext, SuggestionFlip,
    TableRule, Threshold, UniformRandom,
};

use serde::Serialize;

use crate::correlated::SuggestionAtoms;
use crate::error::{Error, Result};
use crate::game::{GameSpec, NoiseForm};
use crate::measures::{dist_counts, from_counts, FiniteDist};
use crate::stats::{reduce_runs, Estimate, MeanVar};
use crate::streams::{lane_noise, lane_randomization, lanes_for_horizon, RunStreams, LANE_INITIAL, LANE_SUGGESTION};

/// Index of the first positive weight whose running sum reaches `u`.
fn pick(weights: &[(usize, f64)], u: f64) -> usize {
    let mut acc = 0.0;
    for &(i, w) in weights {
        acc += w;
        if u <= acc {
            return i;
        }
    }
    weights.last().map(|w| w.0).unwrap_or(0)
}

/// One suggestion profile drawn from `γ^N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GammaDraw {
    pub flow: usize,
    pub strategies: Vec<usize>,
}

/// Precomputed sampling tables for a game/suggestion pair (float mode).
pub struct NPlayerModel<'a> {
    pub game: &'a GameSpec<f64>,
    pub rho: &'a SuggestionAtoms<f64>,
    /// `(flow, ρ_2(flow))` over flows with positive mass.
    flow_weights: Vec<(usize, f64)>,
    /// Per flow: `(strategy, ρ_1(strategy | flow))`.
    conditional: Vec<Vec<(usize, f64)>>,
    lanes: usize,
}

/// Outcome of one N-player run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NPlayerRun {
    pub n: usize,
    pub run: u64,
    pub flow: usize,
    pub strategies: Vec<usize>,
    /// `states[p][t]`; empty unless recorded.
    pub trajectories: Vec<Vec<usize>>,
    /// Player 1's state history.
    pub own_history: Vec<usize>,
    /// Realized cost of player 1.
    pub cost: f64,
    /// `dist_T` between player 1's exclude-one empirical flow and the drawn
    /// flow atom.
    pub chaos_distance: f64,
}

impl<'a> NPlayerModel<'a> {
    pub fn new(game: &'a GameSpec<f64>, rho: &'a SuggestionAtoms<f64>) -> Result<Self> {
        if rho.horizon() != game.horizon {
            return Err(Error::InvalidParameter("suggestion horizon differs from the game".into()));
        }
        let total = rho.total_mass();
        let flow_weights: Vec<(usize, f64)> = (0..rho.flows().len())
            .map(|f| (f, rho.flow_mass(f) / total))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        let conditional = (0..rho.flows().len())
            .map(|f| {
                let fm = rho.flow_mass(f);
                (0..rho.strategies().len())
                    .map(|s| (s, if fm > 0.0 { rho.joint_mass(s, f) / fm } else { 0.0 }))
                    .filter(|&(_, w)| w > 0.0)
                    .collect()
            })
            .collect();
        Ok(Self {
            game,
            rho,
            flow_weights,
            conditional,
            lanes: lanes_for_horizon(game.horizon),
        })
    }

    pub fn flow_weights(&self) -> &[(usize, f64)] {
        &self.flow_weights
    }

    /// Draws the suggestion profile of run `run` (the same draw the
    /// simulation uses).
    pub fn sample_gamma_n(&self, n: usize, seed: u64, run: u64) -> GammaDraw {
        let mut streams = RunStreams::new(seed, run, self.lanes);
        let flow = pick(&self.flow_weights, streams.uniform(0, LANE_SUGGESTION));
        let strategies = (0..n)
            .map(|p| pick(&self.conditional[flow], streams.uniform(p as u64 + 1, LANE_SUGGESTION)))
            .collect();
        GammaDraw { flow, strategies }
    }

    /// Simulates run `run` with `n` players. Player 1 (index 0) plays
    /// `rule` if given, everyone else follows their suggestion.
    ///
    /// `slots[p]` overrides the stream slot of player `p` (default `p + 1`);
    /// permuting the slots of players `2..N` permutes their randomness.
    /// `fixed_flow` conditions the run on a flow atom.
    pub fn run(
        &self,
        n: usize,
        rule: Option<&dyn DeviationRule>,
        seed: u64,
        run: u64,
        slots: Option<&[u64]>,
        fixed_flow: Option<usize>,
        record: bool,
    ) -> NPlayerRun {
        let game = self.game;
        let horizon = game.horizon;
        let nx = game.num_states();
        let lanes = self.lanes;
        let mut streams = RunStreams::new(seed, run, lanes);
        let flow = match fixed_flow {
            Some(f) => f,
            None => pick(&self.flow_weights, streams.uniform(0, LANE_SUGGESTION)),
        };
        let flow_value = &self.rho.flows()[flow];
        let mut uniforms = vec![0.0; n * lanes];
        let mut strategies = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        for p in 0..n {
            let slot = slots.map_or(p as u64 + 1, |s| s[p]);
            let u = &mut uniforms[p * lanes..(p + 1) * lanes];
            streams.fill_slot(slot, u);
            strategies.push(pick(&self.conditional[flow], u[LANE_SUGGESTION]));
            states.push(NoiseForm::sample(&game.initial, u[LANE_INITIAL]));
        }
        let mut trajectories: Vec<Vec<usize>> = if record {
            states.iter().map(|&x| vec![x]).collect()
        } else {
            Vec::new()
        };
        let others = (n - 1) as u64;
        let mut counts = vec![0u32; nx];
        for &x in &states {
            counts[x] += 1;
        }
        let own = |counts: &[u32], x: usize| {
            let mut c = counts.to_vec();
            c[x] -= 1;
            c
        };
        let mut own_history = vec![states[0]];
        let mut observed = vec![own(&counts, states[0])];
        let mut chaos_distance = dist_counts(&observed[0], others, flow_value.at(0));
        let mut cost = 0.0;
        let static_kernel = game.kernel_is_static();
        let mut next = vec![0usize; n];
        for t in 0..horizon {
            for p in 0..n {
                let x = states[p];
                let suggested = &self.rho.strategies()[strategies[p]];
                let u = &uniforms[p * lanes..(p + 1) * lanes];
                let a = if p == 0 {
                    let a = match rule {
                        Some(r) => r.action(
                            &RuleContext {
                                t,
                                suggested,
                                suggested_index: strategies[0],
                                own_history: &own_history,
                                observed: &observed,
                                others,
                                game,
                            },
                            u[lane_randomization(horizon, t)],
                        ),
                        None => suggested.action(t, x),
                    };
                    cost += game.running_cost_counts(t, x, &observed[t], others, a);
                    a
                } else {
                    suggested.action(t, x)
                };
                let law: &FiniteDist<f64> = if static_kernel {
                    game.static_transition(t, x, a).expect("static kernel")
                } else {
                    let m = from_counts::<f64>(&own(&counts, x), others);
                    game.transition_nearest(t, x, &m, a).expect("valid indices")
                };
                next[p] = NoiseForm::sample(law, u[lane_noise(t + 1)]);
            }
            std::mem::swap(&mut states, &mut next);
            counts.iter_mut().for_each(|c| *c = 0);
            for &x in &states {
                counts[x] += 1;
            }
            if record {
                for (p, tr) in trajectories.iter_mut().enumerate() {
                    tr.push(states[p]);
                }
            }
            own_history.push(states[0]);
            observed.push(own(&counts, states[0]));
            chaos_distance += dist_counts(&observed[t + 1], others, flow_value.at(t + 1));
        }
        cost += game.terminal_cost_counts(states[0], &observed[horizon], others);
        NPlayerRun {
            n,
            run,
            flow,
            strategies,
            trajectories,
            own_history,
            cost,
            chaos_distance,
        }
    }
}

/// Monte Carlo summary of player 1's cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub n: usize,
    pub deviation: String,
    pub cost: Estimate,
    /// Mean of player 1's state value at each time.
    pub mean_state: Vec<f64>,
    pub chaos_distance: Estimate,
}

/// Estimates `J_1^N` with player 1 following `rule` (the suggestion when
/// `None`). Replication `r` uses stream `r` of `seed`.
pub fn simulate(
    game: &GameSpec<f64>,
    rho: &SuggestionAtoms<f64>,
    n: usize,
    rule: Option<&dyn DeviationRule>,
    reps: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two players".into()));
    }
    if reps < 2 {
        return Err(Error::InvalidParameter("reps must be at least 2".into()));
    }
    let model = NPlayerModel::new(game, rho)?;
    let horizon = game.horizon;
    let values = game.state_values();
    let init = || (MeanVar::default(), MeanVar::default(), vec![0.0; horizon + 1]);
    let (cost, chaos, sums) = reduce_runs(
        reps,
        init,
        |acc, run| {
            let r = model.run(n, rule, seed, run, None, None, false);
            acc.0.push(r.cost);
            acc.1.push(r.chaos_distance);
            for (t, &x) in r.own_history.iter().enumerate() {
                acc.2[t] += values[x];
            }
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1.merge(&b.1);
            for (s, v) in a.2.iter_mut().zip(b.2) {
                *s += v;
            }
        },
    );
    Ok(SimulationReport {
        n,
        deviation: rule.map_or_else(|| "identity".into(), |r| r.name()),
        cost: cost.estimate(),
        mean_state: sums.iter().map(|s| s / reps as f64).collect(),
        chaos_distance: chaos.estimate(),
    })
}
