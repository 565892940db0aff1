//! The consistency (Con) and optimality (Opt) checks and the cost
//! functional `J(m_0, ρ, w)`.

use serde::Serialize;

use super::{dpp_solve, state_chain, DeviationMap, Identity, JointLaw, SuggestionAtoms};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::scalar::Scalar;

/// `E_φ[Σ_t f + F]` under a joint law built by [`state_chain`].
pub fn branch_cost<S: Scalar>(game: &GameSpec<S>, rho: &SuggestionAtoms<S>, law: &JointLaw<S>) -> S {
    let tree = rho.tree();
    let mut total = S::zero();
    for (t, layer) in law.layers.iter().enumerate() {
        for ((h, n), e) in layer {
            let m_t = &tree.node(t, *n).value;
            let c = match e.action {
                Some(a) if t < game.horizon => game.running_cost(t, h[t], m_t, a),
                _ => game.terminal_cost(h[t], m_t),
            };
            total = total + e.prob.clone() * c;
        }
    }
    total
}

/// `J(m_0, ρ, w) = Σ_φ P(Φ = φ) E_φ[Σ_t f + F]` with actions from `deviation`.
pub fn evaluate_j<S: Scalar>(game: &GameSpec<S>, rho: &SuggestionAtoms<S>, deviation: &dyn DeviationMap) -> Result<S> {
    let mut total = S::zero();
    for s in rho.active_strategies() {
        let chain = rho.conditional_chain(s)?;
        let law = state_chain(game, rho, &chain, deviation)?;
        total = total + chain.mass.clone() * branch_cost(game, rho, &law);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyFailure {
    pub flow: usize,
    pub t: usize,
    pub state: usize,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub passed: bool,
    pub failures: Vec<ConsistencyFailure>,
}

/// For every flow `m` in the support and every `t`, compares
/// `P(X_t = · | μ = m)` (Bayes over all received strategies) with `m_t`.
pub fn check_consistency<S: Scalar>(game: &GameSpec<S>, rho: &SuggestionAtoms<S>) -> Result<ConsistencyReport> {
    let tol = rho.tolerances().derived;
    let tree = rho.tree();
    let nx = game.num_states();
    let laws = rho
        .active_strategies()
        .into_iter()
        .map(|s| {
            let chain = rho.conditional_chain(s)?;
            let law = state_chain(game, rho, &chain, &Identity)?;
            Ok((chain, law))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut failures = Vec::new();
    for (fi, flow) in rho.flows().iter().enumerate() {
        let p_flow = rho.flow_mass(fi);
        if !p_flow.is_positive_tol(tol) {
            return Err(Error::ZeroProbability(format!("flow {fi}")));
        }
        for t in 0..=game.horizon {
            let mut cond = vec![S::zero(); nx];
            for (chain, law) in &laws {
                if chain.flow_prob[fi] <= S::zero() {
                    continue;
                }
                let joint = law.state_flow_joint(tree, t, nx, fi);
                for x in 0..nx {
                    cond[x] = cond[x].clone() + chain.mass.clone() * joint[x].clone();
                }
            }
            for x in 0..nx {
                let actual = cond[x].clone() / p_flow.clone();
                let expected = flow.at(t).mass(x).clone();
                if !actual.near(&expected, tol) {
                    failures.push(ConsistencyFailure {
                        flow: fi,
                        t,
                        state: x,
                        expected: expected.render(),
                        actual: actual.render(),
                    });
                }
            }
        }
    }
    Ok(ConsistencyReport {
        passed: failures.is_empty(),
        failures,
    })
}

/// A node reachable under the suggestion where the suggested action is
/// strictly worse than the optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityWitness {
    pub strategy: usize,
    pub t: usize,
    pub history: Vec<usize>,
    pub flow_node: usize,
    pub suggested: usize,
    pub better: usize,
    pub suggested_value: String,
    pub better_value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchOptimality {
    pub strategy: usize,
    pub mass: String,
    /// `E_φ[cost]` when following the suggestion.
    pub follow_cost: String,
    /// `E_φ[V_φ(0, X_0)]`.
    pub optimal_cost: String,
    pub ties: usize,
    pub witnesses: Vec<OptimalityWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub passed: bool,
    pub follow_cost: String,
    pub optimal_cost: String,
    pub gap: String,
    pub branches: Vec<BranchOptimality>,
}

/// (Opt) holds iff `J(ρ, ι) = Σ_φ P(φ) E[V_φ(0, X_0)]`, since `V_φ` is the
/// infimum over progressive deviations of the received strategy.
pub fn check_optimality<S: Scalar>(game: &GameSpec<S>, rho: &SuggestionAtoms<S>) -> Result<OptimalityReport> {
    let tol = rho.tolerances().derived;
    let mut follow_total = S::zero();
    let mut optimal_total = S::zero();
    let mut branches = Vec::new();
    for s in rho.active_strategies() {
        let table = dpp_solve(game, rho, s)?;
        let chain = &table.chain;
        let law = state_chain(game, rho, chain, &Identity)?;
        let follow = branch_cost(game, rho, &law);
        let optimal = table.initial_value(game);
        let mut witnesses = Vec::new();
        for (t, layer) in law.layers.iter().enumerate().take(game.horizon) {
            for ((h, n), e) in layer {
                if e.prob <= S::zero() {
                    continue;
                }
                let Some(v) = table.get(t, h, *n) else { continue };
                let suggested = e.action.expect("interior node has an action");
                if !v.q[suggested].near(&v.value, tol) && v.q[suggested] > v.value {
                    witnesses.push(OptimalityWitness {
                        strategy: s,
                        t,
                        history: h.clone(),
                        flow_node: *n,
                        suggested,
                        better: v.action.unwrap_or(0),
                        suggested_value: v.q[suggested].render(),
                        better_value: v.value.render(),
                    });
                }
            }
        }
        let ties = table.entries.values().filter(|e| e.tie).count();
        follow_total = follow_total + chain.mass.clone() * follow.clone();
        optimal_total = optimal_total + chain.mass.clone() * optimal.clone();
        branches.push(BranchOptimality {
            strategy: s,
            mass: chain.mass.render(),
            follow_cost: follow.render(),
            optimal_cost: optimal.render(),
            ties,
            witnesses,
        });
    }
    let gap = follow_total.clone() - optimal_total.clone();
    Ok(OptimalityReport {
        passed: gap.is_zero_tol(tol),
        follow_cost: follow_total.render(),
        optimal_cost: optimal_total.render(),
        gap: gap.render(),
        branches,
    })
}
