//! Structural conditions on a suggestion: finite conditional flow supports
//! with positive mass (R1) and the conditional-independence form of (R2).

use std::collections::BTreeMap;

use serde::Serialize;

use super::SuggestionAtoms;
use crate::game::GameSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct R1Report {
    pub passed: bool,
    pub total_weight: String,
    /// `|P_φ|` for every strategy with positive mass.
    pub support_sizes: Vec<(usize, usize)>,
    pub problems: Vec<String>,
}

/// Checks weights (positive, summing to one), flows (starting at `m_0`,
/// well-formed) and that every `φ` with positive mass has a finite
/// conditional flow support with positive conditional probabilities.
pub fn validate_r1<S: Scalar>(game: &GameSpec<S>, rho: &SuggestionAtoms<S>) -> R1Report {
    let tol = rho.tolerances();
    let mut problems = Vec::new();
    for (i, a) in rho.atoms().iter().enumerate() {
        if !a.weight.is_positive_tol(tol.derived) {
            problems.push(format!("atom {i} has non-positive weight {}", a.weight.render()));
        }
    }
    let total = rho.total_mass();
    if !total.near(&S::one(), tol.normalization) {
        problems.push(format!("weights sum to {}", total.render()));
    }
    for (fi, flow) in rho.flows().iter().enumerate() {
        if flow.len() != game.horizon + 1 {
            problems.push(format!("flow {fi} has length {}, expected {}", flow.len(), game.horizon + 1));
            continue;
        }
        if !flow.at(0).near(&game.initial, tol.normalization) {
            problems.push(format!("flow {fi} does not start at the initial law"));
        }
        for (t, m) in flow.entries().iter().enumerate() {
            if let Err(e) = crate::measures::FiniteDist::new(m.weights().to_vec(), tol) {
                problems.push(format!("flow {fi} at t={t}: {e}"));
            }
        }
    }
    for (si, s) in rho.strategies().iter().enumerate() {
        if s.horizon() != game.horizon || s.num_states() != game.num_states() {
            problems.push(format!("strategy {si} has the wrong shape"));
        } else if s.table().iter().flatten().any(|&a| a >= game.num_actions()) {
            problems.push(format!("strategy {si} uses an unknown action"));
        }
    }
    let mut support_sizes = Vec::new();
    for s in rho.active_strategies() {
        match rho.conditional_chain(s) {
            Ok(chain) => {
                let support = chain.support();
                for &f in &support {
                    if !chain.flow_prob[f].is_positive_tol(tol.derived) {
                        problems.push(format!("strategy {s}: flow {f} has non-positive conditional mass"));
                    }
                }
                support_sizes.push((s, support.len()));
            }
            Err(e) => problems.push(format!("strategy {s}: {e}")),
        }
    }
    R1Report {
        passed: problems.is_empty(),
        total_weight: total.render(),
        support_sizes,
        problems,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct R2Failure {
    pub t: usize,
    /// Node of `μ^{(t+1)}` conditioned on.
    pub prefix_node: usize,
    /// Index of the strategy prefix class `Φ^{(t)}` (first strategy carrying it).
    pub strategy: usize,
    pub flow: usize,
    pub joint: String,
    pub product: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct R2Report {
    pub passed: bool,
    pub failures: Vec<R2Failure>,
    pub notes: Vec<String>,
}

/// For every `t < T`, tests whether `Φ^{(t)}` and `μ` are conditionally
/// independent given `μ^{(t+1)}`, through the factorization
/// `P(r, m, n) P(n) = P(r, n) P(m, n)` on the finite support.
pub fn check_r2<S: Scalar>(rho: &SuggestionAtoms<S>) -> R2Report {
    let tol = rho.tolerances().derived;
    let tree = rho.tree();
    let horizon = rho.horizon();
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for t in 0..horizon {
        let level = t + 1;
        for (node_id, node) in tree.level(level).iter().enumerate() {
            // joint table over (strategy prefix class, flow) restricted to this node
            let mut joint: BTreeMap<(&[Vec<usize>], usize), (usize, S)> = BTreeMap::new();
            let mut by_class: BTreeMap<&[Vec<usize>], S> = BTreeMap::new();
            let mut by_flow: BTreeMap<usize, S> = BTreeMap::new();
            let mut p_node = S::zero();
            for a in rho.atoms().iter().filter(|a| node.flows.contains(&a.flow)) {
                let class = rho.strategies()[a.strategy].prefix(t);
                joint
                    .entry((class, a.flow))
                    .and_modify(|e| e.1 = e.1.clone() + a.weight.clone())
                    .or_insert((a.strategy, a.weight.clone()));
                by_class
                    .entry(class)
                    .and_modify(|v| *v = v.clone() + a.weight.clone())
                    .or_insert(a.weight.clone());
                by_flow
                    .entry(a.flow)
                    .and_modify(|v| *v = v.clone() + a.weight.clone())
                    .or_insert(a.weight.clone());
                p_node = p_node + a.weight.clone();
            }
            if !p_node.is_positive_tol(tol) {
                notes.push(format!("t={t}: prefix node {node_id} has zero probability, skipped"));
                continue;
            }
            for (class, pc) in &by_class {
                for (flow, pf) in &by_flow {
                    let (rep, pj) = joint
                        .get(&(*class, *flow))
                        .cloned()
                        .unwrap_or_else(|| (first_with_prefix(rho, class, t), S::zero()));
                    let lhs = pj * p_node.clone();
                    let rhs = pc.clone() * pf.clone();
                    if !lhs.near(&rhs, tol) {
                        failures.push(R2Failure {
                            t,
                            prefix_node: node_id,
                            strategy: rep,
                            flow: *flow,
                            joint: (lhs / p_node.clone() / p_node.clone()).render(),
                            product: (rhs / p_node.clone() / p_node.clone()).render(),
                        });
                    }
                }
            }
        }
    }
    R2Report {
        passed: failures.is_empty(),
        failures,
        notes,
    }
}

fn first_with_prefix<S: Scalar>(rho: &SuggestionAtoms<S>, class: &[Vec<usize>], t: usize) -> usize {
    rho.strategies()
        .iter()
        .position(|s| s.prefix(t) == class)
        .unwrap_or(0)
}
