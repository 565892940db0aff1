//! Correlated suggestions over (restricted strategy, measure flow) pairs and
//! their verification.
//!
//! A suggestion is a finite list of weighted atoms. Flows are interned into
//! a prefix tree ([`FlowTree`]) so that flow prefixes shared by several
//! atoms map to a single node; the conditional chains, the joint
//! state/flow laws and the value tables are all indexed by those nodes.

mod chain;
mod dpp;
mod policy_mc;
mod structure;
mod verify;

pub use chain::{state_chain, ConditionalChain, FlowNode, FlowTree, JointEntry, JointLaw};
pub use dpp::{dpp_solve, ValueEntry, ValueTable};
pub use policy_mc::{mc_policy_cost, DeterministicPolicy, RandomizedPolicy, UniformRandomPolicy};
pub use structure::{check_r2, validate_r1, R1Report, R2Failure, R2Report};
pub use verify::{
    branch_cost, check_consistency, check_optimality, evaluate_j, BranchOptimality, ConsistencyFailure,
    ConsistencyReport, OptimalityReport, OptimalityWitness,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MeasureFlow;
use crate::scalar::{Scalar, Tolerances, Q};

/// Feedback rule `(t, x) -> action` depending only on the player's own
/// current state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RestrictedStrategy {
    table: Vec<Vec<usize>>,
}

impl RestrictedStrategy {
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidParameter("strategy table is empty".into()));
        }
        let nx = table[0].len();
        if nx == 0 || table.iter().any(|row| row.len() != nx) {
            return Err(Error::InvalidParameter("strategy table is ragged".into()));
        }
        Ok(Self { table })
    }

    pub fn constant(horizon: usize, num_states: usize, action: usize) -> Self {
        Self {
            table: vec![vec![action; num_states]; horizon],
        }
    }

    pub fn from_fn(horizon: usize, num_states: usize, f: impl Fn(usize, usize) -> usize) -> Self {
        Self {
            table: (0..horizon).map(|t| (0..num_states).map(|x| f(t, x)).collect()).collect(),
        }
    }

    #[inline]
    pub fn action(&self, t: usize, x: usize) -> usize {
        self.table[t][x]
    }

    pub fn horizon(&self) -> usize {
        self.table.len()
    }

    pub fn num_states(&self) -> usize {
        self.table[0].len()
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    /// Rows `0..=t`: the restriction of the strategy to times up to `t`.
    pub fn prefix(&self, t: usize) -> &[Vec<usize>] {
        &self.table[..=t]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom<S> {
    pub strategy: usize,
    pub flow: usize,
    pub weight: S,
}

/// Finite-support correlated suggestion. Strategies and flows are
/// deduplicated by value; atoms with the same pair are merged by adding
/// their weights.
#[derive(Debug, Clone)]
pub struct SuggestionAtoms<S> {
    strategies: Vec<RestrictedStrategy>,
    flows: Vec<MeasureFlow<S>>,
    atoms: Vec<Atom<S>>,
    tree: FlowTree<S>,
    tol: Tolerances,
}

impl<S: Scalar> SuggestionAtoms<S> {
    /// Builds the atom list. Only shapes are checked here; weights and the
    /// (R1) conditions are checked by [`validate_r1`].
    pub fn new(entries: Vec<(RestrictedStrategy, MeasureFlow<S>, S)>, tol: Tolerances) -> Result<Self> {
        let Some((s0, _, _)) = entries.first() else {
            return Err(Error::InvalidParameter("suggestion has no atoms".into()));
        };
        let (horizon, nx) = (s0.horizon(), s0.num_states());
        let mut strategies: Vec<RestrictedStrategy> = Vec::new();
        let mut strategy_index: HashMap<RestrictedStrategy, usize> = HashMap::new();
        let mut flows: Vec<MeasureFlow<S>> = Vec::new();
        let mut atoms: Vec<Atom<S>> = Vec::new();
        for (i, (strategy, flow, weight)) in entries.into_iter().enumerate() {
            if strategy.horizon() != horizon || strategy.num_states() != nx {
                return Err(Error::InvalidParameter(format!("atom {i}: strategy shape mismatch")));
            }
            if flow.len() != horizon + 1 {
                return Err(Error::LengthMismatch {
                    left: horizon + 1,
                    right: flow.len(),
                });
            }
            if flow.at(0).support_size() != nx {
                return Err(Error::SupportMismatch {
                    left: nx,
                    right: flow.at(0).support_size(),
                });
            }
            let si = *strategy_index.entry(strategy.clone()).or_insert_with(|| {
                strategies.push(strategy);
                strategies.len() - 1
            });
            let fi = match flows.iter().position(|f| f.near(&flow, tol.normalization)) {
                Some(fi) => fi,
                None => {
                    flows.push(flow);
                    flows.len() - 1
                }
            };
            match atoms.iter_mut().find(|a| a.strategy == si && a.flow == fi) {
                Some(a) => a.weight = a.weight.clone() + weight,
                None => atoms.push(Atom {
                    strategy: si,
                    flow: fi,
                    weight,
                }),
            }
        }
        let tree = FlowTree::build(&flows, tol.normalization);
        Ok(Self {
            strategies,
            flows,
            atoms,
            tree,
            tol,
        })
    }

    pub fn horizon(&self) -> usize {
        self.strategies[0].horizon()
    }

    pub fn strategies(&self) -> &[RestrictedStrategy] {
        &self.strategies
    }

    pub fn flows(&self) -> &[MeasureFlow<S>] {
        &self.flows
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn tree(&self) -> &FlowTree<S> {
        &self.tree
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn strategy_index(&self, strategy: &RestrictedStrategy) -> Option<usize> {
        self.strategies.iter().position(|s| s == strategy)
    }

    /// `P(Φ = φ)`.
    pub fn strategy_mass(&self, strategy: usize) -> S {
        self.atoms
            .iter()
            .filter(|a| a.strategy == strategy)
            .fold(S::zero(), |acc, a| acc + a.weight.clone())
    }

    /// `P(μ = m)`.
    pub fn flow_mass(&self, flow: usize) -> S {
        self.atoms
            .iter()
            .filter(|a| a.flow == flow)
            .fold(S::zero(), |acc, a| acc + a.weight.clone())
    }

    /// `P(Φ = φ, μ = m)`.
    pub fn joint_mass(&self, strategy: usize, flow: usize) -> S {
        self.atoms
            .iter()
            .filter(|a| a.strategy == strategy && a.flow == flow)
            .fold(S::zero(), |acc, a| acc + a.weight.clone())
    }

    pub fn total_mass(&self) -> S {
        self.atoms.iter().fold(S::zero(), |acc, a| acc + a.weight.clone())
    }

    /// Strategies carrying positive mass, in index order.
    pub fn active_strategies(&self) -> Vec<usize> {
        (0..self.strategies.len())
            .filter(|&s| self.strategy_mass(s).is_positive_tol(self.tol.derived))
            .collect()
    }

    pub fn conditional_chain(&self, strategy: usize) -> Result<ConditionalChain<S>> {
        ConditionalChain::new(self, strategy)
    }
}

impl SuggestionAtoms<Q> {
    pub fn to_f64(&self) -> SuggestionAtoms<f64> {
        let flows: Vec<MeasureFlow<f64>> = self.flows.iter().map(MeasureFlow::to_f64).collect();
        SuggestionAtoms {
            strategies: self.strategies.clone(),
            tree: FlowTree::build(&flows, 0.0),
            flows,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    strategy: a.strategy,
                    flow: a.flow,
                    weight: a.weight.to_f64(),
                })
                .collect(),
            tol: self.tol,
        }
    }
}

/// Query handed to a [`DeviationMap`]: the suggested strategy, the current
/// time, the own-state history `x_0..x_t` and the flow-prefix node of
/// `m^{(t)}` in the suggestion's [`FlowTree`].
#[derive(Debug, Clone, Copy)]
pub struct DeviationQuery<'a> {
    pub strategy: usize,
    pub suggested: &'a RestrictedStrategy,
    pub t: usize,
    pub history: &'a [usize],
    pub flow_node: usize,
}

/// Strategy modification mapping a received suggestion to a progressive
/// strategy. `None` marks an undefined node.
pub trait DeviationMap {
    fn action(&self, q: &DeviationQuery<'_>) -> Option<usize>;
}

/// Follow the suggestion.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl DeviationMap for Identity {
    fn action(&self, q: &DeviationQuery<'_>) -> Option<usize> {
        Some(q.suggested.action(q.t, q.history[q.t]))
    }
}

pub type DeviationKey = (usize, usize, Vec<usize>, usize);

/// Deviation given by an explicit table keyed on
/// `(strategy, t, history, flow node)`, optionally falling back to the
/// suggestion off the table.
#[derive(Debug, Clone, Default)]
pub struct TableDeviation {
    pub table: HashMap<DeviationKey, usize>,
    pub fallback_to_suggestion: bool,
}

impl DeviationMap for TableDeviation {
    fn action(&self, q: &DeviationQuery<'_>) -> Option<usize> {
        let key = (q.strategy, q.t, q.history.to_vec(), q.flow_node);
        match self.table.get(&key) {
            Some(&a) => Some(a),
            None if self.fallback_to_suggestion => Identity.action(q),
            None => None,
        }
    }
}

impl<F> DeviationMap for F
where
    F: Fn(&DeviationQuery<'_>) -> Option<usize>,
{
    fn action(&self, q: &DeviationQuery<'_>) -> Option<usize> {
        self(q)
    }
}
