use std::collections::BTreeMap;

use serde::Serialize;

use super::{DeviationMap, DeviationQuery, SuggestionAtoms};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::measures::{FiniteDist, MeasureFlow};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNode<S> {
    pub parent: Option<usize>,
    /// `m_t` at this node.
    pub value: FiniteDist<S>,
    pub children: Vec<usize>,
    /// Flows whose prefix passes through this node.
    pub flows: Vec<usize>,
}

/// Prefix tree over the flows of a suggestion; level `t` holds the distinct
/// prefixes `m^{(t)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTree<S> {
    levels: Vec<Vec<FlowNode<S>>>,
    paths: Vec<Vec<usize>>,
}

impl<S: Scalar> FlowTree<S> {
    pub fn build(flows: &[MeasureFlow<S>], tol: f64) -> Self {
        let len = flows.first().map_or(0, MeasureFlow::len);
        let mut levels: Vec<Vec<FlowNode<S>>> = vec![Vec::new(); len];
        let mut paths = Vec::with_capacity(flows.len());
        for (fi, flow) in flows.iter().enumerate() {
            let mut path = Vec::with_capacity(len);
            let mut parent: Option<usize> = None;
            for t in 0..len {
                let value = flow.at(t);
                let found = levels[t]
                    .iter()
                    .position(|n| n.parent == parent && n.value.near(value, tol));
                let id = match found {
                    Some(id) => id,
                    None => {
                        levels[t].push(FlowNode {
                            parent,
                            value: value.clone(),
                            children: Vec::new(),
                            flows: Vec::new(),
                        });
                        let id = levels[t].len() - 1;
                        if let Some(p) = parent {
                            levels[t - 1][p].children.push(id);
                        }
                        id
                    }
                };
                levels[t][id].flows.push(fi);
                path.push(id);
                parent = Some(id);
            }
            paths.push(path);
        }
        Self { levels, paths }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, t: usize) -> &[FlowNode<S>] {
        &self.levels[t]
    }

    pub fn node(&self, t: usize, id: usize) -> &FlowNode<S> {
        &self.levels[t][id]
    }

    /// Node ids of `flow` at every level.
    pub fn path(&self, flow: usize) -> &[usize] {
        &self.paths[flow]
    }

    /// The flow represented by leaf `id` at the last level.
    pub fn leaf_flow(&self, id: usize) -> usize {
        self.levels[self.levels.len() - 1][id].flows[0]
    }

    /// `m^{(t)}` at node `(t, id)`, oldest first.
    pub fn prefix(&self, t: usize, id: usize) -> Vec<&FiniteDist<S>> {
        let mut out = Vec::with_capacity(t + 1);
        let mut cur = Some(id);
        let mut level = t as isize;
        while let Some(n) = cur {
            let node = &self.levels[level as usize][n];
            out.push(&node.value);
            cur = node.parent;
            level -= 1;
        }
        out.reverse();
        out
    }
}

/// Conditional law of the flow given `Φ = φ`, on the prefix tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalChain<S> {
    pub strategy: usize,
    /// `P(Φ = φ)`.
    pub mass: S,
    /// `P_φ(μ^{(t)} = node)` per level and node.
    pub node_prob: Vec<Vec<S>>,
    /// `P_φ(μ = m)` per flow.
    pub flow_prob: Vec<S>,
}

impl<S: Scalar> ConditionalChain<S> {
    pub(super) fn new(rho: &SuggestionAtoms<S>, strategy: usize) -> Result<Self> {
        if strategy >= rho.strategies().len() {
            return Err(Error::IndexOutOfRange(format!("strategy {strategy}")));
        }
        let tol = rho.tolerances().derived;
        let mass = rho.strategy_mass(strategy);
        if !mass.is_positive_tol(tol) {
            return Err(Error::ZeroProbability(format!("strategy {strategy} has no mass")));
        }
        let flow_prob: Vec<S> = (0..rho.flows().len())
            .map(|f| rho.joint_mass(strategy, f) / mass.clone())
            .collect();
        let tree = rho.tree();
        let node_prob = (0..tree.num_levels())
            .map(|t| {
                tree.level(t)
                    .iter()
                    .map(|n| n.flows.iter().fold(S::zero(), |acc, &f| acc + flow_prob[f].clone()))
                    .collect()
            })
            .collect();
        Ok(Self {
            strategy,
            mass,
            node_prob,
            flow_prob,
        })
    }

    /// Flows with positive conditional probability (the set `P_φ`).
    pub fn support(&self) -> Vec<usize> {
        (0..self.flow_prob.len())
            .filter(|&f| self.flow_prob[f] > S::zero())
            .collect()
    }

    pub fn prefix_prob(&self, t: usize, node: usize) -> &S {
        &self.node_prob[t][node]
    }

    /// Nodes at level `t` with positive probability.
    pub fn active_nodes(&self, t: usize) -> Vec<usize> {
        (0..self.node_prob[t].len())
            .filter(|&n| self.node_prob[t][n] > S::zero())
            .collect()
    }

    /// `P_φ(μ_{t+1} = child | μ^{(t)} = node)` over children with positive
    /// probability.
    pub fn transitions(&self, tree: &FlowTree<S>, t: usize, node: usize) -> Result<Vec<(usize, S)>> {
        let p = &self.node_prob[t][node];
        if *p <= S::zero() {
            return Err(Error::ZeroProbability(format!("flow prefix node ({t}, {node})")));
        }
        Ok(tree
            .node(t, node)
            .children
            .iter()
            .filter(|&&c| self.node_prob[t + 1][c] > S::zero())
            .map(|&c| (c, self.node_prob[t + 1][c].clone() / p.clone()))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointEntry<S> {
    pub prob: S,
    /// Action played at this node; `None` on the terminal layer.
    pub action: Option<usize>,
}

/// Joint law of `(X^{(t)}, μ^{(t)})` given `Φ = φ`, layer by layer. Keys are
/// `(state history, flow-prefix node)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw<S> {
    pub strategy: usize,
    pub layers: Vec<BTreeMap<(Vec<usize>, usize), JointEntry<S>>>,
}

impl<S: Scalar> JointLaw<S> {
    /// `P_φ(X_t = x)`.
    pub fn state_marginal(&self, t: usize, num_states: usize) -> Vec<S> {
        let mut out = vec![S::zero(); num_states];
        for ((h, _), e) in &self.layers[t] {
            out[h[t]] = out[h[t]].clone() + e.prob.clone();
        }
        out
    }

    /// `P_φ(X_t = x, μ = flow)` using the terminal layer.
    pub fn state_flow_joint(&self, tree: &FlowTree<S>, t: usize, num_states: usize, flow: usize) -> Vec<S> {
        let last = self.layers.len() - 1;
        let leaf = tree.path(flow)[last];
        let mut out = vec![S::zero(); num_states];
        for ((h, n), e) in &self.layers[last] {
            if *n == leaf {
                out[h[t]] = out[h[t]].clone() + e.prob.clone();
            }
        }
        out
    }
}

/// Forward construction of the joint law of state history and flow prefix
/// under `Φ = φ`, with actions chosen by `deviation`. Given the current
/// node, the next state (drawn from the kernel at `m_t`) and the next flow
/// value (drawn from the conditional chain) are independent.
pub fn state_chain<S: Scalar>(
    game: &GameSpec<S>,
    rho: &SuggestionAtoms<S>,
    chain: &ConditionalChain<S>,
    deviation: &dyn DeviationMap,
) -> Result<JointLaw<S>> {
    let tree = rho.tree();
    let horizon = game.horizon;
    let suggested = &rho.strategies()[chain.strategy];
    let mut layers: Vec<BTreeMap<(Vec<usize>, usize), JointEntry<S>>> = Vec::with_capacity(horizon + 1);
    let mut first = BTreeMap::new();
    for n in chain.active_nodes(0) {
        for (x0, p) in game.initial.weights().iter().enumerate() {
            if *p > S::zero() {
                first.insert(
                    (vec![x0], n),
                    JointEntry {
                        prob: p.clone() * chain.prefix_prob(0, n).clone(),
                        action: None,
                    },
                );
            }
        }
    }
    layers.push(first);
    for t in 0..horizon {
        let mut next: BTreeMap<(Vec<usize>, usize), JointEntry<S>> = BTreeMap::new();
        for ((h, n), entry) in layers[t].iter_mut() {
            let q = DeviationQuery {
                strategy: chain.strategy,
                suggested,
                t,
                history: h,
                flow_node: *n,
            };
            let a = deviation.action(&q).ok_or_else(|| {
                Error::UndefinedDeviation(format!("strategy {} t={t} history {h:?} node {n}", chain.strategy))
            })?;
            if a >= game.num_actions() {
                return Err(Error::IndexOutOfRange(format!("action {a}")));
            }
            entry.action = Some(a);
            let m_t = &tree.node(t, *n).value;
            let law = game.transition(t, h[t], m_t, a)?;
            let flow_steps = chain.transitions(tree, t, *n)?;
            for (y, ky) in law.weights().iter().enumerate() {
                if *ky <= S::zero() {
                    continue;
                }
                let mut h2 = h.clone();
                h2.push(y);
                for (c, pc) in &flow_steps {
                    let add = entry.prob.clone() * ky.clone() * pc.clone();
                    next.entry((h2.clone(), *c))
                        .and_modify(|e| e.prob = e.prob.clone() + add.clone())
                        .or_insert(JointEntry {
                            prob: add,
                            action: None,
                        });
                }
            }
        }
        layers.push(next);
    }
    Ok(JointLaw {
        strategy: chain.strategy,
        layers,
    })
}
