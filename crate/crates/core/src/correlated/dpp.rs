//! Conditional dynamic programming over the joint history tree
//! `(t, x^{(t)}, m^{(t)})` for a fixed received strategy.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{ConditionalChain, SuggestionAtoms};
use crate::error::Result;
use crate::game::GameSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueEntry<S> {
    pub value: S,
    /// Minimizing action, lowest index on ties; `None` on the terminal layer.
    pub action: Option<usize>,
    /// More than one action attains the minimum.
    pub tie: bool,
    /// Per-action value `f + E[V(t+1, ·)]`; empty on the terminal layer.
    pub q: Vec<S>,
}

pub type NodeKey = (usize, Vec<usize>, usize);

/// Optimal value `V_φ(t, x^{(t)}, m^{(t)})` over progressive deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable<S> {
    pub strategy: usize,
    pub chain: ConditionalChain<S>,
    pub entries: BTreeMap<NodeKey, ValueEntry<S>>,
    tol: f64,
}

impl<S: Scalar> ValueTable<S> {
    pub fn get(&self, t: usize, history: &[usize], flow_node: usize) -> Option<&ValueEntry<S>> {
        self.entries.get(&(t, history.to_vec(), flow_node))
    }

    /// `E[V_φ(0, X_0, μ_0)]` with `X_0 ~ m_0`, independent of `μ_0`.
    pub fn initial_value(&self, game: &GameSpec<S>) -> S {
        let mut total = S::zero();
        for n in self.chain.active_nodes(0) {
            for (x0, p) in game.initial.weights().iter().enumerate() {
                if *p > S::zero() {
                    if let Some(e) = self.get(0, &[x0], n) {
                        total = total + p.clone() * self.chain.prefix_prob(0, n).clone() * e.value.clone();
                    }
                }
            }
        }
        total
    }

    /// `V_φ(0, x_0)` for every initial state, averaged over initial flow nodes.
    pub fn initial_values(&self, game: &GameSpec<S>) -> Vec<Option<S>> {
        (0..game.num_states())
            .map(|x0| {
                let mut acc: Option<S> = None;
                for n in self.chain.active_nodes(0) {
                    let e = self.get(0, &[x0], n)?;
                    let v = self.chain.prefix_prob(0, n).clone() * e.value.clone();
                    acc = Some(match acc {
                        Some(a) => a + v,
                        None => v,
                    });
                }
                acc
            })
            .collect()
    }

    /// Recomputes the recursion at every interior node from the stored
    /// children and compares with the stored values.
    pub fn reverify(&self, game: &GameSpec<S>, rho: &SuggestionAtoms<S>) -> Result<bool> {
        let tree = rho.tree();
        for ((t, h, n), e) in &self.entries {
            let m_t = &tree.node(*t, *n).value;
            if *t == game.horizon {
                if !game.terminal_cost(h[*t], m_t).near(&e.value, self.tol) {
                    return Ok(false);
                }
                continue;
            }
            let flow_steps = self.chain.transitions(tree, *t, *n)?;
            let mut best: Option<S> = None;
            for a in 0..game.num_actions() {
                let mut v = game.running_cost(*t, h[*t], m_t, a);
                let law = game.transition(*t, h[*t], m_t, a)?;
                for (y, ky) in law.weights().iter().enumerate() {
                    if *ky <= S::zero() {
                        continue;
                    }
                    let mut h2 = h.clone();
                    h2.push(y);
                    for (c, pc) in &flow_steps {
                        let Some(child) = self.entries.get(&(*t + 1, h2.clone(), *c)) else {
                            return Ok(false);
                        };
                        v = v + ky.clone() * pc.clone() * child.value.clone();
                    }
                }
                best = Some(match best {
                    Some(b) => S::min_of(b, v),
                    None => v,
                });
            }
            if !best.is_some_and(|b| b.near(&e.value, self.tol)) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Backward induction `V(t) = min_a { f(t, x_t, m_t, a) + Σ_{y,l} K(y) P(l | m^{(t)}) V(t+1) }`
/// with terminal layer `F(x_T, m_T)`, over every node reachable under some
/// deviation.
pub fn dpp_solve<S: Scalar>(game: &GameSpec<S>, rho: &SuggestionAtoms<S>, strategy: usize) -> Result<ValueTable<S>> {
    let chain = rho.conditional_chain(strategy)?;
    let tree = rho.tree();
    let horizon = game.horizon;
    let tol = rho.tolerances().derived;

    // forward reachability under any action
    let mut reach: Vec<BTreeSet<(Vec<usize>, usize)>> = vec![BTreeSet::new(); horizon + 1];
    for n in chain.active_nodes(0) {
        for (x0, p) in game.initial.weights().iter().enumerate() {
            if *p > S::zero() {
                reach[0].insert((vec![x0], n));
            }
        }
    }
    for t in 0..horizon {
        let (cur, rest) = reach.split_at_mut(t + 1);
        for (h, n) in &cur[t] {
            let m_t = &tree.node(t, *n).value;
            let flow_steps = chain.transitions(tree, t, *n)?;
            for a in 0..game.num_actions() {
                let law = game.transition(t, h[t], m_t, a)?;
                for (y, ky) in law.weights().iter().enumerate() {
                    if *ky > S::zero() {
                        let mut h2 = h.clone();
                        h2.push(y);
                        for (c, _) in &flow_steps {
                            rest[0].insert((h2.clone(), *c));
                        }
                    }
                }
            }
        }
    }

    let mut entries: BTreeMap<NodeKey, ValueEntry<S>> = BTreeMap::new();
    for (h, n) in &reach[horizon] {
        let m_t = &tree.node(horizon, *n).value;
        entries.insert(
            (horizon, h.clone(), *n),
            ValueEntry {
                value: game.terminal_cost(h[horizon], m_t),
                action: None,
                tie: false,
                q: Vec::new(),
            },
        );
    }
    for t in (0..horizon).rev() {
        for (h, n) in &reach[t] {
            let m_t = &tree.node(t, *n).value;
            let flow_steps = chain.transitions(tree, t, *n)?;
            let mut q = Vec::with_capacity(game.num_actions());
            for a in 0..game.num_actions() {
                let mut v = game.running_cost(t, h[t], m_t, a);
                let law = game.transition(t, h[t], m_t, a)?;
                for (y, ky) in law.weights().iter().enumerate() {
                    if *ky <= S::zero() {
                        continue;
                    }
                    let mut h2 = h.clone();
                    h2.push(y);
                    for (c, pc) in &flow_steps {
                        let child = &entries[&(t + 1, h2.clone(), *c)];
                        v = v + ky.clone() * pc.clone() * child.value.clone();
                    }
                }
                q.push(v);
            }
            let mut best = 0;
            for a in 1..q.len() {
                if q[a] < q[best] && !q[a].near(&q[best], tol) {
                    best = a;
                }
            }
            let tie = q
                .iter()
                .enumerate()
                .any(|(a, v)| a != best && v.near(&q[best], tol));
            entries.insert(
                (t, h.clone(), *n),
                ValueEntry {
                    value: q[best].clone(),
                    action: Some(best),
                    tie,
                    q,
                },
            );
        }
    }
    Ok(ValueTable {
        strategy,
        chain,
        entries,
        tol,
    })
}
