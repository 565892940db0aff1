//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the library's dynamic programming, chain or
//! verification code: costs and kernels of the toy instance are restated
//! from their formulas and every expectation is a plain sum over paths.

#![allow(dead_code)]

use std::collections::BTreeMap;

use corrmfg::correlated::SuggestionAtoms;
use corrmfg::toy::{MINUS, PLUS};
use corrmfg::{FiniteDist, Q};
use num_traits::{One, Zero};

pub fn qi(v: i64) -> Q {
    Q::from_integer(v.into())
}

pub fn value(x: usize) -> i64 {
    if x == PLUS {
        1
    } else {
        -1
    }
}

pub fn mean(m: &FiniteDist<Q>) -> Q {
    m.mass(PLUS).clone() - m.mass(MINUS).clone()
}

/// Toy instance restated from its formulas.
#[derive(Debug, Clone)]
pub struct ToyOracle {
    pub beta: Q,
    pub c0: Q,
    pub c1: Q,
}

impl ToyOracle {
    pub const T: usize = 2;

    pub fn new(beta: Q, c0: Q, c1: Q) -> Self {
        Self { beta, c0, c1 }
    }

    pub fn kernel(&self, x: usize, a: usize, y: usize) -> Q {
        let stay = if a == 0 { corrmfg::q(1, 2) } else { corrmfg::q(3, 4) };
        if x == y {
            stay
        } else {
            Q::one() - stay
        }
    }

    pub fn running(&self, t: usize, x: usize, a: usize, m: &FiniteDist<Q>) -> Q {
        let (t, a) = (t as i64, a as i64);
        self.c0.clone() * qi((1 - t) * a) + self.c1.clone() * qi(t * a) - qi(t * value(x)) * mean(m)
    }

    pub fn terminal(&self, x: usize, m: &FiniteDist<Q>) -> Q {
        -(qi(value(x)) * mean(m))
    }
}

/// `(flow index, P(flow | strategy))` for every flow carrying the strategy.
pub fn conditional_flows(rho: &SuggestionAtoms<Q>, strategy: usize) -> Vec<(usize, Q)> {
    let mut by_flow: BTreeMap<usize, Q> = BTreeMap::new();
    let mut total = Q::zero();
    for a in rho.atoms() {
        if a.strategy == strategy {
            *by_flow.entry(a.flow).or_insert_with(Q::zero) += a.weight.clone();
            total += a.weight.clone();
        }
    }
    by_flow.into_iter().map(|(f, w)| (f, w / total.clone())).collect()
}

/// What the player has seen of a flow up to time `t`.
fn prefix(rho: &SuggestionAtoms<Q>, flow: usize, t: usize) -> Vec<Vec<Q>> {
    (0..=t).map(|s| rho.flows()[flow].at(s).weights().to_vec()).collect()
}

type Node = (usize, Vec<usize>, Vec<Vec<Q>>);

/// Exhaustive search over deterministic progressive deviations for one
/// strategy branch of the toy suggestion.
pub struct BranchEnumeration {
    /// Every decision node `(t, own history, observed flow prefix)`.
    pub nodes: Vec<Node>,
    pub flows: Vec<(usize, Q)>,
}

impl BranchEnumeration {
    pub fn new(rho: &SuggestionAtoms<Q>, strategy: usize) -> Self {
        let flows = conditional_flows(rho, strategy);
        let mut nodes = std::collections::BTreeSet::new();
        for (f, _) in &flows {
            for t in 0..ToyOracle::T {
                for bits in 0..(1usize << (t + 1)) {
                    let h: Vec<usize> = (0..=t).map(|i| (bits >> i) & 1).collect();
                    nodes.insert((t, h, prefix(rho, *f, t)));
                }
            }
        }
        Self {
            nodes: nodes.into_iter().collect(),
            flows,
        }
    }

    /// Expected cost when playing `choose(node index)` at every node.
    pub fn cost(&self, oracle: &ToyOracle, rho: &SuggestionAtoms<Q>, choose: &dyn Fn(usize) -> usize) -> Q {
        let index: BTreeMap<&Node, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let mut total = Q::zero();
        for (f, pf) in &self.flows {
            let flow = &rho.flows()[*f];
            // paths x_0 x_1 x_2 with x_0 ~ uniform
            for bits in 0..8usize {
                let x: Vec<usize> = (0..3).map(|i| (bits >> i) & 1).collect();
                let mut p = corrmfg::q(1, 2);
                let mut c = Q::zero();
                for t in 0..ToyOracle::T {
                    let node = (t, x[..=t].to_vec(), prefix(rho, *f, t));
                    let a = choose(index[&node]);
                    c += oracle.running(t, x[t], a, flow.at(t));
                    p *= oracle.kernel(x[t], a, x[t + 1]);
                }
                c += oracle.terminal(x[2], flow.at(2));
                total += pf.clone() * p * c;
            }
        }
        total
    }

    /// `(minimum over all deviations, cost of following the suggestion)`.
    pub fn min_and_follow(&self, oracle: &ToyOracle, rho: &SuggestionAtoms<Q>, strategy: usize) -> (Q, Q) {
        let phi = &rho.strategies()[strategy];
        let follow = self.cost(oracle, rho, &|i| {
            let (t, h, _) = &self.nodes[i];
            phi.action(*t, h[*t])
        });
        let k = self.nodes.len();
        assert!(k <= 16, "too many decision nodes for exhaustive search: {k}");
        let mut best: Option<Q> = None;
        for mask in 0..(1usize << k) {
            let c = self.cost(oracle, rho, &|i| (mask >> i) & 1);
            if best.as_ref().is_none_or(|b| c < *b) {
                best = Some(c);
            }
        }
        (best.expect("at least one deviation"), follow)
    }
}

/// `P(X_t = x | flow)` for following the suggestion, by summing over the
/// strategies sent with that flow and every state path.
pub fn conditional_state_law(oracle: &ToyOracle, rho: &SuggestionAtoms<Q>, flow: usize, t: usize) -> [Q; 2] {
    let mut weights: BTreeMap<usize, Q> = BTreeMap::new();
    let mut total = Q::zero();
    for a in rho.atoms() {
        if a.flow == flow {
            *weights.entry(a.strategy).or_insert_with(Q::zero) += a.weight.clone();
            total += a.weight.clone();
        }
    }
    let mut out = [Q::zero(), Q::zero()];
    for (s, w) in weights {
        let phi = &rho.strategies()[s];
        let mut law = [corrmfg::q(1, 2), corrmfg::q(1, 2)];
        for u in 0..t {
            let mut next = [Q::zero(), Q::zero()];
            for x in 0..2 {
                for y in 0..2 {
                    next[y] += law[x].clone() * oracle.kernel(x, phi.action(u, x), y);
                }
            }
            law = next;
        }
        for x in 0..2 {
            out[x] += w.clone() / total.clone() * law[x].clone();
        }
    }
    out
}

/// (Con) and (Opt) decided by the oracles alone.
pub fn oracle_point(beta: &Q, c0: &Q, c1: &Q) -> (bool, bool) {
    let p = corrmfg::toy::ToyParams::new(beta.clone(), c0.clone(), c1.clone()).unwrap();
    let rho = corrmfg::toy::build_rho(&p).unwrap();
    let oracle = ToyOracle::new(beta.clone(), c0.clone(), c1.clone());
    let con = (0..rho.flows().len()).all(|f| {
        (0..=ToyOracle::T).all(|t| {
            let law = conditional_state_law(&oracle, &rho, f, t);
            law[0] == *rho.flows()[f].at(t).mass(0)
        })
    });
    let opt = rho.active_strategies().into_iter().all(|s| {
        let (min, follow) = BranchEnumeration::new(&rho, s).min_and_follow(&oracle, &rho, s);
        min == follow
    });
    (con, opt)
}

/// Two-state, two-action game with horizon 1 and two suggested strategies,
/// small enough to enumerate every rule of player 1 in the N-player game.
pub const SMALL_GAME: &str = r#"{
  "game": {"tabular": {
    "horizon": 1,
    "states": [{"name": "up", "value": "1"}, {"name": "down", "value": "-1"}],
    "actions": ["rest", "push"],
    "initial": ["1/3", "2/3"],
    "kernel": {"static": [[[["1/2", "1/2"], ["4/5", "1/5"]], [["1/3", "2/3"], ["3/5", "2/5"]]]]},
    "running_base": [[["0", "1/10"], ["0", "1/5"]]],
    "running_coupling": [[[["-1/2", "1/2"], ["0", "0"]], [["1/2", "-1/2"], ["1/4", "0"]]]],
    "terminal_base": ["0", "1/4"],
    "terminal_coupling": [["-1", "1"], ["1", "-1"]]
  }},
  "suggestion": {"atoms": [
    {"strategy": [[0, 1]], "flow": [["1/3", "2/3"], ["1/2", "1/2"]], "weight": "1/2"},
    {"strategy": [[1, 0]], "flow": [["1/3", "2/3"], ["2/3", "1/3"]], "weight": "1/4"},
    {"strategy": [[0, 1]], "flow": [["1/3", "2/3"], ["2/3", "1/3"]], "weight": "1/4"}
  ]}
}"#;
