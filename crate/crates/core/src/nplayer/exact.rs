//! Exact small-N computations: the law of `γ^N`, player 1's cost by full
//! enumeration, and the exact best response by dynamic programming over
//! player 1's information sets.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{DeviationRule, FollowSuggestion, InfoKey, RuleContext, TableRule};
use crate::correlated::SuggestionAtoms;
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::measures::{from_counts, FiniteDist};
use crate::scalar::{Scalar, Q};

const ENUMERATION_GUARD: f64 = 1e7;

/// Every profile of `γ^N` with positive probability: `(flow, strategies,
/// probability)`, the strategies being i.i.d. given the flow.
pub fn gamma_n_atoms<S: Scalar>(rho: &SuggestionAtoms<S>, n: usize) -> Vec<(usize, Vec<usize>, S)> {
    let total = rho.total_mass();
    let mut out = Vec::new();
    for f in 0..rho.flows().len() {
        let fm = rho.flow_mass(f);
        if fm <= S::zero() {
            continue;
        }
        let cond: Vec<(usize, S)> = (0..rho.strategies().len())
            .map(|s| (s, rho.joint_mass(s, f) / fm.clone()))
            .filter(|(_, w)| *w > S::zero())
            .collect();
        for idx in product(cond.len(), n) {
            let p = idx
                .iter()
                .fold(fm.clone() / total.clone(), |acc, &i| acc * cond[i].1.clone());
            out.push((f, idx.iter().map(|&i| cond[i].0).collect(), p));
        }
    }
    out
}

/// All vectors in `{0..base}^len`, last coordinate fastest.
fn product(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..base).map(move |b| {
                    let mut w = v.clone();
                    w.push(b);
                    w
                })
            })
            .collect();
    }
    out
}

fn counts_of(states: &[usize], nx: usize) -> Vec<u32> {
    let mut c = vec![0u32; nx];
    for &x in states {
        c[x] += 1;
    }
    c
}

fn law_at<'g>(game: &'g GameSpec<Q>, t: usize, x: usize, counts_excl: &[u32], others: u64, a: usize) -> Result<&'g FiniteDist<Q>> {
    if let Some(l) = game.static_transition(t, x, a) {
        return Ok(l);
    }
    let m = from_counts::<Q>(counts_excl, others);
    game.transition_nearest(t, x, &m, a)
}

fn check_rule(rule: Option<&dyn DeviationRule>) -> Result<()> {
    if rule.is_some_and(|r| r.is_randomized()) {
        return Err(Error::InvalidParameter("exact evaluation needs a deterministic rule".into()));
    }
    Ok(())
}

/// Shared, read-only inputs of the enumerations.
struct Ctx<'a> {
    game: &'a GameSpec<Q>,
    game_f: GameSpec<f64>,
    rho: &'a SuggestionAtoms<Q>,
    n: usize,
}

impl Ctx<'_> {
    fn rule_action(&self, rule: &dyn DeviationRule, t: usize, phi: usize, own: &[usize], obs: &[Vec<u32>]) -> usize {
        rule.action(
            &RuleContext {
                t,
                suggested: &self.rho.strategies()[phi],
                suggested_index: phi,
                own_history: own,
                observed: obs,
                others: (self.n - 1) as u64,
                game: &self.game_f,
            },
            0.0,
        )
    }
}

/// Player 1's expected cost `J_1^N` by summing over every suggestion
/// profile and every joint state trajectory with exact transition
/// products. Refuses instances with more than `1e7` terms.
pub fn exact_j1n(
    game: &GameSpec<Q>,
    rho: &SuggestionAtoms<Q>,
    n: usize,
    rule: Option<&dyn DeviationRule>,
) -> Result<Q> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two players".into()));
    }
    check_rule(rule)?;
    let nx = game.num_states();
    let terms = (nx as f64).powi((n * (game.horizon + 1)) as i32) * rho.atoms().len() as f64;
    if terms > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded(format!("{terms:.3e} terms")));
    }
    let ctx = Ctx {
        game,
        game_f: game.to_f64(),
        rho,
        n,
    };
    let rule = rule.unwrap_or(&FollowSuggestion);
    let mut total = Q::zero();
    let initial = product(nx, n);
    for (_, strategies, p) in gamma_n_atoms(rho, n) {
        for xs in &initial {
            let p0 = xs
                .iter()
                .fold(p.clone(), |acc, &x| acc * game.initial.mass(x).clone());
            if p0 <= Q::zero() {
                continue;
            }
            let mut own = vec![xs[0]];
            let mut obs = vec![counts_of(&xs[1..], nx)];
            total += enumerate(&ctx, rule, &strategies, 0, xs, &mut own, &mut obs, p0, Q::zero())?;
        }
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    ctx: &Ctx<'_>,
    rule: &dyn DeviationRule,
    strategies: &[usize],
    t: usize,
    states: &[usize],
    own: &mut Vec<usize>,
    obs: &mut Vec<Vec<u32>>,
    prob: Q,
    cost: Q,
) -> Result<Q> {
    let game = ctx.game;
    let (n, nx) = (ctx.n, game.num_states());
    let others = (n - 1) as u64;
    if t == game.horizon {
        return Ok(prob * (cost + game.terminal_cost_counts(states[0], &obs[t], others)));
    }
    let a0 = ctx.rule_action(rule, t, strategies[0], own, obs);
    let cost = cost + game.running_cost_counts(t, states[0], &obs[t], others, a0);
    let all = counts_of(states, nx);
    let laws = (0..n)
        .map(|p| {
            let a = if p == 0 {
                a0
            } else {
                ctx.rho.strategies()[strategies[p]].action(t, states[p])
            };
            let mut excl = all.clone();
            excl[states[p]] -= 1;
            law_at(game, t, states[p], &excl, others, a)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Q::zero();
    for ys in product(nx, n) {
        let p = ys
            .iter()
            .zip(&laws)
            .fold(prob.clone(), |acc, (&y, l)| acc * l.mass(y).clone());
        if p <= Q::zero() {
            continue;
        }
        own.push(ys[0]);
        obs.push(counts_of(&ys[1..], nx));
        total += enumerate(ctx, rule, strategies, t + 1, &ys, own, obs, p, cost.clone())?;
        own.pop();
        obs.pop();
    }
    Ok(total)
}

/// A state of the world hidden from player 1: flow, the other players'
/// strategies and current states.
type World = (usize, Vec<usize>, Vec<usize>);

enum Choice<'a> {
    Optimize,
    Rule(&'a dyn DeviationRule),
}

/// Backward recursion over player 1's information sets. `worlds` carries
/// joint (unnormalized) probabilities consistent with the information set;
/// returns the weighted cost-to-go.
#[allow(clippy::too_many_arguments)]
fn info_solve(
    ctx: &Ctx<'_>,
    choice: &Choice<'_>,
    t: usize,
    phi: usize,
    own: &mut Vec<usize>,
    obs: &mut Vec<Vec<u32>>,
    worlds: &BTreeMap<World, Q>,
    table: &mut HashMap<InfoKey, usize>,
) -> Result<Q> {
    let game = ctx.game;
    let (n, nx) = (ctx.n, game.num_states());
    let others = (n - 1) as u64;
    let x0 = own[t];
    let mass = worlds.values().fold(Q::zero(), |acc, w| acc + w.clone());
    if t == game.horizon {
        return Ok(mass * game.terminal_cost_counts(x0, &obs[t], others));
    }
    // Successor law of the hidden part, which does not depend on player 1's
    // action: (world, next states of the others, probability).
    let mut successors: Vec<(usize, Vec<usize>, Vec<usize>, Q)> = Vec::new();
    for ((flow, strats, zs), w) in worlds {
        let mut all = zs.clone();
        all.push(x0);
        let all = counts_of(&all, nx);
        let laws = zs
            .iter()
            .zip(strats)
            .map(|(&z, &s)| {
                let mut excl = all.clone();
                excl[z] -= 1;
                law_at(game, t, z, &excl, others, ctx.rho.strategies()[s].action(t, z))
            })
            .collect::<Result<Vec<_>>>()?;
        for ys in product(nx, n - 1) {
            let p = ys.iter().zip(&laws).fold(w.clone(), |acc, (&y, l)| acc * l.mass(y).clone());
            if p > Q::zero() {
                successors.push((*flow, strats.clone(), ys, p));
            }
        }
    }
    let actions: Vec<usize> = match choice {
        Choice::Optimize => (0..game.num_actions()).collect(),
        Choice::Rule(r) => vec![ctx.rule_action(*r, t, phi, own, obs)],
    };
    let mut best: Option<(Q, usize)> = None;
    for a in actions {
        let law0 = law_at(game, t, x0, &obs[t], others, a)?;
        let mut value = mass.clone() * game.running_cost_counts(t, x0, &obs[t], others, a);
        let mut groups: BTreeMap<(usize, Vec<u32>), BTreeMap<World, Q>> = BTreeMap::new();
        for (flow, strats, ys, p) in &successors {
            let key_counts = counts_of(ys, nx);
            for (y0, k) in law0.weights().iter().enumerate() {
                if *k <= Q::zero() {
                    continue;
                }
                let e = groups
                    .entry((y0, key_counts.clone()))
                    .or_default()
                    .entry((*flow, strats.clone(), ys.clone()))
                    .or_insert_with(Q::zero);
                *e = e.clone() + p.clone() * k.clone();
            }
        }
        for ((y0, c), sub) in groups {
            own.push(y0);
            obs.push(c);
            value += info_solve(ctx, choice, t + 1, phi, own, obs, &sub, table)?;
            own.pop();
            obs.pop();
        }
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, a));
        }
    }
    let (value, a) = best.expect("at least one action");
    if matches!(choice, Choice::Optimize) {
        table.insert((t, phi, own.clone(), obs.clone()), a);
    }
    Ok(value)
}

fn info_total(ctx: &Ctx<'_>, choice: &Choice<'_>, table: &mut HashMap<InfoKey, usize>) -> Result<Q> {
    let game = ctx.game;
    let (n, nx) = (ctx.n, game.num_states());
    let mut roots: BTreeMap<(usize, usize, Vec<u32>), BTreeMap<World, Q>> = BTreeMap::new();
    let initial = product(nx, n);
    for (flow, strategies, p) in gamma_n_atoms(ctx.rho, n) {
        for xs in &initial {
            let w = xs
                .iter()
                .fold(p.clone(), |acc, &x| acc * game.initial.mass(x).clone());
            if w <= Q::zero() {
                continue;
            }
            let e = roots
                .entry((strategies[0], xs[0], counts_of(&xs[1..], nx)))
                .or_default()
                .entry((flow, strategies[1..].to_vec(), xs[1..].to_vec()))
                .or_insert_with(Q::zero);
            *e = e.clone() + w;
        }
    }
    let mut total = Q::zero();
    for ((phi, x0, c0), worlds) in roots {
        let mut own = vec![x0];
        let mut obs = vec![c0];
        total += info_solve(ctx, choice, 0, phi, &mut own, &mut obs, &worlds, table)?;
    }
    Ok(total)
}

/// Player 1's exact cost under a deterministic `rule`, computed on the
/// information-set tree. Agrees with [`exact_j1n`].
pub fn info_tree_value(
    game: &GameSpec<Q>,
    rho: &SuggestionAtoms<Q>,
    n: usize,
    rule: &dyn DeviationRule,
) -> Result<Q> {
    check_rule(Some(rule))?;
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two players".into()));
    }
    let ctx = Ctx {
        game,
        game_f: game.to_f64(),
        rho,
        n,
    };
    info_total(&ctx, &Choice::Rule(rule), &mut HashMap::new())
}

#[derive(Debug, Clone, Serialize)]
pub struct BestResponse {
    /// Minimal cost of player 1 over all deterministic progressive rules.
    pub value: String,
    pub identity_value: String,
    /// `J_1^N(ι) - value ≥ 0`.
    pub epsilon: String,
    #[serde(skip)]
    pub exact: (Q, Q, Q),
    /// Minimizing rule over information sets (lowest action on ties).
    #[serde(skip)]
    pub rule: TableRule,
}

/// Exact best response of player 1. A deterministic progressive rule picks
/// an action at each information set `(t, suggestion, own history,
/// observed counts history)`; minimizing over all of them is the backward
/// recursion over information sets, whose optimum is attained by a table
/// rule (returned as the witness). Limited to `N ≤ 3`, `T ≤ 2`.
pub fn best_response_bruteforce(game: &GameSpec<Q>, rho: &SuggestionAtoms<Q>, n: usize) -> Result<BestResponse> {
    if !(2..=3).contains(&n) || game.horizon > 2 {
        return Err(Error::GuardExceeded(format!(
            "best response limited to N in 2..=3 and T <= 2 (N = {n}, T = {})",
            game.horizon
        )));
    }
    let ctx = Ctx {
        game,
        game_f: game.to_f64(),
        rho,
        n,
    };
    let mut table = HashMap::new();
    let value = info_total(&ctx, &Choice::Optimize, &mut table)?;
    let identity = info_total(&ctx, &Choice::Rule(&FollowSuggestion), &mut HashMap::new())?;
    let eps = identity.clone() - value.clone();
    Ok(BestResponse {
        value: value.render(),
        identity_value: identity.render(),
        epsilon: eps.render(),
        exact: (value, identity, eps),
        rule: TableRule {
            name: format!("best_response(N={n})"),
            table,
        },
    })
}
