//! Deviation rules for player 1 in the N-player game.

use std::collections::HashMap;

use crate::correlated::RestrictedStrategy;
use crate::game::GameSpec;
use crate::measures::from_counts;

/// What player 1 knows at time `t`: the suggested strategy, its own state
/// history and the counts of the other `N - 1` players' states at times
/// `0..=t`.
#[derive(Debug, Clone, Copy)]
pub struct RuleContext<'a> {
    pub t: usize,
    pub suggested: &'a RestrictedStrategy,
    pub suggested_index: usize,
    pub own_history: &'a [usize],
    pub observed: &'a [Vec<u32>],
    /// `N - 1`.
    pub others: u64,
    pub game: &'a GameSpec<f64>,
}

impl RuleContext<'_> {
    pub fn suggestion(&self) -> usize {
        self.suggested.action(self.t, self.own_history[self.t])
    }

    pub fn state(&self) -> usize {
        self.own_history[self.t]
    }

    /// Mean state value of the other players at time `t`.
    pub fn observed_mean(&self) -> f64 {
        let counts = &self.observed[self.t];
        self.game
            .states
            .iter()
            .zip(counts)
            .map(|(s, &k)| s.value * k as f64)
            .sum::<f64>()
            / self.others as f64
    }
}

pub trait DeviationRule: Sync {
    fn name(&self) -> String;
    /// `u` is a uniform reserved for randomized rules.
    fn action(&self, ctx: &RuleContext<'_>, u: f64) -> usize;
    fn is_randomized(&self) -> bool {
        false
    }
}

/// Follow the suggestion.
#[derive(Debug, Clone, Copy, Default)]
pub struct FollowSuggestion;

impl DeviationRule for FollowSuggestion {
    fn name(&self) -> String {
        "identity".into()
    }
    fn action(&self, ctx: &RuleContext<'_>, _u: f64) -> usize {
        ctx.suggestion()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantAction(pub usize);

impl DeviationRule for ConstantAction {
    fn name(&self) -> String {
        format!("constant({})", self.0)
    }
    fn action(&self, _ctx: &RuleContext<'_>, _u: f64) -> usize {
        self.0
    }
}

/// Plays the next action index (cyclically) after the suggested one.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuggestionFlip;

impl DeviationRule for SuggestionFlip {
    fn name(&self) -> String {
        "flip".into()
    }
    fn action(&self, ctx: &RuleContext<'_>, _u: f64) -> usize {
        (ctx.suggestion() + 1) % ctx.game.num_actions()
    }
}

/// One-step lookahead: freezes the observed measure and uses the terminal
/// cost as continuation value. Ties go to the lowest action.
#[derive(Debug, Clone, Copy, Default)]
pub struct Myopic;

impl DeviationRule for Myopic {
    fn name(&self) -> String {
        "myopic".into()
    }
    fn action(&self, ctx: &RuleContext<'_>, _u: f64) -> usize {
        let g = ctx.game;
        let (t, x) = (ctx.t, ctx.state());
        let counts = &ctx.observed[t];
        let m = from_counts::<f64>(counts, ctx.others);
        let mut best = (f64::INFINITY, 0);
        for a in 0..g.num_actions() {
            let law = g
                .transition_nearest(t, x, &m, a)
                .expect("rule queried inside the horizon");
            let cont: f64 = law
                .weights()
                .iter()
                .enumerate()
                .map(|(y, p)| p * g.terminal_cost_counts(y, counts, ctx.others))
                .sum();
            let v = g.running_cost_counts(t, x, counts, ctx.others, a) + cont;
            if v < best.0 - 1e-12 {
                best = (v, a);
            }
        }
        best.1
    }
}

/// Threshold on the alignment `value(x) · M(observed)` of the own state with
/// the other players. A positive `θ` plays the last action when the
/// alignment exceeds `θ`; a non-positive `θ` plays the first action when it
/// falls below `θ`. Otherwise the suggestion is followed.
#[derive(Debug, Clone, Copy)]
pub struct Threshold(pub f64);

impl DeviationRule for Threshold {
    fn name(&self) -> String {
        format!("threshold({})", self.0)
    }
    fn action(&self, ctx: &RuleContext<'_>, _u: f64) -> usize {
        let align = ctx.game.states[ctx.state()].value * ctx.observed_mean();
        if self.0 > 0.0 && align > self.0 {
            ctx.game.num_actions() - 1
        } else if self.0 <= 0.0 && align < self.0 {
            0
        } else {
            ctx.suggestion()
        }
    }
}

/// Uniformly random action; exercises the randomization lane.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandom;

impl DeviationRule for UniformRandom {
    fn name(&self) -> String {
        "uniform".into()
    }
    fn action(&self, ctx: &RuleContext<'_>, u: f64) -> usize {
        let na = ctx.game.num_actions();
        ((u * na as f64) as usize).min(na - 1)
    }
    fn is_randomized(&self) -> bool {
        true
    }
}

/// Key of player 1's information set: `(t, suggested strategy index, own
/// history, observed count history)`.
pub type InfoKey = (usize, usize, Vec<usize>, Vec<Vec<u32>>);

/// Rule given by an explicit table over information sets; the suggestion
/// is followed off the table.
#[derive(Debug, Clone, Default)]
pub struct TableRule {
    pub name: String,
    pub table: HashMap<InfoKey, usize>,
}

impl DeviationRule for TableRule {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn action(&self, ctx: &RuleContext<'_>, _u: f64) -> usize {
        let key = (
            ctx.t,
            ctx.suggested_index,
            ctx.own_history.to_vec(),
            ctx.observed[..=ctx.t].to_vec(),
        );
        self.table.get(&key).copied().unwrap_or_else(|| ctx.suggestion())
    }
}

/// Identity, one constant rule per action, suggestion flip, myopic
/// lookahead and thresholds at `{0, ±1/4, ±1/2}`.
pub fn default_family(num_actions: usize) -> Vec<Box<dyn DeviationRule>> {
    let mut out: Vec<Box<dyn DeviationRule>> = vec![Box::new(FollowSuggestion)];
    for a in 0..num_actions {
        out.push(Box::new(ConstantAction(a)));
    }
    out.push(Box::new(SuggestionFlip));
    out.push(Box::new(Myopic));
    for th in [0.0, 0.25, -0.25, 0.5, -0.5] {
        out.push(Box::new(Threshold(th)));
    }
    out
}
