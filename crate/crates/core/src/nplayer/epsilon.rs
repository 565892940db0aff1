//! Observed improvement of deviation rules over following the suggestion,
//! with common random numbers.

use serde::Serialize;

use super::{DeviationRule, NPlayerModel};
use crate::correlated::SuggestionAtoms;
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::stats::{reduce_runs, MeanVar};

/// One `(N, rule)` entry. `improvement = max(0, mean(J(ι) - J(rule)))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub deviation_name: String,
    pub reps: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub improvement: f64,
    pub improvement_stderr: f64,
}

/// Best rule of the family at one `N`: a lower bound on `ε_N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub best_rule: String,
    pub improvement: f64,
    pub improvement_stderr: f64,
    /// Unclipped paired mean difference of the best rule.
    pub raw_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub rows: Vec<EpsilonRow>,
    pub summary: Vec<EpsilonSummary>,
}

impl EpsilonReport {
    pub fn summary_for(&self, n: usize) -> Option<&EpsilonSummary> {
        self.summary.iter().find(|s| s.n == n)
    }
}

/// For every `N`, runs the suggestion-following baseline and every rule of
/// `family` on the same streams (run `r` uses stream `r` of `seed` for all
/// of them) and records the paired differences.
pub fn epsilon_report(
    game: &GameSpec<f64>,
    rho: &SuggestionAtoms<f64>,
    n_list: &[usize],
    family: &[Box<dyn DeviationRule>],
    reps: u64,
    seed: u64,
) -> Result<EpsilonReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("deviation family is empty".into()));
    }
    if reps < 2 {
        return Err(Error::InvalidParameter("reps must be at least 2".into()));
    }
    if n_list.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter("every N must be at least 2".into()));
    }
    let model = NPlayerModel::new(game, rho)?;
    let k = family.len();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &n in n_list {
        let init = || (vec![MeanVar::default(); k], vec![MeanVar::default(); k]);
        let (costs, diffs) = reduce_runs(
            reps,
            init,
            |acc, run| {
                let base = model.run(n, None, seed, run, None, None, false).cost;
                for (i, rule) in family.iter().enumerate() {
                    let c = model.run(n, Some(rule.as_ref()), seed, run, None, None, false).cost;
                    acc.0[i].push(c);
                    acc.1[i].push(base - c);
                }
            },
            |a, b| {
                for (x, y) in a.0.iter_mut().zip(&b.0) {
                    x.merge(y);
                }
                for (x, y) in a.1.iter_mut().zip(&b.1) {
                    x.merge(y);
                }
            },
        );
        let mut best: Option<EpsilonSummary> = None;
        for (i, rule) in family.iter().enumerate() {
            let d = diffs[i].estimate();
            let row = EpsilonRow {
                n,
                deviation_name: rule.name(),
                reps,
                estimate: costs[i].mean(),
                stderr: costs[i].stderr(),
                improvement: d.mean.max(0.0),
                improvement_stderr: d.stderr,
            };
            if best.as_ref().is_none_or(|b| d.mean > b.raw_difference) {
                best = Some(EpsilonSummary {
                    n,
                    best_rule: row.deviation_name.clone(),
                    improvement: row.improvement,
                    improvement_stderr: d.stderr,
                    raw_difference: d.mean,
                });
            }
            rows.push(row);
        }
        summary.extend(best);
    }
    Ok(EpsilonReport { rows, summary })
}
