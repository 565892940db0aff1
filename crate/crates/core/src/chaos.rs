//! Propagation-of-chaos diagnostics: how fast player 1's exclude-one
//! empirical flow approaches the drawn flow atom as `N` grows.

use serde::Serialize;

use crate::correlated::SuggestionAtoms;
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::nplayer::NPlayerModel;
use crate::stats::{reduce_runs, MeanVar};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub reps: u64,
    /// Flow atom the runs were conditioned on, `None` for the mixture.
    pub flow_atom: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosCurve {
    pub rows: Vec<ChaosRow>,
}

/// Estimates `E[dist_T(μ^{1,N}, μ)]` for each `N` with all players
/// following their suggestions.
pub fn chaos_curve(
    game: &GameSpec<f64>,
    rho: &SuggestionAtoms<f64>,
    n_list: &[usize],
    reps: u64,
    seed: u64,
    flow_atom: Option<usize>,
) -> Result<ChaosCurve> {
    if n_list.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter("every N must be at least 2".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("N values must be strictly increasing".into()));
    }
    if reps < 2 {
        return Err(Error::InvalidParameter("reps must be at least 2".into()));
    }
    if let Some(f) = flow_atom {
        if f >= rho.flows().len() {
            return Err(Error::IndexOutOfRange(format!("flow atom {f}")));
        }
    }
    let model = NPlayerModel::new(game, rho)?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let acc = reduce_runs(
                reps,
                MeanVar::default,
                |acc, run| acc.push(model.run(n, None, seed, run, None, flow_atom, false).chaos_distance),
                |a, b| a.merge(&b),
            );
            ChaosRow {
                n,
                estimate: acc.mean(),
                stderr: acc.stderr(),
                reps,
                flow_atom,
            }
        })
        .collect();
    Ok(ChaosCurve { rows })
}

/// Least-squares slope of `log(estimate)` against `log(N)`.
pub fn slope_fit(curve: &ChaosCurve) -> Result<f64> {
    if curve.rows.len() < 3 {
        return Err(Error::InvalidParameter("slope fit needs at least three rows".into()));
    }
    if curve.rows.iter().any(|r| r.estimate <= 0.0) {
        return Err(Error::InvalidParameter("slope fit needs positive estimates".into()));
    }
    let pts: Vec<(f64, f64)> = curve
        .rows
        .iter()
        .map(|r| ((r.n as f64).ln(), r.estimate.ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: &[(usize, f64)]) -> ChaosCurve {
        ChaosCurve {
            rows: points
                .iter()
                .map(|&(n, e)| ChaosRow {
                    n,
                    estimate: e,
                    stderr: 0.0,
                    reps: 1,
                    flow_atom: None,
                })
                .collect(),
        }
    }

    #[test]
    fn slope_of_inverse_sqrt() {
        let c = curve(&[(10, 0.3 / 10f64.sqrt()), (100, 0.3 / 10.0), (1000, 0.3 / 1000f64.sqrt())]);
        assert!((slope_fit(&c).unwrap() + 0.5).abs() < 1e-9);
    }

    #[test]
    fn slope_of_constant() {
        let c = curve(&[(10, 0.2), (20, 0.2), (40, 0.2)]);
        assert!(slope_fit(&c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn slope_rejects_bad_input() {
        assert!(slope_fit(&curve(&[(10, 0.2), (20, 0.1)])).is_err());
        assert!(slope_fit(&curve(&[(10, 0.2), (20, 0.0), (30, 0.1)])).is_err());
    }
}
