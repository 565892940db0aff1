//! The two-state toy instance: `T = 2`, states `{+1, -1}`, actions `{0, 1}`,
//! a measure-independent kernel (stay with probability 1/2 under action 0,
//! 3/4 under action 1), running cost `c0 (1-t) a + t (c1 a - x M(m))` and
//! terminal cost `-x M(m)`, where `M(m)` is the mean of `m`.
//!
//! State index 0 is `+1`, index 1 is `-1`.

use rayon::prelude::*;
use serde::Serialize;

use crate::correlated::{
    check_consistency, check_optimality, validate_r1, RestrictedStrategy, SuggestionAtoms,
};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Kernel, RunningCost, StateLabel, TerminalCost};
use crate::measures::{FiniteDist, MeasureFlow};
use crate::scalar::{q, Scalar, Tolerances, Q};

pub const PLUS: usize = 0;
pub const MINUS: usize = 1;
const HORIZON: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyParams {
    pub beta: Q,
    pub c0: Q,
    pub c1: Q,
}

impl ToyParams {
    /// `beta` must lie in `(0, 1/4)`; the costs must be non-negative (zero is
    /// accepted so that degenerate controls can be built).
    pub fn new(beta: Q, c0: Q, c1: Q) -> Result<Self> {
        if beta <= Q::zero() || beta >= q(1, 4) {
            return Err(Error::InvalidParameter(format!("beta = {} not in (0, 1/4)", beta.render())));
        }
        if c0 < Q::zero() || c1 < Q::zero() {
            return Err(Error::InvalidParameter("costs must be non-negative".into()));
        }
        Ok(Self { beta, c0, c1 })
    }

    /// `γ = 1/4 - β`.
    pub fn gamma(&self) -> Q {
        q(1, 4) - self.beta.clone()
    }
}

fn value(x: usize) -> i64 {
    if x == PLUS {
        1
    } else {
        -1
    }
}

pub fn build_game(p: &ToyParams) -> Result<GameSpec<Q>> {
    let stay = [q(1, 2), q(3, 4)];
    let kernel = (0..HORIZON)
        .map(|_| {
            (0..2)
                .map(|x| {
                    (0..2)
                        .map(|a| {
                            let s = stay[a].clone();
                            let f = Q::one() - s.clone();
                            FiniteDist::new_unchecked(if x == PLUS { vec![s, f] } else { vec![f, s] })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let base = (0..HORIZON as i64)
        .map(|t| {
            (0..2)
                .map(|_| {
                    (0..2i64)
                        .map(|a| {
                            p.c0.clone() * Q::from_i64((1 - t) * a) + p.c1.clone() * Q::from_i64(t * a)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let coupling = (0..HORIZON as i64)
        .map(|t| {
            (0..2)
                .map(|x| {
                    (0..2)
                        .map(|_| (0..2).map(|y| Q::from_i64(-t * value(x) * value(y))).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let game = GameSpec {
        horizon: HORIZON,
        states: vec![
            StateLabel {
                name: "+1".into(),
                value: Q::one(),
            },
            StateLabel {
                name: "-1".into(),
                value: -Q::one(),
            },
        ],
        actions: vec!["0".into(), "1".into()],
        initial: FiniteDist::uniform(2),
        kernel: Kernel::Static(kernel),
        running: RunningCost {
            base,
            coupling: Some(coupling),
        },
        terminal: TerminalCost {
            base: vec![Q::zero(), Q::zero()],
            coupling: Some(
                (0..2)
                    .map(|x| (0..2).map(|y| Q::from_i64(-value(x) * value(y))).collect())
                    .collect(),
            ),
        },
        atom_tol: 0.0,
    };
    game.validate()?;
    Ok(game)
}

/// The five strategies carrying mass in the toy suggestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ToyStrategy {
    /// Always action 0.
    Phi0,
    /// Action 1 exactly on `+1`.
    PhiPlus,
    /// Action 1 exactly on `-1`.
    PhiMinus,
    /// Action 1 on `+1` at `t = 0` only.
    PhiHatPlus,
    /// Action 1 on `-1` at `t = 0` only.
    PhiHatMinus,
}

impl ToyStrategy {
    pub const ALL: [ToyStrategy; 5] = [
        ToyStrategy::Phi0,
        ToyStrategy::PhiPlus,
        ToyStrategy::PhiMinus,
        ToyStrategy::PhiHatPlus,
        ToyStrategy::PhiHatMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ToyStrategy::Phi0 => "phi0",
            ToyStrategy::PhiPlus => "phi+",
            ToyStrategy::PhiMinus => "phi-",
            ToyStrategy::PhiHatPlus => "phihat+",
            ToyStrategy::PhiHatMinus => "phihat-",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown toy strategy {s:?}")))
    }

    pub fn strategy(self) -> RestrictedStrategy {
        RestrictedStrategy::from_fn(HORIZON, 2, |t, x| match self {
            ToyStrategy::Phi0 => 0,
            ToyStrategy::PhiPlus => usize::from(x == PLUS),
            ToyStrategy::PhiMinus => usize::from(x == MINUS),
            ToyStrategy::PhiHatPlus => usize::from(t == 0 && x == PLUS),
            ToyStrategy::PhiHatMinus => usize::from(t == 0 && x == MINUS),
        })
    }

    /// Name of `strategy` if it is one of the toy strategies.
    pub fn identify(strategy: &RestrictedStrategy) -> Option<Self> {
        Self::ALL.into_iter().find(|k| &k.strategy() == strategy)
    }
}

/// Weights of the four-parameter family: `b1` on `(φ±, m±)`, `b2` on
/// `(φ0, m±)`, `b3` on `(φ̂±, m̂±)`, `b4` on `(φ0, m̂±)`; they must sum to
/// 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyWeights {
    pub b1: Q,
    pub b2: Q,
    pub b3: Q,
    pub b4: Q,
}

impl ToyWeights {
    pub fn symmetric(beta: &Q) -> Self {
        let gamma = q(1, 4) - beta.clone();
        Self {
            b1: beta.clone(),
            b2: gamma.clone(),
            b3: beta.clone(),
            b4: gamma,
        }
    }
}

/// The closed-form flow values, parameterized by `b1`, `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyFlows {
    pub m0: FiniteDist<Q>,
    pub m1_plus: FiniteDist<Q>,
    pub m1_minus: FiniteDist<Q>,
    pub m2_plus: FiniteDist<Q>,
    pub m2_minus: FiniteDist<Q>,
}

impl ToyFlows {
    pub fn new(b1: &Q, b2: &Q) -> Self {
        let s = b1.clone() + b2.clone();
        let frac = |n1: i64, n2: i64, d: i64| {
            (Q::from_i64(n1) * b1.clone() + Q::from_i64(n2) * b2.clone()) / (Q::from_i64(d) * s.clone())
        };
        let pair = |hi: Q, lo: Q| (FiniteDist::new_unchecked(vec![hi.clone(), lo.clone()]), FiniteDist::new_unchecked(vec![lo, hi]));
        let (m1_plus, m1_minus) = pair(frac(5, 4, 8), frac(3, 4, 8));
        let (m2_plus, m2_minus) = pair(frac(21, 16, 32), frac(11, 16, 32));
        Self {
            m0: FiniteDist::uniform(2),
            m1_plus,
            m1_minus,
            m2_plus,
            m2_minus,
        }
    }

    fn flow(&self, a: &FiniteDist<Q>, b: &FiniteDist<Q>) -> MeasureFlow<Q> {
        MeasureFlow::new(vec![self.m0.clone(), a.clone(), b.clone()]).expect("three entries")
    }

    pub fn m_plus(&self) -> MeasureFlow<Q> {
        self.flow(&self.m1_plus, &self.m2_plus)
    }

    pub fn m_minus(&self) -> MeasureFlow<Q> {
        self.flow(&self.m1_minus, &self.m2_minus)
    }

    pub fn m_hat_plus(&self) -> MeasureFlow<Q> {
        self.flow(&self.m1_plus, &self.m0)
    }

    pub fn m_hat_minus(&self) -> MeasureFlow<Q> {
        self.flow(&self.m1_minus, &self.m0)
    }
}

/// Builds the eight-atom suggestion for the given weights. `perturb_m1`
/// shifts mass `δ` from `-1` to `+1` in `m_1^+` wherever it appears
/// (a mutation used as a negative control).
pub fn build_rho_weights(w: &ToyWeights, perturb_m1: Option<&Q>) -> Result<SuggestionAtoms<Q>> {
    let mut flows = ToyFlows::new(&w.b1, &w.b2);
    if let Some(d) = perturb_m1 {
        let m = flows.m1_plus.weights();
        flows.m1_plus = FiniteDist::new_unchecked(vec![m[PLUS].clone() + d.clone(), m[MINUS].clone() - d.clone()]);
    }
    use ToyStrategy::*;
    let entries = vec![
        (PhiPlus.strategy(), flows.m_plus(), w.b1.clone()),
        (PhiMinus.strategy(), flows.m_minus(), w.b1.clone()),
        (Phi0.strategy(), flows.m_plus(), w.b2.clone()),
        (Phi0.strategy(), flows.m_minus(), w.b2.clone()),
        (PhiHatPlus.strategy(), flows.m_hat_plus(), w.b3.clone()),
        (PhiHatMinus.strategy(), flows.m_hat_minus(), w.b3.clone()),
        (Phi0.strategy(), flows.m_hat_plus(), w.b4.clone()),
        (Phi0.strategy(), flows.m_hat_minus(), w.b4.clone()),
    ];
    SuggestionAtoms::new(entries, Tolerances::default())
}

pub fn build_rho(p: &ToyParams) -> Result<SuggestionAtoms<Q>> {
    build_rho_weights(&ToyWeights::symmetric(&p.beta), None)
}

/// Axis-aligned `(c0, c1)` box.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub c0: (Q, Q),
    pub c1: (Q, Q),
}

impl Window {
    /// The box stated with the original example: `0 < c0 < β/2`,
    /// `5β/32 < c1 < 5β/16` (open).
    pub fn stated(beta: &Q) -> Self {
        Self {
            c0: (Q::zero(), beta.clone() * q(1, 2)),
            c1: (beta.clone() * q(5, 32), beta.clone() * q(5, 16)),
        }
    }

    pub fn center(&self) -> (Q, Q) {
        (
            (self.c0.0.clone() + self.c0.1.clone()) * q(1, 2),
            (self.c1.0.clone() + self.c1.1.clone()) * q(1, 2),
        )
    }

    pub fn summary(&self) -> WindowSummary {
        WindowSummary {
            c0_low: self.c0.0.render(),
            c0_high: self.c0.1.render(),
            c1_low: self.c1.0.render(),
            c1_high: self.c1.1.render(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary {
    pub c0_low: String,
    pub c0_high: String,
    pub c1_low: String,
    pub c1_high: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub c0: Q,
    pub c1: Q,
    pub consistency_pass: bool,
    pub optimality_pass: bool,
    /// Name of the first strategy branch with an (Opt) witness.
    pub first_failing_branch: Option<String>,
}

impl PointCheck {
    pub fn passed(&self) -> bool {
        self.consistency_pass && self.optimality_pass
    }
}

/// Runs (R1), (Con) and (Opt) at one parameter point.
pub fn check_point(beta: &Q, c0: &Q, c1: &Q) -> Result<PointCheck> {
    let p = ToyParams::new(beta.clone(), c0.clone(), c1.clone())?;
    let game = build_game(&p)?;
    let rho = build_rho(&p)?;
    let r1 = validate_r1(&game, &rho);
    let con = check_consistency(&game, &rho)?;
    let opt = check_optimality(&game, &rho)?;
    let first_failing_branch = opt.branches.iter().find(|b| !b.witnesses.is_empty()).map(|b| {
        ToyStrategy::identify(&rho.strategies()[b.strategy])
            .map(|k| k.name().to_string())
            .unwrap_or_else(|| format!("strategy{}", b.strategy))
    });
    Ok(PointCheck {
        c0: c0.clone(),
        c1: c1.clone(),
        consistency_pass: r1.passed && con.passed,
        optimality_pass: opt.passed,
        first_failing_branch,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowScan {
    pub beta: Q,
    pub grid: usize,
    pub points: Vec<PointCheck>,
    /// Rectangular hull of the passing grid points.
    pub hull: Option<Window>,
    /// Hull edges refined by bisection against the neighbouring failing
    /// grid values, through the hull center.
    pub refined: Option<Window>,
    pub stated: Window,
    pub discrepancies: Vec<String>,
}

impl WindowScan {
    /// Center of the refined window, a parameter point that passes.
    pub fn interior(&self) -> Option<(Q, Q)> {
        self.refined.as_ref().map(Window::center)
    }
}

/// Bisects between a passing value `good` and a failing value `bad` until
/// they are closer than `tol`; returns the final `(good, bad)` pair.
fn bisect(mut good: Q, mut bad: Q, tol: &Q, passes: impl Fn(&Q) -> Result<bool>) -> Result<(Q, Q)> {
    while (bad.clone() - good.clone()).abs() > *tol {
        let mid = (good.clone() + bad.clone()) * q(1, 2);
        if passes(&mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok((good, bad))
}

/// Scans `c0, c1 ∈ {β i / grid : i = 0..=2 grid}` (up to `2β` on each axis),
/// collects the passing region, and refines its edges to `1e-6` by
/// bisection. The result is compared with the stated window; any edge that
/// differs by more than the bisection tolerance is listed.
pub fn window_scan(beta: &Q, grid: usize) -> Result<WindowScan> {
    if grid < 8 {
        return Err(Error::InvalidParameter("grid must have at least 8 points per axis".into()));
    }
    let axis: Vec<Q> = (0..=2 * grid as i64)
        .map(|i| beta.clone() * Q::from_i64(i) / Q::from_i64(grid as i64))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..axis.len())
        .flat_map(|i| (0..axis.len()).map(move |j| (i, j)))
        .collect();
    let points = pairs
        .par_iter()
        .map(|&(i, j)| check_point(beta, &axis[i], &axis[j]))
        .collect::<Result<Vec<_>>>()?;
    let passing: Vec<&PointCheck> = points.iter().filter(|p| p.passed()).collect();
    let stated = Window::stated(beta);
    let mut discrepancies = Vec::new();
    if passing.is_empty() {
        discrepancies.push("no grid point passes".into());
        return Ok(WindowScan {
            beta: beta.clone(),
            grid,
            points,
            hull: None,
            refined: None,
            stated,
            discrepancies,
        });
    }
    let min_max = |f: &dyn Fn(&PointCheck) -> Q| {
        let vals: Vec<Q> = passing.iter().map(|p| f(p)).collect();
        (
            vals.iter().min().cloned().expect("non-empty"),
            vals.iter().max().cloned().expect("non-empty"),
        )
    };
    let hull = Window {
        c0: min_max(&|p| p.c0.clone()),
        c1: min_max(&|p| p.c1.clone()),
    };
    let tol = q(1, 1_000_000);
    let step = beta.clone() / Q::from_i64(grid as i64);
    let (mid0, mid1) = hull.center();
    let pass_c0 = |c0: &Q| Ok(check_point(beta, c0, &mid1)?.passed());
    let pass_c1 = |c1: &Q| Ok(check_point(beta, &mid0, c1)?.passed());
    // Each edge: if the neighbouring grid value fails, bisect towards it.
    let refine = |edge: &Q, dir: i64, passes: &dyn Fn(&Q) -> Result<bool>| -> Result<Q> {
        let neighbour = edge.clone() + step.clone() * Q::from_i64(dir);
        if neighbour < Q::zero() || !passes(edge)? || passes(&neighbour)? {
            return Ok(edge.clone());
        }
        Ok(bisect(edge.clone(), neighbour, &tol, passes)?.0)
    };
    let refined = Window {
        c0: (refine(&hull.c0.0, -1, &pass_c0)?, refine(&hull.c0.1, 1, &pass_c0)?),
        c1: (refine(&hull.c1.0, -1, &pass_c1)?, refine(&hull.c1.1, 1, &pass_c1)?),
    };
    let edges = [
        ("c0 lower", &refined.c0.0, &stated.c0.0),
        ("c0 upper", &refined.c0.1, &stated.c0.1),
        ("c1 lower", &refined.c1.0, &stated.c1.0),
        ("c1 upper", &refined.c1.1, &stated.c1.1),
    ];
    for (name, found, claimed) in edges {
        if (found.clone() - claimed.clone()).abs() > tol {
            discrepancies.push(format!(
                "{name}: scan {} (~{:.6}) vs stated {} (~{:.6})",
                found.render(),
                found.to_f64(),
                claimed.render(),
                claimed.to_f64()
            ));
        }
    }
    let (sc0, sc1) = stated.center();
    if !check_point(beta, &sc0, &sc1)?.passed() {
        discrepancies.push(format!(
            "stated window center ({}, {}) fails the checks",
            sc0.render(),
            sc1.render()
        ));
    }
    Ok(WindowScan {
        beta: beta.clone(),
        grid,
        points,
        hull: Some(hull),
        refined: Some(refined),
        stated,
        discrepancies,
    })
}
