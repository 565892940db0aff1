//! Game primitives: horizon, state and action sets, initial law, transition
//! kernel and costs.
//!
//! The kernel is stored directly as a law over next states; the noise
//! variable of the system function is recovered by inverse-CDF sampling in
//! the fixed state order ([`NoiseForm`]). Costs are affine in the measure
//! argument, `f(t,x,m,a) = base[t][x][a] + Σ_y coupling[t][x][a][y] m(y)`,
//! which covers mean-dependent costs and makes them well defined on
//! empirical measures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{dist, FiniteDist};
use crate::scalar::{Scalar, Q};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateLabel<S> {
    pub name: String,
    /// Numeric value of the state, used for means of measures.
    pub value: S,
}

/// Kernel table indexed `[t][x][a]`.
pub type KernelTable<S> = Vec<Vec<Vec<FiniteDist<S>>>>;

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel<S> {
    /// Transition law independent of the measure argument.
    Static(KernelTable<S>),
    /// One table per named measure atom. Exact lookups require the queried
    /// measure to match an atom; simulation falls back to the nearest atom.
    Atoms(Vec<KernelAtom<S>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelAtom<S> {
    pub name: String,
    pub measure: FiniteDist<S>,
    pub table: KernelTable<S>,
}

/// Running cost tables: `base[t][x][a]`, optional `coupling[t][x][a][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningCost<S> {
    pub base: Vec<Vec<Vec<S>>>,
    pub coupling: Option<Vec<Vec<Vec<Vec<S>>>>>,
}

/// Terminal cost tables: `base[x]`, optional `coupling[x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalCost<S> {
    pub base: Vec<S>,
    pub coupling: Option<Vec<Vec<S>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec<S> {
    pub horizon: usize,
    pub states: Vec<StateLabel<S>>,
    pub actions: Vec<String>,
    pub initial: FiniteDist<S>,
    pub kernel: Kernel<S>,
    pub running: RunningCost<S>,
    pub terminal: TerminalCost<S>,
    /// Tolerance for matching a measure to a kernel atom (float mode).
    pub atom_tol: f64,
}

impl<S: Scalar> GameSpec<S> {
    /// Checks table dimensions and that every kernel entry is a distribution.
    pub fn validate(&self) -> Result<()> {
        let (nt, nx, na) = (self.horizon, self.states.len(), self.actions.len());
        if nt == 0 || nx == 0 || na == 0 {
            return Err(Error::InvalidParameter(
                "horizon, states and actions must be non-empty".into(),
            ));
        }
        if self.initial.support_size() != nx {
            return Err(Error::SupportMismatch {
                left: nx,
                right: self.initial.support_size(),
            });
        }
        let check_table = |table: &KernelTable<S>, what: &str| -> Result<()> {
            if table.len() != nt {
                return Err(Error::InvalidParameter(format!("{what}: expected {nt} time slices")));
            }
            for (t, slice) in table.iter().enumerate() {
                if slice.len() != nx || slice.iter().any(|row| row.len() != na) {
                    return Err(Error::InvalidParameter(format!("{what}: bad shape at t={t}")));
                }
                for row in slice {
                    for law in row {
                        if law.support_size() != nx {
                            return Err(Error::InvalidParameter(format!(
                                "{what}: law of wrong size at t={t}"
                            )));
                        }
                        FiniteDist::new(law.weights().to_vec(), &Default::default())?;
                    }
                }
            }
            Ok(())
        };
        match &self.kernel {
            Kernel::Static(table) => check_table(table, "kernel")?,
            Kernel::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::InvalidParameter("kernel has no atoms".into()));
                }
                for atom in atoms {
                    check_table(&atom.table, &format!("kernel atom {}", atom.name))?;
                }
            }
        }
        let r = &self.running;
        if r.base.len() != nt || r.base.iter().any(|s| s.len() != nx || s.iter().any(|a| a.len() != na)) {
            return Err(Error::InvalidParameter("running cost base has wrong shape".into()));
        }
        if let Some(c) = &r.coupling {
            let ok = c.len() == nt
                && c.iter().all(|s| {
                    s.len() == nx && s.iter().all(|a| a.len() == na && a.iter().all(|y| y.len() == nx))
                });
            if !ok {
                return Err(Error::InvalidParameter("running cost coupling has wrong shape".into()));
            }
        }
        if self.terminal.base.len() != nx {
            return Err(Error::InvalidParameter("terminal cost base has wrong shape".into()));
        }
        if let Some(c) = &self.terminal.coupling {
            if c.len() != nx || c.iter().any(|y| y.len() != nx) {
                return Err(Error::InvalidParameter("terminal cost coupling has wrong shape".into()));
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn state_values(&self) -> Vec<S> {
        self.states.iter().map(|s| s.value.clone()).collect()
    }

    /// Mean of the state values under `m`.
    pub fn mean(&self, m: &FiniteDist<S>) -> S {
        self.states
            .iter()
            .zip(m.weights())
            .fold(S::zero(), |acc, (s, w)| acc + s.value.clone() * w.clone())
    }

    fn table_for(&self, m: &FiniteDist<S>, exact: bool) -> Result<&KernelTable<S>> {
        match &self.kernel {
            Kernel::Static(table) => Ok(table),
            Kernel::Atoms(atoms) => {
                if let Some(a) = atoms.iter().find(|a| a.measure.near(m, self.atom_tol)) {
                    return Ok(&a.table);
                }
                if exact {
                    return Err(Error::UnknownMeasure(format!(
                        "{:?}",
                        m.weights().iter().map(Scalar::render).collect::<Vec<_>>()
                    )));
                }
                let mut best = &atoms[0];
                let mut best_d = dist(&atoms[0].measure, m)?;
                for a in &atoms[1..] {
                    let d = dist(&a.measure, m)?;
                    if d < best_d {
                        best = a;
                        best_d = d;
                    }
                }
                Ok(&best.table)
            }
        }
    }

    /// Law of the next state from `x` at time `t` under action `a` and
    /// population measure `m`.
    pub fn transition(&self, t: usize, x: usize, m: &FiniteDist<S>, a: usize) -> Result<&FiniteDist<S>> {
        if t >= self.horizon {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        self.check_indices(x, a)?;
        Ok(&self.table_for(m, true)?[t][x][a])
    }

    /// As [`transition`](Self::transition), resolving off-atom measures to the
    /// nearest kernel atom.
    pub fn transition_nearest(&self, t: usize, x: usize, m: &FiniteDist<S>, a: usize) -> Result<&FiniteDist<S>> {
        if t >= self.horizon {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        self.check_indices(x, a)?;
        Ok(&self.table_for(m, false)?[t][x][a])
    }

    /// Whether the kernel ignores its measure argument.
    pub fn kernel_is_static(&self) -> bool {
        matches!(self.kernel, Kernel::Static(_))
    }

    /// Static kernel entry; `None` for atom kernels.
    pub fn static_transition(&self, t: usize, x: usize, a: usize) -> Option<&FiniteDist<S>> {
        match &self.kernel {
            Kernel::Static(table) => Some(&table[t][x][a]),
            Kernel::Atoms(_) => None,
        }
    }

    fn check_indices(&self, x: usize, a: usize) -> Result<()> {
        if x >= self.num_states() {
            return Err(Error::IndexOutOfRange(format!("state {x}")));
        }
        if a >= self.num_actions() {
            return Err(Error::IndexOutOfRange(format!("action {a}")));
        }
        Ok(())
    }

    pub fn running_cost(&self, t: usize, x: usize, m: &FiniteDist<S>, a: usize) -> S {
        let mut v = self.running.base[t][x][a].clone();
        if let Some(c) = &self.running.coupling {
            for (cy, my) in c[t][x][a].iter().zip(m.weights()) {
                v = v + cy.clone() * my.clone();
            }
        }
        v
    }

    pub fn terminal_cost(&self, x: usize, m: &FiniteDist<S>) -> S {
        let mut v = self.terminal.base[x].clone();
        if let Some(c) = &self.terminal.coupling {
            for (cy, my) in c[x].iter().zip(m.weights()) {
                v = v + cy.clone() * my.clone();
            }
        }
        v
    }

    /// Running cost on an exclude-one empirical measure given by counts.
    pub fn running_cost_counts(&self, t: usize, x: usize, counts: &[u32], total: u64, a: usize) -> S {
        let mut v = self.running.base[t][x][a].clone();
        if let Some(c) = &self.running.coupling {
            let den = S::from_i64(total as i64);
            for (cy, &k) in c[t][x][a].iter().zip(counts) {
                if k > 0 {
                    v = v + cy.clone() * S::from_i64(k as i64) / den.clone();
                }
            }
        }
        v
    }

    pub fn terminal_cost_counts(&self, x: usize, counts: &[u32], total: u64) -> S {
        let mut v = self.terminal.base[x].clone();
        if let Some(c) = &self.terminal.coupling {
            let den = S::from_i64(total as i64);
            for (cy, &k) in c[x].iter().zip(counts) {
                if k > 0 {
                    v = v + cy.clone() * S::from_i64(k as i64) / den.clone();
                }
            }
        }
        v
    }

    /// Draws the next state by inverse CDF against the fixed state order.
    pub fn sample_next<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        t: usize,
        x: usize,
        m: &FiniteDist<S>,
        a: usize,
    ) -> Result<usize> {
        let law = self.transition(t, x, m, a)?;
        let u: f64 = rng.random();
        Ok(NoiseForm::sample(law, u))
    }

    /// Every kernel entry must be strictly positive for all `(t, x, a)` and
    /// every measure in `measures` (non-degenerate noise).
    pub fn check_nondegeneracy(&self, measures: &[FiniteDist<S>]) -> NondegeneracyReport {
        let mut report = NondegeneracyReport {
            passed: true,
            min_entry: None,
            violations: Vec::new(),
            warnings: Vec::new(),
        };
        if measures.is_empty() {
            report
                .warnings
                .push("no measures supplied; passing vacuously".into());
            return report;
        }
        let mut min: Option<S> = None;
        for (mi, m) in measures.iter().enumerate() {
            for t in 0..self.horizon {
                for x in 0..self.num_states() {
                    for a in 0..self.num_actions() {
                        let law = match self.transition(t, x, m, a) {
                            Ok(l) => l,
                            Err(e) => {
                                report.passed = false;
                                report.warnings.push(format!("measure {mi}: {e}"));
                                continue;
                            }
                        };
                        for (y, p) in law.weights().iter().enumerate() {
                            if min.as_ref().is_none_or(|cur| p < cur) {
                                min = Some(p.clone());
                            }
                            if *p <= S::zero() {
                                report.passed = false;
                                report.violations.push(DegenerateEntry {
                                    t,
                                    x,
                                    measure: mi,
                                    action: a,
                                    next: y,
                                });
                            }
                        }
                    }
                }
            }
        }
        report.min_entry = min.map(|m| m.render());
        report
    }

    /// Empirical lower bound on the Lipschitz constant of the costs in the
    /// measure argument, over `samples` random measures.
    pub fn lipschitz_spotcheck<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<LipschitzReport> {
        if samples < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        let nx = self.num_states();
        let draws: Vec<FiniteDist<f64>> = (0..samples)
            .map(|_| {
                let raw: Vec<f64> = (0..nx).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let s: f64 = raw.iter().sum();
                FiniteDist::new_unchecked(raw.into_iter().map(|w| w / s).collect())
            })
            .collect();
        let conv = |m: &FiniteDist<f64>| -> FiniteDist<S> {
            // exact rational image of the float draw
            m.map(|w| S::from_q(&float_to_q(*w)))
        };
        let ms: Vec<FiniteDist<S>> = draws.iter().map(conv).collect();
        let mut running_ratio = 0.0f64;
        let mut terminal_ratio = 0.0f64;
        for i in 0..ms.len() {
            for j in (i + 1)..ms.len() {
                let d = dist(&ms[i], &ms[j])?.to_f64();
                if d <= 0.0 {
                    continue;
                }
                for t in 0..self.horizon {
                    for x in 0..nx {
                        for a in 0..self.num_actions() {
                            let diff = (self.running_cost(t, x, &ms[i], a) - self.running_cost(t, x, &ms[j], a))
                                .abs()
                                .to_f64();
                            running_ratio = running_ratio.max(diff / d);
                        }
                    }
                }
                for x in 0..nx {
                    let diff = (self.terminal_cost(x, &ms[i]) - self.terminal_cost(x, &ms[j])).abs().to_f64();
                    terminal_ratio = terminal_ratio.max(diff / d);
                }
            }
        }
        Ok(LipschitzReport {
            samples,
            running_ratio,
            terminal_ratio,
            max_ratio: running_ratio.max(terminal_ratio),
        })
    }
}

fn float_to_q(v: f64) -> Q {
    Q::from_float(v).unwrap_or_else(<Q as Scalar>::zero)
}

impl GameSpec<Q> {
    pub fn to_f64(&self) -> GameSpec<f64> {
        let conv_table = |table: &KernelTable<Q>| -> KernelTable<f64> {
            table
                .iter()
                .map(|s| s.iter().map(|r| r.iter().map(FiniteDist::to_f64).collect()).collect())
                .collect()
        };
        let f = |v: &Q| v.to_f64();
        GameSpec {
            horizon: self.horizon,
            states: self
                .states
                .iter()
                .map(|s| StateLabel {
                    name: s.name.clone(),
                    value: f(&s.value),
                })
                .collect(),
            actions: self.actions.clone(),
            initial: self.initial.to_f64(),
            kernel: match &self.kernel {
                Kernel::Static(t) => Kernel::Static(conv_table(t)),
                Kernel::Atoms(atoms) => Kernel::Atoms(
                    atoms
                        .iter()
                        .map(|a| KernelAtom {
                            name: a.name.clone(),
                            measure: a.measure.to_f64(),
                            table: conv_table(&a.table),
                        })
                        .collect(),
                ),
            },
            running: RunningCost {
                base: self
                    .running
                    .base
                    .iter()
                    .map(|s| s.iter().map(|r| r.iter().map(f).collect()).collect())
                    .collect(),
                coupling: self.running.coupling.as_ref().map(|c| {
                    c.iter()
                        .map(|s| {
                            s.iter()
                                .map(|r| r.iter().map(|y| y.iter().map(f).collect()).collect())
                                .collect()
                        })
                        .collect()
                }),
            },
            terminal: TerminalCost {
                base: self.terminal.base.iter().map(f).collect(),
                coupling: self
                    .terminal
                    .coupling
                    .as_ref()
                    .map(|c| c.iter().map(|y| y.iter().map(f).collect()).collect()),
            },
            atom_tol: 1e-9,
        }
    }
}

/// Ordered partition of `[0, 1]` into next-state intervals whose lengths
/// are the kernel probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseForm<S> {
    /// `(state, lower, upper)` for every state with positive mass.
    pub intervals: Vec<(usize, S, S)>,
}

impl<S: Scalar> NoiseForm<S> {
    pub fn from_law(law: &FiniteDist<S>) -> Self {
        let mut lo = S::zero();
        let mut intervals = Vec::new();
        for (y, p) in law.weights().iter().enumerate() {
            if *p > S::zero() {
                let hi = lo.clone() + p.clone();
                intervals.push((y, lo, hi.clone()));
                lo = hi;
            }
        }
        Self { intervals }
    }

    /// The state whose interval holds `u`; intervals are closed on the right.
    pub fn sample(law: &FiniteDist<S>, u: f64) -> usize {
        let mut cum = 0.0;
        let mut last = 0;
        for (y, p) in law.weights().iter().enumerate() {
            let p = p.to_f64();
            if p > 0.0 {
                cum += p;
                last = y;
                if u <= cum {
                    return y;
                }
            }
        }
        last
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegenerateEntry {
    pub t: usize,
    pub x: usize,
    pub measure: usize,
    pub action: usize,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub passed: bool,
    pub min_entry: Option<String>,
    pub violations: Vec<DegenerateEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub samples: usize,
    pub running_ratio: f64,
    pub terminal_ratio: f64,
    pub max_ratio: f64,
}
