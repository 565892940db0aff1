//! JSON configuration documents. All probabilities and costs are strings
//! (`"1/5"`, `"0.2"`) so that rational inputs survive untouched.
//!
//! ```json
//! {
//!   "game": { "builtin": { "name": "toy", "beta": "1/5", "c0": "1/20", "c1": "3/32" } },
//!   "suggestion": { "toy": { "perturb_m1": "1/100" } },
//!   "experiment": { "seed": 7, "reps": 100000, "n": [5, 10, 20] }
//! }
//! ```
//!
//! Tabular games list the kernel either as one `[t][x][a] -> law` tensor or
//! as named measure atoms each carrying such a tensor; suggestions list
//! `{strategy, flow, weight}` atoms.

use serde::{Deserialize, Serialize};

use crate::correlated::{RestrictedStrategy, SuggestionAtoms};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Kernel, KernelAtom, KernelTable, RunningCost, StateLabel, TerminalCost};
use crate::measures::{FiniteDist, MeasureFlow};
use crate::scalar::{parse_q, Mode, Tolerances, Q};
use crate::toy::{build_game, build_rho_weights, ToyParams, ToyWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub game: GameConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<SuggestionConfig>,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameConfig {
    Builtin(BuiltinGame),
    Tabular(TabularGame),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinGame {
    pub name: String,
    pub beta: String,
    pub c0: String,
    pub c1: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelConfig {
    Static(Vec<Vec<Vec<Vec<String>>>>),
    Atoms(Vec<KernelAtomConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelAtomConfig {
    pub name: String,
    pub measure: Vec<String>,
    pub table: Vec<Vec<Vec<Vec<String>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularGame {
    pub horizon: usize,
    pub states: Vec<StateConfig>,
    pub actions: Vec<String>,
    pub initial: Vec<String>,
    pub kernel: KernelConfig,
    /// `[t][x][a]`.
    pub running_base: Vec<Vec<Vec<String>>>,
    /// `[t][x][a][y]`, multiplies `m(y)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub running_coupling: Option<Vec<Vec<Vec<Vec<String>>>>>,
    /// `[x]`.
    pub terminal_base: Vec<String>,
    /// `[x][y]`, multiplies `m(y)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_coupling: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionConfig {
    Toy(ToySuggestion),
    Atoms(Vec<AtomConfig>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySuggestion {
    /// `[b1, b2, b3, b4]`; defaults to `[β, γ, β, γ]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[String; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb_m1: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// `[t][x]` action indices.
    pub strategy: Vec<Vec<usize>>,
    /// `[t][x]` probabilities.
    pub flow: Vec<Vec<String>>,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

fn default_seed() -> u64 {
    1
}
fn default_reps() -> u64 {
    10_000
}
fn default_mode() -> Mode {
    Mode::Rational
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            reps: default_reps(),
            n: Vec::new(),
            mode: default_mode(),
            tolerances: None,
        }
    }
}

fn num(s: &str, at: &str) -> Result<Q> {
    parse_q(s).map_err(|e| Error::Parse(format!("{at}: {e}")))
}

fn nums(v: &[String], at: &str) -> Result<Vec<Q>> {
    v.iter()
        .enumerate()
        .map(|(i, s)| num(s, &format!("{at}[{i}]")))
        .collect()
}

fn law(v: &[String], tol: &Tolerances, at: &str) -> Result<FiniteDist<Q>> {
    FiniteDist::new(nums(v, at)?, tol).map_err(|e| Error::Parse(format!("{at}: {e}")))
}

fn kernel_table(raw: &[Vec<Vec<Vec<String>>>], tol: &Tolerances, at: &str) -> Result<KernelTable<Q>> {
    raw.iter()
        .enumerate()
        .map(|(t, s)| {
            s.iter()
                .enumerate()
                .map(|(x, r)| {
                    r.iter()
                        .enumerate()
                        .map(|(a, l)| law(l, tol, &format!("{at}[{t}][{x}][{a}]")))
                        .collect()
                })
                .collect()
        })
        .collect()
}

impl Config {
    /// Parses a document; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Builtin toy game with its default suggestion.
    pub fn toy(beta: &str, c0: &str, c1: &str) -> Self {
        Self {
            game: GameConfig::Builtin(BuiltinGame {
                name: "toy".into(),
                beta: beta.into(),
                c0: c0.into(),
                c1: c1.into(),
            }),
            suggestion: None,
            experiment: ExperimentConfig::default(),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.experiment.tolerances.unwrap_or_default()
    }

    fn toy_params(&self) -> Result<Option<ToyParams>> {
        match &self.game {
            GameConfig::Builtin(b) => {
                if b.name != "toy" {
                    return Err(Error::Parse(format!("game.builtin.name: unknown game {:?}", b.name)));
                }
                let p = ToyParams::new(
                    num(&b.beta, "game.builtin.beta")?,
                    num(&b.c0, "game.builtin.c0")?,
                    num(&b.c1, "game.builtin.c1")?,
                )?;
                Ok(Some(p))
            }
            GameConfig::Tabular(_) => Ok(None),
        }
    }

    pub fn build_game(&self) -> Result<GameSpec<Q>> {
        let tol = self.tolerances();
        let g = match &self.game {
            GameConfig::Builtin(_) => return build_game(&self.toy_params()?.expect("builtin")),
            GameConfig::Tabular(g) => g,
        };
        let at = "game.tabular";
        let kernel = match &g.kernel {
            KernelConfig::Static(t) => Kernel::Static(kernel_table(t, &tol, &format!("{at}.kernel.static"))?),
            KernelConfig::Atoms(atoms) => Kernel::Atoms(
                atoms
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let p = format!("{at}.kernel.atoms[{i}]");
                        Ok(KernelAtom {
                            name: a.name.clone(),
                            measure: law(&a.measure, &tol, &format!("{p}.measure"))?,
                            table: kernel_table(&a.table, &tol, &format!("{p}.table"))?,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        let grid3 = |v: &[Vec<Vec<String>>], p: &str| -> Result<Vec<Vec<Vec<Q>>>> {
            v.iter()
                .enumerate()
                .map(|(t, s)| {
                    s.iter()
                        .enumerate()
                        .map(|(x, r)| nums(r, &format!("{p}[{t}][{x}]")))
                        .collect()
                })
                .collect()
        };
        let game = GameSpec {
            horizon: g.horizon,
            states: g
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    Ok(StateLabel {
                        name: s.name.clone(),
                        value: num(&s.value, &format!("{at}.states[{i}].value"))?,
                    })
                })
                .collect::<Result<_>>()?,
            actions: g.actions.clone(),
            initial: law(&g.initial, &tol, &format!("{at}.initial"))?,
            kernel,
            running: RunningCost {
                base: grid3(&g.running_base, &format!("{at}.running_base"))?,
                coupling: g
                    .running_coupling
                    .as_ref()
                    .map(|c| {
                        c.iter()
                            .enumerate()
                            .map(|(t, s)| grid3(s, &format!("{at}.running_coupling[{t}]")))
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?,
            },
            terminal: TerminalCost {
                base: nums(&g.terminal_base, &format!("{at}.terminal_base"))?,
                coupling: g
                    .terminal_coupling
                    .as_ref()
                    .map(|c| {
                        c.iter()
                            .enumerate()
                            .map(|(x, r)| nums(r, &format!("{at}.terminal_coupling[{x}]")))
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?,
            },
            atom_tol: tol.normalization,
        };
        game.validate().map_err(|e| Error::Parse(format!("{at}: {e}")))?;
        Ok(game)
    }

    pub fn build_suggestion(&self) -> Result<SuggestionAtoms<Q>> {
        let tol = self.tolerances();
        let default_toy = SuggestionConfig::Toy(ToySuggestion::default());
        let s = match (&self.suggestion, &self.game) {
            (Some(s), _) => s,
            (None, GameConfig::Builtin(_)) => &default_toy,
            (None, GameConfig::Tabular(_)) => {
                return Err(Error::Parse("suggestion: required for tabular games".into()))
            }
        };
        match s {
            SuggestionConfig::Toy(t) => {
                let Some(p) = self.toy_params()? else {
                    return Err(Error::Parse("suggestion.toy: only valid with the builtin toy game".into()));
                };
                let w = match &t.weights {
                    Some(w) => ToyWeights {
                        b1: num(&w[0], "suggestion.toy.weights[0]")?,
                        b2: num(&w[1], "suggestion.toy.weights[1]")?,
                        b3: num(&w[2], "suggestion.toy.weights[2]")?,
                        b4: num(&w[3], "suggestion.toy.weights[3]")?,
                    },
                    None => ToyWeights::symmetric(&p.beta),
                };
                let d = t
                    .perturb_m1
                    .as_deref()
                    .map(|d| num(d, "suggestion.toy.perturb_m1"))
                    .transpose()?;
                build_rho_weights(&w, d.as_ref())
            }
            SuggestionConfig::Atoms(atoms) => {
                let entries = atoms
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let p = format!("suggestion.atoms[{i}]");
                        let strategy = RestrictedStrategy::new(a.strategy.clone())
                            .map_err(|e| Error::Parse(format!("{p}.strategy: {e}")))?;
                        let flow = MeasureFlow::new(
                            a.flow
                                .iter()
                                .enumerate()
                                .map(|(t, m)| law(m, &tol, &format!("{p}.flow[{t}]")))
                                .collect::<Result<_>>()?,
                        )
                        .map_err(|e| Error::Parse(format!("{p}.flow: {e}")))?;
                        Ok((strategy, flow, num(&a.weight, &format!("{p}.weight"))?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                SuggestionAtoms::new(entries, tol).map_err(|e| Error::Parse(format!("suggestion: {e}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_round_trip() {
        let mut c = Config::toy("1/5", "1/20", "3/32");
        c.suggestion = Some(SuggestionConfig::Toy(ToySuggestion {
            weights: None,
            perturb_m1: Some("1/100".into()),
        }));
        let back = Config::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.build_game().unwrap().horizon, 2);
        assert_eq!(back.build_suggestion().unwrap().atoms().len(), 8);
    }

    #[test]
    fn syntax_errors_have_locations() {
        let e = Config::from_json("{\n  \"game\": [}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn semantic_errors_have_paths() {
        let text = r#"{
          "game": {"tabular": {
            "horizon": 1,
            "states": [{"name": "a", "value": "0"}],
            "actions": ["stay"],
            "initial": ["1"],
            "kernel": {"static": [[[["1/2"]]]]},
            "running_base": [[["0"]]],
            "terminal_base": ["0"]
          }},
          "suggestion": {"atoms": [{"strategy": [[0]], "flow": [["1"], ["1"]], "weight": "1"}]}
        }"#;
        let c = Config::from_json(text).unwrap();
        let e = c.build_game().unwrap_err().to_string();
        assert!(e.contains("kernel.static[0][0][0]"), "{e}");
    }

    #[test]
    fn tabular_game_builds() {
        let text = r#"{
          "game": {"tabular": {
            "horizon": 1,
            "states": [{"name": "a", "value": "0"}],
            "actions": ["stay"],
            "initial": ["1"],
            "kernel": {"static": [[[["1"]]]]},
            "running_base": [[["0"]]],
            "terminal_base": ["0"]
          }},
          "suggestion": {"atoms": [{"strategy": [[0]], "flow": [["1"], ["1"]], "weight": "1"}]}
        }"#;
        let c = Config::from_json(text).unwrap();
        c.build_game().unwrap();
        assert_eq!(c.build_suggestion().unwrap().flows().len(), 1);
    }
}
