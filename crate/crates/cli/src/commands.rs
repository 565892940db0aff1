use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use corrmfg::chaos::{chaos_curve, slope_fit};
use corrmfg::config::{Config, SuggestionConfig, ToySuggestion};
use corrmfg::correlated::{
    check_consistency, check_optimality, check_r2, dpp_solve, validate_r1, ConsistencyReport, OptimalityReport,
    R1Report, R2Report, SuggestionAtoms,
};
use corrmfg::game::GameSpec;
use corrmfg::nplayer::{default_family, epsilon_report, simulate, DeviationRule, FollowSuggestion, UniformRandom};
use corrmfg::toy::{window_scan, ToyStrategy};
use corrmfg::{Mode, Scalar};
use serde::Serialize;

use crate::manifest::{self, config_hash, Outputs, RunManifest};
use crate::{Cli, CliError, Command, RunOpts, Source};

pub const OUT_DIR_ENV: &str = "CORRMFG_OUT_DIR";

/// Stored configuration and output directory when replaying a manifest.
pub struct Replay {
    pub config: Config,
    pub out: PathBuf,
}

fn out_dir(opts: &RunOpts) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("corrmfg-out"))
}

fn resolve(source: &Source, opts: &RunOpts, n: &[usize]) -> Result<Config, CliError> {
    let mut config = if source.source == "toy" {
        let mut c = Config::toy(
            source.beta.as_deref().unwrap_or("1/5"),
            source.c0.as_deref().unwrap_or("1/20"),
            source.c1.as_deref().unwrap_or("3/32"),
        );
        if let Some(d) = &source.perturb_m1 {
            c.suggestion = Some(SuggestionConfig::Toy(ToySuggestion {
                weights: None,
                perturb_m1: Some(d.clone()),
            }));
        }
        c
    } else {
        if source.beta.is_some() || source.c0.is_some() || source.c1.is_some() || source.perturb_m1.is_some() {
            return Err(CliError::Input("--beta/--c0/--c1/--perturb-m1 only apply to `toy`".into()));
        }
        let text = std::fs::read_to_string(&source.source)
            .map_err(|e| CliError::Input(format!("{}: {e}", source.source)))?;
        Config::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", source.source)))?
    };
    if let Some(s) = opts.seed {
        config.experiment.seed = s;
    }
    if let Some(r) = opts.reps {
        config.experiment.reps = r;
    }
    if let Some(m) = &opts.mode {
        config.experiment.mode = m.parse::<Mode>()?;
    }
    if !n.is_empty() {
        config.experiment.n = n.to_vec();
    }
    Ok(config)
}

pub fn dispatch(cli: Cli, argv: Vec<String>, replay: Option<Replay>) -> Result<bool, CliError> {
    let start = Instant::now();
    if let Command::Replay { manifest, out } = &cli.command {
        let m = manifest::read(manifest)?;
        let inner = Cli::try_parse_from(&m.argv).map_err(|e| CliError::Input(format!("manifest argv: {e}")))?;
        if matches!(inner.command, Command::Replay { .. }) {
            return Err(CliError::Input("manifest records a replay".into()));
        }
        let out = out
            .clone()
            .unwrap_or_else(|| manifest.parent().map(PathBuf::from).unwrap_or_default());
        return dispatch(inner, m.argv, Some(Replay { config: m.config, out }));
    }
    let (name, config, out) = {
        let (name, source, opts, n): (&str, Option<&Source>, &RunOpts, Vec<usize>) = match &cli.command {
            Command::Verify { source, opts } => ("verify", Some(source), opts, vec![]),
            Command::Dpp { source, opts, .. } => ("dpp", Some(source), opts, vec![]),
            Command::Simulate { source, opts, n, .. } => ("simulate", Some(source), opts, vec![*n]),
            Command::EpsilonScan { source, opts, n } => ("epsilon-scan", Some(source), opts, n.clone()),
            Command::ChaosScan { source, opts, n, .. } => ("chaos-scan", Some(source), opts, n.clone()),
            Command::WindowScan { opts, beta, .. } => ("window-scan", None, opts, {
                let _ = beta;
                vec![]
            }),
            Command::Replay { .. } => unreachable!(),
        };
        match replay {
            Some(r) => (name, r.config, r.out),
            None => {
                let config = match (source, &cli.command) {
                    (Some(s), _) => resolve(s, opts, &n)?,
                    (None, Command::WindowScan { beta, .. }) => {
                        let mut c = Config::toy(beta, "0", "0");
                        if let Some(s) = opts.seed {
                            c.experiment.seed = s;
                        }
                        c
                    }
                    _ => unreachable!(),
                };
                (name, config, out_dir(opts))
            }
        }
    };
    let mut outputs = Outputs::new(out)?;
    let passed = match &cli.command {
        Command::Verify { .. } => verify(&config, &mut outputs)?,
        Command::Dpp { phi, .. } => dpp(&config, phi.as_deref(), &mut outputs)?,
        Command::Simulate { n, deviation, .. } => simulate_cmd(&config, *n, deviation.as_deref(), &mut outputs)?,
        Command::EpsilonScan { .. } => epsilon_cmd(&config, &mut outputs)?,
        Command::ChaosScan { flow_atom, .. } => chaos_cmd(&config, *flow_atom, &mut outputs)?,
        Command::WindowScan { beta, grid, .. } => window_cmd(beta, *grid, &mut outputs)?,
        Command::Replay { .. } => unreachable!(),
    };
    let m = RunManifest {
        command: name.to_string(),
        argv,
        config_hash: config_hash(&config),
        seed: config.experiment.seed,
        mode: config.experiment.mode.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        outputs: outputs.files.clone(),
        config,
    };
    outputs.json("manifest.json", &m)?;
    Ok(passed)
}

fn strategy_name<S: Scalar>(rho: &SuggestionAtoms<S>, s: usize, toy: bool) -> String {
    if toy {
        if let Some(k) = ToyStrategy::identify(&rho.strategies()[s]) {
            return k.name().to_string();
        }
    }
    format!("strategy{s}")
}

fn is_toy(config: &Config) -> bool {
    matches!(config.game, corrmfg::config::GameConfig::Builtin(_))
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    mode: String,
    r1: R1Report,
    r2: R2Report,
    consistency: ConsistencyReport,
    optimality: OptimalityReport,
}

fn verify_all<S: Scalar>(game: &GameSpec<S>, rho: &SuggestionAtoms<S>, mode: Mode) -> Result<VerifyReport, CliError> {
    let r1 = validate_r1(game, rho);
    let r2 = check_r2(rho);
    let consistency = check_consistency(game, rho)?;
    let optimality = check_optimality(game, rho)?;
    Ok(VerifyReport {
        passed: r1.passed && r2.passed && consistency.passed && optimality.passed,
        mode: mode.to_string(),
        r1,
        r2,
        consistency,
        optimality,
    })
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn verify(config: &Config, out: &mut Outputs) -> Result<bool, CliError> {
    let game = config.build_game()?;
    let rho = config.build_suggestion()?;
    let mode = config.experiment.mode;
    let report = match mode {
        Mode::Rational => verify_all(&game, &rho, mode)?,
        Mode::Float => verify_all(&game.to_f64(), &rho.to_f64(), mode)?,
    };
    let toy = is_toy(config);
    println!("R1  {}", pass(report.r1.passed));
    for p in &report.r1.problems {
        println!("    {p}");
    }
    println!("R2  {}", pass(report.r2.passed));
    for f in &report.r2.failures {
        println!(
            "    t={} prefix node {} strategy {} flow {}: joint {} vs product {}",
            f.t,
            f.prefix_node,
            strategy_name(&rho, f.strategy, toy),
            f.flow,
            f.joint,
            f.product
        );
    }
    println!("Con {}", pass(report.consistency.passed));
    for f in &report.consistency.failures {
        println!(
            "    flow {} t={} state {}: P(X_t = x | flow) = {} but flow gives {}",
            f.flow, f.t, game.states[f.state].name, f.actual, f.expected
        );
    }
    let o = &report.optimality;
    println!(
        "Opt {}  J(follow) = {}  optimum = {}  gap = {}",
        pass(o.passed),
        o.follow_cost,
        o.optimal_cost,
        o.gap
    );
    for b in &o.branches {
        for w in &b.witnesses {
            println!(
                "    witness {}: t={} history {:?} flow node {}: suggested action {} costs {}, action {} costs {}",
                strategy_name(&rho, b.strategy, toy),
                w.t,
                w.history.iter().map(|&x| game.states[x].name.as_str()).collect::<Vec<_>>(),
                w.flow_node,
                w.suggested,
                w.suggested_value,
                w.better,
                w.better_value
            );
        }
    }
    out.json("verify.json", &report)?;
    Ok(report.passed)
}

#[derive(Serialize)]
struct DppRow {
    strategy: String,
    t: usize,
    history: String,
    flow_node: usize,
    value: String,
    action: String,
    tie: bool,
}

fn dpp(config: &Config, phi: Option<&str>, out: &mut Outputs) -> Result<bool, CliError> {
    let game = config.build_game()?;
    let rho = config.build_suggestion()?;
    let toy = is_toy(config);
    let selected: Vec<usize> = match phi {
        None => rho.active_strategies(),
        Some(p) => {
            let idx = match p.parse::<usize>() {
                Ok(i) => Some(i),
                Err(_) => ToyStrategy::parse(p)
                    .ok()
                    .and_then(|k| rho.strategy_index(&k.strategy())),
            };
            match idx {
                Some(i) if rho.active_strategies().contains(&i) => vec![i],
                _ => return Err(CliError::Input(format!("--phi {p}: no strategy with positive mass"))),
            }
        }
    };
    let mut rows = Vec::new();
    let mut ok = true;
    for s in selected {
        let name = strategy_name(&rho, s, toy);
        let (initial, mean, entries, reverified) = match config.experiment.mode {
            Mode::Rational => {
                let t = dpp_solve(&game, &rho, s)?;
                let ok = t.reverify(&game, &rho)?;
                (
                    t.initial_values(&game)
                        .into_iter()
                        .map(|v| v.map(|v| v.render()))
                        .collect::<Vec<_>>(),
                    t.initial_value(&game).render(),
                    t.entries
                        .iter()
                        .map(|((t, h, n), e)| (*t, h.clone(), *n, e.value.render(), e.action, e.tie))
                        .collect::<Vec<_>>(),
                    ok,
                )
            }
            Mode::Float => {
                let (g, r) = (game.to_f64(), rho.to_f64());
                let t = dpp_solve(&g, &r, s)?;
                let ok = t.reverify(&g, &r)?;
                (
                    t.initial_values(&g)
                        .into_iter()
                        .map(|v| v.map(|v| v.render()))
                        .collect(),
                    t.initial_value(&g).render(),
                    t.entries
                        .iter()
                        .map(|((t, h, n), e)| (*t, h.clone(), *n, e.value.render(), e.action, e.tie))
                        .collect(),
                    ok,
                )
            }
        };
        ok &= reverified;
        println!("{name}: E[V(0, X_0)] = {mean}");
        for (x, v) in initial.iter().enumerate() {
            println!("  V(0, {}) = {}", game.states[x].name, v.as_deref().unwrap_or("-"));
        }
        for (t, h, n, value, action, tie) in entries {
            rows.push(DppRow {
                strategy: name.clone(),
                t,
                history: h
                    .iter()
                    .map(|&x| game.states[x].name.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
                flow_node: n,
                value,
                action: action.map(|a| game.actions[a].clone()).unwrap_or_default(),
                tie,
            });
        }
    }
    out.csv("dpp.csv", &rows)?;
    Ok(ok)
}

fn rule_by_name(name: &str, num_actions: usize) -> Result<Box<dyn DeviationRule>, CliError> {
    if name == "uniform" {
        return Ok(Box::new(UniformRandom));
    }
    default_family(num_actions)
        .into_iter()
        .find(|r| r.name() == name)
        .ok_or_else(|| {
            let known: Vec<String> = default_family(num_actions).iter().map(|r| r.name()).collect();
            CliError::Input(format!("unknown deviation {name:?}; known: {}, uniform", known.join(", ")))
        })
}

#[derive(Serialize)]
struct StateRow {
    t: usize,
    mean_state: f64,
}

fn simulate_cmd(config: &Config, n: usize, deviation: Option<&str>, out: &mut Outputs) -> Result<bool, CliError> {
    let game = config.build_game()?.to_f64();
    let rho = config.build_suggestion()?.to_f64();
    let (reps, seed) = (config.experiment.reps, config.experiment.seed);
    let mut family: Vec<Box<dyn DeviationRule>> = vec![Box::new(FollowSuggestion)];
    if let Some(d) = deviation.filter(|d| *d != "identity") {
        family.push(rule_by_name(d, game.num_actions())?);
    }
    let report = epsilon_report(&game, &rho, &[n], &family, reps, seed)?;
    let sim = simulate(&game, &rho, n, family.last().map(|r| r.as_ref()), reps, seed)?;
    for r in &report.rows {
        println!(
            "N={} {}: J = {} ± {} (improvement {} ± {})",
            r.n, r.deviation_name, r.estimate, r.stderr, r.improvement, r.improvement_stderr
        );
    }
    println!(
        "mean dist_T(empirical, flow) = {} ± {}",
        sim.chaos_distance.mean, sim.chaos_distance.stderr
    );
    out.csv("simulate.csv", &report.rows)?;
    let states: Vec<StateRow> = sim
        .mean_state
        .iter()
        .enumerate()
        .map(|(t, &m)| StateRow { t, mean_state: m })
        .collect();
    out.csv("simulate_states.csv", &states)?;
    Ok(true)
}

fn epsilon_cmd(config: &Config, out: &mut Outputs) -> Result<bool, CliError> {
    let game = config.build_game()?.to_f64();
    let rho = config.build_suggestion()?.to_f64();
    let n = if config.experiment.n.is_empty() {
        vec![5, 10, 20, 50, 100]
    } else {
        config.experiment.n.clone()
    };
    let family = default_family(game.num_actions());
    let report = epsilon_report(&game, &rho, &n, &family, config.experiment.reps, config.experiment.seed)?;
    for s in &report.summary {
        println!(
            "N={}: observed improvement {} ± {} ({})",
            s.n, s.improvement, s.improvement_stderr, s.best_rule
        );
    }
    out.csv("epsilon.csv", &report.rows)?;
    out.csv("epsilon_summary.csv", &report.summary)?;
    Ok(true)
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ChaosCsvRow {
    N: usize,
    estimate: f64,
    stderr: f64,
    reps: u64,
    flow_atom: String,
}

fn chaos_cmd(config: &Config, flow_atom: Option<usize>, out: &mut Outputs) -> Result<bool, CliError> {
    let game = config.build_game()?.to_f64();
    let rho = config.build_suggestion()?.to_f64();
    let n = if config.experiment.n.is_empty() {
        vec![10, 100, 1000]
    } else {
        config.experiment.n.clone()
    };
    let curve = chaos_curve(&game, &rho, &n, config.experiment.reps, config.experiment.seed, flow_atom)?;
    let rows: Vec<ChaosCsvRow> = curve
        .rows
        .iter()
        .map(|r| ChaosCsvRow {
            N: r.n,
            estimate: r.estimate,
            stderr: r.stderr,
            reps: r.reps,
            flow_atom: r.flow_atom.map_or_else(|| "mixed".into(), |f| f.to_string()),
        })
        .collect();
    for r in &rows {
        println!("N={}: {} ± {}", r.N, r.estimate, r.stderr);
    }
    let slope = if curve.rows.len() >= 3 { slope_fit(&curve).ok() } else { None };
    if let Some(s) = slope {
        println!("slope of log(estimate) vs log(N): {s}");
    }
    out.csv("chaos.csv", &rows)?;
    out.json("chaos_summary.json", &serde_json::json!({ "slope": slope }))?;
    Ok(true)
}

#[derive(Serialize)]
struct WindowRow {
    c0: String,
    c1: String,
    consistency_pass: bool,
    optimality_pass: bool,
    first_failing_branch: String,
}

fn window_cmd(beta: &str, grid: usize, out: &mut Outputs) -> Result<bool, CliError> {
    let beta = corrmfg::parse_q(beta)?;
    let scan = window_scan(&beta, grid)?;
    let rows: Vec<WindowRow> = scan
        .points
        .iter()
        .map(|p| WindowRow {
            c0: p.c0.render(),
            c1: p.c1.render(),
            consistency_pass: p.consistency_pass,
            optimality_pass: p.optimality_pass,
            first_failing_branch: p.first_failing_branch.clone().unwrap_or_default(),
        })
        .collect();
    let interior = scan.interior();
    let summary = serde_json::json!({
        "beta": beta.render(),
        "grid": grid,
        "passing_points": scan.points.iter().filter(|p| p.passed()).count(),
        "hull": scan.hull.as_ref().map(|w| w.summary()),
        "oracle_window": scan.refined.as_ref().map(|w| w.summary()),
        "stated_window": scan.stated.summary(),
        "interior": interior.as_ref().map(|(a, b)| [a.render(), b.render()]),
        "discrepancies": scan.discrepancies,
    });
    if let Some(w) = &scan.refined {
        let s = w.summary();
        println!(
            "oracle window: c0 in [{}, {}], c1 in [{}, {}]",
            s.c0_low, s.c0_high, s.c1_low, s.c1_high
        );
    } else {
        println!("oracle window: empty");
    }
    let s = scan.stated.summary();
    println!(
        "stated window: c0 in ({}, {}), c1 in ({}, {})",
        s.c0_low, s.c0_high, s.c1_low, s.c1_high
    );
    if let Some((a, b)) = &interior {
        println!("interior point: c0 = {}, c1 = {}", a.render(), b.render());
    }
    for d in &scan.discrepancies {
        println!("discrepancy: {d}");
    }
    out.csv("window.csv", &rows)?;
    out.json("window_summary.json", &summary)?;
    Ok(true)
}
