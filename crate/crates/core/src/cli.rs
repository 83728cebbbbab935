//! Command-line front end.
//!
//! Every command prints a JSON report to stdout, optionally writes it with
//! `--out`, and records a [`RunManifest`]. Exit codes: 0 success, 2 resource
//! or cap exceeded, 3 input error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conversions::{dense_coding_lift, mother_povm_classicalize, model_deviation, prepare_measure_behavior, teleportation_lift, MotherPovm};
use crate::error::{Error, Result};
use crate::games::{embed_pstar, evaluate, f2_functional, fd_functional, fd_optimal_classical_strategy, LinearFunctional};
use crate::linalg::{DensityMatrix, Povm};
use crate::lp::SimplexOptions;
use crate::polytope::{
    classical_membership, enumerate_vertices, enumerate_vertices_with_cap, max_functional_classical, membership_generated,
    membership_with, verify_facet, DEFAULT_CAP,
};
use crate::random::{random_channel, random_density, random_povm};
use crate::scenario::{
    behavior_of_deterministic, behavior_of_ea_classical, behavior_of_ea_quantum, Behavior, EAClassicalStrategy,
    EAQuantumStrategy, Scenario,
};
use crate::seesaw::{classical_maximum, seesaw_maximize, SeesawConfig, SeesawReport};
use crate::steering::{
    assemblage_from_state, ea_behavior_is_classical_when_unsteerable, lhs_search, steering_inequality_value,
    LhsSearchConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RESOURCE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } | Error::LpStall(_) => EXIT_RESOURCE,
        _ => EXIT_INPUT,
    }
}

#[derive(Parser, Debug)]
#[command(name = "eapm", version, about = "Prepare-and-measure correlations with entanglement assistance")]
pub struct Cli {
    /// Where to write the run manifest (default: `<command>.manifest.json`).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct LpFlags {
    /// Simplex pivot tolerance.
    #[arg(long, default_value_t = 1e-11)]
    pub pivot_tol: f64,
    /// Phase-one feasibility tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub feas_tol: f64,
}

impl LpFlags {
    fn options(&self) -> SimplexOptions {
        SimplexOptions { pivot_tol: self.pivot_tol, feasibility_tol: self.feas_tol, ..Default::default() }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SeesawFlags {
    /// Assistance dimension D.
    #[arg(long, default_value_t = 2)]
    pub assist_dim: usize,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop a restart when a round gains less than this.
    #[arg(long, default_value_t = 1e-7)]
    pub eps: f64,
    #[arg(long, default_value_t = 500)]
    pub max_rounds: usize,
}

impl SeesawFlags {
    fn config(&self) -> SeesawConfig {
        SeesawConfig {
            assist_dim: self.assist_dim,
            restarts: self.restarts,
            max_rounds: self.max_rounds,
            convergence_eps: self.eps,
            seed: self.seed,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyKind {
    EaClassical,
    EaQuantum,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate the vertices of a classical polytope as CSV.
    Vertices {
        /// Scenario `d,nX,nY,nB`.
        #[arg(long)]
        scenario: Scenario,
        /// Maximum number of raw strategies to enumerate.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        /// CSV destination.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Test whether a behavior file lies in the classical polytope.
    Membership {
        #[arg(long)]
        behavior: PathBuf,
        #[command(flatten)]
        lp: LpFlags,
    },
    /// Maximize a functional over the classical polytope.
    Maximize {
        #[arg(long)]
        functional: PathBuf,
        #[arg(long)]
        scenario: Option<Scenario>,
    },
    /// Check validity and facetness of an inequality file.
    Facet {
        #[arg(long)]
        functional: PathBuf,
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Overrides the `bound` line of the file.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// See-saw maximization over assisted classical strategies.
    Seesaw {
        #[arg(long)]
        functional: PathBuf,
        #[arg(long)]
        scenario: Option<Scenario>,
        #[command(flatten)]
        opts: SeesawFlags,
    },
    /// Classical bound, facet check and assisted violation for F_2.
    ReproduceF2 {
        #[command(flatten)]
        opts: SeesawFlags,
    },
    /// Bounds and the embedded violation for F_d.
    ReproduceFd {
        #[arg(long)]
        d: usize,
        /// Stored `(2; 3,1,4)` behavior to embed; found by see-saw if absent.
        #[arg(long)]
        behavior: Option<PathBuf>,
        #[command(flatten)]
        opts: SeesawFlags,
    },
    /// Dense-coding lift of an assisted classical strategy file.
    LiftDenseCoding {
        #[arg(long)]
        strategy: PathBuf,
        /// Destination for the lifted strategy.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Teleportation lift of an assisted quantum strategy file.
    LiftTeleport {
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Classical model from preparations and a mother POVM.
    ClassicalizeMother {
        #[arg(long)]
        input: PathBuf,
    },
    /// LHS search, steering inequality and classicality of the assisted behavior.
    SteerCheck {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        lhs_tol: f64,
        #[arg(long, default_value_t = 100_000)]
        lhs_iters: usize,
    },
    /// Write a random strategy file.
    RandomStrategy {
        #[arg(long, value_enum)]
        kind: StrategyKind,
        #[arg(long)]
        scenario: Scenario,
        #[arg(long, default_value_t = 2)]
        assist_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Vertices { .. } => "vertices",
            Command::Membership { .. } => "membership",
            Command::Maximize { .. } => "maximize",
            Command::Facet { .. } => "facet",
            Command::Seesaw { .. } => "seesaw",
            Command::ReproduceF2 { .. } => "reproduce-f2",
            Command::ReproduceFd { .. } => "reproduce-fd",
            Command::LiftDenseCoding { .. } => "lift-dense-coding",
            Command::LiftTeleport { .. } => "lift-teleport",
            Command::ClassicalizeMother { .. } => "classicalize-mother",
            Command::SteerCheck { .. } => "steer-check",
            Command::RandomStrategy { .. } => "random-strategy",
        }
    }
}

/// Provenance record written by every command.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub wall_time: f64,
    pub exit_code: i32,
    pub error: Option<String>,
    pub version: String,
}

impl RunManifest {
    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    fn tol(&mut self, name: &str, v: f64) {
        self.tolerances.insert(name.to_string(), v);
    }
}

/// A strategy together with the scenario and assistance it is meant for.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyFile {
    EaClassical { scenario: Scenario, assist_dim: usize, strategy: EAClassicalStrategy },
    EaQuantum { scenario: Scenario, assist_dim: usize, strategy: EAQuantumStrategy },
}

impl StrategyFile {
    pub fn behavior(&self) -> Result<Behavior> {
        match self {
            StrategyFile::EaClassical { scenario, assist_dim, strategy } => {
                behavior_of_ea_classical(scenario, *assist_dim, strategy)
            }
            StrategyFile::EaQuantum { scenario, assist_dim, strategy } => {
                behavior_of_ea_quantum(scenario, *assist_dim, strategy)
            }
        }
    }
}

/// Preparations and a joint measurement for `classicalize-mother`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MotherInput {
    pub scenario: Scenario,
    pub states: Vec<DensityMatrix>,
    pub mother: MotherPovm,
}

/// Shared state and measurements for `steer-check`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SteerInput {
    pub state: DensityMatrix,
    pub alice_povms: Vec<Povm>,
    /// `bob_povms[a][y]`; when present the assisted behavior is checked too.
    #[serde(default)]
    pub bob_povms: Option<Vec<Vec<Povm>>>,
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Optional functional evaluated on the assisted behavior.
    #[serde(default)]
    pub functional: Option<LinearFunctional>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_functional(path: &Path, scenario: Option<Scenario>) -> Result<(LinearFunctional, Option<f64>)> {
    LinearFunctional::from_inequality_text(&read_text(path)?, scenario)
}

/// Classical bound, facet check, assisted see-saw and a no-assistance control for `F_2`.
pub fn reproduce_f2(cfg: &SeesawConfig) -> Result<Value> {
    let f = f2_functional();
    let vs = enumerate_vertices(&f.scenario)?;
    let (classical_max, _) = max_functional_classical(&vs, &f)?;
    let facet = verify_facet(&vs, &f, 4.0)?;
    let report = seesaw_maximize(&f, cfg)?;
    let control = seesaw_maximize(&f, &SeesawConfig { assist_dim: 1, restarts: cfg.restarts.min(10), ..cfg.clone() })?;
    let p = behavior_of_ea_classical(&f.scenario, cfg.assist_dim, &report.best_strategy)?;
    let m = membership_with(&vs, &p, &SimplexOptions::default())?;
    Ok(json!({
        "vertex_count": vs.len(),
        "classical_max": classical_max,
        "facet": facet,
        "seesaw_value": report.best_value,
        "gap": report.best_value - classical_max,
        "control_value_no_assistance": control.best_value,
        "behavior_is_classical": m.feasible,
        "separation_gap": if m.feasible { 0.0 } else { m.separation_gap() },
        "per_restart_values": report.per_restart_values,
        "monotonicity_violations": report.monotonicity_violations,
        "behavior": p,
        "best_strategy": report.best_strategy,
    }))
}

/// `F_d` numbers: classical strategy, brute force for small `d`, and the embedded violation.
pub fn reproduce_fd(d: usize, p_prime: Option<Behavior>, cfg: &SeesawConfig) -> Result<Value> {
    if !(2..=6).contains(&d) {
        return Err(Error::InvalidScenario(format!("d must lie in 2..=6, got {d}")));
    }
    let f = fd_functional(d)?;
    let strat = fd_optimal_classical_strategy(d)?;
    let strategy_value = evaluate(&f, &behavior_of_deterministic(&f.scenario, &strat)?)?;
    let brute_force = if d <= 3 {
        let vs = enumerate_vertices(&f.scenario)?;
        Some(max_functional_classical(&vs, &f)?.0)
    } else {
        None
    };
    let p_prime = match p_prime {
        Some(p) => p,
        None => {
            let f2 = f2_functional();
            let rep = seesaw_maximize(&f2, cfg)?;
            behavior_of_ea_classical(&f2.scenario, cfg.assist_dim, &rep.best_strategy)?
        }
    };
    let f2_value = evaluate(&f2_functional(), &p_prime)?;
    let mut out = json!({
        "d": d,
        "classical_strategy_value": strategy_value,
        "brute_force_max": brute_force,
        "classical_max_oracle": classical_maximum(&f),
        "f2_value_of_p_prime": f2_value,
    });
    if d >= 3 {
        let pstar = embed_pstar(d, &p_prime)?;
        let value = evaluate(&f, &pstar)?;
        let m = membership_generated(&pstar, &SimplexOptions::default(), 100_000)?;
        out["pstar_value"] = json!(value);
        out["pstar_gap"] = json!(value - 2.0 * d as f64);
        out["pstar_is_classical"] = json!(m.feasible);
        out["separation_gap"] = json!(if m.feasible { 0.0 } else { m.separation_gap() });
    }
    Ok(out)
}

fn seesaw_summary(report: &SeesawReport, f: &LinearFunctional) -> Value {
    let classical = classical_maximum(f);
    json!({
        "best_value": report.best_value,
        "classical_max": classical,
        "gap": report.best_value - classical,
        "best_restart": report.best_restart,
        "per_restart_values": report.per_restart_values,
        "rounds_used": report.rounds_used,
        "monotonicity_violations": report.monotonicity_violations,
        "max_completeness_error": report.max_completeness_error,
        "best_strategy": report.best_strategy,
    })
}

fn table_deviation(p: &Behavior, q: &Behavior) -> f64 {
    p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn run_command(cmd: &Command, man: &mut RunManifest) -> Result<Value> {
    match cmd {
        Command::Vertices { scenario, cap, csv } => {
            let vs = enumerate_vertices_with_cap(scenario, *cap)?;
            if let Some(path) = csv {
                fs::write(path, vs.to_csv())?;
                man.output(path);
            }
            Ok(json!({ "scenario": scenario, "raw_strategies": vs.raw_count.to_string(), "vertex_count": vs.len() }))
        }
        Command::Membership { behavior, lp } => {
            man.input(behavior);
            man.tol("pivot_tol", lp.pivot_tol);
            man.tol("feas_tol", lp.feas_tol);
            let q = Behavior::from_text(&read_text(behavior)?)?;
            let m = match enumerate_vertices_with_cap(&q.scenario(), crate::polytope::ENUMERATION_LIMIT) {
                Ok(vs) => membership_with(&vs, &q, &lp.options())?,
                Err(Error::CapExceeded { .. }) => membership_generated(&q, &lp.options(), 100_000)?,
                Err(e) => return Err(e),
            };
            Ok(json!({
                "feasible": m.feasible,
                "residual": m.residual,
                "support": m.support,
                "hyperplane": m.hyperplane,
                "hyperplane_value": m.hyperplane_value,
                "hyperplane_bound": m.hyperplane_bound,
                "separation_gap": if m.feasible { 0.0 } else { m.separation_gap() },
            }))
        }
        Command::Maximize { functional, scenario } => {
            man.input(functional);
            let (f, _) = read_functional(functional, *scenario)?;
            let (value, strat) = crate::polytope::best_deterministic_response(&f.scenario, &f.coeffs);
            Ok(json!({ "classical_max": value, "argmax": strat }))
        }
        Command::Facet { functional, scenario, bound } => {
            man.input(functional);
            let (f, file_bound) = read_functional(functional, *scenario)?;
            let bound = bound
                .or(file_bound)
                .ok_or_else(|| Error::Parse("no bound given in file or on the command line".into()))?;
            let vs = enumerate_vertices(&f.scenario)?;
            Ok(json!(verify_facet(&vs, &f, bound)?))
        }
        Command::Seesaw { functional, scenario, opts } => {
            man.input(functional);
            man.seed = Some(opts.seed);
            man.tol("eps", opts.eps);
            let (f, _) = read_functional(functional, *scenario)?;
            let report = seesaw_maximize(&f, &opts.config())?;
            Ok(seesaw_summary(&report, &f))
        }
        Command::ReproduceF2 { opts } => {
            man.seed = Some(opts.seed);
            man.tol("eps", opts.eps);
            reproduce_f2(&opts.config())
        }
        Command::ReproduceFd { d, behavior, opts } => {
            man.seed = Some(opts.seed);
            man.tol("eps", opts.eps);
            let p = match behavior {
                Some(path) => {
                    man.input(path);
                    Some(Behavior::from_text(&read_text(path)?)?)
                }
                None => None,
            };
            reproduce_fd(*d, p, &opts.config())
        }
        Command::LiftDenseCoding { strategy, output } => {
            man.input(strategy);
            let StrategyFile::EaClassical { scenario, assist_dim, strategy: strat } = read_json(strategy)? else {
                return Err(Error::Parse("dense-coding lift expects an ea-classical strategy".into()));
            };
            let original = behavior_of_ea_classical(&scenario, assist_dim, &strat)?;
            let (ls, lifted) = dense_coding_lift(&scenario, assist_dim, &strat)?;
            let file = StrategyFile::EaQuantum { scenario: ls, assist_dim: assist_dim * ls.d, strategy: lifted };
            let deviation = table_deviation(&original, &file.behavior()?);
            if let Some(path) = output {
                write_json(path, &file)?;
                man.output(path);
            }
            Ok(json!({ "input_scenario": scenario, "output_scenario": ls, "max_abs_deviation": deviation }))
        }
        Command::LiftTeleport { strategy, output } => {
            man.input(strategy);
            let StrategyFile::EaQuantum { scenario, assist_dim, strategy: strat } = read_json(strategy)? else {
                return Err(Error::Parse("teleportation lift expects an ea-quantum strategy".into()));
            };
            let original = behavior_of_ea_quantum(&scenario, assist_dim, &strat)?;
            let (ls, lifted) = teleportation_lift(&scenario, assist_dim, &strat)?;
            let file = StrategyFile::EaClassical { scenario: ls, assist_dim: assist_dim * scenario.d, strategy: lifted };
            let deviation = table_deviation(&original, &file.behavior()?);
            if let Some(path) = output {
                write_json(path, &file)?;
                man.output(path);
            }
            Ok(json!({ "input_scenario": scenario, "output_scenario": ls, "max_abs_deviation": deviation }))
        }
        Command::ClassicalizeMother { input } => {
            man.input(input);
            let inp: MotherInput = read_json(input)?;
            let s = inp.scenario;
            let marginals = (0..s.n_y).map(|y| inp.mother.marginal(y)).collect::<Result<Vec<_>>>()?;
            let target = prepare_measure_behavior(&inp.states, &marginals, &s)?;
            let model = mother_povm_classicalize(&inp.states, &inp.mother, &s)?;
            let deviation = model_deviation(&s, &model, &target)?;
            Ok(json!({ "max_abs_deviation": deviation, "hidden_variables": model.weights.len(), "model": model }))
        }
        Command::SteerCheck { input, lhs_tol, lhs_iters } => {
            man.input(input);
            man.tol("lhs_tol", *lhs_tol);
            let inp: SteerInput = read_json(input)?;
            let asm = assemblage_from_state(&inp.state, &inp.alice_povms)?;
            let cfg = LhsSearchConfig { max_iterations: *lhs_iters, tolerance: *lhs_tol, ..Default::default() };
            let search = lhs_search(&asm, &cfg)?;
            let inequality = steering_inequality_value(&asm).ok();
            let mut out = json!({
                "lhs_found": search.found(),
                "residual": search.residual,
                "iterations": search.iterations,
                "inequality_value": inequality,
                "inequality_bound": inequality.map(|_| 2f64.sqrt()),
            });
            if let (Some(bob), Some(s)) = (&inp.bob_povms, inp.scenario) {
                let rep = ea_behavior_is_classical_when_unsteerable(
                    &inp.state,
                    &inp.alice_povms,
                    bob,
                    &s,
                    inp.functional.as_ref(),
                )?;
                let strat = EAClassicalStrategy {
                    shared_state: inp.state.clone(),
                    alice_povms: inp.alice_povms.clone(),
                    bob_povms: bob.clone(),
                };
                let ea = behavior_of_ea_classical(&s, inp.alice_povms[0].dim(), &strat)?;
                out["classical_membership"] = json!(classical_membership(&ea)?.feasible);
                out["report"] = json!(rep);
            } else {
                out["classical_membership"] = Value::Null;
            }
            Ok(out)
        }
        Command::RandomStrategy { kind, scenario, assist_dim, seed, output } => {
            man.seed = Some(*seed);
            let (s, dim) = (*scenario, *assist_dim);
            let file = random_strategy_file(*kind, s, dim, *seed);
            write_json(output, &file)?;
            man.output(output);
            Ok(json!({ "kind": format!("{kind:?}"), "scenario": s, "assist_dim": dim }))
        }
    }
}

/// Random strategy of the given kind; the same seed gives the same file.
pub fn random_strategy_file(kind: StrategyKind, s: Scenario, dim: usize, seed: u64) -> StrategyFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        StrategyKind::EaClassical => StrategyFile::EaClassical {
            scenario: s,
            assist_dim: dim,
            strategy: EAClassicalStrategy {
                shared_state: random_density(dim * dim, 2, &mut rng),
                alice_povms: (0..s.n_x).map(|_| random_povm(dim, s.d, &mut rng)).collect(),
                bob_povms: (0..s.d).map(|_| (0..s.n_y).map(|_| random_povm(dim, s.n_b, &mut rng)).collect()).collect(),
            },
        },
        StrategyKind::EaQuantum => StrategyFile::EaQuantum {
            scenario: s,
            assist_dim: dim,
            strategy: EAQuantumStrategy {
                shared_state: random_density(dim * dim, 2, &mut rng),
                channels: (0..s.n_x).map(|_| random_channel(dim, s.d, 2, &mut rng)).collect(),
                measurements: (0..s.n_y).map(|_| random_povm(s.d * dim, s.n_b, &mut rng)).collect(),
            },
        },
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let start = Instant::now();
    let mut man = RunManifest {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        ..Default::default()
    };
    let result = run_command(&cli.command, &mut man).and_then(|report| {
        let text = serde_json::to_string_pretty(&report)?;
        if let Some(path) = &cli.out {
            fs::write(path, &text)?;
            man.output(path);
        }
        println!("{text}");
        Ok(())
    });
    let code = match &result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            man.error = Some(e.to_string());
            exit_code(e)
        }
    };
    man.exit_code = code;
    man.wall_time = start.elapsed().as_secs_f64();
    let path = cli.manifest.clone().unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", man.command)));
    if let Err(e) = write_json(&path, &man) {
        eprintln!("warning: could not write manifest {}: {e}", path.display());
    }
    code
}
