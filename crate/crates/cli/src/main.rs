//! `qecforge`: train agents that grow surface codes, count and explore the
//! code space, and estimate logical error rates.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;
use thiserror::Error;

use qecforge::agent::{AgentError, ClipNetwork};
use qecforge::decoding::{DecodeError, Sector};
use qecforge::environment::{self, EnvError, LearningCurve, ScenarioConfig};
use qecforge::estimation::{self, EstimateError, EstimatorConfig, FailureConvention, FailureCriterion, SectorScope};
use qecforge::noise::{scenario_profile, NoiseError, NoiseProfile};
use qecforge::search;
use qecforge::{Action, CodeLattice, LatticeError, Side};

use manifest::RunManifest;

const MAX_CENSUS_DEPTH: usize = 4;

#[derive(Parser)]
#[command(
    name = "qecforge",
    version,
    about = "Adaptive surface-code memories driven by a learning agent"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count action sequences of each length from the root lattice.
    Census {
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomly branch out from the root, estimating every visited code.
    Explore {
        #[arg(long, default_value_t = 0.03)]
        p_expl: f64,
        #[arg(long, default_value_t = 8)]
        radius: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 10_000)]
        estimator_trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an ensemble of agents on a scenario.
    Train(TrainArgs),
    /// Estimate the logical error rate of a lattice file.
    Estimate {
        lattice: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumerate all erasures instead of sampling (at most 20 noisy qubits).
        #[arg(long)]
        exact: bool,
    },
    /// Compare the erasure pipeline with Union-Find on the root's neighbourhood.
    DecodeBench {
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, value_enum, default_value_t = SectorArg::Z)]
        sector: SectorArg,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Random depth-2 codes added to the root and its children.
        #[arg(long, default_value_t = 0)]
        depth2_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a lattice file: a grid, optionally grown by moves.
    Lattice {
        #[command(flatten)]
        grid: Grid,
        /// Moves as `d,v,p1,p2` separated by `;`.
        #[arg(long)]
        actions: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Copy)]
struct Grid {
    #[arg(long, default_value_t = 3)]
    rows: usize,
    #[arg(long, default_value_t = 3)]
    cols: usize,
}

#[derive(Args, Clone)]
struct NoiseArgs {
    /// Library profile name or path to a TOML noise spec.
    #[arg(long, default_value = "dephasing-0.10")]
    noise: String,
    #[arg(long, value_enum, default_value_t = ScopeArg::Any)]
    scope: ScopeArg,
    #[arg(long, value_enum, default_value_t = CriterionArg::Covered)]
    criterion: CriterionArg,
}

#[derive(Args)]
struct TrainArgs {
    /// Scenario name or path to a scenario TOML file.
    scenario: String,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    estimator_trials: Option<u64>,
    #[arg(long)]
    desk_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Network snapshot every agent starts from.
    #[arg(long)]
    pretrained: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Any,
    ZOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Covered,
    Residual,
}

#[derive(Clone, Copy, ValueEnum)]
enum SectorArg {
    X,
    Z,
}

impl NoiseArgs {
    fn profile(&self) -> Result<NoiseProfile, CliError> {
        let path = Path::new(&self.noise);
        if path.is_file() {
            Ok(NoiseProfile::from_toml(&read(path)?)?)
        } else {
            Ok(scenario_profile(&self.noise)?)
        }
    }

    fn convention(&self) -> FailureConvention {
        FailureConvention::new(
            match self.scope {
                ScopeArg::Any => SectorScope::Any,
                ScopeArg::ZOnly => SectorScope::ZOnly,
            },
            match self.criterion {
                CriterionArg::Covered => FailureCriterion::Covered,
                CriterionArg::Residual => FailureCriterion::Residual,
            },
        )
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("{0}")]
    SizeGuard(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Estimate(EstimateError::TooLarge { .. }) | CliError::SizeGuard(_) => 4,
            CliError::Env(EnvError::Estimate(EstimateError::TooLarge { .. })) => 4,
            CliError::Lattice(LatticeError::Parse { .. }) => 2,
            CliError::Lattice(_) | CliError::Decode(_) => 3,
            CliError::Agent(AgentError::Snapshot(_)) => 2,
            CliError::Agent(_) => 3,
            CliError::Env(EnvError::Lattice(_) | EnvError::Agent(_)) => 3,
            _ => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows always serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

fn init_threads() {
    if let Some(n) = std::env::var("QECFORGE_THREADS").ok().and_then(|v| v.parse().ok()) {
        // only fails if a pool already exists, in which case it is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Census { depth, grid, out } => census(depth, grid, out),
        Command::Explore {
            p_expl,
            radius,
            noise,
            estimator_trials,
            seed,
            grid,
            out,
        } => explore(p_expl, radius, &noise, estimator_trials, seed, grid, out),
        Command::Train(args) => train(args),
        Command::Estimate {
            lattice,
            noise,
            trials,
            seed,
            exact,
        } => estimate(&lattice, &noise, trials, seed, exact),
        Command::DecodeBench {
            p,
            sector,
            trials,
            depth2_samples,
            seed,
            out,
        } => decode_bench(p, sector, trials, depth2_samples, seed, out),
        Command::Lattice { grid, actions, out } => lattice(grid, actions.as_deref(), out),
    }
}

/// Writes `name` into `out` if given, else prints it.
fn emit(out: Option<&Path>, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(dir) => written.push(write(&dir.join(name), text)?),
        None => print!("{text}"),
    }
    Ok(())
}

fn census(depth: usize, grid: Grid, out: Option<PathBuf>) -> Result<(), CliError> {
    if depth > MAX_CENSUS_DEPTH {
        return Err(CliError::SizeGuard(format!(
            "census depth {depth} exceeds the limit of {MAX_CENSUS_DEPTH}"
        )));
    }
    let start = Instant::now();
    let root = CodeLattice::build_torus_grid(grid.rows, grid.cols)?;
    #[derive(Serialize)]
    struct Row {
        depth: usize,
        count: u64,
    }
    let rows: Vec<Row> = search::census(&root, depth)
        .into_iter()
        .enumerate()
        .map(|(depth, count)| Row { depth, count })
        .collect();
    let mut written = Vec::new();
    emit(out.as_deref(), "census.csv", &to_csv(&rows), &mut written)?;
    if let Some(dir) = out {
        let config = format!("census depth={depth} rows={} cols={}", grid.rows, grid.cols);
        RunManifest::new("census", &config, 0)
            .finish(&dir, written, start.elapsed())
            .map_err(|source| CliError::Io { path: dir, source })?;
    }
    Ok(())
}

fn explore(
    p_expl: f64,
    radius: usize,
    noise: &NoiseArgs,
    estimator_trials: u64,
    seed: u64,
    grid: Grid,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    if !(p_expl > 0.0 && p_expl <= 1.0) {
        return Err(CliError::Config(format!("p_expl must lie in (0, 1], got {p_expl}")));
    }
    let start = Instant::now();
    let root = CodeLattice::build_torus_grid(grid.rows, grid.cols)?;
    let profile = noise.profile()?;
    let cfg = EstimatorConfig {
        trials: estimator_trials,
        convention: noise.convention(),
        stop_at: None,
    };
    let nodes = search::explore(&root, &profile, &cfg, p_expl, radius, seed)?;
    #[derive(Serialize)]
    struct Row {
        node_id: usize,
        parent_id: Option<usize>,
        depth: usize,
        action: String,
        n_edges: usize,
        p_l: f64,
        stderr: f64,
    }
    let rows: Vec<Row> = nodes
        .iter()
        .map(|n| Row {
            node_id: n.id,
            parent_id: n.parent,
            depth: n.depth,
            action: n.action.map(|a| a.to_string()).unwrap_or_default(),
            n_edges: n.n_edges,
            p_l: n.p_l,
            stderr: n.stderr,
        })
        .collect();
    let mut written = Vec::new();
    emit(out.as_deref(), "nodes.csv", &to_csv(&rows), &mut written)?;
    if let Some(dir) = out {
        let config = format!(
            "explore p_expl={p_expl} radius={radius} trials={estimator_trials} rows={} cols={} convention={:?}\n{}",
            grid.rows,
            grid.cols,
            cfg.convention,
            profile.to_toml()
        );
        RunManifest::new("explore", &config, seed)
            .finish(&dir, written, start.elapsed())
            .map_err(|source| CliError::Io { path: dir, source })?;
    }
    Ok(())
}

fn load_scenario(args: &TrainArgs) -> Result<ScenarioConfig, CliError> {
    let path = Path::new(&args.scenario);
    let mut cfg = if path.is_file() {
        ScenarioConfig::from_toml(&read(path)?)?
    } else {
        ScenarioConfig::preset(&args.scenario)?
    };
    if args.desk_scale {
        cfg = cfg.desk_scale();
    }
    if let Some(n) = args.agents {
        cfg.agents = n;
    }
    if let Some(n) = args.trials {
        cfg.trials = n;
    }
    if let Some(n) = args.estimator_trials {
        cfg.stages.iter_mut().for_each(|s| s.estimator_trials = n);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Lattice reached by replaying moves from the root.
fn replay(root: &CodeLattice, actions: impl IntoIterator<Item = Action>) -> Result<CodeLattice, CliError> {
    let mut lat = root.clone();
    for a in actions {
        lat = lat.apply_action(&a)?;
    }
    Ok(lat)
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = load_scenario(&args)?;
    let warm = match &args.pretrained {
        Some(path) => Some(ClipNetwork::from_snapshot(&read(path)?)?),
        None => None,
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
    let runs = environment::run_experiment(&cfg, warm.as_ref())?;
    let curve = LearningCurve::from_runs(&runs);
    let window = (cfg.trials as usize / 10).max(1);

    let mut written = vec![
        write(&out.join("scenario.toml"), &cfg.to_toml())?,
        write(&out.join("curve.csv"), &curve.to_csv())?,
    ];
    #[derive(Serialize)]
    struct AgentRow {
        agent: usize,
        seed: u64,
        rewarded_trials: usize,
        late_mean_qubits: f64,
        percepts: usize,
    }
    let rows: Vec<AgentRow> = runs
        .iter()
        .enumerate()
        .map(|(agent, r)| AgentRow {
            agent,
            seed: r.seed,
            rewarded_trials: r.records.iter().filter(|t| t.rewarded()).count(),
            late_mean_qubits: r.late_mean_qubits(window),
            percepts: r.network.n_percepts(),
        })
        .collect();
    written.push(write(&out.join("agents.csv"), &to_csv(&rows))?);

    let best = environment::best_agents(&runs, window, 3);
    let root = CodeLattice::build_torus_grid(cfg.rows, cfg.cols)?;
    for (rank, &a) in best.iter().enumerate() {
        let mut net = runs[a].network.clone();
        written.push(write(&out.join(format!("best_agent_{rank}.json")), &net.snapshot())?);
        if let Some(last) = runs[a].records.iter().rev().find(|r| r.rewarded()) {
            let lat = replay(&root, last.actions().copied())?;
            written.push(write(&out.join(format!("best_code_{rank}.lattice")), &lat.to_text())?);
        }
    }

    let n = curve.points.len();
    let head = n.min(50);
    println!(
        "{}: {} agents x {} trials; mean qubits first {head}: {:.2}, last {window}: {:.2}; reward rate last {window}: {:.3}",
        cfg.name,
        cfg.agents,
        cfg.trials,
        curve.window_mean(0..head),
        curve.window_mean(n - window.min(n)..n),
        curve.window_reward_rate(n - window.min(n)..n),
    );
    let config = cfg.to_toml()
        + &args
            .pretrained
            .as_ref()
            .map(|p| format!("pretrained = {:?}\n", p))
            .unwrap_or_default();
    let manifest = RunManifest::new("train", &config, cfg.seed)
        .finish(&out, written, start.elapsed())
        .map_err(|source| CliError::Io {
            path: out.clone(),
            source,
        })?;
    println!("outputs in {}", manifest.parent().unwrap_or(&out).display());
    Ok(())
}

fn estimate(lattice: &Path, noise: &NoiseArgs, trials: u64, seed: u64, exact: bool) -> Result<(), CliError> {
    let lat = CodeLattice::from_text(&read(lattice)?)?;
    let profile = noise.profile()?;
    let convention = noise.convention();
    if exact {
        let rate = estimation::exact_logical_rate(&lat, &profile, convention)?;
        println!("exact P_L = {rate:.17}");
        return Ok(());
    }
    let table = profile.resolve(&lat)?;
    let cfg = EstimatorConfig {
        trials,
        convention,
        stop_at: None,
    };
    let est = estimation::estimate_with_table(&lat, &table, &cfg, seed)?;
    println!(
        "P_L = {:.6} ± {:.6} ({} failures / {} trials, seed {})",
        est.p_hat, est.stderr, est.failures, est.trials, est.seed
    );
    Ok(())
}

fn decode_bench(
    p: f64,
    sector: SectorArg,
    trials: u64,
    depth2_samples: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let start = Instant::now();
    let sector = match sector {
        SectorArg::X => Sector::X,
        SectorArg::Z => Sector::Z,
    };
    let profile = match sector {
        Sector::Z => NoiseProfile::uniform(0.0, p),
        Sector::X => NoiseProfile::uniform(p, 0.0),
    };
    let root = CodeLattice::build_torus_grid(3, 3)?;
    let mut codes = vec![root.clone()];
    for a in root.enumerate_actions() {
        codes.push(root.apply_action(&a)?);
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..depth2_samples {
        let first = root.enumerate_actions();
        let child = root.apply_action(&first[rng.gen_range(0..first.len())])?;
        let second = child.enumerate_actions();
        codes.push(child.apply_action(&second[rng.gen_range(0..second.len())])?);
    }
    #[derive(Serialize)]
    struct Row {
        code_id: usize,
        n_edges: usize,
        decoder: &'static str,
        sector: String,
        p: f64,
        trials: u64,
        failures: u64,
        rate: f64,
        stderr: f64,
    }
    let erasure_cfg = EstimatorConfig::new(trials);
    let mut rows = Vec::new();
    for (id, lat) in codes.iter().enumerate() {
        let table = profile.resolve(lat)?;
        let erasure = estimation::estimate_with_table(lat, &table, &erasure_cfg, seed ^ id as u64)?;
        let uf = estimation::estimate_union_find(lat, &table, sector, trials, seed ^ id as u64)?;
        for (decoder, est) in [("peeling-erasure", erasure), ("union-find", uf)] {
            rows.push(Row {
                code_id: id,
                n_edges: lat.n_edges(),
                decoder,
                sector: sector.to_string(),
                p,
                trials: est.trials,
                failures: est.failures,
                rate: est.p_hat,
                stderr: est.stderr,
            });
        }
    }
    let mut written = Vec::new();
    emit(out.as_deref(), "decode_bench.csv", &to_csv(&rows), &mut written)?;
    if let Some(dir) = out {
        let config = format!("decode-bench p={p} sector={sector} trials={trials} depth2={depth2_samples}");
        RunManifest::new("decode-bench", &config, seed)
            .finish(&dir, written, start.elapsed())
            .map_err(|source| CliError::Io { path: dir, source })?;
    }
    Ok(())
}

fn parse_actions(text: &str) -> Result<Vec<Action>, CliError> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let nums: Vec<u32> = item
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(format!("bad move `{item}`: {e}")))?;
            match nums[..] {
                [d, v, p1, p2] => {
                    let side = Side::from_flag(d as u8)
                        .filter(|_| d <= 1)
                        .ok_or_else(|| CliError::Config(format!("bad side flag {d} in `{item}`")))?;
                    Ok(Action::new(side, v, p1, p2))
                }
                _ => Err(CliError::Config(format!("move `{item}` needs four numbers d,v,p1,p2"))),
            }
        })
        .collect()
}

fn lattice(grid: Grid, actions: Option<&str>, out: Option<PathBuf>) -> Result<(), CliError> {
    let root = CodeLattice::build_torus_grid(grid.rows, grid.cols)?;
    let lat = replay(&root, parse_actions(actions.unwrap_or(""))?)?;
    let (x, z) = lat.stabilizer_counts();
    eprintln!(
        "{} qubits ({} added), {x} X- and {z} Z-stabilizers, distance Z {} / X {}",
        lat.n_edges(),
        lat.qubits_added(),
        lat.code_distance(Side::Primal),
        lat.code_distance(Side::Dual),
    );
    match out {
        Some(path) => {
            write(&path, &lat.to_text())?;
        }
        None => print!("{}", lat.to_text()),
    }
    Ok(())
}
