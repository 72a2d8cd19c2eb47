//! The learning environment: trials, rewards, scenarios and ensembles.
//!
//! A trial starts from the root lattice. After every move the logical
//! error rate is re-estimated; the agent is rewarded as soon as it drops
//! below the threshold, and the trial fails once the qubit budget is
//! spent.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentError, ClipNetwork, PsParams};
use crate::estimation::{estimate_with_table, EstimateCache, EstimateError, EstimatorConfig, FailureConvention};
use crate::noise::{scenario_profile, NoiseError, NoiseProfile};
use crate::topology::{Action, CodeLattice, LatticeError, PerceptDigest};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// A noise profile given inline or by library name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseRef {
    Named(String),
    Inline(NoiseProfile),
}

impl NoiseRef {
    pub fn profile(&self) -> Result<NoiseProfile, EnvError> {
        match self {
            NoiseRef::Named(name) => Ok(scenario_profile(name)?),
            NoiseRef::Inline(p) => Ok(p.clone()),
        }
    }
}

/// Settings in force from trial `start` onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub start: u64,
    pub noise: NoiseRef,
    pub threshold: f64,
    pub estimator_trials: u64,
    pub agent: PsParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub qubit_budget: usize,
    pub trials: u64,
    pub agents: usize,
    pub seed: u64,
    #[serde(default)]
    pub convention: FailureConvention,
    /// Stop estimates early once they are certain to miss the threshold.
    #[serde(default = "yes")]
    pub early_stop: bool,
    /// Reuse the first estimate of every code an agent revisits.
    #[serde(default)]
    pub cache_estimates: bool,
    /// Sorted by `start`; the first stage starts at trial 0.
    pub stages: Vec<Stage>,
}

fn yes() -> bool {
    true
}

const FULL_AGENTS: usize = 60;
const FULL_TRIALS: u64 = 10_000;
const DESK_AGENTS: usize = 10;
const DESK_TRIALS: u64 = 2_000;
const DESK_ESTIMATOR_TRIALS: u64 = 100_000;

fn ps(eta: f64, gamma: f64, delta: f64) -> PsParams {
    PsParams {
        beta: 2.0,
        eta,
        gamma,
        delta,
        tau: 30,
        reset_glow: false,
    }
}

fn stage(start: u64, noise: &str, threshold: f64, estimator_trials: u64, agent: PsParams) -> Stage {
    Stage {
        start,
        noise: NoiseRef::Named(noise.to_string()),
        threshold,
        estimator_trials,
        agent,
    }
}

/// Names accepted by [`ScenarioConfig::preset`].
pub const SCENARIOS: &[&str] = &[
    "dephasing",
    "symmetric",
    "correlated",
    "threshold-drop",
    "noise-shift",
    "noise-shift-direct",
    "pretrain",
    "transfer-plaquette",
    "transfer-raised-x",
];

impl ScenarioConfig {
    /// Built-in experiments at full scale.
    pub fn preset(name: &str) -> Result<Self, EnvError> {
        let fast = ps(0.05, 0.01, 0.01);
        let slow = ps(0.05, 0.0006, 0.001);
        let (trials, stages) = match name {
            "dephasing" => (FULL_TRIALS, vec![stage(0, "dephasing-0.10", 1e-3, 1_000_000, fast)]),
            "symmetric" => (
                FULL_TRIALS,
                vec![stage(0, "symmetric-0.09", 1e-3, 1_000_000, ps(0.01, 0.01, 0.01))],
            ),
            "correlated" => (FULL_TRIALS, vec![stage(0, "correlated-pair", 1e-3, 1_000_000, slow)]),
            "threshold-drop" => (
                FULL_TRIALS,
                vec![
                    stage(0, "dephasing-0.10", 1e-3, 1_000_000, fast),
                    stage(6_000, "dephasing-0.10", 2.5e-4, 4_000_000, ps(0.05, 0.0005, 0.001)),
                ],
            ),
            "noise-shift" => (
                FULL_TRIALS,
                vec![
                    stage(0, "dephasing-0.14", 1e-3, 1_000_000, slow),
                    stage(4_000, "dephasing-0.16", 1e-3, 1_000_000, slow),
                ],
            ),
            "noise-shift-direct" => (
                FULL_TRIALS - 4_000,
                vec![stage(0, "dephasing-0.16", 1e-3, 1_000_000, slow)],
            ),
            "pretrain" => (6_000, vec![stage(0, "dephasing-0.10", 1e-3, 1_000_000, fast)]),
            "transfer-plaquette" => (500, vec![stage(0, "faulty-plaquette", 1e-3, 1_000_000, slow)]),
            "transfer-raised-x" => (500, vec![stage(0, "raised-x", 1e-3, 1_000_000, slow)]),
            other => return Err(EnvError::UnknownScenario(other.to_string())),
        };
        Ok(ScenarioConfig {
            name: name.to_string(),
            rows: 3,
            cols: 3,
            qubit_budget: 50,
            trials,
            agents: if name == "noise-shift-direct" { 40 } else { FULL_AGENTS },
            seed: 0,
            convention: FailureConvention::FROZEN,
            early_stop: true,
            cache_estimates: false,
            stages,
        })
    }

    /// Shrinks the ensemble, trial count and estimator sample size to
    /// something a laptop finishes in hours; stage boundaries scale along.
    pub fn desk_scale(mut self) -> Self {
        let scale = |t: u64| t * DESK_TRIALS.min(self.trials) / self.trials;
        for s in &mut self.stages {
            s.start = scale(s.start);
            s.estimator_trials = s.estimator_trials.min(DESK_ESTIMATOR_TRIALS);
        }
        self.trials = self.trials.min(DESK_TRIALS);
        self.agents = self.agents.min(DESK_AGENTS);
        self.cache_estimates = true;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, EnvError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::Config(m.to_string()));
        if self.agents == 0 {
            return bad("at least one agent is required");
        }
        if self.trials == 0 {
            return bad("at least one trial is required");
        }
        if self.qubit_budget == 0 {
            return bad("qubit budget must be positive");
        }
        match self.stages.first() {
            None => return bad("no stages"),
            Some(s) if s.start != 0 => return bad("first stage must start at trial 0"),
            _ => {}
        }
        if self.stages.windows(2).any(|w| w[0].start >= w[1].start) {
            return bad("stage starts must increase");
        }
        for s in &self.stages {
            if !(0.0..=1.0).contains(&s.threshold) {
                return bad("threshold must lie in [0, 1]");
            }
            if s.estimator_trials == 0 {
                return bad("estimator trials must be positive");
            }
            s.noise.profile()?;
        }
        CodeLattice::build_torus_grid(self.rows, self.cols)?;
        Ok(())
    }

    fn stage_at(&self, trial: u64) -> usize {
        self.stages.iter().rposition(|s| s.start <= trial).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOutcome {
    Rewarded,
    BudgetExhausted,
    /// A code with no legal move was reached before the budget ran out.
    DeadEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub percept: PerceptDigest,
    pub action: Action,
    /// Estimate of the code the action was taken from.
    pub p_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub qubits_added: usize,
    pub outcome: TrialOutcome,
    pub final_p_l: f64,
    pub steps: Vec<StepRecord>,
}

impl TrialRecord {
    pub fn rewarded(&self) -> bool {
        self.outcome == TrialOutcome::Rewarded
    }

    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.steps.iter().map(|s| &s.action)
    }
}

/// Everything one trial needs that does not change within a stage.
pub struct TrialContext {
    root: CodeLattice,
    profile: NoiseProfile,
    profile_key: u64,
    estimator: EstimatorConfig,
    threshold: f64,
    budget: usize,
}

impl TrialContext {
    pub fn new(cfg: &ScenarioConfig, stage: &Stage) -> Result<Self, EnvError> {
        let profile = stage.noise.profile()?;
        Ok(TrialContext {
            root: CodeLattice::build_torus_grid(cfg.rows, cfg.cols)?,
            profile_key: EstimateCache::profile_key(&profile, cfg.convention),
            profile,
            estimator: EstimatorConfig {
                trials: stage.estimator_trials,
                convention: cfg.convention,
                stop_at: cfg.early_stop.then_some(stage.threshold),
            },
            threshold: stage.threshold,
            budget: cfg.qubit_budget,
        })
    }

    pub fn root(&self) -> &CodeLattice {
        &self.root
    }

    fn estimate(
        &self,
        lat: &CodeLattice,
        digest: PerceptDigest,
        rng: &mut impl RngCore,
        cache: Option<&mut EstimateCache>,
    ) -> Result<f64, EnvError> {
        let seed = rng.next_u64();
        let compute = || -> Result<_, EnvError> {
            let table = self.profile.resolve(lat)?;
            Ok(estimate_with_table(lat, &table, &self.estimator, seed)?)
        };
        let est = match cache {
            Some(cache) => cache.get_or_insert_with((digest, self.profile_key, self.estimator.trials), compute)?,
            None => compute()?,
        };
        Ok(est.p_hat)
    }
}

/// One episode: grow the root until the rate beats the threshold or the
/// budget is spent. The network receives one update per interaction.
pub fn run_trial<R: Rng>(
    ctx: &TrialContext,
    net: &mut ClipNetwork,
    rng: &mut R,
    mut cache: Option<&mut EstimateCache>,
) -> Result<TrialRecord, EnvError> {
    let trial = net.trials_completed();
    let mut lat = ctx.root.clone();
    let mut steps = Vec::new();
    let finish = |net: &mut ClipNetwork, lat: &CodeLattice, steps, outcome, p_l| {
        let rewarded = outcome == TrialOutcome::Rewarded;
        net.update(if rewarded { 1.0 } else { 0.0 });
        net.end_trial(rewarded);
        TrialRecord {
            trial,
            qubits_added: lat.qubits_added(),
            outcome,
            final_p_l: p_l,
            steps,
        }
    };
    loop {
        let digest = lat.canonical_percept().digest;
        let p_l = ctx.estimate(&lat, digest, rng, cache.as_deref_mut())?;
        if p_l < ctx.threshold {
            return Ok(finish(net, &lat, steps, TrialOutcome::Rewarded, p_l));
        }
        if lat.qubits_added() >= ctx.budget {
            return Ok(finish(net, &lat, steps, TrialOutcome::BudgetExhausted, p_l));
        }
        let i = match net.lookup(&digest) {
            Some(i) => i,
            None => {
                let actions = lat.enumerate_actions();
                if actions.is_empty() {
                    return Ok(finish(net, &lat, steps, TrialOutcome::DeadEnd, p_l));
                }
                net.perceive(digest, &actions)?
            }
        };
        let j = net.select_action(i, rng)?;
        let action = net.actions(i)?[j];
        lat = lat.apply_action(&action)?;
        net.update(0.0);
        steps.push(StepRecord {
            percept: digest,
            action,
            p_l,
        });
    }
}

/// One agent's full training history.
#[derive(Debug, Clone)]
pub struct AgentRun {
    pub seed: u64,
    pub records: Vec<TrialRecord>,
    pub network: ClipNetwork,
}

impl AgentRun {
    /// Mean qubits added over the last `window` trials.
    pub fn late_mean_qubits(&self, window: usize) -> f64 {
        let tail = &self.records[self.records.len().saturating_sub(window)..];
        tail.iter().map(|r| r.qubits_added as f64).sum::<f64>() / tail.len().max(1) as f64
    }
}

pub fn agent_seed(base: u64, agent: usize) -> u64 {
    base.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ (agent as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains one agent through all stages.
pub fn run_agent(cfg: &ScenarioConfig, seed: u64, warm_start: Option<&ClipNetwork>) -> Result<AgentRun, EnvError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut net = match warm_start {
        Some(net) => net.clone(),
        None => ClipNetwork::new(cfg.stages[0].agent),
    };
    let mut cache = cfg.cache_estimates.then(EstimateCache::new);
    let mut records = Vec::with_capacity(cfg.trials as usize);
    let mut current = usize::MAX;
    let mut ctx = None;
    for t in 0..cfg.trials {
        let s = cfg.stage_at(t);
        if s != current {
            current = s;
            net.set_params(cfg.stages[s].agent);
            ctx = Some(TrialContext::new(cfg, &cfg.stages[s])?);
        }
        let ctx = ctx.as_ref().expect("stage context set above");
        let mut record = run_trial(ctx, &mut net, &mut rng, cache.as_mut())?;
        record.trial = t;
        records.push(record);
    }
    Ok(AgentRun {
        seed,
        records,
        network: net,
    })
}

/// Trains `cfg.agents` independent agents in parallel.
pub fn run_experiment(cfg: &ScenarioConfig, warm_start: Option<&ClipNetwork>) -> Result<Vec<AgentRun>, EnvError> {
    cfg.validate()?;
    (0..cfg.agents)
        .into_par_iter()
        .map(|a| run_agent(cfg, agent_seed(cfg.seed, a), warm_start))
        .collect()
}

/// Indices of the `k` agents with the fewest qubits over their last
/// `window` trials, best first.
pub fn best_agents(runs: &[AgentRun], window: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| {
        runs[a]
            .late_mean_qubits(window)
            .total_cmp(&runs[b].late_mean_qubits(window))
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Picks one of the `k` most successful agents at random, as the donor
/// network for a transfer run.
pub fn pick_donor(runs: &[AgentRun], window: usize, k: usize, seed: u64) -> &ClipNetwork {
    let best = best_agents(runs, window, k);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    &runs[best[rng.gen_range(0..best.len())]].network
}

/// Per-trial ensemble statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub trial_index: u64,
    /// Qubits added, counting failed trials at what they spent.
    pub mean_qubits: f64,
    pub std_qubits: f64,
    pub reward_rate: f64,
    #[serde(rename = "mean_final_PL")]
    pub mean_final_pl: f64,
    /// Mean over rewarded agents only; NaN if none was rewarded.
    pub mean_qubits_rewarded: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

pub const CURVE_HEADER: &str = "trial_index,mean_qubits,std_qubits,reward_rate,mean_final_PL,mean_qubits_rewarded";

impl LearningCurve {
    pub fn from_runs(runs: &[AgentRun]) -> Self {
        let n_trials = runs.iter().map(|r| r.records.len()).min().unwrap_or(0);
        let points = (0..n_trials)
            .map(|t| {
                let recs: Vec<&TrialRecord> = runs.iter().map(|r| &r.records[t]).collect();
                let n = recs.len() as f64;
                let q: Vec<f64> = recs.iter().map(|r| r.qubits_added as f64).collect();
                let mean = q.iter().sum::<f64>() / n;
                let var = q.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                let won: Vec<f64> = recs
                    .iter()
                    .filter(|r| r.rewarded())
                    .map(|r| r.qubits_added as f64)
                    .collect();
                CurvePoint {
                    trial_index: t as u64,
                    mean_qubits: mean,
                    std_qubits: var.sqrt(),
                    reward_rate: won.len() as f64 / n,
                    mean_final_pl: recs.iter().map(|r| r.final_p_l).sum::<f64>() / n,
                    mean_qubits_rewarded: if won.is_empty() {
                        f64::NAN
                    } else {
                        won.iter().sum::<f64>() / won.len() as f64
                    },
                }
            })
            .collect();
        LearningCurve { points }
    }

    /// Mean of `mean_qubits` over trials `range`.
    pub fn window_mean(&self, range: std::ops::Range<usize>) -> f64 {
        let pts = &self.points[range];
        pts.iter().map(|p| p.mean_qubits).sum::<f64>() / pts.len() as f64
    }

    pub fn window_reward_rate(&self, range: std::ops::Range<usize>) -> f64 {
        let pts = &self.points[range];
        pts.iter().map(|p| p.reward_rate).sum::<f64>() / pts.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(p).expect("curve points always serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}
