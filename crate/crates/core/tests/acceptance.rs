//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance -- 2 4` runs a subset. The run
//! reports rather than gates; set `QECFORGE_ACCEPTANCE_STRICT=1` to turn any
//! FAIL into a nonzero exit status.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use qecforge::agent::{ClipNetwork, PsParams};
use qecforge::decoding::{DecodingGraph, Sector};
use qecforge::environment::{pick_donor, run_experiment, AgentRun, LearningCurve, ScenarioConfig};
use qecforge::estimation::{
    estimate_union_find, estimate_with_table, exact_logical_rate, exact_sector_rate, EstimatorConfig,
    FailureConvention, FailureCriterion, SectorScope,
};
use qecforge::noise::{scenario_profile, NoiseProfile, NoiseTable};
use qecforge::search::{census, distance_search};
use qecforge::topology::PerceptDigest;
use qecforge::{Action, CodeLattice, EdgeSet, Side};

const SEED: u64 = 2024;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

fn root() -> CodeLattice {
    CodeLattice::build_torus_grid(3, 3).unwrap()
}

/// A uniformly random walk of `depth` moves from the root.
fn random_descendant(depth: usize, rng: &mut impl Rng) -> CodeLattice {
    let mut lat = root();
    for _ in 0..depth {
        let actions = lat.enumerate_actions();
        lat = lat.apply_action(&actions[rng.gen_range(0..actions.len())]).unwrap();
    }
    lat
}

/// Table with noise on one sector only.
fn sector_table(lat: &CodeLattice, sector: Sector, p: f64) -> NoiseTable {
    let n = lat.n_edges();
    match sector {
        Sector::Z => NoiseTable::new(vec![0.0; n], vec![p; n]),
        Sector::X => NoiseTable::new(vec![p; n], vec![0.0; n]),
    }
}

fn census_exactness() -> Verdict {
    let expected = [1u64, 36, 1440, 62893];
    let t = Instant::now();
    let got = census(&root(), 3);
    let secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let c4 = census(&root(), 4)[4];
    Verdict::new(
        got == expected && secs < 300.0,
        format!(
            "C(0..3) = {got:?} vs {expected:?} in {secs:.2}s; optional C(4) = {c4} vs 2961504 in {:.1}s",
            t.elapsed().as_secs_f64()
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    const TRIALS: u64 = 200_000;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(SEED);
    let mut codes = vec![root()];
    codes.extend((0..3).map(|_| random_descendant(2, &mut rng)));
    let config = EstimatorConfig {
        trials: TRIALS,
        convention: FailureConvention::new(SectorScope::Any, FailureCriterion::Residual),
        stop_at: None,
    };
    let (mut checks, mut worst) = (0, 0.0f64);
    let mut misses = Vec::new();
    for (c, lat) in codes.iter().enumerate() {
        for sector in Sector::BOTH {
            for p in [0.05, 0.1, 0.15] {
                let table = sector_table(lat, sector, p);
                let exact = exact_sector_rate(lat, &table, sector, FailureCriterion::Residual).unwrap();
                let est = estimate_with_table(lat, &table, &config, rng.gen()).unwrap();
                let sigma = (exact * (1.0 - exact) / TRIALS as f64).sqrt();
                let z = (est.p_hat - exact).abs() / sigma;
                worst = worst.max(z);
                checks += 1;
                if z > 3.0 {
                    misses.push(format!("code {c} {sector} p={p}: {:.5} vs {exact:.5}", est.p_hat));
                }
            }
        }
    }
    Verdict::new(
        misses.is_empty(),
        format!("{checks} comparisons at {TRIALS} trials, worst |z| = {worst:.2} {misses:?}"),
    )
}

fn peeling_ml() -> Verdict {
    let sizes = [(1, 1), (1, 2), (1, 3), (2, 2), (1, 4), (1, 5), (2, 3), (3, 2), (1, 6)];
    let (mut patterns, mut mismatches) = (0u64, 0u64);
    for (r, c) in sizes {
        let lat = CodeLattice::torus_grid_unconstrained(r, c).unwrap();
        let n = lat.n_edges();
        let subset = |mask: u32| -> EdgeSet { (0..n).filter(|e| mask >> e & 1 == 1).collect() };
        for sector in Sector::BOTH {
            let g = DecodingGraph::new(&lat, sector);
            for mask in 0u32..1 << n {
                let erased = subset(mask);
                let k = g.homology_rank(&erased) as u32;
                let mut failures = 0u64;
                let mut sub = mask;
                loop {
                    let error = subset(sub);
                    let c = g.peel_decode(&erased, &g.syndrome(&error)).unwrap();
                    failures += u64::from(g.is_logical_failure(&c.edges.symmetric_difference(&error)).unwrap());
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & mask;
                }
                // failures / 2^|E| == 1 - 2^-k
                let size = mask.count_ones();
                patterns += 1;
                if failures << k != ((1u64 << k) - 1) << size {
                    mismatches += 1;
                }
            }
        }
    }
    Verdict::new(
        mismatches == 0,
        format!("{patterns} erasure patterns on 9 toy tori, {mismatches} mismatches"),
    )
}

fn rate_anchors() -> Verdict {
    const TRIALS: u64 = 1_000_000;
    let anchors = [
        ("dephasing-0.10", 0.006),
        ("symmetric-0.09", 0.005),
        ("dephasing-0.14", 0.019),
        ("dephasing-0.16", 0.028),
        ("correlated-pair", 0.28),
    ];
    let lat = root();
    let config = EstimatorConfig::new(TRIALS);
    let mut all = true;
    let mut parts = Vec::new();
    for (i, (name, target)) in anchors.into_iter().enumerate() {
        let profile = scenario_profile(name).unwrap();
        let table = profile.resolve(&lat).unwrap();
        let est = estimate_with_table(&lat, &table, &config, SEED + i as u64).unwrap();
        let exact = exact_logical_rate(&lat, &profile, FailureConvention::FROZEN).unwrap();
        let ok = (est.p_hat - target).abs() <= (0.2 * target).max(3.0 * est.stderr);
        all &= ok;
        parts.push(format!(
            "{name} {:.4} (exact {exact:.4}) vs {target} {}",
            est.p_hat,
            if ok { "ok" } else { "off" }
        ));
    }
    Verdict::new(all, parts.join("; "))
}

/// Desk-scale training on the dephasing scenario, shared by criteria 5, 6
/// and 9.
fn dephasing_runs() -> Vec<AgentRun> {
    let mut cfg = ScenarioConfig::preset("dephasing").unwrap().desk_scale();
    cfg.seed = SEED;
    let t = Instant::now();
    let runs = run_experiment(&cfg, None).unwrap();
    eprintln!(
        "  trained {} agents x {} trials in {:.0}s",
        cfg.agents,
        cfg.trials,
        t.elapsed().as_secs_f64()
    );
    runs
}

fn rl_convergence(runs: &[AgentRun]) -> Verdict {
    let curve = LearningCurve::from_runs(runs);
    let early = curve.window_mean(0..50);
    let late = curve.window_mean(1800..2000);
    let four = runs
        .iter()
        .flat_map(|r| &r.records)
        .filter(|r| r.rewarded() && r.qubits_added == 4)
        .count();
    let min_rewarded = runs
        .iter()
        .flat_map(|r| &r.records)
        .filter(|r| r.rewarded())
        .map(|r| r.qubits_added)
        .min();
    let ok = (14.0..=26.0).contains(&early) && late < 8.0 && four > 0;
    Verdict::new(
        ok,
        format!(
            "trials 1-50 mean {early:.2} (in [14, 26]), trials 1801-2000 mean {late:.2} (< 8), \
             {four} rewarded 4-qubit trials, fewest qubits rewarded {min_rewarded:?}"
        ),
    )
}

/// Rewarded sequences of the three best agents over the final 200 trials,
/// once their policies have settled.
fn strategy_signature(runs: &[AgentRun]) -> Verdict {
    let best = qecforge::environment::best_agents(runs, 200, 3);
    let (mut x_adding, mut total) = (0usize, 0usize);
    for &a in &best {
        for record in runs[a].records[1800..].iter().filter(|r| r.rewarded()) {
            for action in record.actions() {
                total += 1;
                x_adding += usize::from(action.adds_x_stabilizer());
            }
        }
    }
    let share = x_adding as f64 / total.max(1) as f64;
    Verdict::new(
        total > 0 && share >= 0.8,
        format!(
            "agents {best:?}: {x_adding}/{total} actions add an X stabilizer ({:.1}%)",
            100.0 * share
        ),
    )
}

fn distance_witness() -> Verdict {
    let t = Instant::now();
    let s = distance_search(&root(), 4, Side::Primal, Side::Primal, 4);
    let verified = s.witness.as_ref().is_some_and(|path| {
        let mut lat = root();
        for a in path {
            lat = lat.apply_action(a).unwrap();
        }
        lat.code_distance(Side::Primal) == 4
    });
    Verdict::new(
        verified,
        format!(
            "{} of {} depth-4 sequences reach Z-distance 4 in {:.1}s; witness {:?}",
            s.hits,
            s.sequences,
            t.elapsed().as_secs_f64(),
            s.witness.map(|w| w.iter().map(Action::as_tuple).collect::<Vec<_>>())
        ),
    )
}

/// Spearman correlation with average ranks for ties.
fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut out = vec![0.0; v.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &order[i..=j] {
                out[k] = avg;
            }
            i = j + 1;
        }
        out
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - mean) * (y - mean)).sum();
    let var = |r: &[f64]| r.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    cov / (var(&ra) * var(&rb)).sqrt()
}

fn decoder_cross_validation() -> Verdict {
    const TRIALS: u64 = 10_000;
    let r = root();
    let mut codes: Vec<CodeLattice> = r
        .enumerate_actions()
        .iter()
        .map(|a| r.apply_action(a).unwrap())
        .collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(SEED);
    codes.extend((0..100).map(|_| random_descendant(2, &mut rng)));
    let profile = NoiseProfile::dephasing(0.1);
    let config = EstimatorConfig::new(TRIALS);
    let (mut erasure, mut pauli) = (Vec::new(), Vec::new());
    for lat in &codes {
        let table = profile.resolve(lat).unwrap();
        erasure.push(estimate_with_table(lat, &table, &config, rng.gen()).unwrap().p_hat);
        pauli.push(
            estimate_union_find(lat, &table, Sector::Z, TRIALS, rng.gen())
                .unwrap()
                .p_hat,
        );
    }
    let rho = spearman(&erasure, &pauli);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Verdict::new(
        rho > 0.8,
        format!(
            "{} codes, Spearman rho = {rho:.3} (mean erasure P_L {:.4}, mean Union-Find P_L {:.4})",
            codes.len(),
            mean(&erasure),
            mean(&pauli)
        ),
    )
}

fn transfer_advantage(pretrained: &[AgentRun]) -> Verdict {
    let mut cfg = ScenarioConfig::preset("transfer-plaquette").unwrap().desk_scale();
    cfg.seed = SEED;
    let donor = pick_donor(pretrained, 200, 3, SEED);
    let t = Instant::now();
    let warm = LearningCurve::from_runs(&run_experiment(&cfg, Some(donor)).unwrap());
    let cold = LearningCurve::from_runs(&run_experiment(&cfg, None).unwrap());
    eprintln!("  trained both transfer arms in {:.0}s", t.elapsed().as_secs_f64());
    let n = cfg.trials as usize;
    let (warm_late, cold_late) = (warm.window_mean(n - 100..n), cold.window_mean(n - 100..n));
    let (warm_rate, cold_rate) = (warm.window_reward_rate(0..n), cold.window_reward_rate(0..n));
    Verdict::new(
        warm_late < cold_late && cold_rate < 0.5 * warm_rate,
        format!(
            "last-100 mean qubits pre-trained {warm_late:.2} vs cold {cold_late:.2}; \
             reward rate pre-trained {warm_rate:.3} vs cold {cold_rate:.3}"
        ),
    )
}

fn ps_mechanics() -> Verdict {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    let digest = |n: u32| {
        let mut d = [0u8; 32];
        d[..4].copy_from_slice(&n.to_le_bytes());
        PerceptDigest(d)
    };
    let actions = |n: usize| -> Vec<Action> { (0..n as u32).map(|v| Action::new(Side::Primal, v, 0, 1)).collect() };
    let params = |gamma: f64, eta: f64| PsParams {
        gamma,
        eta,
        ..PsParams::default()
    };
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(SEED);

    // percept registration and the initial policy
    let mut net = ClipNetwork::new(PsParams::default());
    let i = net.perceive(digest(0), &actions(36)).unwrap();
    check("root index", i == 0);
    check(
        "uniform 1/36",
        net.probabilities(0)
            .unwrap()
            .iter()
            .all(|p| (p - 1.0 / 36.0).abs() < 1e-15),
    );
    check("no duplicate", net.perceive(digest(0), &actions(36)).unwrap() == 0);
    for k in 1..5 {
        net.perceive(digest(k), &actions(4)).unwrap();
    }
    check("N = k", net.n_percepts() == 5);
    check(
        "uniform 0.25",
        net.probabilities(1).unwrap().iter().all(|p| (p - 0.25).abs() < 1e-15),
    );
    let j = net.select_action(0, &mut rng).unwrap();
    check("root glow 1", net.glow_values(0).unwrap()[j] == 1.0);

    // softmax ratio
    let mut net = ClipNetwork::new(params(0.0, 0.0));
    net.perceive(digest(0), &actions(4)).unwrap();
    let j = net.select_action(0, &mut rng).unwrap();
    net.update(1.0);
    let p = net.probabilities(0).unwrap();
    check("ratio e^2", (p[j] / p[(j + 1) % 4] - 2f64.exp()).abs() < 1e-12);

    // update arithmetic
    let mut net = ClipNetwork::new(params(0.0, 0.1));
    net.perceive(digest(0), &actions(3)).unwrap();
    let j = net.select_action(0, &mut rng).unwrap();
    net.update(0.0);
    check("gamma 0 keeps h", net.h_values(0).unwrap() == vec![1.0; 3]);
    check("glow scaled", (net.glow_values(0).unwrap()[j] - 0.9).abs() < 1e-15);
    let mut net = ClipNetwork::new(params(0.37, 0.05));
    net.perceive(digest(0), &actions(1)).unwrap();
    net.select_action(0, &mut rng).unwrap();
    net.update(1.0);
    check("h 1 -> 2", net.h_values(0).unwrap() == vec![2.0]);
    let mut net = ClipNetwork::new(params(0.0, 0.05));
    net.perceive(digest(0), &actions(1)).unwrap();
    net.select_action(0, &mut rng).unwrap();
    net.update(2.0);
    net.set_params(params(0.01, 0.05));
    net.update(0.0);
    check("h 3 -> 2.98", (net.h_values(0).unwrap()[0] - 2.98).abs() < 1e-14);
    for _ in 0..9 {
        net.update(0.0);
    }
    check(
        "ten forgetting steps",
        (net.h_values(0).unwrap()[0] - (1.0 + 2.0 * 0.99f64.powi(10))).abs() < 1e-14,
    );

    // trial cleanup
    let mut net = ClipNetwork::new(PsParams::default());
    net.perceive(digest(0), &actions(5)).unwrap();
    net.perceive(digest(1), &actions(5)).unwrap();
    net.end_trial(true);
    for k in 2..7 {
        net.perceive(digest(k), &actions(5)).unwrap();
    }
    check(
        "five discarded",
        net.end_trial(false).discarded == 5 && net.n_percepts() == 2,
    );
    let mut net = ClipNetwork::new(PsParams {
        tau: 3,
        ..PsParams::default()
    });
    net.perceive(digest(0), &actions(2)).unwrap();
    net.perceive(digest(1), &actions(2)).unwrap();
    let learned = net.perceive(digest(2), &actions(1)).unwrap();
    net.select_action(learned, &mut rng).unwrap();
    net.update(1.0);
    check("mean h 1.5", net.mean_h(learned).unwrap() == 1.5);
    for _ in 0..4 {
        net.end_trial(true);
    }
    check("flat deleted", net.lookup(&digest(1)).is_none());
    check("learned kept", net.lookup(&digest(2)).is_some());

    // normalisation under many random updates
    let mut net = ClipNetwork::new(PsParams::default());
    for k in 0..20 {
        net.perceive(digest(k), &actions(2 + k as usize)).unwrap();
    }
    let mut worst = 0.0f64;
    for step in 0..100_000u32 {
        let i = rng.gen_range(0..net.n_percepts());
        net.select_action(i, &mut rng).unwrap();
        net.update(if rng.gen_bool(0.05) {
            rng.gen_range(0.0..3.0)
        } else {
            0.0
        });
        if step % 97 == 0 {
            let sum: f64 = net
                .probabilities(rng.gen_range(0..net.n_percepts()))
                .unwrap()
                .iter()
                .sum();
            worst = worst.max((sum - 1.0).abs());
        }
    }
    for i in 0..net.n_percepts() {
        let sum: f64 = net.probabilities(i).unwrap().iter().sum();
        worst = worst.max((sum - 1.0).abs());
    }
    check("normalisation", worst < 1e-12);

    Verdict::new(
        failed.is_empty(),
        format!("16 hand examples, worst normalisation error {worst:.1e} after 1e5 updates; failed {failed:?}"),
    )
}

const TITLES: [&str; 10] = [
    "census exactness",
    "oracle equivalence",
    "peeling ML-optimality",
    "rate anchors",
    "RL convergence",
    "strategy signature",
    "distance witness",
    "decoder cross-validation",
    "transfer advantage",
    "PS mechanics",
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut runs: Option<Vec<AgentRun>> = None;
    let mut failures = 0;
    for n in 1..=10 {
        if !wanted(n) {
            continue;
        }
        let t = Instant::now();
        let verdict = match n {
            1 => census_exactness(),
            2 => oracle_equivalence(),
            3 => peeling_ml(),
            4 => rate_anchors(),
            8 => decoder_cross_validation(),
            7 => distance_witness(),
            10 => ps_mechanics(),
            _ => {
                let runs = runs.get_or_insert_with(dephasing_runs);
                match n {
                    5 => rl_convergence(runs),
                    6 => strategy_signature(runs),
                    _ => transfer_advantage(runs),
                }
            }
        };
        failures += usize::from(!verdict.passed);
        println!(
            "criterion {n:>2} {}: {} [{:.0}s] {}",
            if verdict.passed { "PASS" } else { "FAIL" },
            TITLES[n - 1],
            t.elapsed().as_secs_f64(),
            verdict.detail
        );
    }
    println!("acceptance: {failures} failing criteria");
    if failures > 0 && std::env::var("QECFORGE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
