//! Logical error rates: Monte Carlo over the erasure pipeline, and an
//! exhaustive oracle for small lattices.
//!
//! Trials are grouped in fixed blocks, each with its own generator seeded
//! from `(seed, block index)`, so estimates do not depend on the number of
//! worker threads.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::EdgeSet;
use crate::decoding::{DecodingGraph, PeelScratch, Sector};
use crate::noise::{ErasureSample, NoiseError, NoiseProfile, NoiseTable};
use crate::topology::{CodeLattice, PerceptDigest};

/// Trials per independently seeded block.
pub const BLOCK_TRIALS: u64 = 1024;
/// Most blocks evaluated between early-stop checks. Rounds start at one
/// block and double up to this size.
const BLOCKS_PER_ROUND: u64 = 16;
/// Largest lattice accepted by [`exact_logical_rate`].
pub const EXACT_MAX_EDGES: usize = 20;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("exact enumeration needs at most {max} noisy qubits, lattice has {got}")]
    TooLarge { got: usize, max: usize },
    #[error("trial count must be positive")]
    NoTrials,
}

/// Which sectors contribute to the logical error rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorScope {
    /// A failure in either sector, in either logical direction.
    Any,
    /// Only the Z sector; X errors are ignored.
    ZOnly,
}

/// What makes a single sector's decoding a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCriterion {
    /// The erased qubits support a homologically nontrivial cycle, so the
    /// maximum-likelihood correction is not certain to be right.
    Covered,
    /// The residual `error + correction` left by the peeling decoder is a
    /// nontrivial cycle. Fails with probability `1 - 2^-k` given an
    /// erasure of homology rank `k`.
    Residual,
}

/// How trials are scored. [`FailureConvention::FROZEN`] is used by every
/// experiment unless overridden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FailureConvention {
    pub scope: SectorScope,
    pub criterion: FailureCriterion,
}

impl FailureConvention {
    pub const FROZEN: FailureConvention = FailureConvention {
        scope: SectorScope::Any,
        criterion: FailureCriterion::Covered,
    };

    pub const fn new(scope: SectorScope, criterion: FailureCriterion) -> Self {
        FailureConvention { scope, criterion }
    }

    pub fn sectors(self) -> &'static [Sector] {
        match self.scope {
            SectorScope::Any => &Sector::BOTH,
            SectorScope::ZOnly => &[Sector::Z],
        }
    }
}

impl Default for FailureConvention {
    fn default() -> Self {
        Self::FROZEN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub p_hat: f64,
    pub failures: u64,
    pub trials: u64,
    pub stderr: f64,
    pub seed: u64,
    /// Sampling stopped before all requested trials because the failure
    /// count already exceeded the stop threshold.
    pub stopped_early: bool,
}

impl RateEstimate {
    pub fn new(failures: u64, trials: u64, seed: u64, stopped_early: bool) -> Self {
        let p_hat = failures as f64 / trials as f64;
        RateEstimate {
            p_hat,
            failures,
            trials,
            stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            seed,
            stopped_early,
        }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub trials: u64,
    pub convention: FailureConvention,
    /// Stop as soon as the failure count proves `p_hat >= stop_at` over the
    /// full trial budget. Threshold decisions are unchanged by stopping.
    pub stop_at: Option<f64>,
}

impl EstimatorConfig {
    pub fn new(trials: u64) -> Self {
        EstimatorConfig {
            trials,
            convention: FailureConvention::default(),
            stop_at: None,
        }
    }
}

/// Estimates P_L on `lat` under the frozen convention.
pub fn estimate_logical_rate(
    lat: &CodeLattice,
    profile: &NoiseProfile,
    trials: u64,
    seed: u64,
) -> Result<RateEstimate, EstimateError> {
    let table = profile.resolve(lat)?;
    estimate_with_table(lat, &table, &EstimatorConfig::new(trials), seed)
}

pub fn estimate_with_table(
    lat: &CodeLattice,
    table: &NoiseTable,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<RateEstimate, EstimateError> {
    if config.trials == 0 {
        return Err(EstimateError::NoTrials);
    }
    let graphs: Vec<DecodingGraph> = active_sectors(table, config.convention)
        .map(|s| DecodingGraph::new(lat, s))
        .collect();
    if graphs.is_empty() {
        return Ok(RateEstimate::new(0, config.trials, seed, false));
    }
    let n_blocks = config.trials.div_ceil(BLOCK_TRIALS);
    let block_len = |b: u64| BLOCK_TRIALS.min(config.trials - b * BLOCK_TRIALS);
    let stop_failures = config.stop_at.map(|t| t * config.trials as f64);

    let mut failures = 0u64;
    let mut done = 0u64;
    let mut block = 0u64;
    let mut round = 1u64;
    while block < n_blocks {
        let end = match stop_failures {
            Some(_) => (block + round).min(n_blocks),
            None => n_blocks,
        };
        round = (2 * round).min(BLOCKS_PER_ROUND);
        failures += (block..end)
            .into_par_iter()
            .map_init(
                || TrialRunner::new(&graphs, table, config.convention.criterion),
                |runner, b| runner.run_block(block_seed(seed, b), block_len(b)),
            )
            .sum::<u64>();
        done += (block..end).map(block_len).sum::<u64>();
        block = end;
        if let Some(limit) = stop_failures {
            if failures as f64 >= limit && block < n_blocks {
                return Ok(RateEstimate::new(failures, done, seed, true));
            }
        }
    }
    Ok(RateEstimate::new(failures, done, seed, false))
}

fn active_sectors(table: &NoiseTable, convention: FailureConvention) -> impl Iterator<Item = Sector> + '_ {
    convention
        .sectors()
        .iter()
        .copied()
        .filter(|s| !table.is_silent(s.side()))
}

/// SplitMix64 finaliser over the pair, so neighbouring blocks get
/// unrelated streams.
fn block_seed(seed: u64, block: u64) -> u64 {
    let mut z = seed
        ^ block
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x6A09_E667_F3BC_C908);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct TrialRunner<'a> {
    graphs: &'a [DecodingGraph],
    criterion: FailureCriterion,
    table: &'a NoiseTable,
    sample: ErasureSample,
    scratch: Vec<PeelScratch>,
    residual: EdgeSet,
}

impl<'a> TrialRunner<'a> {
    fn new(graphs: &'a [DecodingGraph], table: &'a NoiseTable, criterion: FailureCriterion) -> Self {
        TrialRunner {
            graphs,
            criterion,
            table,
            sample: ErasureSample::default(),
            scratch: graphs.iter().map(|g| PeelScratch::new(g.n_nodes())).collect(),
            residual: EdgeSet::with_capacity(table.n_qubits()),
        }
    }

    fn run_block(&mut self, seed: u64, trials: u64) -> u64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut failures = 0;
        for _ in 0..trials {
            self.table.sample_into(&mut self.sample, &mut rng);
            if self.trial_fails() {
                failures += 1;
            }
        }
        failures
    }

    fn trial_fails(&mut self) -> bool {
        let mut failed = false;
        for (g, scratch) in self.graphs.iter().zip(&mut self.scratch) {
            let (erased, realized) = self.sample.sector(g.sector().side());
            if erased.is_empty() {
                continue;
            }
            if self.criterion == FailureCriterion::Covered {
                // a nontrivial residual lies inside the erasure, so the
                // rank alone decides; peeling cannot change the verdict
                if g.rank_with(erased, scratch) > 0 {
                    return true;
                }
                continue;
            }
            mark_defects(g, realized, scratch);
            self.residual.clear();
            self.residual.xor_with(realized);
            g.peel_with(erased, scratch, &mut self.residual)
                .expect("erasure samples are always decodable");
            debug_assert!(g.syndrome(&self.residual).is_empty());
            failed |= g.class_of(&self.residual) != 0;
        }
        failed
    }
}

fn mark_defects(g: &DecodingGraph, errors: &EdgeSet, scratch: &mut PeelScratch) {
    for v in g.syndrome(errors).defects {
        scratch.defect[v as usize] = true;
    }
}

/// Monte Carlo of one sector under plain Pauli noise decoded by
/// Union-Find: every qubit suffers an error with its table rate and the
/// decoder sees only the syndrome.
pub fn estimate_union_find(
    lat: &CodeLattice,
    table: &NoiseTable,
    sector: Sector,
    trials: u64,
    seed: u64,
) -> Result<RateEstimate, EstimateError> {
    if trials == 0 {
        return Err(EstimateError::NoTrials);
    }
    let g = DecodingGraph::new(lat, sector);
    let rates = table.rates(sector.side());
    let n_blocks = trials.div_ceil(BLOCK_TRIALS);
    let failures = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(block_seed(seed, b));
            let mut errors = EdgeSet::with_capacity(rates.len());
            let mut failures = 0u64;
            for _ in 0..BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS) {
                errors.clear();
                for (e, &p) in rates.iter().enumerate() {
                    if rng.gen_bool(p) {
                        errors.insert(e);
                    }
                }
                let syn = g.syndrome(&errors);
                let mut residual = g
                    .union_find_decode(&syn)
                    .expect("syndromes of edge sets have even parity")
                    .edges;
                residual.xor_with(&errors);
                failures += u64::from(g.class_of(&residual) != 0);
            }
            failures
        })
        .sum();
    Ok(RateEstimate::new(failures, trials, seed, false))
}

/// Exact erasure-decoding failure probability of one sector.
pub fn exact_sector_rate(
    lat: &CodeLattice,
    table: &NoiseTable,
    sector: Sector,
    criterion: FailureCriterion,
) -> Result<f64, EstimateError> {
    let rates = table.rates(sector.side());
    let noisy: Vec<usize> = (0..rates.len()).filter(|&e| rates[e] > 0.0).collect();
    if noisy.len() > EXACT_MAX_EDGES {
        return Err(EstimateError::TooLarge {
            got: noisy.len(),
            max: EXACT_MAX_EDGES,
        });
    }
    if noisy.is_empty() {
        return Ok(0.0);
    }
    let g = DecodingGraph::new(lat, sector);
    let mut total = 0.0;
    let mut erased = EdgeSet::with_capacity(rates.len());
    for mask in 0u32..1 << noisy.len() {
        let mut prob = 1.0;
        erased.clear();
        for (i, &e) in noisy.iter().enumerate() {
            if mask >> i & 1 == 1 {
                prob *= rates[e];
                erased.insert(e);
            } else {
                prob *= 1.0 - rates[e];
            }
        }
        if prob == 0.0 {
            continue;
        }
        let k = g.homology_rank(&erased);
        total += prob
            * match criterion {
                FailureCriterion::Residual => 1.0 - 0.5f64.powi(k as i32),
                FailureCriterion::Covered => f64::from(k > 0),
            };
    }
    Ok(total)
}

/// Exact P_L by enumerating every erasure pattern.
pub fn exact_logical_rate(
    lat: &CodeLattice,
    profile: &NoiseProfile,
    convention: FailureConvention,
) -> Result<f64, EstimateError> {
    let table = profile.resolve(lat)?;
    let mut survive = 1.0;
    for &sector in convention.sectors() {
        survive *= 1.0 - exact_sector_rate(lat, &table, sector, convention.criterion)?;
    }
    Ok(1.0 - survive)
}

/// Memo of estimates keyed by lattice percept, noise profile and trial
/// count. Revisited codes then reuse their first estimate.
#[derive(Debug, Default)]
pub struct EstimateCache {
    entries: HashMap<(PerceptDigest, u64, u64), RateEstimate>,
    hits: u64,
}

impl EstimateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn profile_key(profile: &NoiseProfile, convention: FailureConvention) -> u64 {
        let mut h = DefaultHasher::new();
        profile.to_toml().hash(&mut h);
        convention.hash(&mut h);
        h.finish()
    }

    pub fn get_or_insert_with<E>(
        &mut self,
        key: (PerceptDigest, u64, u64),
        compute: impl FnOnce() -> Result<RateEstimate, E>,
    ) -> Result<RateEstimate, E> {
        if let Some(hit) = self.entries.get(&key) {
            self.hits += 1;
            return Ok(*hit);
        }
        let value = compute()?;
        self.entries.insert(key, value);
        Ok(value)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }
}
