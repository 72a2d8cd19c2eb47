//! Census and random exploration of the tree of codes reachable from a
//! root lattice. Distinct action sequences are distinct nodes even when they
//! produce the same lattice.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::estimation::{estimate_with_table, EstimateError, EstimatorConfig};
use crate::noise::NoiseProfile;
use crate::topology::{Action, CodeLattice, Side};

/// Number of action sequences of each length `0..=depth` from `root`.
pub fn census(root: &CodeLattice, depth: usize) -> Vec<u64> {
    let mut counts = vec![0u64; depth + 1];
    counts[0] = 1;
    if depth > 0 {
        census_rec(root, 1, depth, &mut counts);
    }
    counts
}

fn census_rec(lat: &CodeLattice, level: usize, depth: usize, counts: &mut [u64]) {
    if level == depth {
        counts[level] += lat.count_actions() as u64;
        return;
    }
    let actions = lat.enumerate_actions();
    counts[level] += actions.len() as u64;
    for a in &actions {
        let child = lat.apply_action(a).expect("enumerated actions always apply");
        census_rec(&child, level + 1, depth, counts);
    }
}

/// One evaluated code in an exploration tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub action: Option<Action>,
    pub n_edges: usize,
    pub p_l: f64,
    pub stderr: f64,
}

/// Random breadth-first exploration.
///
/// Every child of the root is evaluated; deeper, each successor of an
/// included node is included independently with probability `p_expl`, up
/// to `radius` moves from the root.
pub fn explore(
    root: &CodeLattice,
    profile: &NoiseProfile,
    config: &EstimatorConfig,
    p_expl: f64,
    radius: usize,
    seed: u64,
) -> Result<Vec<ExploreNode>, EstimateError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut nodes = Vec::new();
    let mut frontier = vec![(root.clone(), None, None)];
    for depth in 0..=radius {
        let mut next = Vec::new();
        for (lat, parent, action) in frontier {
            let table = profile.resolve(&lat)?;
            let est = estimate_with_table(&lat, &table, config, rng.next_u64())?;
            let id = nodes.len();
            nodes.push(ExploreNode {
                id,
                parent,
                depth,
                action,
                n_edges: lat.n_edges(),
                p_l: est.p_hat,
                stderr: est.stderr,
            });
            if depth == radius {
                continue;
            }
            for a in lat.enumerate_actions() {
                if depth == 0 || rng.gen_bool(p_expl) {
                    let child = lat.apply_action(&a).expect("enumerated actions always apply");
                    next.push((child, Some(id), Some(a)));
                }
            }
        }
        frontier = next;
    }
    Ok(nodes)
}

/// Result of an exhaustive search over move sequences of one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceSearch {
    /// Sequences examined at the full depth.
    pub sequences: u64,
    /// How many of them reach the target distance.
    pub hits: u64,
    pub best_distance: usize,
    pub witness: Option<Vec<Action>>,
}

/// Applies every sequence of `depth` moves on `move_side` and measures
/// the code distance against errors detected on `distance_side`.
pub fn distance_search(
    root: &CodeLattice,
    depth: usize,
    move_side: Side,
    distance_side: Side,
    target: usize,
) -> DistanceSearch {
    let mut out = DistanceSearch {
        sequences: 0,
        hits: 0,
        best_distance: 0,
        witness: None,
    };
    let mut path = Vec::with_capacity(depth);
    distance_rec(root, depth, move_side, distance_side, target, &mut path, &mut out);
    out
}

fn distance_rec(
    lat: &CodeLattice,
    remaining: usize,
    move_side: Side,
    distance_side: Side,
    target: usize,
    path: &mut Vec<Action>,
    out: &mut DistanceSearch,
) {
    if remaining == 0 {
        let d = lat.code_distance(distance_side);
        out.sequences += 1;
        out.best_distance = out.best_distance.max(d);
        if d >= target {
            out.hits += 1;
            out.witness.get_or_insert_with(|| path.clone());
        }
        return;
    }
    for a in lat.enumerate_actions().into_iter().filter(|a| a.side == move_side) {
        let child = lat.apply_action(&a).expect("enumerated actions always apply");
        path.push(a);
        distance_rec(&child, remaining - 1, move_side, distance_side, target, path, out);
        path.pop();
    }
}
