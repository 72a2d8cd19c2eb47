//! Exhaustive checks of the erasure decoder against the homology oracle.

use qecforge::decoding::{DecodingGraph, Sector};
use qecforge::{CodeLattice, EdgeSet};

/// Small tori, including degenerate ones with loops and double edges.
fn toy_lattices() -> Vec<(String, CodeLattice)> {
    [(1, 1), (1, 2), (1, 3), (2, 2), (1, 4), (1, 5), (2, 3), (3, 2), (1, 6)]
        .into_iter()
        .map(|(r, c)| {
            let lat = CodeLattice::torus_grid_unconstrained(r, c).unwrap();
            assert!(lat.n_edges() <= 12);
            (format!("{r}x{c}"), lat)
        })
        .collect()
}

fn subset(mask: u32, n: usize) -> EdgeSet {
    (0..n).filter(|e| mask >> e & 1 == 1).collect()
}

/// For every erasure, count decoding failures over all errors supported on
/// it and compare with `1 - 2^-k` times the number of errors.
#[test]
fn peeling_is_maximum_likelihood_on_toy_lattices() {
    for (name, lat) in toy_lattices() {
        let n = lat.n_edges();
        for sector in Sector::BOTH {
            let g = DecodingGraph::new(&lat, sector);
            for erased_mask in 0u32..1 << n {
                let erased = subset(erased_mask, n);
                let k = g.homology_rank(&erased);
                let size = erased_mask.count_ones();
                let mut failures = 0u64;
                // enumerate submasks of the erasure
                let mut sub = erased_mask;
                loop {
                    let error = subset(sub, n);
                    let syn = g.syndrome(&error);
                    let c = g.peel_decode(&erased, &syn).unwrap();
                    assert!(c.edges.is_subset(&erased));
                    let residual = c.edges.symmetric_difference(&error);
                    if g.is_logical_failure(&residual).unwrap() {
                        failures += 1;
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & erased_mask;
                }
                // failures / 2^size == 1 - 2^-k
                let expected = (1u64 << size) - (1u64 << (size as usize - k.min(size as usize)));
                assert_eq!(failures, expected, "{name} {sector} erasure {erased_mask:#b}: rank {k}");
            }
        }
    }
}

#[test]
fn rank_is_monotone_and_full_on_everything() {
    for (name, lat) in toy_lattices() {
        let n = lat.n_edges();
        for sector in Sector::BOTH {
            let g = DecodingGraph::new(&lat, sector);
            assert_eq!(g.homology_rank(&subset((1 << n) - 1, n)), 2, "{name}");
            for mask in 0u32..1 << n {
                let k = g.homology_rank(&subset(mask, n));
                for e in 0..n {
                    let bigger = mask | 1 << e;
                    assert!(g.homology_rank(&subset(bigger, n)) >= k);
                }
            }
        }
    }
}

#[test]
fn peeling_on_root_for_small_erasures() {
    // every erasure of up to four qubits of the root, all errors on it
    let lat = CodeLattice::build_torus_grid(3, 3).unwrap();
    let n = lat.n_edges();
    for sector in Sector::BOTH {
        let g = DecodingGraph::new(&lat, sector);
        for mask in 0u32..1 << n {
            if mask.count_ones() > 4 {
                continue;
            }
            let erased = subset(mask, n);
            let k = g.homology_rank(&erased);
            let mut failures = 0u32;
            let mut sub = mask;
            loop {
                let error = subset(sub, n);
                let c = g.peel_decode(&erased, &g.syndrome(&error)).unwrap();
                failures += u32::from(g.is_logical_failure(&c.edges.symmetric_difference(&error)).unwrap());
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
            let total = 1u32 << mask.count_ones();
            assert_eq!(failures * (1 << k), total * ((1 << k) - 1));
        }
    }
}
