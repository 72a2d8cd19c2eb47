//! Property tests over randomly grown lattices.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use qecforge::agent::{ClipNetwork, PsParams};
use qecforge::decoding::{DecodingGraph, Sector};
use qecforge::topology::PerceptDigest;
use qecforge::{Action, CodeLattice, EdgeSet, Side};

/// Root grown by `steps` uniformly random legal moves.
fn grown(seed: u64, steps: usize) -> (CodeLattice, Vec<Action>) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut lat = CodeLattice::build_torus_grid(3, 3).unwrap();
    let mut path = Vec::new();
    for _ in 0..steps {
        let actions = lat.enumerate_actions();
        if actions.is_empty() {
            break;
        }
        let a = actions[rng.gen_range(0..actions.len())];
        lat = lat.apply_action(&a).unwrap();
        path.push(a);
    }
    (lat, path)
}

fn random_subset(rng: &mut impl Rng, n: usize, p: f64) -> EdgeSet {
    (0..n).filter(|_| rng.gen_bool(p)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grown_lattices_satisfy_code_constraints(seed in any::<u64>(), steps in 0usize..25) {
        let (lat, path) = grown(seed, steps);
        lat.check_code_constraints().unwrap();
        prop_assert_eq!(lat.n_edges(), 18 + path.len());
        prop_assert_eq!(lat.qubits_added(), path.len());
        // Euler characteristic of the torus
        prop_assert_eq!(lat.n_vertices() + lat.n_faces(), lat.n_edges());
        let (x, z) = lat.stabilizer_counts();
        let primal = path.iter().filter(|a| a.adds_x_stabilizer()).count();
        prop_assert_eq!((x, z), (9 + primal, 9 + path.len() - primal));
    }

    #[test]
    fn dual_view_is_an_involution(seed in any::<u64>(), steps in 0usize..15) {
        let (lat, _) = grown(seed, steps);
        let dual = lat.dual_view();
        prop_assert_eq!(dual.n_vertices(), lat.n_faces());
        prop_assert_eq!(dual.dual_view(), lat.clone());
        prop_assert_eq!(lat.code_distance(Side::Primal), dual.code_distance(Side::Dual));
    }

    #[test]
    fn text_format_round_trips(seed in any::<u64>(), steps in 0usize..15) {
        let (lat, _) = grown(seed, steps);
        let back = CodeLattice::from_text(&lat.to_text()).unwrap();
        prop_assert_eq!(back.canonical_percept(), lat.canonical_percept());
        prop_assert_eq!(back, lat);
    }

    #[test]
    fn splits_never_shrink_their_own_distance(seed in any::<u64>(), steps in 1usize..10) {
        // contracting the new edge maps every cycle to one no longer; the
        // other side gains an edge and may get shorter
        let (lat, path) = grown(seed, steps);
        let (mut prev, _) = grown(seed, 0);
        for a in &path {
            let next = prev.apply_action(a).unwrap();
            prop_assert!(next.code_distance(a.side) >= prev.code_distance(a.side));
            prev = next;
        }
        prop_assert_eq!(prev, lat);
    }

    #[test]
    fn logical_representatives_pair_correctly(seed in any::<u64>(), steps in 0usize..20) {
        let (lat, _) = grown(seed, steps);
        let ops = lat.logical_representatives();
        prop_assert_eq!(ops.intersection_matrix(), [[true, false], [false, true]]);
        let dz = lat.code_distance(Side::Primal);
        let dx = lat.code_distance(Side::Dual);
        prop_assert_eq!(ops.primal[0].len(), dz);
        // the dual pair is pinned to the classes the pairing demands, so it
        // need not contain the globally shortest dual cycle
        prop_assert!(ops.dual.iter().all(|d| d.len() >= dx));
        let gx = DecodingGraph::new(&lat, Sector::X);
        prop_assert!(ops.dual.iter().all(|d| gx.syndrome(d).is_empty()));
    }

    #[test]
    fn peeling_corrects_within_the_erasure(seed in any::<u64>(), steps in 0usize..20, p in 0.0f64..0.6) {
        let (lat, _) = grown(seed, steps);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0xabc);
        for sector in Sector::BOTH {
            let g = DecodingGraph::new(&lat, sector);
            for _ in 0..20 {
                let erased = random_subset(&mut rng, lat.n_edges(), p);
                let error: EdgeSet = erased.iter().filter(|_| rng.gen_bool(0.5)).collect();
                let syn = g.syndrome(&error);
                let c = g.peel_decode(&erased, &syn).unwrap();
                prop_assert!(c.edges.is_subset(&erased));
                prop_assert_eq!(g.syndrome(&c.edges), syn);
                // a failure needs a nontrivial cycle inside the erasure
                let failed = g.is_logical_failure(&c.edges.symmetric_difference(&error)).unwrap();
                prop_assert!(!failed || g.homology_rank(&erased) > 0);
            }
        }
    }

    #[test]
    fn union_find_matches_the_syndrome(seed in any::<u64>(), steps in 0usize..20, p in 0.0f64..0.4) {
        let (lat, _) = grown(seed, steps);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0xdef);
        for sector in Sector::BOTH {
            let g = DecodingGraph::new(&lat, sector);
            for _ in 0..20 {
                let error = random_subset(&mut rng, lat.n_edges(), p);
                let syn = g.syndrome(&error);
                let c = g.union_find_decode(&syn).unwrap();
                prop_assert_eq!(g.syndrome(&c.edges), syn);
            }
        }
    }

    #[test]
    fn policy_stays_normalised(seed in any::<u64>(), rewards in prop::collection::vec(0.0f64..2.0, 1..200)) {
        let mut net = ClipNetwork::new(PsParams { gamma: 0.05, eta: 0.1, ..PsParams::default() });
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let acts: Vec<Action> = (0..7).map(|v| Action::new(Side::Primal, v, 0, 1)).collect();
        for (t, &lambda) in rewards.iter().enumerate() {
            let d = PerceptDigest([(t % 5) as u8; 32]);
            let i = net.perceive(d, &acts[..3 + t % 5]).unwrap();
            net.select_action(i, &mut rng).unwrap();
            net.update(if t % 3 == 0 { lambda } else { 0.0 });
            let p = net.probabilities(i).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(net.h_values(i).unwrap().iter().all(|&h| h >= 1.0));
            prop_assert!(net.glow_values(i).unwrap().iter().all(|&g| g >= 0.0));
        }
    }

    #[test]
    fn softmax_depends_only_on_differences(hs in prop::collection::vec(0.0f64..3.0, 2..6)) {
        // two networks trained to h and to h + 1 on every edge give the same policy
        let acts: Vec<Action> = (0..hs.len() as u32).map(|v| Action::new(Side::Primal, v, 0, 1)).collect();
        let build = |shift: f64| {
            let mut net = ClipNetwork::new(PsParams { gamma: 0.0, eta: 1.0, ..PsParams::default() });
            net.perceive(PerceptDigest([0; 32]), &acts).unwrap();
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
            // glow M_i / M_0 = 1 on the selected edge, η = 1 wipes it after
            // each update, so each round adds exactly λ to one edge
            for (j, &h) in hs.iter().enumerate() {
                let target = h + shift;
                loop {
                    let k = net.select_action(0, &mut rng).unwrap();
                    if k == j {
                        net.update(target);
                        break;
                    }
                    net.update(0.0);
                }
            }
            net.probabilities(0).unwrap()
        };
        let a = build(0.0);
        let b = build(1.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
