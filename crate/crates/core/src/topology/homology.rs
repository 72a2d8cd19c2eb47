//! Homology of lattices on the torus: logical operators and distance.
//!
//! A tree-cotree decomposition gives two generator edges. Their fundamental
//! cycles in the primal spanning tree and in the dual cotree form bases of
//! the first homology of each graph with intersection matrix the identity.
//! Any edge set is then classified by its intersection parities with the
//! opposite basis.

use std::collections::VecDeque;

use crate::bitset::EdgeSet;

use super::{CodeLattice, Side};

/// First-homology class over GF(2): bit `i` is the intersection parity with
/// basis element `i` of the opposite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HomologyClass(pub u8);

impl HomologyClass {
    pub const TRIVIAL: HomologyClass = HomologyClass(0);

    pub fn is_trivial(self) -> bool {
        self.0 == 0
    }

    /// Intersection pairing of a primal class with a dual class.
    pub fn pairing(self, other: HomologyClass) -> bool {
        (self.0 & other.0).count_ones() % 2 == 1
    }
}

/// Logical operator representatives: two primal cycles (Z-type strings) and
/// two dual cycles (X-type strings) with `primal[i]` meeting `dual[j]` an odd
/// number of times exactly when `i == j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalOperators {
    pub primal: [EdgeSet; 2],
    pub dual: [EdgeSet; 2],
}

impl LogicalOperators {
    pub fn on(&self, side: Side) -> &[EdgeSet; 2] {
        match side {
            Side::Primal => &self.primal,
            Side::Dual => &self.dual,
        }
    }

    /// Intersection parity matrix `M[i][j] = |primal[i] ∩ dual[j]| mod 2`.
    pub fn intersection_matrix(&self) -> [[bool; 2]; 2] {
        let mut m = [[false; 2]; 2];
        for (i, p) in self.primal.iter().enumerate() {
            for (j, d) in self.dual.iter().enumerate() {
                m[i][j] = p.intersection_len(d) % 2 == 1;
            }
        }
        m
    }

    /// Class of an edge set living on `side`, measured against the
    /// representatives of the other side.
    pub fn class_of(&self, edges: &EdgeSet, side: Side) -> HomologyClass {
        let basis = self.on(side.other());
        let bit = |i: usize| ((edges.intersection_len(&basis[i]) % 2) as u8) << i;
        HomologyClass(bit(0) | bit(1))
    }
}

/// Tree-cotree bases of both graphs.
struct CycleBases {
    primal: [EdgeSet; 2],
    dual: [EdgeSet; 2],
}

impl CodeLattice {
    fn cycle_bases(&self) -> CycleBases {
        let n = self.n_edges();
        let (tree, primal_parent) = spanning_tree(self, Side::Primal, &EdgeSet::new());
        let (cotree, dual_parent) = spanning_tree(self, Side::Dual, &tree);
        let generators: Vec<usize> = (0..n).filter(|&e| !tree.contains(e) && !cotree.contains(e)).collect();
        assert_eq!(generators.len(), 2, "torus maps have exactly two generator edges");
        let fundamental = |side: Side, parent: &TreeLinks, g: usize| {
            let (a, b) = self.edge_nodes(g, side);
            let mut cycle = tree_path(parent, a, b);
            cycle.toggle(g);
            cycle
        };
        CycleBases {
            primal: [
                fundamental(Side::Primal, &primal_parent, generators[0]),
                fundamental(Side::Primal, &primal_parent, generators[1]),
            ],
            dual: [
                fundamental(Side::Dual, &dual_parent, generators[0]),
                fundamental(Side::Dual, &dual_parent, generators[1]),
            ],
        }
    }

    /// Short logical representatives, recomputed from scratch.
    ///
    /// The primal pair are minimum-weight cycles of the two lightest
    /// nontrivial classes. Each dual representative is a minimum-weight
    /// cycle of the unique class pairing oddly with exactly one of them.
    pub fn logical_representatives(&self) -> LogicalOperators {
        let bases = self.cycle_bases();
        let primal_classes = edge_classes(self, &bases.dual);
        let dual_classes = edge_classes(self, &bases.primal);
        let primal_short = shortest_per_class(self, Side::Primal, &primal_classes);
        let dual_short = shortest_per_class(self, Side::Dual, &dual_classes);

        let mut order: Vec<usize> = (1..4).collect();
        order.sort_by_key(|&c| (primal_short[c].0, c));
        let chosen = [order[0], order[1]];
        let dual_class_for = |j: usize| {
            (1..4)
                .find(|&q| (0..2).all(|i| HomologyClass(chosen[i] as u8).pairing(HomologyClass(q as u8)) == (i == j)))
                .expect("intersection pairing is nondegenerate")
        };
        LogicalOperators {
            primal: [primal_short[chosen[0]].1.clone(), primal_short[chosen[1]].1.clone()],
            dual: [
                dual_short[dual_class_for(0)].1.clone(),
                dual_short[dual_class_for(1)].1.clone(),
            ],
        }
    }

    /// Minimum weight of a homologically nontrivial cycle on `side`.
    ///
    /// The primal side gives the distance against Z errors, the dual side
    /// against X errors.
    pub fn code_distance(&self, side: Side) -> usize {
        let bases = self.cycle_bases();
        let basis = match side {
            Side::Primal => &bases.dual,
            Side::Dual => &bases.primal,
        };
        let classes = edge_classes(self, basis);
        shortest_per_class(self, side, &classes)[1..]
            .iter()
            .map(|(w, _)| *w)
            .min()
            .expect("three nontrivial classes")
    }

    /// Per-edge homology class on `side` against the given representatives
    /// of the opposite side. The class of an edge set is the XOR of its
    /// edges' classes.
    pub fn edge_classes_against(&self, opposite_reps: &[EdgeSet; 2]) -> Vec<u8> {
        edge_classes(self, opposite_reps)
    }
}

fn edge_classes(lat: &CodeLattice, basis: &[EdgeSet; 2]) -> Vec<u8> {
    (0..lat.n_edges())
        .map(|e| u8::from(basis[0].contains(e)) | (u8::from(basis[1].contains(e)) << 1))
        .collect()
}

/// Parent links of a BFS spanning tree: `(parent node, edge)` per node.
type TreeLinks = Vec<Option<(u32, u32)>>;

/// BFS spanning tree of the graph on `side`, avoiding `forbidden` edges.
/// Neighbours are scanned in ascending edge order.
fn spanning_tree(lat: &CodeLattice, side: Side, forbidden: &EdgeSet) -> (EdgeSet, TreeLinks) {
    let adj = lat.adjacency(side);
    let n = lat.n_nodes(side);
    let mut parent: TreeLinks = vec![None; n];
    let mut seen = vec![false; n];
    let mut tree = EdgeSet::with_capacity(lat.n_edges());
    let mut queue = VecDeque::from([0u32]);
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for &(y, e) in &adj[x as usize] {
            if forbidden.contains(e as usize) || seen[y as usize] {
                continue;
            }
            seen[y as usize] = true;
            parent[y as usize] = Some((x, e));
            tree.insert(e as usize);
            queue.push_back(y);
        }
    }
    debug_assert!(seen.iter().all(|&s| s), "graph minus forbidden edges is connected");
    (tree, parent)
}

fn tree_path(parent: &TreeLinks, a: u32, b: u32) -> EdgeSet {
    let mut path = EdgeSet::new();
    for start in [a, b] {
        let mut x = start;
        while let Some((p, e)) = parent[x as usize] {
            path.toggle(e as usize);
            x = p;
        }
    }
    path
}

/// Minimum-weight cycle of each class 0..4, by BFS on the four-sheeted
/// cover of the graph whose sheets are indexed by homology class.
fn shortest_per_class(lat: &CodeLattice, side: Side, classes: &[u8]) -> [(usize, EdgeSet); 4] {
    let adj = lat.adjacency(side);
    let n = lat.n_nodes(side);
    let mut best: [(usize, EdgeSet); 4] = std::array::from_fn(|_| (usize::MAX, EdgeSet::new()));
    best[0].0 = 0;
    let mut dist = vec![u32::MAX; 4 * n];
    let mut back: Vec<Option<(u32, u32)>> = vec![None; 4 * n];
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = u32::MAX);
        back.iter_mut().for_each(|b| *b = None);
        let src = 4 * s;
        dist[src] = 0;
        let mut queue = VecDeque::from([src as u32]);
        while let Some(state) = queue.pop_front() {
            let (x, c) = (state as usize / 4, state as usize % 4);
            for &(y, e) in &adj[x] {
                let next = 4 * y as usize + (c ^ classes[e as usize] as usize);
                if dist[next] == u32::MAX {
                    dist[next] = dist[state as usize] + 1;
                    back[next] = Some((state, e));
                    queue.push_back(next as u32);
                }
            }
        }
        for c in 1..4 {
            let d = dist[src + c] as usize;
            if d < best[c].0 {
                let mut cycle = EdgeSet::new();
                let mut state = src + c;
                while let Some((prev, e)) = back[state] {
                    cycle.toggle(e as usize);
                    state = prev as usize;
                }
                best[c] = (d, cycle);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parity_free(lat: &CodeLattice, edges: &EdgeSet, side: Side) -> bool {
        let mut deg = vec![0usize; lat.n_nodes(side)];
        for e in edges.iter() {
            let (a, b) = lat.edge_nodes(e, side);
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        deg.iter().all(|d| d % 2 == 0)
    }

    #[test]
    fn root_representatives_have_weight_three() {
        let lat = CodeLattice::build_torus_grid(3, 3).unwrap();
        let ops = lat.logical_representatives();
        for rep in ops.primal.iter().chain(&ops.dual) {
            assert_eq!(rep.len(), 3);
        }
        assert_eq!(ops.intersection_matrix(), [[true, false], [false, true]]);
        for rep in &ops.primal {
            assert!(parity_free(&lat, rep, Side::Primal));
        }
        for rep in &ops.dual {
            assert!(parity_free(&lat, rep, Side::Dual));
        }
    }

    #[test]
    fn distances_of_grids() {
        let root = CodeLattice::build_torus_grid(3, 3).unwrap();
        assert_eq!(root.code_distance(Side::Primal), 3);
        assert_eq!(root.code_distance(Side::Dual), 3);
        let g = CodeLattice::build_torus_grid(4, 4).unwrap();
        assert_eq!(g.code_distance(Side::Primal), 4);
        let r = CodeLattice::build_torus_grid(3, 5).unwrap();
        assert_eq!(r.code_distance(Side::Primal), 3);
    }

    #[test]
    fn representatives_classify_themselves() {
        let lat = CodeLattice::build_torus_grid(4, 3).unwrap();
        let ops = lat.logical_representatives();
        assert_eq!(ops.class_of(&ops.primal[0], Side::Primal), HomologyClass(1));
        assert_eq!(ops.class_of(&ops.primal[1], Side::Primal), HomologyClass(2));
        let face: EdgeSet = lat.face_edges(0).into_iter().map(|e| e as usize).collect();
        assert!(ops.class_of(&face, Side::Primal).is_trivial());
    }
}
