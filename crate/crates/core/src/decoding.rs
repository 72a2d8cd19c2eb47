//! Syndromes, erasure and Union-Find decoders, and the logical failure
//! test.
//!
//! Z errors are detected by vertex stabilizers and decoded on the primal
//! graph; X errors by plaquettes, on the dual graph. Both run through the
//! same code with a [`DecodingGraph`] built for the relevant side.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::EdgeSet;
use crate::topology::{CodeLattice, Side};

/// Error type, named by the Pauli it applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    X,
    Z,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::Z, Sector::X];

    /// The graph on which errors of this sector show up as defects.
    pub fn side(self) -> Side {
        match self {
            Sector::Z => Side::Primal,
            Sector::X => Side::Dual,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sector::X => f.write_str("X"),
            Sector::Z => f.write_str("Z"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("syndrome is not supported by the erasure: component rooted at {root} has odd parity")]
    Inconsistent { root: u32 },
    #[error("residual is not a cycle: {defects} defects remain")]
    NotACycle { defects: usize },
    #[error("syndrome has an odd number of defects ({0})")]
    OddSyndrome(usize),
}

/// Defective stabilizers, sorted by label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Syndrome {
    pub defects: Vec<u32>,
}

impl Syndrome {
    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correction {
    pub edges: EdgeSet,
    pub sector: Sector,
}

/// Everything the decoders need about one side of a lattice.
#[derive(Debug, Clone)]
pub struct DecodingGraph {
    sector: Sector,
    n_nodes: usize,
    ends: Vec<(u32, u32)>,
    adj: Vec<Vec<(u32, u32)>>,
    /// Homology class of each edge against the opposite side's logical
    /// representatives; a cycle's class is the XOR over its edges.
    classes: Vec<u8>,
}

impl DecodingGraph {
    pub fn new(lat: &CodeLattice, sector: Sector) -> Self {
        let ops = lat.logical_representatives();
        Self::with_representatives(lat, sector, ops.on(sector.side().other()))
    }

    /// Builds the graph measuring failure against the given logical
    /// representatives of the opposite side.
    pub fn with_representatives(lat: &CodeLattice, sector: Sector, opposite: &[EdgeSet; 2]) -> Self {
        let side = sector.side();
        DecodingGraph {
            sector,
            n_nodes: lat.n_nodes(side),
            ends: (0..lat.n_edges()).map(|e| lat.edge_nodes(e, side)).collect(),
            adj: lat.adjacency(side),
            classes: lat.edge_classes_against(opposite),
        }
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.ends.len()
    }

    pub fn syndrome(&self, errors: &EdgeSet) -> Syndrome {
        let mut odd = vec![false; self.n_nodes];
        for e in errors.iter() {
            let (a, b) = self.ends[e];
            odd[a as usize] ^= true;
            odd[b as usize] ^= true;
        }
        Syndrome {
            defects: (0..self.n_nodes as u32).filter(|&v| odd[v as usize]).collect(),
        }
    }

    /// Homology class of an edge set (meaningful for cycles).
    pub fn class_of(&self, edges: &EdgeSet) -> u8 {
        edges.iter().fold(0, |c, e| c ^ self.classes[e])
    }

    pub fn is_logical_failure(&self, residual: &EdgeSet) -> Result<bool, DecodeError> {
        let syn = self.syndrome(residual);
        if !syn.is_empty() {
            return Err(DecodeError::NotACycle {
                defects: syn.defects.len(),
            });
        }
        Ok(self.class_of(residual) != 0)
    }

    pub fn peel_decode(&self, erased: &EdgeSet, syn: &Syndrome) -> Result<Correction, DecodeError> {
        let mut scratch = PeelScratch::new(self.n_nodes);
        for &v in &syn.defects {
            scratch.defect[v as usize] = true;
        }
        let mut edges = EdgeSet::with_capacity(self.n_edges());
        self.peel_with(erased, &mut scratch, &mut edges)?;
        Ok(Correction {
            edges,
            sector: self.sector,
        })
    }

    /// Peeling core. Expects `scratch.defect` to hold the syndrome and
    /// every other scratch buffer clean; leaves them clean again. The
    /// correction is XORed into `out`.
    pub(crate) fn peel_with(
        &self,
        erased: &EdgeSet,
        scratch: &mut PeelScratch,
        out: &mut EdgeSet,
    ) -> Result<(), DecodeError> {
        // BFS forest of the erased subgraph, roots and edges in ascending order
        let order = &mut scratch.order;
        for e in erased.iter() {
            let (root, _) = self.ends[e];
            if scratch.seen[root as usize] {
                continue;
            }
            scratch.seen[root as usize] = true;
            scratch.parent[root as usize] = None;
            let start = order.len();
            order.push(root);
            let mut head = start;
            while head < order.len() {
                let x = order[head];
                head += 1;
                for &(y, f) in &self.adj[x as usize] {
                    if !scratch.seen[y as usize] && erased.contains(f as usize) {
                        scratch.seen[y as usize] = true;
                        scratch.parent[y as usize] = Some((x, f));
                        order.push(y);
                    }
                }
            }
        }
        // peel leaves inward
        let mut bad = None;
        for &x in order.iter().rev() {
            let xi = x as usize;
            match scratch.parent[xi] {
                Some((p, f)) => {
                    if scratch.defect[xi] {
                        out.toggle(f as usize);
                        scratch.defect[xi] = false;
                        scratch.defect[p as usize] ^= true;
                    }
                }
                None => {
                    if scratch.defect[xi] {
                        bad.get_or_insert(x);
                    }
                }
            }
        }
        for &x in order.iter() {
            scratch.seen[x as usize] = false;
            scratch.defect[x as usize] = false;
        }
        order.clear();
        // defects outside the erasure are inconsistent too
        if let Some(v) = scratch.defect.iter().position(|&d| d) {
            scratch.defect.iter_mut().for_each(|d| *d = false);
            return Err(DecodeError::Inconsistent { root: v as u32 });
        }
        match bad {
            Some(root) => Err(DecodeError::Inconsistent { root }),
            None => Ok(()),
        }
    }

    /// Rank of the homology classes spanned by cycles inside `erased`.
    pub fn homology_rank(&self, erased: &EdgeSet) -> usize {
        self.rank_with(erased, &mut PeelScratch::new(self.n_nodes))
    }

    /// Homology rank using reusable buffers; leaves `scratch` clean.
    pub(crate) fn rank_with(&self, erased: &EdgeSet, scratch: &mut PeelScratch) -> usize {
        let mut span = SpanZ2x2::default();
        let order = &mut scratch.order;
        for e in erased.iter() {
            let (root, _) = self.ends[e];
            if scratch.seen[root as usize] {
                continue;
            }
            scratch.seen[root as usize] = true;
            scratch.potential[root as usize] = 0;
            let mut head = order.len();
            order.push(root);
            while head < order.len() {
                let x = order[head];
                head += 1;
                let px = scratch.potential[x as usize];
                for &(y, f) in &self.adj[x as usize] {
                    if !erased.contains(f as usize) {
                        continue;
                    }
                    let through = px ^ self.classes[f as usize];
                    if scratch.seen[y as usize] {
                        // non-tree edges are met from both ends and tree
                        // edges once from the child; both add only
                        // redundant or zero vectors
                        span.insert(scratch.potential[y as usize] ^ through);
                    } else {
                        scratch.seen[y as usize] = true;
                        scratch.potential[y as usize] = through;
                        order.push(y);
                    }
                }
            }
        }
        for &x in order.iter() {
            scratch.seen[x as usize] = false;
        }
        order.clear();
        span.rank()
    }

    /// Union-Find decoding of a syndrome on the whole graph.
    pub fn union_find_decode(&self, syn: &Syndrome) -> Result<Correction, DecodeError> {
        if syn.defects.len() % 2 == 1 {
            return Err(DecodeError::OddSyndrome(syn.defects.len()));
        }
        let grown = self.grow_clusters(&syn.defects);
        self.peel_decode(&grown, syn)
    }

    /// Grows odd clusters by half-edges until every cluster has even
    /// parity; returns the fully grown edges.
    fn grow_clusters(&self, defects: &[u32]) -> EdgeSet {
        let n = self.n_nodes;
        let mut uf = Clusters::new(n);
        for &d in defects {
            uf.parity[d as usize] = true;
        }
        let mut support = vec![0u8; self.n_edges()];
        let mut boundary: Vec<Vec<u32>> = (0..n as u32).map(|v| vec![v]).collect();
        let mut grown = EdgeSet::with_capacity(self.n_edges());
        let mut fusions = Vec::new();
        loop {
            let mut odd: Vec<u32> = defects.iter().map(|&d| uf.find(d)).collect();
            odd.retain(|&r| uf.parity[r as usize]);
            odd.sort_unstable();
            odd.dedup();
            if odd.is_empty() {
                return grown;
            }
            for &root in &odd {
                for &x in &boundary[root as usize] {
                    for &(_, f) in &self.adj[x as usize] {
                        let s = &mut support[f as usize];
                        if *s < 2 {
                            *s += 1;
                            if *s == 2 {
                                grown.insert(f as usize);
                                fusions.push(f);
                            }
                        }
                    }
                }
            }
            for f in fusions.drain(..) {
                let (a, b) = self.ends[f as usize];
                let (ra, rb) = (uf.find(a), uf.find(b));
                if ra != rb {
                    let (keep, gone) = uf.union(ra, rb);
                    let moved = std::mem::take(&mut boundary[gone as usize]);
                    boundary[keep as usize].extend(moved);
                }
            }
            for &root in &odd {
                let r = uf.find(root) as usize;
                let mut list = std::mem::take(&mut boundary[r]);
                list.retain(|&x| self.adj[x as usize].iter().any(|&(_, f)| support[f as usize] < 2));
                list.sort_unstable();
                list.dedup();
                boundary[r] = list;
            }
        }
    }
}

/// Reusable buffers for repeated peeling on one graph.
#[derive(Debug, Clone)]
pub(crate) struct PeelScratch {
    pub(crate) defect: Vec<bool>,
    seen: Vec<bool>,
    parent: Vec<Option<(u32, u32)>>,
    potential: Vec<u8>,
    order: Vec<u32>,
}

impl PeelScratch {
    pub(crate) fn new(n_nodes: usize) -> Self {
        PeelScratch {
            defect: vec![false; n_nodes],
            seen: vec![false; n_nodes],
            parent: vec![None; n_nodes],
            potential: vec![0; n_nodes],
            order: Vec::with_capacity(n_nodes),
        }
    }
}

/// Subspace of GF(2)^2 spanned by inserted vectors.
#[derive(Debug, Default)]
struct SpanZ2x2 {
    seen: [bool; 4],
}

impl SpanZ2x2 {
    fn insert(&mut self, v: u8) {
        self.seen[v as usize] = true;
    }

    fn rank(&self) -> usize {
        match self.seen[1..].iter().filter(|&&s| s).count() {
            0 => 0,
            1 => 1,
            _ => 2,
        }
    }
}

/// Weighted union-find with path compression. Ties in size go to the
/// smaller root label.
struct Clusters {
    parent: Vec<u32>,
    size: Vec<u32>,
    parity: Vec<bool>,
}

impl Clusters {
    fn new(n: usize) -> Self {
        Clusters {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            parity: vec![false; n],
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut x = x;
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    /// Merges two roots; returns `(surviving root, absorbed root)`.
    fn union(&mut self, a: u32, b: u32) -> (u32, u32) {
        let (sa, sb) = (self.size[a as usize], self.size[b as usize]);
        let (keep, gone) = if sa > sb || (sa == sb && a < b) { (a, b) } else { (b, a) };
        self.parent[gone as usize] = keep;
        self.size[keep as usize] += self.size[gone as usize];
        self.parity[keep as usize] ^= self.parity[gone as usize];
        (keep, gone)
    }
}

pub fn syndrome(lat: &CodeLattice, errors: &EdgeSet, sector: Sector) -> Syndrome {
    let side = sector.side();
    let mut odd = vec![false; lat.n_nodes(side)];
    for e in errors.iter() {
        let (a, b) = lat.edge_nodes(e, side);
        odd[a as usize] ^= true;
        odd[b as usize] ^= true;
    }
    Syndrome {
        defects: (0..odd.len() as u32).filter(|&v| odd[v as usize]).collect(),
    }
}

pub fn peel_decode(
    lat: &CodeLattice,
    erased: &EdgeSet,
    syn: &Syndrome,
    sector: Sector,
) -> Result<Correction, DecodeError> {
    DecodingGraph::new(lat, sector).peel_decode(erased, syn)
}

pub fn homology_rank(lat: &CodeLattice, erased: &EdgeSet, sector: Sector) -> usize {
    DecodingGraph::new(lat, sector).homology_rank(erased)
}

pub fn union_find_decode(lat: &CodeLattice, syn: &Syndrome, sector: Sector) -> Result<Correction, DecodeError> {
    DecodingGraph::new(lat, sector).union_find_decode(syn)
}

pub fn is_logical_failure(lat: &CodeLattice, residual: &EdgeSet, sector: Sector) -> Result<bool, DecodeError> {
    DecodingGraph::new(lat, sector).is_logical_failure(residual)
}
