//! Surface codes on the torus, stored as combinatorial maps.
//!
//! A lattice is a set of darts (half-edges). Every dart knows its
//! `opposite` dart on the same edge and its successor `next` in the
//! counter-clockwise rotation around its vertex. The face permutation is
//! `next ∘ opposite`; its orbits are the plaquettes. Each edge carries one
//! data qubit, each vertex an X-type stabilizer and each face a Z-type
//! stabilizer.
//!
//! Vertex and face labels are persistent dense integers: a move never
//! renames an existing vertex or face, it only appends new ones.

mod homology;
mod io;
mod moves;
mod percept;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use homology::{HomologyClass, LogicalOperators};
pub use moves::{Action, ActionRejection};
pub use percept::{Percept, PerceptDigest};

/// Smallest vertex or face degree a constrained lattice may have.
pub const MIN_DEGREE: usize = 3;
/// Largest vertex or face degree a constrained lattice may have.
pub const MAX_DEGREE: usize = 8;

/// Which graph of the embedding an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Primal,
    Dual,
}

impl Side {
    pub fn flag(self) -> u8 {
        match self {
            Side::Primal => 0,
            Side::Dual => 1,
        }
    }

    pub fn from_flag(flag: u8) -> Option<Side> {
        match flag {
            0 => Some(Side::Primal),
            1 => Some(Side::Dual),
            _ => None,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Primal => Side::Dual,
            Side::Dual => Side::Primal,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Primal => f.write_str("primal"),
            Side::Dual => f.write_str("dual"),
        }
    }
}

/// One half-edge of the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dart {
    pub opposite: u32,
    pub next: u32,
    pub vertex: u32,
    pub face: u32,
    pub edge: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("invalid grid dimensions {rows}x{cols}: {reason}")]
    InvalidDimensions {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },
    #[error("dart {dart}: {reason}")]
    BrokenDart { dart: usize, reason: String },
    #[error("{side} labels are not dense: {reason}")]
    Labels { side: Side, reason: String },
    #[error("euler characteristic is {0}, expected 0 for the torus")]
    EulerCharacteristic(i64),
    #[error("{0} graph is disconnected")]
    Disconnected(Side),
    #[error("{side} node {label} has degree {degree}, outside [{MIN_DEGREE}, {MAX_DEGREE}]")]
    DegreeOutOfRange { side: Side, label: u32, degree: usize },
    #[error("{side} graph has a double edge between {a} and {b}")]
    DoubleEdge { side: Side, a: u32, b: u32 },
    #[error("{side} graph has a loop at {label}")]
    Loop { side: Side, label: u32 },
    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: Action, reason: ActionRejection },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A torus-embedded lattice: the code, its dual and the qubit identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeLattice {
    darts: Vec<Dart>,
    n_initial_qubits: usize,
    n_vertices: usize,
    n_faces: usize,
    n_edges: usize,
    vertex_dart: Vec<u32>,
    face_dart: Vec<u32>,
    vertex_degree: Vec<u8>,
    face_degree: Vec<u8>,
    edge_darts: Vec<[u32; 2]>,
}

impl CodeLattice {
    /// Builds a lattice and checks every structural and code constraint.
    pub fn from_darts(darts: Vec<Dart>, n_initial_qubits: usize) -> Result<Self, LatticeError> {
        let lat = Self::from_darts_unconstrained(darts, n_initial_qubits)?;
        lat.check_code_constraints()?;
        Ok(lat)
    }

    /// Builds a lattice checking only that the darts form a torus map.
    ///
    /// Degree bounds, double edges and loops are allowed, which is what the
    /// tiny multigraph lattices used for decoder experiments need.
    pub fn from_darts_unconstrained(darts: Vec<Dart>, n_initial_qubits: usize) -> Result<Self, LatticeError> {
        let n = darts.len();
        for (i, d) in darts.iter().enumerate() {
            let broken = |reason: String| LatticeError::BrokenDart { dart: i, reason };
            let (opp, next) = (d.opposite as usize, d.next as usize);
            if opp >= n || next >= n {
                return Err(broken("link out of range".into()));
            }
            if opp == i {
                return Err(broken("opposite is a fixed point".into()));
            }
            if darts[opp].opposite as usize != i {
                return Err(broken("opposite is not an involution".into()));
            }
            if darts[opp].edge != d.edge {
                return Err(broken("opposite dart lies on another edge".into()));
            }
            if darts[next].vertex != d.vertex {
                return Err(broken("rotation leaves the vertex".into()));
            }
            let phi = darts[opp].next as usize;
            if darts[phi].face != d.face {
                return Err(broken("face permutation leaves the face".into()));
            }
        }
        let mut seen_next = vec![false; n];
        for (i, d) in darts.iter().enumerate() {
            if std::mem::replace(&mut seen_next[d.next as usize], true) {
                return Err(LatticeError::BrokenDart {
                    dart: i,
                    reason: "rotation is not a permutation".into(),
                });
            }
        }

        let n_edges = n / 2;
        let mut edge_darts = vec![[u32::MAX; 2]; n_edges];
        for (i, d) in darts.iter().enumerate() {
            let slot = edge_darts
                .get_mut(d.edge as usize)
                .ok_or_else(|| LatticeError::Labels {
                    side: Side::Primal,
                    reason: format!("edge id {} out of range", d.edge),
                })?;
            if slot[0] == u32::MAX {
                slot[0] = i as u32;
            } else if slot[1] == u32::MAX {
                slot[1] = i as u32;
            } else {
                return Err(LatticeError::BrokenDart {
                    dart: i,
                    reason: "edge has more than two darts".into(),
                });
            }
        }
        if !n.is_multiple_of(2) || edge_darts.iter().any(|s| s[1] == u32::MAX) {
            return Err(LatticeError::Labels {
                side: Side::Primal,
                reason: "edge ids are not dense".into(),
            });
        }

        let vertex_dart = orbit_representatives(&darts, Side::Primal, |i| darts[i].next as usize)?;
        let face_dart = orbit_representatives(&darts, Side::Dual, |i| darts[darts[i].opposite as usize].next as usize)?;
        let vertex_degree = orbit_sizes(&vertex_dart, |i| darts[i].next as usize);
        let face_degree = orbit_sizes(&face_dart, |i| darts[darts[i].opposite as usize].next as usize);

        let lat = CodeLattice {
            n_vertices: vertex_dart.len(),
            n_faces: face_dart.len(),
            n_edges,
            darts,
            n_initial_qubits,
            vertex_dart,
            face_dart,
            vertex_degree,
            face_degree,
            edge_darts,
        };
        let chi = lat.n_vertices as i64 - lat.n_edges as i64 + lat.n_faces as i64;
        if chi != 0 {
            return Err(LatticeError::EulerCharacteristic(chi));
        }
        for side in [Side::Primal, Side::Dual] {
            if !lat.is_connected(side) {
                return Err(LatticeError::Disconnected(side));
            }
        }
        Ok(lat)
    }

    /// Square grid on a `rows × cols` torus, the root code of every trial.
    pub fn build_torus_grid(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        if rows < 3 || cols < 3 {
            return Err(LatticeError::InvalidDimensions {
                rows,
                cols,
                reason: "both sides must be at least 3 to avoid double edges",
            });
        }
        Self::from_darts(grid_darts(rows, cols), 2 * rows * cols)
    }

    /// Square torus grid without the code constraints: any side ≥ 1 is
    /// accepted, producing loops and double edges on narrow grids.
    pub fn torus_grid_unconstrained(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        if rows == 0 || cols == 0 {
            return Err(LatticeError::InvalidDimensions {
                rows,
                cols,
                reason: "sides must be positive",
            });
        }
        Self::from_darts_unconstrained(grid_darts(rows, cols), 2 * rows * cols)
    }

    /// The same embedding seen from the dual side: faces become vertices.
    pub fn dual_view(&self) -> CodeLattice {
        let darts = self
            .darts
            .iter()
            .enumerate()
            .map(|(i, d)| Dart {
                opposite: d.opposite,
                next: self.phi(i) as u32,
                vertex: d.face,
                face: d.vertex,
                edge: d.edge,
            })
            .collect();
        CodeLattice {
            darts,
            n_initial_qubits: self.n_initial_qubits,
            n_vertices: self.n_faces,
            n_faces: self.n_vertices,
            n_edges: self.n_edges,
            vertex_dart: self.face_dart.clone(),
            face_dart: self.vertex_dart.clone(),
            vertex_degree: self.face_degree.clone(),
            face_degree: self.vertex_degree.clone(),
            edge_darts: self.edge_darts.clone(),
        }
    }

    /// The lattice as seen from `side`.
    pub fn view(&self, side: Side) -> std::borrow::Cow<'_, CodeLattice> {
        match side {
            Side::Primal => std::borrow::Cow::Borrowed(self),
            Side::Dual => std::borrow::Cow::Owned(self.dual_view()),
        }
    }

    /// Checks degree bounds and the absence of loops and double edges on
    /// both graphs.
    pub fn check_code_constraints(&self) -> Result<(), LatticeError> {
        for side in [Side::Primal, Side::Dual] {
            let degrees = self.degrees(side);
            for (label, &deg) in degrees.iter().enumerate() {
                let deg = deg as usize;
                if !(MIN_DEGREE..=MAX_DEGREE).contains(&deg) {
                    return Err(LatticeError::DegreeOutOfRange {
                        side,
                        label: label as u32,
                        degree: deg,
                    });
                }
            }
            let mut pairs: Vec<(u32, u32)> = (0..self.n_edges)
                .map(|e| self.edge_nodes(e, side))
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            if let Some(&(a, _)) = pairs.iter().find(|(a, b)| a == b) {
                return Err(LatticeError::Loop { side, label: a });
            }
            pairs.sort_unstable();
            if let Some(w) = pairs.windows(2).find(|w| w[0] == w[1]) {
                return Err(LatticeError::DoubleEdge {
                    side,
                    a: w[0].0,
                    b: w[0].1,
                });
            }
        }
        Ok(())
    }

    pub fn darts(&self) -> &[Dart] {
        &self.darts
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_faces(&self) -> usize {
        self.n_faces
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// Number of nodes of the graph on `side` (vertices or faces).
    pub fn n_nodes(&self, side: Side) -> usize {
        match side {
            Side::Primal => self.n_vertices,
            Side::Dual => self.n_faces,
        }
    }

    pub fn n_initial_qubits(&self) -> usize {
        self.n_initial_qubits
    }

    /// Qubits added by moves since the root code.
    pub fn qubits_added(&self) -> usize {
        self.n_edges.saturating_sub(self.n_initial_qubits)
    }

    pub fn vertex_degree(&self, v: u32) -> usize {
        self.vertex_degree[v as usize] as usize
    }

    pub fn face_degree(&self, p: u32) -> usize {
        self.face_degree[p as usize] as usize
    }

    fn degrees(&self, side: Side) -> &[u8] {
        match side {
            Side::Primal => &self.vertex_degree,
            Side::Dual => &self.face_degree,
        }
    }

    /// Face permutation: the next dart along the boundary of the same face.
    #[inline]
    pub fn phi(&self, dart: usize) -> usize {
        self.darts[self.darts[dart].opposite as usize].next as usize
    }

    /// Darts leaving `v`, in rotation order.
    pub fn rotation(&self, v: u32) -> Vec<u32> {
        let start = self.vertex_dart[v as usize];
        orbit(start, |d| self.darts[d as usize].next)
    }

    /// Darts along the boundary of face `p`.
    pub fn face_boundary(&self, p: u32) -> Vec<u32> {
        let start = self.face_dart[p as usize];
        orbit(start, |d| self.phi(d as usize) as u32)
    }

    /// 𝒩(v): the edges incident to vertex `v`.
    pub fn vertex_edges(&self, v: u32) -> Vec<u32> {
        self.rotation(v)
            .into_iter()
            .map(|d| self.darts[d as usize].edge)
            .collect()
    }

    /// 𝒩(p): the edges on the boundary of face `p`.
    pub fn face_edges(&self, p: u32) -> Vec<u32> {
        self.face_boundary(p)
            .into_iter()
            .map(|d| self.darts[d as usize].edge)
            .collect()
    }

    /// Edges incident to node `label` of the graph on `side`.
    pub fn node_edges(&self, label: u32, side: Side) -> Vec<u32> {
        match side {
            Side::Primal => self.vertex_edges(label),
            Side::Dual => self.face_edges(label),
        }
    }

    pub fn edge_darts(&self, e: usize) -> [u32; 2] {
        self.edge_darts[e]
    }

    /// Endpoints of edge `e` on `side`: its two vertices, or the two faces
    /// it separates.
    #[inline]
    pub fn edge_nodes(&self, e: usize, side: Side) -> (u32, u32) {
        let [a, b] = self.edge_darts[e];
        let (da, db) = (&self.darts[a as usize], &self.darts[b as usize]);
        match side {
            Side::Primal => (da.vertex, db.vertex),
            Side::Dual => (da.face, db.face),
        }
    }

    fn is_connected(&self, side: Side) -> bool {
        let n = self.n_nodes(side);
        if n == 0 {
            return false;
        }
        let adj = self.adjacency(side);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &adj[x] {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    count += 1;
                    queue.push_back(y as usize);
                }
            }
        }
        count == n
    }

    /// Per node, the `(neighbour, edge)` pairs of the graph on `side`, in
    /// ascending edge order.
    pub fn adjacency(&self, side: Side) -> Vec<Vec<(u32, u32)>> {
        let mut adj = vec![Vec::new(); self.n_nodes(side)];
        for e in 0..self.n_edges {
            let (a, b) = self.edge_nodes(e, side);
            adj[a as usize].push((b, e as u32));
            if a != b {
                adj[b as usize].push((a, e as u32));
            } else {
                adj[a as usize].push((a, e as u32));
            }
        }
        adj
    }

    /// Number of X-type (vertex) and Z-type (face) stabilizers.
    pub fn stabilizer_counts(&self) -> (usize, usize) {
        (self.n_vertices, self.n_faces)
    }
}

fn orbit(start: u32, mut step: impl FnMut(u32) -> u32) -> Vec<u32> {
    let mut out = vec![start];
    let mut d = step(start);
    while d != start {
        out.push(d);
        d = step(d);
    }
    out
}

/// One dart per label, after checking that labels are dense and that each
/// label is exactly one orbit.
fn orbit_representatives(darts: &[Dart], side: Side, step: impl Fn(usize) -> usize) -> Result<Vec<u32>, LatticeError> {
    let label = |i: usize| match side {
        Side::Primal => darts[i].vertex,
        Side::Dual => darts[i].face,
    };
    let n_labels = darts
        .iter()
        .enumerate()
        .map(|(i, _)| label(i) as usize + 1)
        .max()
        .unwrap_or(0);
    let mut rep = vec![u32::MAX; n_labels];
    let mut visited = vec![false; darts.len()];
    for i in 0..darts.len() {
        if visited[i] {
            continue;
        }
        let l = label(i) as usize;
        if rep[l] != u32::MAX {
            return Err(LatticeError::Labels {
                side,
                reason: format!("label {l} covers more than one orbit"),
            });
        }
        rep[l] = i as u32;
        let mut d = i;
        loop {
            visited[d] = true;
            d = step(d);
            if d == i {
                break;
            }
        }
    }
    if let Some(missing) = rep.iter().position(|&r| r == u32::MAX) {
        return Err(LatticeError::Labels {
            side,
            reason: format!("label {missing} is unused"),
        });
    }
    Ok(rep)
}

fn orbit_sizes(reps: &[u32], step: impl Fn(usize) -> usize) -> Vec<u8> {
    reps.iter()
        .map(|&r| {
            let mut n = 1usize;
            let mut d = step(r as usize);
            while d != r as usize {
                n += 1;
                d = step(d);
            }
            n.min(u8::MAX as usize) as u8
        })
        .collect()
}

/// Darts of the square torus grid.
///
/// Vertex `(r, c)` has label `r·cols + c`; face `(r, c)` is the square whose
/// lower-left corner is vertex `(r, c)` and has the same label. Horizontal
/// edges come first (`r·cols + c`), vertical edges after them. Edge `e` owns
/// darts `2e` (at its lower-left endpoint) and `2e + 1`.
fn grid_darts(rows: usize, cols: usize) -> Vec<Dart> {
    let node = |r: usize, c: usize| ((r % rows) * cols + (c % cols)) as u32;
    let h = |r: usize, c: usize| node(r, c) as usize;
    let v = |r: usize, c: usize| rows * cols + node(r, c) as usize;
    let up = |r: usize| (r + rows - 1) % rows;
    let left = |c: usize| (c + cols - 1) % cols;

    let n_edges = 2 * rows * cols;
    let mut darts = vec![
        Dart {
            opposite: 0,
            next: 0,
            vertex: 0,
            face: 0,
            edge: 0,
        };
        2 * n_edges
    ];
    for r in 0..rows {
        for c in 0..cols {
            let east = 2 * h(r, c);
            let north = 2 * v(r, c);
            let west = 2 * h(r, left(c)) + 1;
            let south = 2 * v(up(r), c) + 1;
            let faces = [
                (east, node(up(r), c)),
                (north, node(r, c)),
                (west, node(r, left(c))),
                (south, node(up(r), left(c))),
            ];
            let ring = [east, north, west, south];
            for (k, &(d, face)) in faces.iter().enumerate() {
                darts[d] = Dart {
                    opposite: (d ^ 1) as u32,
                    next: ring[(k + 1) % 4] as u32,
                    vertex: node(r, c),
                    face,
                    edge: (d / 2) as u32,
                };
            }
        }
    }
    darts
}
