//! The two deformation moves.
//!
//! Both moves are a vertex split on one of the two graphs. Splitting vertex
//! `v` cuts its rotation at two corners, lying in faces `p1` and `p2`; one
//! arc of darts stays at `v`, the other moves to a fresh vertex, and a new
//! edge joins the two. On the primal side this adds an X-type stabilizer;
//! on the dual side it splits a plaquette and adds a Z-type stabilizer.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CodeLattice, Dart, LatticeError, Side, MAX_DEGREE, MIN_DEGREE};

/// A move `(d, v, p1, p2)`: split vertex `v` of the graph on side `d` so that
/// faces `p1 < p2` of that graph become adjacent across the new edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub side: Side,
    pub vertex: u32,
    pub p1: u32,
    pub p2: u32,
}

impl Action {
    pub fn new(side: Side, vertex: u32, p1: u32, p2: u32) -> Self {
        Action {
            side,
            vertex,
            p1: p1.min(p2),
            p2: p1.max(p2),
        }
    }

    /// True for primal vertex splits, which add an X-type stabilizer.
    pub fn adds_x_stabilizer(&self) -> bool {
        self.side == Side::Primal
    }

    pub fn as_tuple(&self) -> (u8, u32, u32, u32) {
        (self.side.flag(), self.vertex, self.p1, self.p2)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.side.flag(), self.vertex, self.p1, self.p2)
    }
}

/// Why a candidate split is not a legal action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ActionRejection {
    #[error("vertex does not exist")]
    UnknownVertex,
    #[error("vertex degree {0} is below 4, one offspring would have degree < {MIN_DEGREE}")]
    VertexDegreeTooSmall(usize),
    #[error("face {0} is not incident to the vertex")]
    FaceNotIncident(u32),
    #[error("p1 and p2 are the same face")]
    SameFace,
    #[error("face {0} touches the vertex at more than one corner")]
    AmbiguousCorner(u32),
    #[error("one arc of the split has a single dart, an offspring would have degree < {MIN_DEGREE}")]
    ArcTooShort,
    #[error("face {face} would reach degree {degree} > {MAX_DEGREE}")]
    FaceDegreeTooLarge { face: u32, degree: usize },
    #[error("faces are already adjacent, the new edge would be a double edge")]
    DoubleEdge,
}

/// Where to cut the rotation of a vertex, in the view of the chosen side.
#[derive(Debug, Clone, Copy)]
struct SplitPlan {
    vertex: u32,
    /// Rotation positions of the corners lying in `p1` and `p2`.
    cut_a: usize,
    cut_b: usize,
}

impl CodeLattice {
    /// Every legal action, ordered by side, vertex, then faces.
    pub fn enumerate_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        for side in [Side::Primal, Side::Dual] {
            let view = self.view(side);
            view.collect_splits(side, &mut out);
        }
        out
    }

    /// Number of legal actions, without materialising them.
    pub fn count_actions(&self) -> usize {
        let mut out = Vec::new();
        self.collect_splits(Side::Primal, &mut out);
        self.dual_view().collect_splits(Side::Dual, &mut out);
        out.len()
    }

    /// Checks an action against the lattice without applying it.
    pub fn check_action(&self, action: &Action) -> Result<(), ActionRejection> {
        self.view(action.side).plan_split(action).map(|_| ())
    }

    /// Applies a legal action and returns the deformed lattice.
    pub fn apply_action(&self, action: &Action) -> Result<CodeLattice, LatticeError> {
        let illegal = |reason| LatticeError::IllegalAction {
            action: *action,
            reason,
        };
        match action.side {
            Side::Primal => {
                let plan = self.plan_split(action).map_err(illegal)?;
                self.split_vertex(plan)
            }
            Side::Dual => {
                let dual = self.dual_view();
                let plan = dual.plan_split(action).map_err(illegal)?;
                Ok(dual.split_vertex(plan)?.dual_view())
            }
        }
    }

    /// Legal splits of this lattice's own vertices, tagged with `side`.
    fn collect_splits(&self, side: Side, out: &mut Vec<Action>) {
        for v in 0..self.n_vertices() as u32 {
            let deg = self.vertex_degree(v);
            if deg < 4 {
                continue;
            }
            let corners = self.corner_faces(v);
            for i in 0..deg {
                for j in (i + 2)..deg {
                    if deg - (j - i) < 2 {
                        continue;
                    }
                    let action = Action::new(side, v, corners[i], corners[j]);
                    if self.check_cut(v, &corners, i, j).is_ok() {
                        out.push(action);
                    }
                }
            }
        }
        let start = out.partition_point(|a| a.side < side);
        out[start..].sort_unstable();
    }

    /// Face of the corner before each dart of the rotation of `v`.
    ///
    /// With the face permutation `next ∘ opposite`, the corner between
    /// rotation darts `d[i-1]` and `d[i]` belongs to the face of `d[i]`.
    fn corner_faces(&self, v: u32) -> Vec<u32> {
        self.rotation(v)
            .into_iter()
            .map(|d| self.darts()[d as usize].face)
            .collect()
    }

    fn check_cut(&self, v: u32, corners: &[u32], i: usize, j: usize) -> Result<(), ActionRejection> {
        let deg = corners.len();
        let (p1, p2) = (corners[i], corners[j]);
        if p1 == p2 {
            return Err(ActionRejection::SameFace);
        }
        for p in [p1, p2] {
            if corners.iter().filter(|&&c| c == p).count() > 1 {
                return Err(ActionRejection::AmbiguousCorner(p));
            }
        }
        let arc = j - i;
        if arc < 2 || deg - arc < 2 {
            return Err(ActionRejection::ArcTooShort);
        }
        for p in [p1, p2] {
            let degree = self.face_degree(p) + 1;
            if degree > MAX_DEGREE {
                return Err(ActionRejection::FaceDegreeTooLarge { face: p, degree });
            }
        }
        if self.faces_adjacent(p1, p2) {
            return Err(ActionRejection::DoubleEdge);
        }
        let _ = v;
        Ok(())
    }

    fn faces_adjacent(&self, p: u32, q: u32) -> bool {
        self.face_boundary(p).into_iter().any(|d| {
            let opp = self.darts()[d as usize].opposite as usize;
            self.darts()[opp].face == q
        })
    }

    fn plan_split(&self, action: &Action) -> Result<SplitPlan, ActionRejection> {
        let v = action.vertex;
        if v as usize >= self.n_vertices() {
            return Err(ActionRejection::UnknownVertex);
        }
        let deg = self.vertex_degree(v);
        if deg < 4 {
            return Err(ActionRejection::VertexDegreeTooSmall(deg));
        }
        if action.p1 == action.p2 {
            return Err(ActionRejection::SameFace);
        }
        let corners = self.corner_faces(v);
        let find = |p: u32| {
            corners
                .iter()
                .position(|&c| c == p)
                .ok_or(ActionRejection::FaceNotIncident(p))
        };
        let (a, b) = (find(action.p1)?, find(action.p2)?);
        let (i, j) = (a.min(b), a.max(b));
        self.check_cut(v, &corners, i, j)?;
        Ok(SplitPlan {
            vertex: v,
            cut_a: i,
            cut_b: j,
        })
    }

    /// Splits a vertex of this lattice. The arc holding the smallest edge
    /// id keeps the old label; the other arc goes to a new vertex labelled
    /// `n_vertices`.
    fn split_vertex(&self, plan: SplitPlan) -> Result<CodeLattice, LatticeError> {
        let rot = self.rotation(plan.vertex);
        let arc_a: Vec<u32> = rot[plan.cut_a..plan.cut_b].to_vec();
        let arc_b: Vec<u32> = rot[plan.cut_b..].iter().chain(&rot[..plan.cut_a]).copied().collect();
        let min_edge = |arc: &[u32]| arc.iter().map(|&d| self.darts()[d as usize].edge).min();
        let (keep, moved) = if min_edge(&arc_a) < min_edge(&arc_b) {
            (arc_a, arc_b)
        } else {
            (arc_b, arc_a)
        };

        let mut darts: Vec<Dart> = self.darts().to_vec();
        let new_edge = self.n_edges() as u32;
        let new_vertex = self.n_vertices() as u32;
        let at_old = darts.len() as u32;
        let at_new = at_old + 1;
        let face_of = |d: u32| self.darts()[d as usize].face;

        darts[*keep.last().unwrap() as usize].next = at_old;
        darts[*moved.last().unwrap() as usize].next = at_new;
        for &d in &moved {
            darts[d as usize].vertex = new_vertex;
        }
        darts.push(Dart {
            opposite: at_new,
            next: keep[0],
            vertex: plan.vertex,
            face: face_of(moved[0]),
            edge: new_edge,
        });
        darts.push(Dart {
            opposite: at_old,
            next: moved[0],
            vertex: new_vertex,
            face: face_of(keep[0]),
            edge: new_edge,
        });
        CodeLattice::from_darts(darts, self.n_initial_qubits())
    }
}
