use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CodeLattice, Side};

/// SHA-256 of a percept's canonical bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PerceptDigest(#[serde(with = "hex_bytes")] pub [u8; 32]);

impl fmt::Debug for PerceptDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PerceptDigest({})", &hex::encode(self.0)[..16])
    }
}

impl fmt::Display for PerceptDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(serde::de::Error::custom)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))
    }
}

/// What the agent sees of a lattice: the ordered adjacency lists of the
/// primal and dual graphs with edges relabelled by first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Percept {
    pub canonical_bytes: Vec<u8>,
    pub digest: PerceptDigest,
}

impl CodeLattice {
    /// Canonical, edge-id independent encoding of the labelled lattice.
    ///
    /// Vertices are scanned in ascending label order. Each contributes its
    /// degree and its incident edges in rotation order, starting from the
    /// edge towards its smallest-labelled neighbour. Edges are numbered in
    /// order of first appearance. Faces follow with the same edge numbering.
    pub fn canonical_percept(&self) -> Percept {
        let mut relabel = vec![u32::MAX; self.n_edges()];
        let mut next_id = 0u32;
        let mut bytes = Vec::with_capacity(8 * (self.n_edges() + self.n_vertices() + self.n_faces()));
        for side in [Side::Primal, Side::Dual] {
            let n = self.n_nodes(side) as u32;
            bytes.extend_from_slice(&n.to_le_bytes());
            for node in 0..n {
                let ring = self.ring(node, side);
                bytes.extend_from_slice(&(ring.len() as u32).to_le_bytes());
                for e in ring {
                    let id = &mut relabel[e as usize];
                    if *id == u32::MAX {
                        *id = next_id;
                        next_id += 1;
                    }
                    bytes.extend_from_slice(&id.to_le_bytes());
                }
            }
        }
        let digest = PerceptDigest(Sha256::digest(&bytes).into());
        Percept {
            canonical_bytes: bytes,
            digest,
        }
    }

    /// Edges around a node in cyclic order, rotated to start at the edge
    /// whose far end has the smallest label.
    fn ring(&self, node: u32, side: Side) -> Vec<u32> {
        let darts = match side {
            Side::Primal => self.rotation(node),
            Side::Dual => self.face_boundary(node),
        };
        let far = |d: u32| {
            let opp = self.darts()[self.darts()[d as usize].opposite as usize];
            match side {
                Side::Primal => opp.vertex,
                Side::Dual => opp.face,
            }
        };
        let start = (0..darts.len())
            .min_by_key(|&i| (far(darts[i]), self.darts()[darts[i] as usize].edge))
            .unwrap_or(0);
        darts[start..]
            .iter()
            .chain(&darts[..start])
            .map(|&d| self.darts()[d as usize].edge)
            .collect()
    }
}
