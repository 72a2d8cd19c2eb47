//! Adaptable surface-code quantum memories on the torus.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: torus-embedded lattices as combinatorial maps, the two
//!   deformation moves, percept encoding, logical operators and distance.
//! - [`noise`]: per-qubit Pauli profiles and the erasure approximation.
//! - [`decoding`]: syndromes, the peeling erasure decoder, Union-Find and
//!   homological failure checks.
//! - [`estimation`]: Monte Carlo and exact logical error rates.
//! - [`agent`]: the projective simulation clip network.
//! - [`environment`]: trials, rewards, scenarios and learning curves.
//! - [`search`]: census and random exploration of the code space.

pub mod agent;
pub mod bitset;
pub mod decoding;
pub mod environment;
pub mod estimation;
pub mod noise;
pub mod search;
pub mod topology;

pub use bitset::EdgeSet;
pub use topology::{Action, CodeLattice, LatticeError, Percept, Side};
