//! Per-qubit Pauli noise profiles and the erasure approximation used for
//! decoding.
//!
//! A [`NoiseProfile`] is lattice independent: overrides name faces or
//! vertices, and their edge neighbourhoods are looked up when the profile
//! is [resolved](NoiseProfile::resolve) against a concrete lattice.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::EdgeSet;
use crate::topology::{CodeLattice, Side};

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("invalid noise spec: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("bad override target `{0}`; expected `face N`, `vertex N` or `intersection A B`")]
    BadTarget(String),
    #[error("{what} {label} does not exist on a lattice with {available} of them")]
    UnknownLabel {
        what: &'static str,
        label: u32,
        available: usize,
    },
    #[error("probability {name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("unknown noise scenario `{0}`")]
    UnknownScenario(String),
}

/// The set of qubits an override acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Target {
    /// Edges on the boundary of a plaquette.
    Face(u32),
    /// Edges incident to a vertex.
    Vertex(u32),
    /// Edges shared by two plaquettes.
    Intersection(u32, u32),
}

impl FromStr for Target {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NoiseError::BadTarget(s.to_string());
        let words: Vec<&str> = s.split_whitespace().collect();
        let num = |w: &str| w.parse::<u32>().map_err(|_| bad());
        match words[..] {
            ["face", n] => Ok(Target::Face(num(n)?)),
            ["vertex", n] => Ok(Target::Vertex(num(n)?)),
            ["intersection", a, b] => Ok(Target::Intersection(num(a)?, num(b)?)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Target {
    type Error = NoiseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Target> for String {
    fn from(t: Target) -> String {
        t.to_string()
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Face(n) => write!(f, "face {n}"),
            Target::Vertex(n) => write!(f, "vertex {n}"),
            Target::Intersection(a, b) => write!(f, "intersection {a} {b}"),
        }
    }
}

impl Target {
    fn edges(&self, lat: &CodeLattice) -> Result<EdgeSet, NoiseError> {
        let face = |p: u32| {
            if (p as usize) < lat.n_faces() {
                Ok(lat.face_edges(p).into_iter().map(|e| e as usize).collect::<EdgeSet>())
            } else {
                Err(NoiseError::UnknownLabel {
                    what: "face",
                    label: p,
                    available: lat.n_faces(),
                })
            }
        };
        match *self {
            Target::Face(p) => face(p),
            Target::Vertex(v) if (v as usize) < lat.n_vertices() => {
                Ok(lat.vertex_edges(v).into_iter().map(|e| e as usize).collect())
            }
            Target::Vertex(v) => Err(NoiseError::UnknownLabel {
                what: "vertex",
                label: v,
                available: lat.n_vertices(),
            }),
            Target::Intersection(a, b) => {
                let (a, b) = (face(a)?, face(b)?);
                Ok(a.iter().filter(|&e| b.contains(e)).collect())
            }
        }
    }
}

/// Adjustment of the error rates on a set of qubits. Additive parts of all
/// overrides touching a qubit are summed first; absolute parts then replace
/// the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add_pz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_pz: Option<f64>,
}

impl Override {
    pub fn add_x(target: Target, px: f64) -> Self {
        Override {
            target,
            add_px: Some(px),
            add_pz: None,
            set_px: None,
            set_pz: None,
        }
    }

    pub fn set_x(target: Target, px: f64) -> Self {
        Override {
            target,
            add_px: None,
            add_pz: None,
            set_px: Some(px),
            set_pz: None,
        }
    }
}

/// Independent X and Z error rates per qubit, before resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProfile {
    pub base_px: f64,
    pub base_pz: f64,
    #[serde(default, rename = "override", skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<Override>,
}

impl NoiseProfile {
    pub fn uniform(px: f64, pz: f64) -> Self {
        NoiseProfile {
            base_px: px,
            base_pz: pz,
            overrides: Vec::new(),
        }
    }

    /// Pure dephasing: Z errors at rate `p`, no X errors.
    pub fn dephasing(p: f64) -> Self {
        Self::uniform(0.0, p)
    }

    pub fn with_override(mut self, o: Override) -> Self {
        self.overrides.push(o);
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, NoiseError> {
        let profile: NoiseProfile = toml::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("noise profiles always serialize")
    }

    fn validate(&self) -> Result<(), NoiseError> {
        let check = |name: &'static str, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(NoiseError::OutOfRange { name, value })
            }
        };
        check("base_px", self.base_px)?;
        check("base_pz", self.base_pz)?;
        for o in &self.overrides {
            for (name, v) in [("set_px", o.set_px), ("set_pz", o.set_pz)] {
                if let Some(v) = v {
                    check(name, v)?;
                }
            }
        }
        Ok(())
    }

    /// Per-qubit rates on `lat`.
    ///
    /// Rates are clamped to `[0, 1]`; if `px + pz` would exceed 1 the Z
    /// rate is lowered to `1 - px`.
    pub fn resolve(&self, lat: &CodeLattice) -> Result<NoiseTable, NoiseError> {
        self.validate()?;
        let n = lat.n_edges();
        let mut px = vec![self.base_px; n];
        let mut pz = vec![self.base_pz; n];
        let mut set_x: Vec<Option<f64>> = vec![None; n];
        let mut set_z: Vec<Option<f64>> = vec![None; n];
        for o in &self.overrides {
            for e in o.target.edges(lat)?.iter() {
                px[e] += o.add_px.unwrap_or(0.0);
                pz[e] += o.add_pz.unwrap_or(0.0);
                if o.set_px.is_some() {
                    set_x[e] = o.set_px;
                }
                if o.set_pz.is_some() {
                    set_z[e] = o.set_pz;
                }
            }
        }
        for e in 0..n {
            let x = set_x[e].unwrap_or(px[e]).clamp(0.0, 1.0);
            let z = set_z[e].unwrap_or(pz[e]).clamp(0.0, 1.0);
            px[e] = x;
            pz[e] = z.min(1.0 - x);
        }
        Ok(NoiseTable::new(px, pz))
    }
}

/// Resolved per-qubit rates, with sampling thresholds precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    px: Vec<f64>,
    pz: Vec<f64>,
    // erasure happens when the top 63 bits of a random word fall below
    // p * 2^63, so p = 1 always fires and p = 0 never does
    thr_x: Vec<u64>,
    thr_z: Vec<u64>,
}

fn threshold(p: f64) -> u64 {
    (p * (1u64 << 63) as f64).round() as u64
}

impl NoiseTable {
    pub fn new(px: Vec<f64>, pz: Vec<f64>) -> Self {
        assert_eq!(px.len(), pz.len());
        let thr_x = px.iter().map(|&p| threshold(p)).collect();
        let thr_z = pz.iter().map(|&p| threshold(p)).collect();
        NoiseTable { px, pz, thr_x, thr_z }
    }

    pub fn n_qubits(&self) -> usize {
        self.px.len()
    }

    pub fn px(&self) -> &[f64] {
        &self.px
    }

    pub fn pz(&self) -> &[f64] {
        &self.pz
    }

    /// Error rates of the sector whose errors are detected on `side`:
    /// Z errors on the primal graph, X errors on the dual graph.
    pub fn rates(&self, side: Side) -> &[f64] {
        match side {
            Side::Primal => &self.pz,
            Side::Dual => &self.px,
        }
    }

    pub fn is_silent(&self, side: Side) -> bool {
        self.rates(side).iter().all(|&p| p == 0.0)
    }

    /// Draws one erasure sample. Zero-rate sectors consume no randomness.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> ErasureSample {
        let mut sample = ErasureSample::default();
        self.sample_into(&mut sample, rng);
        sample
    }

    pub fn sample_into<R: RngCore + ?Sized>(&self, out: &mut ErasureSample, rng: &mut R) {
        fill_sector(&self.thr_x, &mut out.erased_x, &mut out.realized_x, rng);
        fill_sector(&self.thr_z, &mut out.erased_z, &mut out.realized_z, rng);
    }
}

fn fill_sector<R: RngCore + ?Sized>(thr: &[u64], erased: &mut EdgeSet, realized: &mut EdgeSet, rng: &mut R) {
    erased.clear();
    realized.clear();
    if thr.iter().all(|&t| t == 0) {
        return;
    }
    for (e, &t) in thr.iter().enumerate() {
        if rng.next_u64() >> 1 < t {
            erased.insert(e);
        }
    }
    // one fair coin per qubit, 64 at a time; always the same number of
    // draws so the stream does not depend on earlier samples
    let words = thr.len().div_ceil(64);
    erased.words_mut(thr.len());
    let coins = realized.words_mut(thr.len());
    for (c, &w) in coins[..words].iter_mut().zip(&erased.words()[..words]) {
        *c = w & rng.next_u64();
    }
}

/// Erased qubits per sector and the Pauli errors that actually occurred on
/// them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ErasureSample {
    pub erased_x: EdgeSet,
    pub erased_z: EdgeSet,
    pub realized_x: EdgeSet,
    pub realized_z: EdgeSet,
}

impl ErasureSample {
    /// `(erased, realized)` for the sector decoded on `side`.
    pub fn sector(&self, side: Side) -> (&EdgeSet, &EdgeSet) {
        match side {
            Side::Primal => (&self.erased_z, &self.realized_z),
            Side::Dual => (&self.erased_x, &self.realized_x),
        }
    }
}

/// Named profiles used by the built-in experiments.
pub fn scenario_profile(name: &str) -> Result<NoiseProfile, NoiseError> {
    let p = match name {
        "dephasing-0.10" => NoiseProfile::dephasing(0.1),
        "dephasing-0.14" => NoiseProfile::dephasing(0.14),
        "dephasing-0.16" => NoiseProfile::dephasing(0.16),
        "symmetric-0.09" => NoiseProfile::uniform(0.09, 0.09),
        "correlated-pair" => correlated_pair(4, 5),
        "faulty-plaquette" => faulty_plaquette(4),
        "raised-x" => NoiseProfile::uniform(0.04, 0.14),
        other => return Err(NoiseError::UnknownScenario(other.to_string())),
    };
    Ok(p)
}

pub const SCENARIO_PROFILES: &[&str] = &[
    "dephasing-0.10",
    "dephasing-0.14",
    "dephasing-0.16",
    "symmetric-0.09",
    "correlated-pair",
    "faulty-plaquette",
    "raised-x",
];

/// Correlated X noise around two neighbouring plaquettes: +0.5 on every
/// qubit bordering either, certain X error on the qubits they share.
pub fn correlated_pair(i: u32, j: u32) -> NoiseProfile {
    NoiseProfile::uniform(0.02, 0.1)
        .with_override(Override::add_x(Target::Face(i), 0.5))
        .with_override(Override::add_x(Target::Face(j), 0.5))
        .with_override(Override::set_x(Target::Intersection(i, j), 1.0))
}

/// One defective plaquette with X rate raised by 0.15 on its boundary.
pub fn faulty_plaquette(i: u32) -> NoiseProfile {
    NoiseProfile::uniform(0.02, 0.14).with_override(Override::add_x(Target::Face(i), 0.15))
}
