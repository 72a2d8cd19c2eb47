//! Projective simulation agent with a two-layer clip network.
//!
//! Percept clips connect to the actions available in that percept. Each
//! edge carries an `h` weight, which sets the softmax policy, and a glow
//! value `g`, which marks recently traversed edges so that a later reward
//! reaches them. Every interaction applies
//!
//! ```text
//! h <- h + λ g + γ (1 - h)        g <- (1 - η) g
//! ```
//!
//! to all edges. Between rewards `λ = 0` and the update has a closed form,
//! so a percept's arrays are only brought up to date when it is read or
//! rewarded.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Action, PerceptDigest};

/// Glow below this is treated as zero and the percept stops receiving
/// rewards.
const GLOW_FLOOR: f64 = 1e-20;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("percept has no available actions")]
    TerminalPercept,
    #[error("no percept with index {0}")]
    UnknownPercept(usize),
    #[error("invalid snapshot: {0}")]
    Snapshot(#[from] serde_json::Error),
}

/// Learning hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsParams {
    /// Softmax inverse temperature.
    pub beta: f64,
    /// Glow damping.
    pub eta: f64,
    /// Forgetting rate.
    pub gamma: f64,
    /// Deletion margin: old percepts with mean `h < 1 + delta` are dropped.
    pub delta: f64,
    /// Rewarded trials a percept survives before it may be deleted.
    pub tau: u64,
    /// Zero all glow at the end of every trial.
    #[serde(default)]
    pub reset_glow: bool,
}

impl Default for PsParams {
    fn default() -> Self {
        PsParams {
            beta: 2.0,
            eta: 0.05,
            gamma: 0.01,
            delta: 0.01,
            tau: 30,
            reset_glow: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Clip {
    digest: PerceptDigest,
    actions: Vec<Action>,
    /// `h - 1` per edge, as of step `synced_at`.
    excess: Vec<f64>,
    glow: Vec<f64>,
    synced_at: u64,
    created_trial: u64,
    /// Rewarded-trial counter value at creation.
    created_rewarded: u64,
    glowing: bool,
}

impl Clip {
    /// Applies the `λ = 0` updates up to step `now`.
    fn sync(&mut self, now: u64, p: &PsParams) {
        let s = now - self.synced_at;
        if s == 0 {
            return;
        }
        let forget = (1.0 - p.gamma).powf(s as f64);
        self.excess.iter_mut().for_each(|x| *x *= forget);
        if self.glowing {
            let decay = (1.0 - p.eta).powf(s as f64);
            self.glow.iter_mut().for_each(|g| *g *= decay);
        }
        self.synced_at = now;
    }
}

/// What [`ClipNetwork::end_trial`] removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCleanup {
    /// Percepts created in an unrewarded trial.
    pub discarded: usize,
    /// Old percepts whose weights decayed back to near uniform.
    pub forgotten: usize,
}

/// The agent's memory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClipNetwork {
    params: PsParams,
    /// Number of actions of the first (root) percept.
    m0: Option<usize>,
    clips: Vec<Option<Clip>>,
    /// Interactions so far, i.e. applied updates.
    step: u64,
    trial: u64,
    rewarded_trials: u64,
    glowing: Vec<usize>,
    created_this_trial: Vec<usize>,
    #[serde(skip)]
    index: HashMap<PerceptDigest, usize>,
}

impl ClipNetwork {
    pub fn new(params: PsParams) -> Self {
        ClipNetwork {
            params,
            m0: None,
            clips: Vec::new(),
            step: 0,
            trial: 0,
            rewarded_trials: 0,
            glowing: Vec::new(),
            created_this_trial: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn params(&self) -> &PsParams {
        &self.params
    }

    /// Replaces the hyperparameters, e.g. when a new training stage starts.
    /// Pending `λ = 0` decay is applied with the old values first.
    pub fn set_params(&mut self, params: PsParams) {
        let (now, old) = (self.step, self.params);
        for clip in self.clips.iter_mut().flatten() {
            clip.sync(now, &old);
        }
        self.params = params;
    }

    /// Number of live percept clips.
    pub fn n_percepts(&self) -> usize {
        self.index.len()
    }

    pub fn m0(&self) -> Option<usize> {
        self.m0
    }

    pub fn trials_completed(&self) -> u64 {
        self.trial
    }

    pub fn lookup(&self, digest: &PerceptDigest) -> Option<usize> {
        self.index.get(digest).copied()
    }

    /// Index of the percept, creating a fresh clip with uniform weights on
    /// first sight. The first percept ever seen is the root and is never
    /// deleted.
    pub fn perceive(&mut self, digest: PerceptDigest, available: &[Action]) -> Result<usize, AgentError> {
        if let Some(&i) = self.index.get(&digest) {
            return Ok(i);
        }
        if available.is_empty() {
            return Err(AgentError::TerminalPercept);
        }
        let n = available.len();
        self.m0.get_or_insert(n);
        let i = self.clips.len();
        self.clips.push(Some(Clip {
            digest,
            actions: available.to_vec(),
            excess: vec![0.0; n],
            glow: vec![0.0; n],
            synced_at: self.step,
            created_trial: self.trial,
            created_rewarded: self.rewarded_trials,
            glowing: false,
        }));
        self.index.insert(digest, i);
        self.created_this_trial.push(i);
        Ok(i)
    }

    fn clip(&self, i: usize) -> Result<&Clip, AgentError> {
        self.clips
            .get(i)
            .and_then(Option::as_ref)
            .ok_or(AgentError::UnknownPercept(i))
    }

    fn synced(&mut self, i: usize) -> Result<&mut Clip, AgentError> {
        let (now, params) = (self.step, self.params);
        let clip = self
            .clips
            .get_mut(i)
            .and_then(Option::as_mut)
            .ok_or(AgentError::UnknownPercept(i))?;
        clip.sync(now, &params);
        Ok(clip)
    }

    pub fn actions(&self, i: usize) -> Result<&[Action], AgentError> {
        Ok(&self.clip(i)?.actions)
    }

    /// Current `h` values of percept `i`.
    pub fn h_values(&mut self, i: usize) -> Result<Vec<f64>, AgentError> {
        Ok(self.synced(i)?.excess.iter().map(|x| 1.0 + x).collect())
    }

    /// Current glow values of percept `i`.
    pub fn glow_values(&mut self, i: usize) -> Result<Vec<f64>, AgentError> {
        Ok(self.synced(i)?.glow.clone())
    }

    /// Mean `h` of percept `i`.
    pub fn mean_h(&mut self, i: usize) -> Result<f64, AgentError> {
        let clip = self.synced(i)?;
        Ok(1.0 + clip.excess.iter().sum::<f64>() / clip.excess.len() as f64)
    }

    /// Softmax policy `exp(β h_ij) / Σ_k exp(β h_ik)`.
    pub fn probabilities(&mut self, i: usize) -> Result<Vec<f64>, AgentError> {
        let beta = self.params.beta;
        let clip = self.synced(i)?;
        Ok(softmax(&clip.excess, beta))
    }

    /// Samples an action of percept `i` and lights up its edge with glow
    /// `M_i / M_0`.
    pub fn select_action<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<usize, AgentError> {
        let beta = self.params.beta;
        let m0 = self.m0.unwrap_or(1) as f64;
        let clip = self.synced(i)?;
        let weights = softmax(&clip.excess, beta);
        let j = WeightedIndex::new(&weights)
            .expect("softmax weights are positive")
            .sample(rng);
        clip.glow[j] = clip.actions.len() as f64 / m0;
        if !clip.glowing {
            clip.glowing = true;
            self.glowing.push(i);
        }
        Ok(j)
    }

    /// One interaction step with reward `lambda` applied to every edge.
    pub fn update(&mut self, lambda: f64) {
        if lambda != 0.0 {
            let (now, params) = (self.step, self.params);
            let mut keep = Vec::with_capacity(self.glowing.len());
            for &i in &self.glowing {
                let Some(clip) = self.clips[i].as_mut() else { continue };
                clip.sync(now, &params);
                let mut live = false;
                for (x, g) in clip.excess.iter_mut().zip(clip.glow.iter_mut()) {
                    *x = (1.0 - params.gamma) * *x + lambda * *g;
                    *g *= 1.0 - params.eta;
                    if *g < GLOW_FLOOR {
                        *g = 0.0;
                    }
                    live |= *g > 0.0;
                }
                clip.synced_at = now + 1;
                clip.glowing = live;
                if live {
                    keep.push(i);
                }
            }
            self.glowing = keep;
        }
        self.step += 1;
    }

    /// Closes a trial: discards percepts created in it unless it was
    /// rewarded, then forgets old percepts whose weights relaxed to near
    /// uniform.
    pub fn end_trial(&mut self, rewarded: bool) -> TrialCleanup {
        let mut cleanup = TrialCleanup::default();
        let created = std::mem::take(&mut self.created_this_trial);
        if rewarded {
            self.rewarded_trials += 1;
        } else {
            for i in created {
                if i != 0 && self.remove(i) {
                    cleanup.discarded += 1;
                }
            }
        }
        let (now, params) = (self.step, self.params);
        let mut doomed = Vec::new();
        for (i, slot) in self.clips.iter_mut().enumerate().skip(1) {
            let Some(clip) = slot else { continue };
            if self.rewarded_trials - clip.created_rewarded <= params.tau {
                continue;
            }
            clip.sync(now, &params);
            let mean_excess = clip.excess.iter().sum::<f64>() / clip.excess.len() as f64;
            if mean_excess < params.delta {
                doomed.push(i);
            }
        }
        for i in doomed {
            self.remove(i);
            cleanup.forgotten += 1;
        }
        if params.reset_glow {
            for &i in &self.glowing {
                if let Some(clip) = self.clips[i].as_mut() {
                    clip.sync(now, &params);
                    clip.glow.iter_mut().for_each(|g| *g = 0.0);
                    clip.glowing = false;
                }
            }
            self.glowing.clear();
        } else {
            let clips = &self.clips;
            self.glowing.retain(|&i| clips[i].is_some());
        }
        self.trial += 1;
        cleanup
    }

    fn remove(&mut self, i: usize) -> bool {
        match self.clips[i].take() {
            Some(clip) => {
                self.index.remove(&clip.digest);
                true
            }
            None => false,
        }
    }

    /// Rewarded trials since percept `i` was created.
    pub fn rewarded_since_creation(&self, i: usize) -> Result<u64, AgentError> {
        Ok(self.rewarded_trials - self.clip(i)?.created_rewarded)
    }

    pub fn created_trial(&self, i: usize) -> Result<u64, AgentError> {
        Ok(self.clip(i)?.created_trial)
    }

    /// JSON dump of the whole network, with all weights brought up to date.
    pub fn snapshot(&mut self) -> String {
        let (now, params) = (self.step, self.params);
        for clip in self.clips.iter_mut().flatten() {
            clip.sync(now, &params);
        }
        serde_json::to_string(self).expect("networks always serialize")
    }

    pub fn from_snapshot(text: &str) -> Result<Self, AgentError> {
        let mut net: ClipNetwork = serde_json::from_str(text)?;
        net.index = net
            .clips
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (c.digest, i)))
            .collect();
        Ok(net)
    }
}

fn softmax(excess: &[f64], beta: f64) -> Vec<f64> {
    let top = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = excess.iter().map(|x| (beta * (x - top)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}
