//! Memory bank with pluggable retention policies.
//!
//! Storage and selection are kept apart. [`MemoryBank::commit`] only appends
//! to a sliding window of the `n` most recent entries and never looks at
//! similarities. [`MemoryBank::select_active`] decides, for one query frame,
//! which stored entries are attended over, and never mutates the bank. The
//! pinned reference entry (the prompted first frame) sits outside the window
//! and is part of every active set.
//!
//! Under [`Policy::Efp`] the `m` window entries most cosine-similar to the
//! query are left out of that step's attention; with `n = 5, m = 2` a
//! steady-state readout sees the reference plus three survivors.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_similarity, EmbeddingVector, FeatureGrid};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Storage model for footprint accounting: single-precision reals.
pub const BYTES_PER_REAL: usize = 4;
/// Fixed bookkeeping per stored entry: frame index (8), reference flag and
/// padding (8), and the four grid dimensions plus embedding length (5 × 4,
/// rounded up to 16).
pub const ENTRY_OVERHEAD_BYTES: usize = 32;

/// One stored frame: pooled embedding for similarity, keys and values for readout.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub frame_index: u64,
    pub embedding: EmbeddingVector,
    pub keys: FeatureGrid,
    /// One channel per tracked object (channel `k - 1` holds object `k`),
    /// each value the fraction of the cell the object covers.
    pub values: FeatureGrid,
    pub is_reference: bool,
}

impl MemoryEntry {
    pub fn new(
        frame_index: u64,
        embedding: EmbeddingVector,
        keys: FeatureGrid,
        values: FeatureGrid,
        is_reference: bool,
    ) -> Result<Self> {
        if keys.gw != values.gw || keys.gh != values.gh {
            return Err(Error::InvalidEntry(format!(
                "key grid {}x{} does not match value grid {}x{}",
                keys.gw, keys.gh, values.gw, values.gh
            )));
        }
        if values.data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidEntry("values must lie in [0, 1]".into()));
        }
        if keys.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEntry("keys must be finite".into()));
        }
        Ok(Self {
            frame_index,
            embedding,
            keys,
            values,
            is_reference,
        })
    }

    pub fn footprint_bytes(&self) -> usize {
        let reals = self.embedding.dim() + self.keys.data.len() + self.values.data.len();
        reals * BYTES_PER_REAL + ENTRY_OVERHEAD_BYTES
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Policy {
    /// Attend over the whole window (the vanilla baseline).
    Fifo,
    /// Leave the `m` most query-similar window entries out of attention.
    Efp,
    /// Leave `m` uniformly chosen window entries out (control).
    Random { seed: u64 },
    /// Like `Efp`, but the pruned entries are also dropped from storage.
    EfpAtInsert,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Fifo => "fifo",
            Policy::Efp => "efp",
            Policy::Random { .. } => "random",
            Policy::EfpAtInsert => "efp-insert",
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fifo" => Ok(Policy::Fifo),
            "efp" => Ok(Policy::Efp),
            "random" => Ok(Policy::Random { seed: 0 }),
            "efp-insert" => Ok(Policy::EfpAtInsert),
            other => Err(format!(
                "unknown policy '{other}' (expected fifo, efp, random or efp-insert)"
            )),
        }
    }
}

/// Window length `n`, prune count `m` and the retention policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankParams {
    pub n: usize,
    pub m: usize,
    pub policy: Policy,
}

impl BankParams {
    pub fn new(policy: Policy, n: usize, m: usize) -> Result<Self> {
        let params = Self { n, m, policy };
        params.validate()?;
        Ok(params)
    }

    pub fn fifo(n: usize) -> Self {
        Self {
            n,
            m: 0,
            policy: Policy::Fifo,
        }
    }

    pub fn efp(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            policy: Policy::Efp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidBankParams("n must be ≥ 1".into()));
        }
        if self.m >= self.n {
            return Err(Error::InvalidBankParams("m must be < n".into()));
        }
        Ok(())
    }

    /// Entries attended per frame once the window is full.
    pub fn steady_attended(&self) -> usize {
        match self.policy {
            Policy::Fifo => 1 + self.n,
            _ => 1 + self.n - self.m,
        }
    }

    /// Entries held in storage once the window is full.
    pub fn steady_stored(&self) -> usize {
        1 + self.n
    }
}

impl fmt::Display for BankParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.policy.name(), self.n, self.m)
    }
}

/// Outcome of one selection step over the window.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneDecision {
    /// `(frame_index, score)` for each window entry, oldest first. Empty when
    /// the policy does not score entries.
    pub similarities: Vec<(u64, f64)>,
    pub pruned: Vec<u64>,
    pub survivors: Vec<u64>,
}

/// The entries one frame's readout attends over: reference first, then
/// survivors oldest-first.
#[derive(Debug, Clone)]
pub struct ActiveSet<'a> {
    pub entries: Vec<&'a MemoryEntry>,
    pub decision: PruneDecision,
}

impl ActiveSet<'_> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frame_indices(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.frame_index).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MemoryBank {
    params: BankParams,
    reference: Option<MemoryEntry>,
    window: VecDeque<MemoryEntry>,
}

impl MemoryBank {
    pub fn new(params: BankParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            reference: None,
            window: VecDeque::with_capacity(params.n + 1),
        })
    }

    pub fn params(&self) -> &BankParams {
        &self.params
    }

    pub fn reference(&self) -> Option<&MemoryEntry> {
        self.reference.as_ref()
    }

    pub fn window(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.window.iter()
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    /// Stored entries including the reference.
    pub fn stored_len(&self) -> usize {
        self.window.len() + usize::from(self.reference.is_some())
    }

    /// Pins the reference entry. Callable once, on an empty bank.
    pub fn init_reference(&mut self, mut entry: MemoryEntry) -> Result<()> {
        if self.reference.is_some() || !self.window.is_empty() {
            return Err(Error::ReferenceAlreadySet);
        }
        entry.is_reference = true;
        self.reference = Some(entry);
        Ok(())
    }

    /// Appends to the window, evicting the oldest entry beyond `n`.
    pub fn commit(&mut self, entry: MemoryEntry) -> Result<()> {
        let reference = self.reference.as_ref().ok_or(Error::BankNotInitialized)?;
        if entry.is_reference {
            return Err(Error::InvalidEntry(
                "reference entries are set through init_reference".into(),
            ));
        }
        let last = self
            .window
            .back()
            .map_or(reference.frame_index, |e| e.frame_index);
        if entry.frame_index <= last {
            return Err(Error::NonMonotonicIndex {
                last,
                got: entry.frame_index,
            });
        }
        if !entry.keys.same_layout(&reference.keys) || !entry.values.same_layout(&reference.values)
        {
            return Err(Error::InvalidEntry(
                "entry layout differs from the reference entry".into(),
            ));
        }
        self.window.push_back(entry);
        while self.window.len() > self.params.n {
            self.window.pop_front();
        }
        Ok(())
    }

    /// Drops the given frames from window storage.
    pub fn apply_prune(&mut self, decision: &PruneDecision) {
        self.window
            .retain(|e| !decision.pruned.contains(&e.frame_index));
    }

    pub fn select_active(&self, query: &EmbeddingVector) -> Result<ActiveSet<'_>> {
        let reference = self.reference.as_ref().ok_or(Error::BankNotInitialized)?;
        let prune_count = self.params.m.min(self.window.len());

        let (similarities, pruned_pos): (Vec<(u64, f64)>, Vec<usize>) = match self.params.policy {
            Policy::Fifo => (Vec::new(), Vec::new()),
            Policy::Efp | Policy::EfpAtInsert => {
                if query.is_zero() {
                    return Err(Error::ZeroVector);
                }
                let scores = self
                    .window
                    .iter()
                    .map(|e| Ok((e.frame_index, cosine_similarity(query, &e.embedding)?)))
                    .collect::<Result<Vec<_>>>()?;
                let mut order: Vec<usize> = (0..scores.len()).collect();
                // highest score first; equal scores prune the older frame
                order.sort_by(|&a, &b| {
                    scores[b]
                        .1
                        .total_cmp(&scores[a].1)
                        .then(scores[a].0.cmp(&scores[b].0))
                });
                order.truncate(prune_count);
                (scores, order)
            }
            Policy::Random { seed } => {
                let stream = self.window.back().map_or(0, |e| e.frame_index);
                let mut rng = SplitMix64::stream(seed, stream);
                let mut pos: Vec<usize> = (0..self.window.len()).collect();
                for i in 0..prune_count {
                    let j = i + rng.below((pos.len() - i) as u64) as usize;
                    pos.swap(i, j);
                }
                pos.truncate(prune_count);
                (Vec::new(), pos)
            }
        };

        let mut is_pruned = vec![false; self.window.len()];
        for &p in &pruned_pos {
            is_pruned[p] = true;
        }
        let mut entries = Vec::with_capacity(1 + self.window.len() - prune_count);
        entries.push(reference);
        let mut pruned = Vec::with_capacity(prune_count);
        let mut survivors = Vec::with_capacity(self.window.len() - prune_count);
        for (entry, &drop) in self.window.iter().zip(&is_pruned) {
            if drop {
                pruned.push(entry.frame_index);
            } else {
                survivors.push(entry.frame_index);
                entries.push(entry);
            }
        }
        Ok(ActiveSet {
            entries,
            decision: PruneDecision {
                similarities,
                pruned,
                survivors,
            },
        })
    }

    /// Analytic storage cost of every stored entry, reference included.
    pub fn footprint_bytes(&self) -> usize {
        self.reference
            .iter()
            .chain(self.window.iter())
            .map(MemoryEntry::footprint_bytes)
            .sum()
    }
}
