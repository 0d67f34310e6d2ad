//! Streaming mask propagation over a memory bank.
//!
//! Frame 0 is encoded from the prompt and pinned as the reference entry. Each
//! later frame is encoded, an active set is selected from the bank, object
//! evidence is read out by softmax cross-attention over every cell of every
//! active entry, the evidence is decoded into a label map, and the frame is
//! written back into the bank with its *predicted* mask as values.
//!
//! Readout keys are not the raw descriptors. Each descriptor channel
//! `x ∈ [0, 1]` is lifted to the quarter-circle pair `(cos πx/2, sin πx/2)`,
//! so every key cell has the same norm and the dot product between two cells
//! is `Σ cos(π(x - y)/2)`: maximal for identical descriptors and decreasing
//! with per-channel disagreement. Plain dot products over nonnegative
//! descriptors would instead favor bright, high-norm cells regardless of
//! what the query looks like.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::{extract_features, pool_embedding, FeatureGrid, FrameImage};
use crate::error::{Error, Result};
use crate::membank::{ActiveSet, BankParams, MemoryBank, MemoryEntry, Policy, PruneDecision};

pub const DEFAULT_PATCH: usize = 8;
pub const DEFAULT_DIM: usize = 14;
pub const DEFAULT_TEMPERATURE: f64 = 0.005;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Channel-sum RGB distance from the seed pixel accepted by the point flood fill.
pub const DEFAULT_FLOOD_TAU: u32 = 32;

/// Row-major object ids, 0 = background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectMaskMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl ObjectMaskMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidPrompt(format!(
                "mask has {} labels for {width}x{height}",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn background(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, id: u8) {
        self.labels[y * self.width + x] = id;
    }

    pub fn max_id(&self) -> u8 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Binary mask of one object id.
    pub fn object(&self, id: u8) -> Vec<bool> {
        self.labels.iter().map(|&l| l == id).collect()
    }

    pub fn contains_id(&self, id: u8) -> bool {
        self.labels.contains(&id)
    }

    pub fn area(&self, id: u8) -> usize {
        self.labels.iter().filter(|&&l| l == id).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointPrompt {
    pub x: usize,
    pub y: usize,
    pub object: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prompt {
    FullMask(ObjectMaskMap),
    Points(Vec<PointPrompt>),
}

impl Prompt {
    pub fn object_count(&self) -> u8 {
        match self {
            Prompt::FullMask(mask) => mask.max_id(),
            Prompt::Points(points) => points.iter().map(|p| p.object).max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub bank: BankParams,
    pub patch: usize,
    pub dim: usize,
    pub temperature: f64,
    pub threshold: f64,
    pub flood_tau: u32,
}

impl PropagationConfig {
    pub fn new(bank: BankParams) -> Self {
        Self {
            bank,
            patch: DEFAULT_PATCH,
            dim: DEFAULT_DIM,
            temperature: DEFAULT_TEMPERATURE,
            threshold: DEFAULT_THRESHOLD,
            flood_tau: DEFAULT_FLOOD_TAU,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bank.validate()?;
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig("temperature must be > 0".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig("threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-frame wall time of each stage, nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimings {
    pub encode: u64,
    pub select: u64,
    pub readout: u64,
    pub decode: u64,
    pub commit: u64,
}

impl StageTimings {
    pub fn total(&self) -> u64 {
        self.encode + self.select + self.readout + self.decode + self.commit
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub masks: Vec<ObjectMaskMap>,
    pub timings: Vec<StageTimings>,
    /// One per frame; the prompt frame carries an empty decision.
    pub decisions: Vec<PruneDecision>,
    /// Active-set size per frame (0 for the prompt frame).
    pub attended: Vec<usize>,
    /// Query-key multiplies spent in readout per frame.
    pub readout_mults: Vec<u64>,
    pub peak_footprint_bytes: usize,
    pub peak_stored_entries: usize,
}

/// Lifts every descriptor channel onto the quarter circle, doubling `d`.
pub fn key_code(features: &FeatureGrid) -> FeatureGrid {
    let mut data = Vec::with_capacity(features.data.len() * 2);
    for &x in &features.data {
        let angle = FRAC_PI_2 * x;
        data.push(angle.cos());
        data.push(angle.sin());
    }
    FeatureGrid {
        gw: features.gw,
        gh: features.gh,
        d: features.d * 2,
        data,
    }
}

/// Fraction of each `patch × patch` cell covered by objects `1..=objects`.
pub fn mask_coverage(
    mask: &ObjectMaskMap,
    gw: usize,
    gh: usize,
    patch: usize,
    objects: u8,
) -> FeatureGrid {
    let k = objects as usize;
    let mut grid = FeatureGrid::zeros(gw, gh, k);
    let area = (patch * patch) as f64;
    for cy in 0..gh {
        for cx in 0..gw {
            let mut counts = vec![0usize; k];
            for y in cy * patch..(cy + 1) * patch {
                for x in cx * patch..(cx + 1) * patch {
                    let id = mask.get(x, y) as usize;
                    if id >= 1 && id <= k {
                        counts[id - 1] += 1;
                    }
                }
            }
            for (slot, c) in grid.cell_mut(cx, cy).iter_mut().zip(counts) {
                *slot = c as f64 / area;
            }
        }
    }
    grid
}

/// Union of per-point flood fills. A pixel joins a fill when its channel-sum
/// RGB distance to the seed pixel is at most `tau`; objects claim pixels in
/// prompt order.
pub fn flood_fill_points(frame: &FrameImage, points: &[PointPrompt], tau: u32) -> Result<ObjectMaskMap> {
    if points.is_empty() {
        return Err(Error::InvalidPrompt("points prompt needs at least one point".into()));
    }
    let (w, h) = (frame.width, frame.height);
    let mut mask = ObjectMaskMap::background(w, h);
    let mut queue = VecDeque::new();
    for p in points {
        if p.x >= w || p.y >= h {
            return Err(Error::InvalidPrompt(format!(
                "point ({}, {}) outside {w}x{h} frame",
                p.x, p.y
            )));
        }
        if p.object == 0 {
            return Err(Error::InvalidPrompt("point object id must be ≥ 1".into()));
        }
        if mask.get(p.x, p.y) != 0 {
            continue;
        }
        let seed = frame.rgb(p.x, p.y);
        let close = |x: usize, y: usize| {
            let c = frame.rgb(x, y);
            let dist: u32 = (0..3).map(|i| c[i].abs_diff(seed[i]) as u32).sum();
            dist <= tau
        };
        mask.set(p.x, p.y, p.object);
        queue.push_back((p.x, p.y));
        while let Some((x, y)) = queue.pop_front() {
            let neighbors = [
                (x.wrapping_sub(1), y),
                (x + 1, y),
                (x, y.wrapping_sub(1)),
                (x, y + 1),
            ];
            for (nx, ny) in neighbors {
                if nx < w && ny < h && mask.get(nx, ny) == 0 && close(nx, ny) {
                    mask.set(nx, ny, p.object);
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    for id in points.iter().map(|p| p.object) {
        if !mask.contains_id(id) {
            return Err(Error::DegeneratePointPrompt(format!(
                "object {id} received no pixels"
            )));
        }
    }
    Ok(mask)
}

/// The reference entry built from the prompted first frame.
#[derive(Debug, Clone)]
pub struct EncodedPrompt {
    pub entry: MemoryEntry,
    /// The prompt as a label map (the flood-fill result for point prompts).
    pub mask: ObjectMaskMap,
    pub objects: u8,
}

pub fn encode_prompt(
    frame: &FrameImage,
    prompt: &Prompt,
    patch: usize,
    dim: usize,
    flood_tau: u32,
) -> Result<EncodedPrompt> {
    let mask = match prompt {
        Prompt::FullMask(mask) => {
            if mask.width != frame.width || mask.height != frame.height {
                return Err(Error::InvalidPrompt(format!(
                    "mask {}x{} does not match frame {}x{}",
                    mask.width, mask.height, frame.width, frame.height
                )));
            }
            mask.clone()
        }
        Prompt::Points(points) => flood_fill_points(frame, points, flood_tau)?,
    };
    let objects = prompt.object_count();
    if objects == 0 {
        return Err(Error::InvalidPrompt("prompt declares no objects".into()));
    }
    let features = extract_features(frame, patch, dim)?;
    let values = mask_coverage(&mask, features.gw, features.gh, patch, objects);
    let entry = MemoryEntry::new(
        frame.index,
        pool_embedding(&features),
        key_code(&features),
        values,
        true,
    )?;
    Ok(EncodedPrompt {
        entry,
        mask,
        objects,
    })
}

/// Object evidence per query cell.
#[derive(Debug, Clone)]
pub struct Readout {
    /// `gw × gh × K`, one score per object channel.
    pub scores: FeatureGrid,
    pub multiplies: u64,
}

/// Normalized attention weights of one query cell over every memory cell,
/// entries in active-set order and cells row-major.
pub fn attention_weights(query_cell: &[f64], active: &ActiveSet<'_>, temperature: f64) -> Result<Vec<f64>> {
    let mut weights = Vec::new();
    let scale = 1.0 / (temperature * (query_cell.len() as f64).sqrt());
    softmax_into(query_cell, active, scale, &mut weights)?;
    Ok(weights)
}

fn softmax_into(q: &[f64], active: &ActiveSet<'_>, scale: f64, out: &mut Vec<f64>) -> Result<()> {
    out.clear();
    let mut max = f64::NEG_INFINITY;
    for entry in &active.entries {
        for key in entry.keys.cells() {
            let logit = dot(key, q) * scale;
            if !logit.is_finite() {
                return Err(Error::AttentionOverflow);
            }
            max = max.max(logit);
            out.push(logit);
        }
    }
    // exp(l) / Σ exp(l) evaluated as exp(l - max) / Σ exp(l - max)
    let mut sum = 0.0;
    for w in out.iter_mut() {
        *w = (*w - max).exp();
        sum += *w;
    }
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::AttentionOverflow);
    }
    let inv = 1.0 / sum;
    for w in out.iter_mut() {
        *w *= inv;
    }
    Ok(())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Softmax cross-attention readout of stored mask values.
pub fn memory_readout(query: &FeatureGrid, active: &ActiveSet<'_>, temperature: f64) -> Result<Readout> {
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::InvalidConfig("temperature must be > 0".into()));
    }
    let k = active.entries[0].values.d;
    for entry in &active.entries {
        if !entry.keys.same_layout(query) {
            return Err(Error::DimensionMismatch(entry.keys.data.len(), query.data.len()));
        }
        if entry.values.d != k {
            return Err(Error::InvalidEntry("object channel count differs across entries".into()));
        }
    }
    let scale = 1.0 / (temperature * (query.d as f64).sqrt());
    let memory_cells: usize = active.entries.iter().map(|e| e.keys.cell_count()).sum();

    let mut scores = FeatureGrid::zeros(query.gw, query.gh, k);
    let mut weights = Vec::with_capacity(memory_cells);
    for (qi, q) in query.cells().enumerate() {
        softmax_into(q, active, scale, &mut weights)?;
        let out = &mut scores.data[qi * k..(qi + 1) * k];
        let mut w = weights.iter();
        for entry in &active.entries {
            for v in entry.values.cells() {
                let a = *w.next().expect("one weight per memory cell");
                for (o, &val) in out.iter_mut().zip(v) {
                    *o += a * val;
                }
            }
        }
    }
    let multiplies = (query.cell_count() * memory_cells * query.d) as u64;
    Ok(Readout { scores, multiplies })
}

/// Nearest-neighbor upsampling of cell scores; each pixel takes the best
/// object if its score reaches `threshold`, ties going to the smaller id.
pub fn decode_mask(scores: &FeatureGrid, patch: usize, width: usize, height: usize, threshold: f64) -> ObjectMaskMap {
    let cell_labels: Vec<u8> = scores
        .cells()
        .map(|cell| {
            let mut best = 0usize;
            for (i, &s) in cell.iter().enumerate() {
                if s > cell[best] {
                    best = i;
                }
            }
            if !cell.is_empty() && cell[best] >= threshold {
                (best + 1) as u8
            } else {
                0
            }
        })
        .collect();
    let mut mask = ObjectMaskMap::background(width, height);
    for y in 0..height {
        let cy = (y / patch).min(scores.gh - 1);
        for x in 0..width {
            let cx = (x / patch).min(scores.gw - 1);
            mask.labels[y * width + x] = cell_labels[cy * scores.gw + cx];
        }
    }
    mask
}

fn elapsed_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos() as u64
}

/// Runs the full streaming loop over a sequence.
pub fn propagate(frames: &[FrameImage], prompt: &Prompt, config: &PropagationConfig) -> Result<PropagationResult> {
    config.validate()?;
    if frames.len() < 2 {
        return Err(Error::InvalidConfig("propagation needs at least 2 frames".into()));
    }
    let first = &frames[0];
    for pair in frames.windows(2) {
        if pair[1].index <= pair[0].index {
            return Err(Error::NonMonotonicIndex {
                last: pair[0].index,
                got: pair[1].index,
            }
            .at_frame(pair[1].index));
        }
        if pair[1].width != first.width || pair[1].height != first.height {
            return Err(Error::InvalidFrame("frame size changes mid-sequence".into())
                .at_frame(pair[1].index));
        }
    }

    let t = frames.len();
    let mut result = PropagationResult {
        masks: Vec::with_capacity(t),
        timings: Vec::with_capacity(t),
        decisions: Vec::with_capacity(t),
        attended: Vec::with_capacity(t),
        readout_mults: Vec::with_capacity(t),
        peak_footprint_bytes: 0,
        peak_stored_entries: 0,
    };

    let start = Instant::now();
    let encoded = encode_prompt(first, prompt, config.patch, config.dim, config.flood_tau)
        .map_err(|e| e.at_frame(first.index))?;
    let mut bank = MemoryBank::new(config.bank)?;
    let objects = encoded.objects;
    bank.init_reference(encoded.entry)
        .map_err(|e| e.at_frame(first.index))?;
    result.timings.push(StageTimings {
        encode: elapsed_ns(start),
        ..Default::default()
    });
    result.masks.push(encoded.mask);
    result.decisions.push(PruneDecision::default());
    result.attended.push(0);
    result.readout_mults.push(0);
    result.peak_footprint_bytes = bank.footprint_bytes();
    result.peak_stored_entries = bank.stored_len();

    for frame in &frames[1..] {
        let at = |e: Error| e.at_frame(frame.index);
        let mut timing = StageTimings::default();

        let clock = Instant::now();
        let features = extract_features(frame, config.patch, config.dim).map_err(at)?;
        let embedding = pool_embedding(&features);
        let query = key_code(&features);
        timing.encode = elapsed_ns(clock);

        let clock = Instant::now();
        let active = bank.select_active(&embedding).map_err(at)?;
        timing.select = elapsed_ns(clock);

        let clock = Instant::now();
        let readout = memory_readout(&query, &active, config.temperature).map_err(at)?;
        timing.readout = elapsed_ns(clock);

        let clock = Instant::now();
        let mask = decode_mask(&readout.scores, config.patch, frame.width, frame.height, config.threshold);
        timing.decode = elapsed_ns(clock);

        result.attended.push(active.len());
        result.readout_mults.push(readout.multiplies);
        let decision = active.decision;

        let clock = Instant::now();
        let values = mask_coverage(&mask, features.gw, features.gh, config.patch, objects);
        let entry = MemoryEntry::new(frame.index, embedding, query, values, false).map_err(at)?;
        if config.bank.policy == Policy::EfpAtInsert {
            bank.apply_prune(&decision);
        }
        bank.commit(entry).map_err(at)?;
        timing.commit = elapsed_ns(clock);

        result.peak_footprint_bytes = result.peak_footprint_bytes.max(bank.footprint_bytes());
        result.peak_stored_entries = result.peak_stored_entries.max(bank.stored_len());
        result.timings.push(timing);
        result.decisions.push(decision);
        result.masks.push(mask);
    }
    Ok(result)
}
