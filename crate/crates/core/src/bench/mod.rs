//! Policy-versus-policy benchmark harness.
//!
//! For every seed the sequence is generated (or loaded once), then each
//! configured policy propagates the same prompt through it. Rows are scored
//! with [`crate::metrics`] and collected policy-major, seed-minor; deltas
//! compare every non-FIFO policy against every FIFO policy (or against the
//! first policy when no FIFO policy is configured).
//!
//! Output directory layout:
//!
//! ```text
//! report.json   full report, including per-frame prune decisions
//! report.csv    one row per (policy, seed)
//! deltas.csv    one row per (policy, baseline)
//! masks/<policy>/seed_<s>/00000.pgm     with --save-masks, raw ids
//! preview/<policy>/seed_<s>/00000.pgm   with --visualize, id·(255/K)
//! ```

mod cli;
mod report;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cli::{cli_parse, main_with_args, parse_policy, parse_prompt, parse_seeds, CliError};
pub use report::{
    csv_string, deltas_csv_string, emit_csv, emit_deltas_csv, emit_json, fmt6, json_string, parse_json,
    DeltaRow, EvalReport, Fixed6, FrameLog, Ratio, ReportRow, ScenarioInfo, CSV_HEADER,
    DELTA_CSV_HEADER, REPORT_VERSION,
};

use crate::dataio::pnm::write_pgm;
use crate::dataio::scenario::BUILTIN_VERSION;
use crate::dataio::{generate, load_sequence, ScenarioConfig, Sequence};
use crate::membank::{BankParams, Policy};
use crate::metrics::{score_sequence, throughput};
use crate::propagator::{
    propagate, ObjectMaskMap, PointPrompt, Prompt, PropagationConfig, PropagationResult, DEFAULT_DIM,
    DEFAULT_FLOOD_TAU, DEFAULT_PATCH, DEFAULT_TEMPERATURE, DEFAULT_THRESHOLD,
};
use crate::rng::SplitMix64;

const STREAM_POINTS: u64 = 0x504F_494E_0000_0000;

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Render a scenario once per seed; `label` names it in the report.
    Generate { label: String, scenario: ScenarioConfig },
    /// Use a saved sequence directory; the seed comes from its metadata.
    Load(PathBuf),
}

impl InputSource {
    pub fn builtin(name: &str) -> Option<Self> {
        ScenarioConfig::builtin(name).map(|scenario| InputSource::Generate {
            label: format!("builtin:{name}"),
            scenario,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptSpec {
    FullMask,
    /// `k` clicks per object present in the first ground-truth frame.
    Points(usize),
}

impl std::fmt::Display for PromptSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PromptSpec::FullMask => write!(f, "mask"),
            PromptSpec::Points(k) => write!(f, "points:{k}"),
        }
    }
}

/// A named bank configuration. The name is the canonical `policy:n:m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySpec {
    pub name: String,
    pub params: BankParams,
}

impl PolicySpec {
    pub fn new(params: BankParams) -> Self {
        Self {
            name: params.to_string(),
            params,
        }
    }

    /// Random policies draw from the run seed.
    fn params_for_seed(&self, seed: u64) -> BankParams {
        let mut params = self.params;
        if let Policy::Random { .. } = params.policy {
            params.policy = Policy::Random { seed };
        }
        params
    }

    fn dir_name(&self) -> String {
        self.name.replace(':', "_")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorParams {
    pub patch: usize,
    pub dim: usize,
    pub temperature: f64,
    pub threshold: f64,
    pub flood_tau: u32,
}

impl Default for PropagatorParams {
    fn default() -> Self {
        Self {
            patch: DEFAULT_PATCH,
            dim: DEFAULT_DIM,
            temperature: DEFAULT_TEMPERATURE,
            threshold: DEFAULT_THRESHOLD,
            flood_tau: DEFAULT_FLOOD_TAU,
        }
    }
}

impl PropagatorParams {
    pub fn config(&self, bank: BankParams) -> PropagationConfig {
        PropagationConfig {
            bank,
            patch: self.patch,
            dim: self.dim,
            temperature: self.temperature,
            threshold: self.threshold,
            flood_tau: self.flood_tau,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { json: true, csv: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    pub prompt: PromptSpec,
    pub policies: Vec<PolicySpec>,
    pub propagator: PropagatorParams,
    pub seeds: Vec<u64>,
    /// Report directory; `None` keeps everything in memory.
    pub out: Option<PathBuf>,
    pub formats: Formats,
    pub visualize: bool,
    pub save_masks: bool,
}

impl RunConfig {
    /// Full-mask prompt, default propagator, no output directory.
    pub fn new(input: InputSource, policies: Vec<PolicySpec>, seeds: Vec<u64>) -> Self {
        Self {
            input,
            prompt: PromptSpec::FullMask,
            policies,
            propagator: PropagatorParams::default(),
            seeds,
            out: None,
            formats: Formats::default(),
            visualize: false,
            save_masks: false,
        }
    }

    /// `fifo:6:0`, `fifo:3:0` and `efp:5:2`.
    pub fn default_policies() -> Vec<PolicySpec> {
        vec![
            PolicySpec::new(BankParams::fifo(6)),
            PolicySpec::new(BankParams::fifo(3)),
            PolicySpec::new(BankParams::efp(5, 2)),
        ]
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.policies.is_empty() {
            bail!("at least one policy is required");
        }
        for (i, p) in self.policies.iter().enumerate() {
            p.params.validate()?;
            if self.policies[..i].iter().any(|q| q.name == p.name) {
                bail!("policy {} is listed twice", p.name);
            }
        }
        if let InputSource::Generate { scenario, .. } = &self.input {
            if self.seeds.is_empty() {
                bail!("at least one seed is required when generating");
            }
            scenario.validate()?;
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                bail!("seed {s} is listed twice");
            }
        }
        self.propagator.config(self.policies[0].params).validate()?;
        Ok(())
    }
}

/// Clicks for each object present in `gt`: the object pixel nearest the
/// centroid, then `k - 1` seeded picks among interior pixels.
pub fn prompt_points(gt: &ObjectMaskMap, k: usize, seed: u64) -> Vec<PointPrompt> {
    let (w, h) = (gt.width, gt.height);
    let mut points = Vec::new();
    for id in 1..=gt.max_id() {
        let pixels: Vec<(usize, usize)> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| gt.get(x, y) == id)
            .collect();
        if pixels.is_empty() || k == 0 {
            continue;
        }
        let n = pixels.len() as f64;
        let cx = pixels.iter().map(|p| p.0 as f64).sum::<f64>() / n;
        let cy = pixels.iter().map(|p| p.1 as f64).sum::<f64>() / n;
        let d2 = |&(x, y): &(usize, usize)| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        // min_by keeps the first of equal elements, i.e. raster order
        let center = *pixels
            .iter()
            .min_by(|a, b| d2(a).total_cmp(&d2(b)))
            .expect("nonempty");
        points.push(PointPrompt {
            x: center.0,
            y: center.1,
            object: id,
        });

        let interior: Vec<(usize, usize)> = pixels
            .iter()
            .copied()
            .filter(|&(x, y)| {
                x > 0
                    && y > 0
                    && x + 1 < w
                    && y + 1 < h
                    && [gt.get(x - 1, y), gt.get(x + 1, y), gt.get(x, y - 1), gt.get(x, y + 1)]
                        .iter()
                        .all(|&l| l == id)
            })
            .collect();
        let pool = if interior.is_empty() { &pixels } else { &interior };
        let mut rng = SplitMix64::stream(seed, STREAM_POINTS | id as u64);
        for _ in 1..k {
            let (x, y) = pool[rng.below(pool.len() as u64) as usize];
            points.push(PointPrompt { x, y, object: id });
        }
    }
    points
}

pub fn build_prompt(seq: &Sequence, spec: PromptSpec, seed: u64) -> anyhow::Result<Prompt> {
    let gt = seq.masks.first().context("sequence has no frames")?;
    Ok(match spec {
        PromptSpec::FullMask => Prompt::FullMask(gt.clone()),
        PromptSpec::Points(k) => {
            let points = prompt_points(gt, k, seed);
            if points.is_empty() {
                bail!("no object is visible in the first frame to click on");
            }
            Prompt::Points(points)
        }
    })
}

/// SHA-256 over the label maps in order.
pub fn mask_digest(masks: &[ObjectMaskMap]) -> String {
    let mut hasher = Sha256::new();
    for m in masks {
        hasher.update(&m.labels);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// One (policy, seed) run: propagation plus its scored row.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: ReportRow,
    pub result: PropagationResult,
}

pub fn run_cell(
    seq: &Sequence,
    prompt: &Prompt,
    policy: &PolicySpec,
    params: &PropagatorParams,
    seed: u64,
) -> anyhow::Result<CellOutcome> {
    let config = params.config(policy.params_for_seed(seed));
    let result = propagate(&seq.frames, prompt, &config)?;
    let score = score_sequence(&result.masks, &seq.masks)?;
    let fps = throughput(&result.timings)?;
    let frames = result.decisions[1..]
        .iter()
        .zip(&result.attended[1..])
        .zip(&seq.frames[1..])
        .map(|((d, &attended), frame)| FrameLog {
            frame: frame.index,
            attended,
            pruned: d.pruned.clone(),
            survivors: d.survivors.clone(),
            similarities: d.similarities.iter().map(|&(i, s)| (i, Fixed6(s))).collect(),
        })
        .collect();
    let row = ReportRow {
        policy: policy.name.clone(),
        seed,
        j: Fixed6(score.j),
        f: Fixed6(score.f),
        jf: Fixed6(score.jf),
        dice: Fixed6(score.dice),
        ciou: Fixed6(score.ciou),
        frames_evaluated: score.frames_evaluated,
        fps_total: Fixed6(fps.fps_total),
        fps_readout: Fixed6(fps.fps_readout),
        footprint_bytes: result.peak_footprint_bytes,
        stored_entries: result.peak_stored_entries,
        attended_entries: result.attended.iter().copied().max().unwrap_or(0),
        readout_multiplies: result.readout_mults.iter().sum(),
        mask_digest: mask_digest(&result.masks),
        frames,
    };
    Ok(CellOutcome { row, result })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn delta_row(rows: &[ReportRow], policy: &str, baseline: &str) -> Option<DeltaRow> {
    let pairs: Vec<(&ReportRow, &ReportRow)> = rows
        .iter()
        .filter(|r| r.policy == policy)
        .filter_map(|r| {
            rows.iter()
                .find(|b| b.policy == baseline && b.seed == r.seed)
                .map(|b| (r, b))
        })
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let diff = |f: fn(&ReportRow) -> f64| Fixed6(mean(pairs.iter().map(|(r, b)| f(r) - f(b))));
    let ratio_of_means = |f: fn(&ReportRow) -> f64| {
        Fixed6(mean(pairs.iter().map(|(r, _)| f(r))) / mean(pairs.iter().map(|(_, b)| f(b))))
    };
    let count_ratio = |f: fn(&ReportRow) -> usize| {
        Ratio::new(
            pairs.iter().map(|(r, _)| f(r) as u64).sum(),
            pairs.iter().map(|(_, b)| f(b) as u64).sum(),
        )
    };
    Some(DeltaRow {
        policy: policy.to_string(),
        baseline: baseline.to_string(),
        seeds: pairs.len(),
        j: diff(|r| r.j.0),
        f: diff(|r| r.f.0),
        jf: diff(|r| r.jf.0),
        dice: diff(|r| r.dice.0),
        ciou: diff(|r| r.ciou.0),
        fps_total_ratio: ratio_of_means(|r| r.fps_total.0),
        fps_readout_ratio: ratio_of_means(|r| r.fps_readout.0),
        footprint_ratio: count_ratio(|r| r.footprint_bytes),
        stored_ratio: count_ratio(|r| r.stored_entries),
        attended_ratio: count_ratio(|r| r.attended_entries),
    })
}

/// Every non-FIFO policy against every FIFO policy, in configured order.
pub fn compute_deltas(policies: &[PolicySpec], rows: &[ReportRow]) -> Vec<DeltaRow> {
    let is_fifo = |p: &&PolicySpec| p.params.policy == Policy::Fifo;
    let baselines: Vec<&PolicySpec> = match policies.iter().filter(is_fifo).count() {
        0 => policies.iter().take(1).collect(),
        _ => policies.iter().filter(is_fifo).collect(),
    };
    let mut deltas = Vec::new();
    for p in policies {
        if baselines.iter().any(|b| b.name == p.name) {
            continue;
        }
        for b in &baselines {
            deltas.extend(delta_row(rows, &p.name, &b.name));
        }
    }
    deltas
}

fn scenario_info(input: &InputSource) -> ScenarioInfo {
    match input {
        InputSource::Generate { label, scenario } => ScenarioInfo {
            source: label.clone(),
            config_hash: Some(scenario.config_hash()),
            builtin_version: label.starts_with("builtin:").then_some(BUILTIN_VERSION),
            width: scenario.width,
            height: scenario.height,
            frame_count: scenario.frame_count,
            objects: scenario.object_count(),
        },
        InputSource::Load(dir) => ScenarioInfo {
            source: format!("load:{}", dir.display()),
            config_hash: None,
            builtin_version: None,
            width: 0,
            height: 0,
            frame_count: 0,
            objects: 0,
        },
    }
}

fn write_label_maps(dir: &Path, masks: &[ObjectMaskMap], scale: u8) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, m) in masks.iter().enumerate() {
        let gray: Vec<u8> = m.labels.iter().map(|&l| l.saturating_mul(scale)).collect();
        write_pgm(&dir.join(format!("{i:05}.pgm")), m.width, m.height, &gray)?;
    }
    Ok(())
}

fn write_side_artifacts(
    config: &RunConfig,
    policy: &PolicySpec,
    seed: u64,
    seq: &Sequence,
    masks: &[ObjectMaskMap],
) -> anyhow::Result<()> {
    let Some(out) = &config.out else {
        return Ok(());
    };
    let leaf = PathBuf::from(policy.dir_name()).join(format!("seed_{seed}"));
    if config.save_masks {
        write_label_maps(&out.join("masks").join(&leaf), masks, 1)?;
    }
    if config.visualize {
        let k = masks.iter().map(ObjectMaskMap::max_id).max().unwrap_or(0).max(seq.objects).max(1);
        write_label_maps(&out.join("preview").join(&leaf), masks, 255 / k)?;
    }
    Ok(())
}

fn run_cells(config: &RunConfig, report: &mut EvalReport) -> anyhow::Result<()> {
    let mut loaded = None;
    if let InputSource::Load(dir) = &config.input {
        let seq = load_sequence(dir)?;
        report.seeds = vec![seq.seed];
        report.scenario.width = seq.width();
        report.scenario.height = seq.height();
        report.scenario.frame_count = seq.len();
        report.scenario.objects = seq.objects;
        loaded = Some(seq);
    }
    let seeds = report.seeds.clone();
    for seed in seeds {
        let generated;
        let seq = match (&config.input, &loaded) {
            (_, Some(seq)) => seq,
            (InputSource::Generate { scenario, .. }, None) => {
                generated = generate(&scenario.with_seed(seed)).with_context(|| format!("seed {seed}"))?;
                &generated
            }
            (InputSource::Load(_), None) => unreachable!("loaded above"),
        };
        let prompt = build_prompt(seq, config.prompt, seed).with_context(|| format!("seed {seed}"))?;
        for policy in &config.policies {
            let context = || format!("policy {}, seed {seed}", policy.name);
            let outcome = run_cell(seq, &prompt, policy, &config.propagator, seed).with_context(context)?;
            write_side_artifacts(config, policy, seed, seq, &outcome.result.masks).with_context(context)?;
            report.rows.push(outcome.row);
        }
    }
    Ok(())
}

fn write_reports(report: &EvalReport, config: &RunConfig) -> anyhow::Result<()> {
    let Some(out) = &config.out else {
        return Ok(());
    };
    if config.formats.json {
        emit_json(report, &out.join("report.json"))?;
    }
    if config.formats.csv {
        emit_csv(report, &out.join("report.csv"))?;
        emit_deltas_csv(report, &out.join("deltas.csv"))?;
    }
    Ok(())
}

/// Runs every (policy, seed) cell and writes the configured reports.
///
/// On failure the rows collected so far are still written, with
/// `partial: true` and the error message, and the error is returned.
pub fn run(config: &RunConfig) -> anyhow::Result<EvalReport> {
    config.validate()?;
    let mut report = EvalReport {
        version: REPORT_VERSION,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        partial: false,
        error: None,
        scenario: scenario_info(&config.input),
        prompt: config.prompt.to_string(),
        propagator: config.propagator,
        policies: config.policies.iter().map(|p| p.name.clone()).collect(),
        seeds: config.seeds.clone(),
        rows: Vec::new(),
        deltas: Vec::new(),
    };
    let outcome = run_cells(config, &mut report);
    report.rows.sort_by_key(|r| {
        let p = config.policies.iter().position(|p| p.name == r.policy);
        let s = report.seeds.iter().position(|&s| s == r.seed);
        (p, s)
    });
    report.deltas = compute_deltas(&config.policies, &report.rows);
    if let Err(e) = &outcome {
        report.partial = true;
        report.error = Some(format!("{e:#}"));
    }
    write_reports(&report, config)?;
    outcome.map(|()| report)
}

/// Plain-text summary of rows and deltas.
pub fn summary(report: &EvalReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>5} {:>8} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10} {:>6} {:>6}",
        "policy", "seed", "J", "F", "J&F", "Dice", "CIoU", "fps", "fps_read", "stored", "attend"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<14} {:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10.1} {:>10.1} {:>6} {:>6}",
            r.policy,
            r.seed,
            r.j.0,
            r.f.0,
            r.jf.0,
            r.dice.0,
            r.ciou.0,
            r.fps_total.0,
            r.fps_readout.0,
            r.stored_entries,
            r.attended_entries
        );
    }
    for d in &report.deltas {
        let _ = writeln!(
            out,
            "{} vs {}: dJ&F {:+.4}  dDice {:+.4}  fps_readout x{:.3}  attended {}  stored {}",
            d.policy, d.baseline, d.jf.0, d.dice.0, d.fps_readout_ratio.0, d.attended_ratio, d.stored_ratio
        );
    }
    out
}
