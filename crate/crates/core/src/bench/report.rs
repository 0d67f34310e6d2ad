use std::fmt::Write as _;
use std::path::Path;

use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::bench::PropagatorParams;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "policy,seed,J,F,JF,Dice,CIoU,fps_total,fps_readout,footprint_bytes,stored_entries,attended_entries";

pub const DELTA_CSV_HEADER: &str =
    "policy,baseline,seeds,dJ,dF,dJF,dDice,dCIoU,fps_total_ratio,fps_readout_ratio,footprint_ratio,stored_ratio,attended_ratio";

/// Report format version, bumped on any field change.
pub const REPORT_VERSION: u32 = 1;

/// Six-decimal rendering shared by the JSON and CSV writers.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// A float written with exactly six decimals; non-finite values become `null`.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Fixed6(pub f64);

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(fmt6(self.0)).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Fixed6 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Option::<f64>::deserialize(deserializer)?;
        Ok(Fixed6(value.unwrap_or(f64::NAN)))
    }
}

/// Exact ratio of two counts, reduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
    pub value: Fixed6,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        let value = if den == 0 { f64::NAN } else { num as f64 / den as f64 };
        Self {
            num: num / g,
            den: den / g,
            value: Fixed6(value),
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    /// `builtin:<name>`, a scenario file path, or `load:<dir>`.
    pub source: String,
    pub config_hash: Option<String>,
    pub builtin_version: Option<u32>,
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub objects: u8,
}

/// Selection outcome for one propagated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLog {
    pub frame: u64,
    pub attended: usize,
    pub pruned: Vec<u64>,
    pub survivors: Vec<u64>,
    /// `(frame, cosine similarity to the query)` per window entry.
    pub similarities: Vec<(u64, Fixed6)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub policy: String,
    pub seed: u64,
    pub j: Fixed6,
    pub f: Fixed6,
    pub jf: Fixed6,
    pub dice: Fixed6,
    pub ciou: Fixed6,
    pub frames_evaluated: usize,
    pub fps_total: Fixed6,
    pub fps_readout: Fixed6,
    pub footprint_bytes: usize,
    pub stored_entries: usize,
    pub attended_entries: usize,
    pub readout_multiplies: u64,
    /// SHA-256 over every predicted label map, in frame order.
    pub mask_digest: String,
    pub frames: Vec<FrameLog>,
}

/// `policy` minus `baseline`, averaged over the seeds both ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub policy: String,
    pub baseline: String,
    pub seeds: usize,
    pub j: Fixed6,
    pub f: Fixed6,
    pub jf: Fixed6,
    pub dice: Fixed6,
    pub ciou: Fixed6,
    pub fps_total_ratio: Fixed6,
    pub fps_readout_ratio: Fixed6,
    pub footprint_ratio: Ratio,
    pub stored_ratio: Ratio,
    pub attended_ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    /// ISO-8601 UTC creation time.
    pub timestamp: String,
    pub partial: bool,
    pub error: Option<String>,
    pub scenario: ScenarioInfo,
    pub prompt: String,
    pub propagator: PropagatorParams,
    pub policies: Vec<String>,
    pub seeds: Vec<u64>,
    pub rows: Vec<ReportRow>,
    pub deltas: Vec<DeltaRow>,
}

impl EvalReport {
    pub fn row(&self, policy: &str, seed: u64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.policy == policy && r.seed == seed)
    }

    pub fn delta(&self, policy: &str, baseline: &str) -> Option<&DeltaRow> {
        self.deltas
            .iter()
            .find(|d| d.policy == policy && d.baseline == baseline)
    }

    /// Rows of one policy in seed order.
    pub fn rows_of<'a>(&'a self, policy: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.policy == policy)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn csv_string(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.policy,
            r.seed,
            fmt6(r.j.0),
            fmt6(r.f.0),
            fmt6(r.jf.0),
            fmt6(r.dice.0),
            fmt6(r.ciou.0),
            fmt6(r.fps_total.0),
            fmt6(r.fps_readout.0),
            r.footprint_bytes,
            r.stored_entries,
            r.attended_entries
        );
    }
    out
}

pub fn deltas_csv_string(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(DELTA_CSV_HEADER);
    out.push('\n');
    for d in &report.deltas {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            d.policy,
            d.baseline,
            d.seeds,
            fmt6(d.j.0),
            fmt6(d.f.0),
            fmt6(d.jf.0),
            fmt6(d.dice.0),
            fmt6(d.ciou.0),
            fmt6(d.fps_total_ratio.0),
            fmt6(d.fps_readout_ratio.0),
            d.footprint_ratio,
            d.stored_ratio,
            d.attended_ratio
        );
    }
    out
}

pub fn json_string(report: &EvalReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Per-run table; delta rows go to [`emit_deltas_csv`].
pub fn emit_csv(report: &EvalReport, path: &Path) -> Result<()> {
    write_text(path, &csv_string(report))
}

pub fn emit_deltas_csv(report: &EvalReport, path: &Path) -> Result<()> {
    write_text(path, &deltas_csv_string(report))
}

pub fn emit_json(report: &EvalReport, path: &Path) -> Result<()> {
    write_text(path, &json_string(report))
}

pub fn parse_json(text: &str) -> serde_json::Result<EvalReport> {
    serde_json::from_str(text)
}
