use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::bench::{run, summary, Formats, InputSource, PolicySpec, PromptSpec, PropagatorParams, RunConfig};
use crate::dataio::ScenarioConfig;
use crate::embedding::{APPEARANCE_CHANNELS, SUPPORTED_PATCHES};
use crate::membank::{BankParams, Policy};
use crate::propagator::{DEFAULT_DIM, DEFAULT_FLOOD_TAU, DEFAULT_PATCH, DEFAULT_TEMPERATURE, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
struct ScenarioArg(InputSource);

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

/// Compare memory-bank retention policies on synthetic or saved sequences.
#[derive(Debug, Parser)]
#[command(name = "framebank-bench", version)]
struct Args {
    /// Bank policy as NAME:N:M with NAME one of fifo, efp, random, efp-insert.
    /// Repeatable; defaults to fifo:6:0, fifo:3:0 and efp:5:2.
    #[arg(long = "policy", value_name = "NAME:N:M", value_parser = parse_policy)]
    policies: Vec<PolicySpec>,

    /// First-frame prompt: the full ground-truth mask, or K clicks per object.
    #[arg(long, value_name = "mask|points:K", default_value = "mask", value_parser = parse_prompt)]
    prompt: PromptSpec,

    /// Scenario to render: a JSON config file or builtin:NAME.
    #[arg(long, value_name = "FILE|builtin:NAME", default_value = "builtin:redundant", value_parser = parse_scenario)]
    scenario: ScenarioArg,

    /// Saved sequence directory to evaluate instead of rendering a scenario.
    #[arg(long, value_name = "DIR", conflicts_with = "scenario")]
    load: Option<PathBuf>,

    /// Seeds as an inclusive range A..B or a list A,B,C.
    #[arg(long, value_name = "A..B", default_value = "0..4", value_parser = parse_seed_list)]
    seeds: SeedList,

    /// Output directory for reports and side artifacts.
    #[arg(long, value_name = "DIR", default_value = "bench-out")]
    out: PathBuf,

    /// Patch side in pixels (8, 16 or 32).
    #[arg(long, default_value_t = DEFAULT_PATCH, value_parser = parse_patch)]
    patch: usize,

    /// Descriptor channels per cell (at least 10).
    #[arg(long, default_value_t = DEFAULT_DIM, value_parser = parse_dim)]
    dim: usize,

    /// Softmax temperature of the memory readout.
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE, value_parser = parse_temperature)]
    temperature: f64,

    /// Minimum object score for a pixel to leave the background.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = parse_threshold)]
    threshold: f64,

    /// Channel-sum color tolerance of the point-prompt flood fill.
    #[arg(long = "flood-tau", default_value_t = DEFAULT_FLOOD_TAU)]
    flood_tau: u32,

    /// Report formats to write.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json,csv")]
    format: Vec<Format>,

    /// Write id·(255/K) mask previews under preview/.
    #[arg(long)]
    visualize: bool,

    /// Write raw-id predicted masks under masks/.
    #[arg(long = "save-masks")]
    save_masks: bool,
}

/// Parses `NAME:N:M` into a validated policy.
pub fn parse_policy(s: &str) -> Result<PolicySpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [name, n, m] = parts[..] else {
        return Err(format!("expected NAME:N:M, got '{s}'"));
    };
    let policy: Policy = name.parse()?;
    let n: usize = n.parse().map_err(|_| format!("n must be a nonnegative integer, got '{n}'"))?;
    let m: usize = m.parse().map_err(|_| format!("m must be a nonnegative integer, got '{m}'"))?;
    if policy == Policy::Fifo && m != 0 {
        return Err("fifo takes m = 0".into());
    }
    let params = BankParams::new(policy, n, m).map_err(|e| e.to_string())?;
    Ok(PolicySpec::new(params))
}

pub fn parse_prompt(s: &str) -> Result<PromptSpec, String> {
    if s == "mask" {
        return Ok(PromptSpec::FullMask);
    }
    match s.strip_prefix("points:").map(str::parse::<usize>) {
        Some(Ok(k)) if k >= 1 => Ok(PromptSpec::Points(k)),
        _ => Err(format!("expected mask or points:K with K ≥ 1, got '{s}'")),
    }
}

/// `A..B` (inclusive) or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let int = |v: &str| v.trim().parse::<u64>().map_err(|_| format!("'{v}' is not a seed"));
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (int(a)?, int(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty seed range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(int).collect::<Result<Vec<_>, _>>()?
    };
    for (i, v) in seeds.iter().enumerate() {
        if seeds[..i].contains(v) {
            return Err(format!("seed {v} is listed twice"));
        }
    }
    Ok(seeds)
}

fn parse_seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

fn parse_scenario(s: &str) -> Result<ScenarioArg, String> {
    if let Some(name) = s.strip_prefix("builtin:") {
        return InputSource::builtin(name).map(ScenarioArg).ok_or_else(|| {
            format!(
                "unknown built-in scenario '{name}' (available: {})",
                ScenarioConfig::builtin_names().join(", ")
            )
        });
    }
    let text = std::fs::read_to_string(s).map_err(|e| format!("{s}: {e}"))?;
    let scenario = ScenarioConfig::from_json(&text).map_err(|e| format!("{s}: {e}"))?;
    Ok(ScenarioArg(InputSource::Generate {
        label: s.to_string(),
        scenario,
    }))
}

fn parse_patch(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(p) if SUPPORTED_PATCHES.contains(&p) => Ok(p),
        _ => Err(format!("patch must be one of {SUPPORTED_PATCHES:?}")),
    }
}

fn parse_dim(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d) if d >= APPEARANCE_CHANNELS => Ok(d),
        _ => Err(format!("dim must be an integer ≥ {APPEARANCE_CHANNELS}")),
    }
}

fn parse_temperature(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        _ => Err("temperature must be a positive number".into()),
    }
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t < 1.0 => Ok(t),
        _ => Err("threshold must lie in (0, 1)".into()),
    }
}

/// Usage failure (exit code 2) or a help/version request (exit code 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Parses arguments, program name first.
pub fn cli_parse<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| CliError {
        code: e.exit_code(),
        message: e.render().to_string(),
    })?;
    let input = match args.load {
        Some(dir) => InputSource::Load(dir),
        None => args.scenario.0,
    };
    let policies = if args.policies.is_empty() {
        RunConfig::default_policies()
    } else {
        args.policies
    };
    Ok(RunConfig {
        input,
        prompt: args.prompt,
        policies,
        propagator: PropagatorParams {
            patch: args.patch,
            dim: args.dim,
            temperature: args.temperature,
            threshold: args.threshold,
            flood_tau: args.flood_tau,
        },
        seeds: args.seeds.0,
        out: Some(args.out),
        formats: Formats {
            json: args.format.contains(&Format::Json),
            csv: args.format.contains(&Format::Csv),
        },
        visualize: args.visualize,
        save_masks: args.save_masks,
    })
}

/// Parses, runs and prints; returns the process exit code (0 ok, 1 runtime
/// failure, 2 usage).
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match cli_parse(argv) {
        Ok(config) => config,
        Err(e) if e.code == 0 => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return e.code;
        }
    };
    match run(&config) {
        Ok(report) => {
            print!("{}", summary(&report));
            if let Some(out) = &config.out {
                println!("reports written to {}", out.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
