//! Full-mask propagation over the built-in sequence, scored per phase.
//!
//! Usage: cargo run --release --example propagate -- [policy:n:m] [seed]

use framebank::bench::parse_policy;
use framebank::dataio::{generate, ScenarioConfig};
use framebank::metrics::{score_sequence, throughput};
use framebank::{propagate, Prompt, PropagationConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let policy = parse_policy(args.first().map_or("efp:5:2", String::as_str)).map_err(anyhow::Error::msg)?;
    let seed: u64 = args.get(1).map_or(Ok(0), |s| s.parse())?;

    let seq = generate(&ScenarioConfig::builtin("redundant").unwrap().with_seed(seed))?;
    let prompt = Prompt::FullMask(seq.masks[0].clone());
    let out = propagate(&seq.frames, &prompt, &PropagationConfig::new(policy.params))?;

    println!("{} on builtin:redundant, seed {seed}", policy.name);
    let mut start = 0;
    for phase in &seq.phases {
        // score each phase with one frame of context on both sides
        let lo = start.max(1) - 1;
        let hi = (start + phase.len() + 1).min(seq.len());
        let s = score_sequence(&out.masks[lo..hi], &seq.masks[lo..hi])?;
        println!("  frames {start:>3}..{:<3} {:<40} J&F {:.3}", start + phase.len(), format!("{phase:?}"), s.jf);
        start += phase.len();
    }
    let s = score_sequence(&out.masks, &seq.masks)?;
    let fps = throughput(&out.timings)?;
    println!("sequence: J {:.4}  F {:.4}  J&F {:.4}  Dice {:.4}  CIoU {:.4}", s.j, s.f, s.jf, s.dice, s.ciou);
    println!("fps {:.1} (readout stage {:.1}), peak bank {} bytes", fps.fps_total, fps.fps_readout, out.peak_footprint_bytes);
    Ok(())
}
