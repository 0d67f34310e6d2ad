//! Render a scenario, save it as PPM/PGM files, and load it back.
//!
//! Usage: cargo run --example dataset -- [out-dir] [scenario.json]

use std::path::PathBuf;

use framebank::dataio::{generate, load_sequence, save_sequence, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = args.first().map_or_else(|| std::env::temp_dir().join("framebank-still"), PathBuf::from);
    let config = match args.get(1) {
        Some(path) => ScenarioConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ScenarioConfig::builtin("still").unwrap().with_seed(7),
    };
    println!("scenario hash {}", config.config_hash());

    let seq = generate(&config)?;
    save_sequence(&seq, &dir)?;
    let back = load_sequence(&dir)?;
    assert_eq!(back, seq);
    println!(
        "{} frames of {}x{} with {} objects written to {} and read back unchanged",
        seq.len(),
        seq.width(),
        seq.height(),
        seq.objects,
        dir.display()
    );
    for id in 1..=seq.objects {
        println!("  object {id}: {} px in frame 0", seq.masks[0].area(id));
    }
    println!("\nscenario config:\n{}", serde_json::to_string_pretty(&config)?);
    Ok(())
}
