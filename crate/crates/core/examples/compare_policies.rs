//! Policy comparison through the library API, without the CLI.
//!
//! Usage: cargo run --release --example compare_policies -- [seeds] [out-dir]

use framebank::bench::{parse_seeds, run, summary, InputSource, RunConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds = parse_seeds(args.first().map_or("0..2", String::as_str)).map_err(anyhow::Error::msg)?;
    let mut config = RunConfig::new(InputSource::builtin("redundant").unwrap(), RunConfig::default_policies(), seeds);
    config.out = args.get(1).map(Into::into);

    let report = run(&config)?;
    print!("{}", summary(&report));
    if let Some(d) = report.delta("efp:5:2", "fifo:3:0") {
        println!("\nat an equal budget of 4 attended entries, EFP changes J&F by {:+.4}", d.jf.0);
    }
    Ok(())
}
