//! Clicks instead of a mask: flood-filled point prompts, then propagation.

use framebank::bench::prompt_points;
use framebank::dataio::{generate, ScenarioConfig};
use framebank::metrics::{iou, score_sequence, BinaryMask};
use framebank::propagator::{flood_fill_points, DEFAULT_FLOOD_TAU};
use framebank::{propagate, BankParams, Prompt, PropagationConfig};

fn main() -> anyhow::Result<()> {
    let seq = generate(&ScenarioConfig::builtin("redundant").unwrap().with_seed(1))?;
    for k in [1, 5] {
        let points = prompt_points(&seq.masks[0], k, 1);
        let filled = flood_fill_points(&seq.frames[0], &points, DEFAULT_FLOOD_TAU)?;
        print!("{k} point(s) per object:");
        for id in 1..=seq.objects {
            let j = iou(&BinaryMask::from_labels(&filled, id), &BinaryMask::from_labels(&seq.masks[0], id))?;
            print!("  object {id} prompt IoU {j:.3}");
        }
        let out = propagate(&seq.frames, &Prompt::Points(points), &PropagationConfig::new(BankParams::efp(5, 2)))?;
        println!("  -> sequence J&F {:.4}", score_sequence(&out.masks, &seq.masks)?.jf);
    }
    Ok(())
}
