//! Region, boundary and challenge scores on small hand-made masks.

use framebank::metrics::{boundary_f, default_boundary_radius, dice, iou, score_sequence, throughput, BinaryMask};
use framebank::propagator::StageTimings;
use framebank::ObjectMaskMap;

fn square(w: usize, x0: usize, y0: usize, side: usize) -> BinaryMask {
    let bits = (0..w * w)
        .map(|i| (x0..x0 + side).contains(&(i % w)) && (y0..y0 + side).contains(&(i / w)))
        .collect();
    BinaryMask::new(w, w, bits)
}

fn main() -> framebank::Result<()> {
    let (a, b) = (square(4, 0, 0, 2), square(4, 1, 1, 2));
    println!("2x2 squares offset by (1,1) on 4x4: J {:.4}  Dice {:.4}", iou(&a, &b)?, dice(&a, &b)?);

    let (p, g) = (square(16, 5, 4, 8), square(16, 4, 4, 8));
    for r in 0..3 {
        println!("8x8 square shifted 1 px, radius {r}: F {:.4}", boundary_f(&p, &g, r)?);
    }
    println!("default radius at 96x96: {}, at 854x480: {}", default_boundary_radius(96, 96), default_boundary_radius(854, 480));

    // a four-frame sequence: frames 0 and 3 are excluded from scoring
    let mut gt = ObjectMaskMap::background(8, 8);
    for x in 0..8 {
        gt.set(x, 3, 1);
    }
    let mut half = ObjectMaskMap::background(8, 8);
    for x in 0..4 {
        half.set(x, 3, 1);
    }
    let s = score_sequence(&[half.clone(), gt.clone(), half, gt.clone()], &vec![gt; 4])?;
    println!("sequence: J {:.4} F {:.4} J&F {:.4} Dice {:.4} CIoU {:.4} over {} frames", s.j, s.f, s.jf, s.dice, s.ciou, s.frames_evaluated);

    let ten_ms = StageTimings { readout: 4_000_000, encode: 6_000_000, ..Default::default() };
    let fps = throughput(&vec![ten_ms; 11])?;
    println!("10 ms per frame: {:.1} fps, readout stage {:.1} fps", fps.fps_total, fps.fps_readout);
    Ok(())
}
