use std::collections::HashSet;

use framebank::metrics::{boundary_f, challenge_iou, dice, iou, score_sequence, BinaryMask};
use framebank::rng::SplitMix64;
use framebank::ObjectMaskMap;

type Pixels = HashSet<(i64, i64)>;

fn pixels(m: &BinaryMask) -> Pixels {
    let mut set = HashSet::new();
    for y in 0..m.height {
        for x in 0..m.width {
            if m.bits[y * m.width + x] {
                set.insert((x as i64, y as i64));
            }
        }
    }
    set
}

fn oracle_iou(a: &Pixels, b: &Pixels) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

fn oracle_dice(a: &Pixels, b: &Pixels) -> f64 {
    if a.len() + b.len() == 0 {
        1.0
    } else {
        2.0 * a.intersection(b).count() as f64 / (a.len() + b.len()) as f64
    }
}

fn oracle_boundary(a: &Pixels, w: i64, h: i64) -> Pixels {
    a.iter()
        .copied()
        .filter(|&(x, y)| {
            [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                .iter()
                .any(|&(nx, ny)| nx < 0 || ny < 0 || nx >= w || ny >= h || !a.contains(&(nx, ny)))
        })
        .collect()
}

fn oracle_f(a: &Pixels, b: &Pixels, w: i64, h: i64, r: i64) -> f64 {
    let (ba, bb) = (oracle_boundary(a, w, h), oracle_boundary(b, w, h));
    if ba.is_empty() && bb.is_empty() {
        return 1.0;
    }
    if ba.is_empty() || bb.is_empty() {
        return 0.0;
    }
    let near = |p: &(i64, i64), set: &Pixels| set.iter().any(|q| (p.0 - q.0).abs().max((p.1 - q.1).abs()) <= r);
    let precision = ba.iter().filter(|p| near(p, &bb)).count() as f64 / ba.len() as f64;
    let recall = bb.iter().filter(|p| near(p, &ba)).count() as f64 / bb.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn random_mask(rng: &mut SplitMix64, w: usize, h: usize, density: u64) -> BinaryMask {
    let bits = (0..w * h).map(|_| rng.below(100) < density).collect();
    BinaryMask::new(w, h, bits)
}

/// Random blob: union of a few rectangles, so boundaries are not pure noise.
fn random_blob(rng: &mut SplitMix64, w: usize, h: usize) -> BinaryMask {
    let mut bits = vec![false; w * h];
    for _ in 0..rng.below(4) {
        let (x0, y0) = (rng.below(w as u64) as usize, rng.below(h as u64) as usize);
        let (x1, y1) = (
            (x0 + 1 + rng.below(8) as usize).min(w),
            (y0 + 1 + rng.below(8) as usize).min(h),
        );
        for y in y0..y1 {
            for x in x0..x1 {
                bits[y * w + x] = true;
            }
        }
    }
    BinaryMask::new(w, h, bits)
}

#[test]
fn iou_and_dice_match_pixel_counting() {
    let mut rng = SplitMix64::new(2024);
    for i in 0..100 {
        let density = [5, 30, 50, 80][i % 4];
        let a = random_mask(&mut rng, 16, 16, density);
        let b = random_mask(&mut rng, 16, 16, density);
        let (pa, pb) = (pixels(&a), pixels(&b));
        let j = iou(&a, &b).unwrap();
        let d = dice(&a, &b).unwrap();
        assert_eq!(j, oracle_iou(&pa, &pb));
        assert_eq!(d, oracle_dice(&pa, &pb));
        assert!((d - 2.0 * j / (1.0 + j)).abs() < 1e-12);
    }
}

#[test]
fn boundary_f_matches_tolerance_oracle() {
    let mut rng = SplitMix64::new(77);
    for i in 0..200 {
        let (w, h) = (4 + rng.below(13) as usize, 4 + rng.below(13) as usize);
        let (a, b) = if i % 2 == 0 {
            (random_blob(&mut rng, w, h), random_blob(&mut rng, w, h))
        } else {
            (random_mask(&mut rng, w, h, 40), random_mask(&mut rng, w, h, 40))
        };
        let r = rng.below(4) as usize;
        let expected = oracle_f(&pixels(&a), &pixels(&b), w as i64, h as i64, r as i64);
        let got = boundary_f(&a, &b, r).unwrap();
        assert!((got - expected).abs() < 1e-12, "{w}x{h} r={r}: {got} vs {expected}");
    }
}

fn map(w: usize, h: usize, objects: &[(u8, &[(usize, usize)])]) -> ObjectMaskMap {
    let mut m = ObjectMaskMap::background(w, h);
    for &(id, px) in objects {
        for &(x, y) in px {
            m.set(x, y, id);
        }
    }
    m
}

fn column(x: usize, ys: std::ops::Range<usize>) -> Vec<(usize, usize)> {
    ys.map(|y| (x, y)).collect()
}

fn row(y: usize, xs: std::ops::Range<usize>) -> Vec<(usize, usize)> {
    xs.map(|x| (x, y)).collect()
}

#[test]
fn challenge_iou_three_frame_example() {
    // frame A: only object 1 in the ground truth; 2 shared pixels of 6 → 1/3
    let gt_a = map(4, 4, &[(1, &[(0, 0), (1, 0), (0, 1), (1, 1)])]);
    let pred_a = map(4, 4, &[(1, &row(0, 0..4))]);
    // frame B: objects 1 and 2; 2/4 and 4/8 → 1/2
    let gt_b = map(4, 4, &[(1, &column(0, 0..4)), (2, &column(3, 0..4))]);
    let pred_b = map(
        4,
        4,
        &[(1, &column(0, 0..2)), (2, &[column(2, 0..4), column(3, 0..4)].concat())],
    );
    // frame C: only object 2; the stray object-1 prediction is not counted → 1
    let gt_c = map(4, 4, &[(2, &[(3, 3)])]);
    let pred_c = map(4, 4, &[(1, &[(0, 0)]), (2, &[(3, 3)])]);

    let got = challenge_iou(&[pred_a, pred_b, pred_c], &[gt_a, gt_b, gt_c]).unwrap();
    let expected = (1.0 / 3.0 + 0.5 + 1.0) / 3.0;
    assert!((got - expected).abs() < 1e-12);
    assert!((got - 11.0 / 18.0).abs() < 1e-12);
}

#[test]
fn challenge_iou_skips_empty_frames() {
    let empty = ObjectMaskMap::background(4, 4);
    let gt = map(4, 4, &[(1, &row(1, 0..4))]);
    let pred = map(4, 4, &[(1, &row(1, 0..2))]);
    let got = challenge_iou(&[empty.clone(), pred], &[empty.clone(), gt]).unwrap();
    assert_eq!(got, 0.5);
    assert_eq!(challenge_iou(std::slice::from_ref(&empty), std::slice::from_ref(&empty)).unwrap(), 1.0);
}

#[test]
fn score_sequence_four_frame_oracle() {
    let (w, h) = (10usize, 8usize);
    let gts = vec![
        map(w, h, &[(1, &row(0, 0..3))]),
        map(w, h, &[(1, &[row(2, 1..5), row(3, 1..5)].concat()), (2, &column(8, 2..7))]),
        map(w, h, &[(2, &[column(7, 1..6), column(8, 1..6)].concat())]),
        map(w, h, &[(1, &row(7, 0..10))]),
    ];
    let preds = vec![
        ObjectMaskMap::background(w, h),
        map(w, h, &[(1, &[row(2, 2..6), row(3, 2..6)].concat()), (2, &column(8, 3..7))]),
        map(w, h, &[(1, &[(0, 0)]), (2, &column(7, 1..6))]),
        ObjectMaskMap::background(w, h),
    ];
    let score = score_sequence(&preds, &gts).unwrap();

    // per-frame oracle on frames 1 and 2, objects 1..=2, radius ceil(0.008·√164) = 1
    let r = 1;
    let mut per_frame = Vec::new();
    for t in 1..=2 {
        let mut js = Vec::new();
        let mut fs = Vec::new();
        let mut ds = Vec::new();
        let mut present = Vec::new();
        for id in 1..=2u8 {
            let p = pixels(&BinaryMask::from_labels(&preds[t], id));
            let g = pixels(&BinaryMask::from_labels(&gts[t], id));
            js.push(oracle_iou(&p, &g));
            fs.push(oracle_f(&p, &g, w as i64, h as i64, r));
            ds.push(oracle_dice(&p, &g));
            if !g.is_empty() {
                present.push(oracle_iou(&p, &g));
            }
        }
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        per_frame.push((avg(&js), avg(&fs), avg(&ds), avg(&present)));
    }
    let j = (per_frame[0].0 + per_frame[1].0) / 2.0;
    let f = (per_frame[0].1 + per_frame[1].1) / 2.0;
    let d = (per_frame[0].2 + per_frame[1].2) / 2.0;
    let c = (per_frame[0].3 + per_frame[1].3) / 2.0;
    assert_eq!(score.frames_evaluated, 2);
    assert!((score.j - j).abs() < 1e-12);
    assert!((score.f - f).abs() < 1e-12);
    assert!((score.dice - d).abs() < 1e-12);
    assert!((score.ciou - c).abs() < 1e-12);
    assert_eq!(score.jf, (score.j + score.f) / 2.0);
    // frame 2: object 1 is a false positive (J 0), object 2 matches half → J = 0.25
    assert!((per_frame[1].0 - 0.25).abs() < 1e-12);
}

#[test]
fn score_sequence_extremes() {
    let gt = map(8, 8, &[(1, &row(3, 0..8))]);
    let gts = vec![gt.clone(); 5];
    let perfect = score_sequence(&gts, &gts).unwrap();
    assert_eq!((perfect.j, perfect.f, perfect.dice, perfect.ciou), (1.0, 1.0, 1.0, 1.0));
    let blank = vec![ObjectMaskMap::background(8, 8); 5];
    let worst = score_sequence(&blank, &gts).unwrap();
    assert_eq!((worst.j, worst.f, worst.dice, worst.ciou), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(worst.frames_evaluated, 3);
}
