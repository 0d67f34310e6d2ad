//! Region, boundary and throughput metrics for video object segmentation.
//!
//! Conventions:
//! - a pair of empty masks scores 1.0 for IoU, Dice and boundary F;
//! - sequence scores skip the first and last frame;
//! - per-frame scores average over objects first, then over frames, with
//!   sequential summation in frame order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::{ObjectMaskMap, StageTimings};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask size");
        Self { width, height, bits }
    }

    pub fn from_labels(map: &ObjectMaskMap, id: u8) -> Self {
        Self::new(map.width, map.height, map.object(id))
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }
}

fn check_dims(a: &BinaryMask, b: &BinaryMask) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::MetricInput(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

fn overlap(a: &BinaryMask, b: &BinaryMask) -> (usize, usize, usize) {
    let mut inter = 0;
    let (mut na, mut nb) = (0, 0);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        inter += usize::from(x && y);
        na += usize::from(x);
        nb += usize::from(y);
    }
    (inter, na, nb)
}

/// Region similarity J: `|A ∩ B| / |A ∪ B|`.
pub fn iou(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred, gt)?;
    let (inter, np, ng) = overlap(pred, gt);
    let union = np + ng - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// `2|A ∩ B| / (|A| + |B|)`.
pub fn dice(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred, gt)?;
    let (inter, np, ng) = overlap(pred, gt);
    Ok(if np + ng == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (np + ng) as f64
    })
}

/// Mask pixels with a 4-neighbor outside the mask or on the image border.
pub fn boundary(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !mask.at(x, y) {
                continue;
            }
            out[y * w + x] = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !mask.at(x - 1, y)
                || !mask.at(x + 1, y)
                || !mask.at(x, y - 1)
                || !mask.at(x, y + 1);
        }
    }
    BinaryMask::new(w, h, out)
}

/// Dilation by a `(2r+1)²` square (Chebyshev ball), done separably.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    if radius == 0 {
        return mask.clone();
    }
    let mut rows = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(w - 1);
            rows[y * w + x] = (lo..=hi).any(|xx| mask.bits[y * w + xx]);
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(h - 1);
        for x in 0..w {
            out[y * w + x] = (lo..=hi).any(|yy| rows[yy * w + x]);
        }
    }
    BinaryMask::new(w, h, out)
}

/// Tolerance radius `ceil(0.008 · diagonal)`.
pub fn default_boundary_radius(width: usize, height: usize) -> usize {
    (0.008 * ((width * width + height * height) as f64).sqrt()).ceil() as usize
}

/// Boundary F-measure with a Chebyshev matching tolerance.
pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, radius: usize) -> Result<f64> {
    check_dims(pred, gt)?;
    let pb = boundary(pred);
    let gb = boundary(gt);
    let (np, ng) = (pb.count(), gb.count());
    match (np, ng) {
        (0, 0) => return Ok(1.0),
        (0, _) | (_, 0) => return Ok(0.0),
        _ => {}
    }
    let (matched_pred, _, _) = overlap(&pb, &dilate(&gb, radius));
    let (matched_gt, _, _) = overlap(&gb, &dilate(&pb, radius));
    let precision = matched_pred as f64 / np as f64;
    let recall = matched_gt as f64 / ng as f64;
    Ok(if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectScore {
    pub id: u8,
    pub j: f64,
    pub f: f64,
    pub dice: f64,
    /// Whether the object appears in this frame's ground truth.
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub objects: Vec<ObjectScore>,
}

impl FrameScore {
    fn mean(&self, f: impl Fn(&ObjectScore) -> f64) -> f64 {
        mean(self.objects.iter().map(f))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}

fn check_map_dims(pred: &ObjectMaskMap, gt: &ObjectMaskMap) -> Result<()> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::MetricInput(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    Ok(())
}

/// Scores objects `1..=objects` in one frame.
pub fn score_frame(pred: &ObjectMaskMap, gt: &ObjectMaskMap, objects: u8, radius: usize) -> Result<FrameScore> {
    check_map_dims(pred, gt)?;
    let objects = (1..=objects)
        .map(|id| {
            let p = BinaryMask::from_labels(pred, id);
            let g = BinaryMask::from_labels(gt, id);
            Ok(ObjectScore {
                id,
                j: iou(&p, &g)?,
                f: boundary_f(&p, &g, radius)?,
                dice: dice(&p, &g)?,
                present: g.count() > 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameScore { objects })
}

/// Challenge IoU: per frame, mean IoU over the objects present in that
/// frame's ground truth; frames without objects are skipped. Returns 1.0
/// when no frame contributes.
pub fn challenge_iou(preds: &[ObjectMaskMap], gts: &[ObjectMaskMap]) -> Result<f64> {
    if preds.len() != gts.len() {
        return Err(Error::MetricInput(format!(
            "{} predictions for {} ground-truth frames",
            preds.len(),
            gts.len()
        )));
    }
    let mut sum = 0.0;
    let mut frames = 0usize;
    for (pred, gt) in preds.iter().zip(gts) {
        check_map_dims(pred, gt)?;
        let mut present = [false; 256];
        for &l in &gt.labels {
            present[l as usize] = true;
        }
        let mut frame_sum = 0.0;
        let mut count = 0usize;
        for id in (1..=255u8).filter(|&id| present[id as usize]) {
            frame_sum += iou(&BinaryMask::from_labels(pred, id), &BinaryMask::from_labels(gt, id))?;
            count += 1;
        }
        if count > 0 {
            sum += frame_sum / count as f64;
            frames += 1;
        }
    }
    Ok(if frames == 0 { 1.0 } else { sum / frames as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub j: f64,
    pub f: f64,
    pub jf: f64,
    pub dice: f64,
    pub ciou: f64,
    pub frames_evaluated: usize,
}

/// J, F, J&F, Dice and challenge IoU over frames `1..=T-2`.
///
/// Objects `1..=K` are scored in every evaluated frame, with `K` the largest
/// id in either sequence.
pub fn score_sequence(preds: &[ObjectMaskMap], gts: &[ObjectMaskMap]) -> Result<SequenceScore> {
    if preds.len() != gts.len() {
        return Err(Error::MetricInput(format!(
            "{} predictions for {} ground-truth frames",
            preds.len(),
            gts.len()
        )));
    }
    if gts.len() < 3 {
        return Err(Error::MetricInput(format!(
            "need at least 3 frames, got {}",
            gts.len()
        )));
    }
    let objects = preds
        .iter()
        .chain(gts)
        .map(ObjectMaskMap::max_id)
        .max()
        .unwrap_or(0);
    let range = 1..gts.len() - 1;
    let radius = default_boundary_radius(gts[0].width, gts[0].height);
    let scores = preds[range.clone()]
        .iter()
        .zip(&gts[range.clone()])
        .map(|(p, g)| score_frame(p, g, objects, radius))
        .collect::<Result<Vec<_>>>()?;

    let j = mean(scores.iter().map(|s| s.mean(|o| o.j)));
    let f = mean(scores.iter().map(|s| s.mean(|o| o.f)));
    let dice = mean(scores.iter().map(|s| s.mean(|o| o.dice)));
    Ok(SequenceScore {
        j,
        f,
        jf: (j + f) / 2.0,
        dice,
        ciou: challenge_iou(&preds[range.clone()], &gts[range])?,
        frames_evaluated: scores.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub fps_total: f64,
    pub fps_readout: f64,
}

/// Frames per second over all frames but the prompt frame.
pub fn throughput(timings: &[StageTimings]) -> Result<Throughput> {
    if timings.len() < 2 {
        return Err(Error::MetricInput(
            "throughput needs the prompt frame plus at least one propagated frame".into(),
        ));
    }
    let frames = (timings.len() - 1) as f64;
    let total: u64 = timings[1..].iter().map(StageTimings::total).sum();
    let readout: u64 = timings[1..].iter().map(|t| t.readout).sum();
    if total == 0 || readout == 0 {
        return Err(Error::ZeroElapsed);
    }
    Ok(Throughput {
        fps_total: frames / (total as f64 * 1e-9),
        fps_readout: frames / (readout as f64 * 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(w: usize, h: usize, x0: usize, y0: usize, side: usize) -> BinaryMask {
        let mut bits = vec![false; w * h];
        for y in y0..(y0 + side).min(h) {
            for x in x0..(x0 + side).min(w) {
                bits[y * w + x] = true;
            }
        }
        BinaryMask::new(w, h, bits)
    }

    #[test]
    fn region_examples() {
        let a = square(4, 4, 0, 0, 2);
        let b = square(4, 4, 1, 1, 2);
        // 1 shared pixel, 7 in the union
        assert_eq!(iou(&a, &b).unwrap(), 1.0 / 7.0);
        assert_eq!(dice(&a, &b).unwrap(), 0.25);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let far = square(4, 4, 2, 2, 2);
        assert_eq!(iou(&a, &far).unwrap(), 0.0);
        let empty = BinaryMask::new(4, 4, vec![false; 16]);
        assert_eq!(dice(&a, &empty).unwrap(), 0.0);
        assert_eq!(iou(&empty, &empty).unwrap(), 1.0);
        assert_eq!(dice(&empty, &empty).unwrap(), 1.0);
        assert!(iou(&a, &square(5, 4, 0, 0, 2)).is_err());
    }

    #[test]
    fn boundary_examples() {
        let a = square(16, 16, 4, 4, 8);
        assert_eq!(boundary_f(&a, &a, 0).unwrap(), 1.0);
        let shifted = square(16, 16, 5, 4, 8);
        assert_eq!(boundary_f(&a, &shifted, 1).unwrap(), 1.0);
        assert!(boundary_f(&a, &shifted, 0).unwrap() < 1.0);
        let far = square(32, 32, 20, 20, 8);
        let near = square(32, 32, 0, 0, 8);
        assert_eq!(boundary_f(&near, &far, 3).unwrap(), 0.0);
        let empty = BinaryMask::new(16, 16, vec![false; 256]);
        assert_eq!(boundary_f(&empty, &empty, 2).unwrap(), 1.0);
        assert_eq!(boundary_f(&a, &empty, 2).unwrap(), 0.0);
    }

    #[test]
    fn boundary_pixels_of_a_square() {
        let b = boundary(&square(8, 8, 2, 2, 4));
        assert_eq!(b.count(), 12);
        // touching the border makes border pixels boundary pixels
        let full = boundary(&BinaryMask::new(3, 3, vec![true; 9]));
        assert_eq!(full.count(), 8);
    }

    #[test]
    fn default_radius() {
        assert_eq!(default_boundary_radius(96, 96), 2);
        assert_eq!(default_boundary_radius(854, 480), 8);
    }

    #[test]
    fn throughput_examples() {
        let ten_ms = StageTimings {
            encode: 2_000_000,
            select: 1_000_000,
            readout: 5_000_000,
            decode: 1_000_000,
            commit: 1_000_000,
        };
        let t = throughput(&[ten_ms; 11]).unwrap();
        assert!((t.fps_total - 100.0).abs() < 1e-9);
        assert!((t.fps_readout - 200.0).abs() < 1e-9);
        assert!(t.fps_readout >= t.fps_total);

        let slow = StageTimings {
            encode: 4_000_000,
            select: 2_000_000,
            readout: 10_000_000,
            decode: 2_000_000,
            commit: 2_000_000,
        };
        let s = throughput(&[slow; 11]).unwrap();
        assert!((s.fps_total - 50.0).abs() < 1e-9);

        assert!(matches!(throughput(&[StageTimings::default(); 3]), Err(Error::ZeroElapsed)));
        assert!(throughput(&[ten_ms]).is_err());
    }

    #[test]
    fn sequence_needs_three_frames() {
        let m = ObjectMaskMap::background(4, 4);
        assert!(score_sequence(&[m.clone(), m.clone()], &[m.clone(), m]).is_err());
    }
}
