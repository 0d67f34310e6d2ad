//! Hand-crafted frame encoder and the cosine similarity that drives pruning.
//!
//! Each `patch × patch` cell of a frame is described by a fixed-layout vector:
//!
//! | channels | content                                              | scaling          |
//! |----------|------------------------------------------------------|------------------|
//! | 0..3     | mean R, G, B                                         | `/ 255`          |
//! | 3..6     | population std-dev of R, G, B                        | `/ 127.5`        |
//! | 6..10    | magnitude-weighted 4-bin gradient orientation histogram of grayscale | `/ (pixels · 255√2)` |
//! | 10..d    | sinusoidal encodings of the cell coordinates         | `(v + 1) / 2`    |
//!
//! Grayscale is `floor((R + G + B) / 3)`. Gradients are forward differences
//! (`g(x+1, y) - g(x, y)`, `g(x, y+1) - g(x, y)`), with the neighbor clamped to
//! the frame border. Orientation is folded to `[0°, 180°)` and binned in 45°
//! steps using integer comparisons only. Positional channel `k` uses frequency
//! `ω = (π/16) · 2^(k/4)` and component `k % 4` ∈ {sin x, cos x, sin y, cos y}.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

pub const MIN_FRAME_SIDE: usize = 16;
pub const APPEARANCE_CHANNELS: usize = 10;
pub const SUPPORTED_PATCHES: [usize; 3] = [8, 16, 32];
/// Lowest positional frequency, radians per cell; each further group of four
/// channels doubles it.
pub const POSITIONAL_BASE_FREQ: f64 = PI / 16.0;

/// A raw RGB frame, the unit that streams through the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameImage {
    pub index: u64,
    pub width: usize,
    pub height: usize,
    /// Row-major interleaved RGB, `3 · width · height` bytes.
    pub pixels: Vec<u8>,
}

impl FrameImage {
    pub fn new(index: u64, width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        let frame = Self {
            index,
            width,
            height,
            pixels,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// A frame filled with one color.
    pub fn filled(index: u64, width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(3 * width * height)
            .collect();
        Self::new(index, width, height, pixels)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_FRAME_SIDE || self.height < MIN_FRAME_SIDE {
            return Err(Error::InvalidFrame(format!(
                "{}x{} is below the {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE} minimum",
                self.width, self.height
            )));
        }
        if self.pixels.len() != 3 * self.width * self.height {
            return Err(Error::InvalidFrame(format!(
                "expected {} bytes for {}x{} RGB, got {}",
                3 * self.width * self.height,
                self.width,
                self.height,
                self.pixels.len()
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Same content under a different frame index.
    pub fn with_index(&self, index: u64) -> Self {
        Self {
            index,
            ..self.clone()
        }
    }
}

/// Per-cell descriptors laid out row-major, `d` channels per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub gw: usize,
    pub gh: usize,
    pub d: usize,
    pub data: Vec<f64>,
}

impl FeatureGrid {
    pub fn zeros(gw: usize, gh: usize, d: usize) -> Self {
        Self {
            gw,
            gh,
            d,
            data: vec![0.0; gw * gh * d],
        }
    }

    pub fn cell_count(&self) -> usize {
        self.gw * self.gh
    }

    #[inline]
    pub fn cell(&self, cx: usize, cy: usize) -> &[f64] {
        let start = (cy * self.gw + cx) * self.d;
        &self.data[start..start + self.d]
    }

    #[inline]
    pub fn cell_mut(&mut self, cx: usize, cy: usize) -> &mut [f64] {
        let start = (cy * self.gw + cx) * self.d;
        &mut self.data[start..start + self.d]
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d.max(1))
    }

    pub fn same_layout(&self, other: &FeatureGrid) -> bool {
        self.gw == other.gw && self.gh == other.gh && self.d == other.d
    }
}

/// A pooled per-frame vector with its Euclidean norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { values, norm }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Zero-norm vectors are allowed to exist but cannot enter a similarity.
    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }
}

/// Encodes a frame into a grid of fixed-layout cell descriptors.
pub fn extract_features(frame: &FrameImage, patch: usize, d: usize) -> Result<FeatureGrid> {
    if !SUPPORTED_PATCHES.contains(&patch) {
        return Err(Error::UnsupportedPatch(patch));
    }
    if d < APPEARANCE_CHANNELS {
        return Err(Error::TooFewChannels(d));
    }
    frame.validate()?;
    let gw = frame.width / patch;
    let gh = frame.height / patch;
    if gw == 0 || gh == 0 {
        return Err(Error::InvalidFrame(format!(
            "{}x{} yields an empty grid at patch {patch}",
            frame.width, frame.height
        )));
    }

    let gray: Vec<i32> = frame
        .pixels
        .chunks_exact(3)
        .map(|p| (p[0] as i32 + p[1] as i32 + p[2] as i32) / 3)
        .collect();
    let (w, h) = (frame.width, frame.height);
    let n = (patch * patch) as f64;
    let grad_scale = 1.0 / (n * 255.0 * SQRT_2);

    let mut grid = FeatureGrid::zeros(gw, gh, d);
    for cy in 0..gh {
        for cx in 0..gw {
            let mut sum = [0.0f64; 3];
            let mut hist = [0.0f64; 4];
            for y in cy * patch..(cy + 1) * patch {
                for x in cx * patch..(cx + 1) * patch {
                    let px = frame.rgb(x, y);
                    for c in 0..3 {
                        sum[c] += px[c] as f64;
                    }
                    let g = gray[y * w + x];
                    let gx = gray[y * w + (x + 1).min(w - 1)] - g;
                    let gy = gray[(y + 1).min(h - 1) * w + x] - g;
                    if let Some(bin) = orientation_bin(gx, gy) {
                        hist[bin] += ((gx * gx + gy * gy) as f64).sqrt();
                    }
                }
            }
            let mean = sum.map(|s| s / n);
            let mut var = [0.0f64; 3];
            for y in cy * patch..(cy + 1) * patch {
                for x in cx * patch..(cx + 1) * patch {
                    let px = frame.rgb(x, y);
                    for c in 0..3 {
                        let dv = px[c] as f64 - mean[c];
                        var[c] += dv * dv;
                    }
                }
            }

            let cell = grid.cell_mut(cx, cy);
            for c in 0..3 {
                cell[c] = mean[c] / 255.0;
                cell[3 + c] = (var[c] / n).sqrt() / 127.5;
            }
            for b in 0..4 {
                cell[6 + b] = hist[b] * grad_scale;
            }
            positional_encoding(cx, cy, &mut cell[APPEARANCE_CHANNELS..]);
        }
    }
    Ok(grid)
}

/// Unsigned orientation bin of a gradient, `None` for a zero gradient.
fn orientation_bin(gx: i32, gy: i32) -> Option<usize> {
    if gx == 0 && gy == 0 {
        return None;
    }
    // fold into the upper half-plane: angle in [0°, 180°)
    let (gx, gy) = if gy < 0 || (gy == 0 && gx < 0) {
        (-gx, -gy)
    } else {
        (gx, gy)
    };
    Some(if gx > 0 && gy < gx {
        0
    } else if gx > 0 {
        1
    } else if gy > -gx {
        2
    } else {
        3
    })
}

fn positional_encoding(cx: usize, cy: usize, out: &mut [f64]) {
    for (k, slot) in out.iter_mut().enumerate() {
        let omega = POSITIONAL_BASE_FREQ * (1u64 << (k / 4)) as f64;
        let v = match k % 4 {
            0 => (omega * cx as f64).sin(),
            1 => (omega * cx as f64).cos(),
            2 => (omega * cy as f64).sin(),
            _ => (omega * cy as f64).cos(),
        };
        *slot = (v + 1.0) / 2.0;
    }
}

/// Channel-wise mean over all cells.
pub fn pool_embedding(grid: &FeatureGrid) -> EmbeddingVector {
    let mut acc = vec![0.0f64; grid.d];
    for cell in grid.cells() {
        for (a, v) in acc.iter_mut().zip(cell) {
            *a += v;
        }
    }
    let count = grid.cell_count().max(1) as f64;
    EmbeddingVector::new(acc.into_iter().map(|a| a / count).collect())
}

/// `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm * b.norm)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(v: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(v.to_vec())
    }

    #[test]
    fn cosine_worked_examples() {
        assert_eq!(cosine_similarity(&emb(&[1., 0., 0.]), &emb(&[1., 0., 0.])).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&emb(&[1., 0.]), &emb(&[0., 1.])).unwrap(), 0.0);
        // 32 / (sqrt(14) * sqrt(77)), evaluated by hand
        let s = cosine_similarity(&emb(&[1., 2., 3.]), &emb(&[4., 5., 6.])).unwrap();
        assert!((s - 0.974_631_846_2).abs() < 1e-9, "{s}");
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&emb(&[0., 0.]), &emb(&[1., 0.])),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            cosine_similarity(&emb(&[1., 0.]), &emb(&[1., 0., 0.])),
            Err(Error::DimensionMismatch(2, 3))
        ));
        assert_eq!(
            Error::ZeroVector.to_string(),
            "undefined similarity for zero vector"
        );
    }

    #[test]
    fn cosine_is_clamped() {
        let v = emb(&[0.1, 0.2, 0.3, 1e-17]);
        let s = cosine_similarity(&v, &v).unwrap();
        assert!(s <= 1.0);
    }

    #[test]
    fn uniform_gray_frame() {
        let frame = FrameImage::filled(0, 64, 64, [128, 128, 128]).unwrap();
        let g = extract_features(&frame, 16, 16).unwrap();
        assert_eq!((g.gw, g.gh), (4, 4));
        assert_eq!(g.data.len(), 16 * 16);
        for cell in g.cells() {
            for &v in &cell[..3] {
                assert!((v - 0.5).abs() <= 1.0 / 255.0);
                assert_eq!(v, 128.0 / 255.0);
            }
            assert!(cell[3..10].iter().all(|&v| v == 0.0));
        }
        assert_ne!(g.cell(0, 0)[10..], g.cell(1, 0)[10..]);
        assert_ne!(g.cell(0, 0)[10..], g.cell(0, 1)[10..]);
    }

    #[test]
    fn features_ignore_frame_index() {
        let frame = FrameImage::new(
            0,
            32,
            32,
            (0..32 * 32 * 3).map(|i| (i * 7 % 251) as u8).collect(),
        )
        .unwrap();
        let a = extract_features(&frame, 8, 12).unwrap();
        let b = extract_features(&frame.with_index(9), 8, 12).unwrap();
        assert_eq!(a, b);
        assert!(a.data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    }

    #[test]
    fn gradient_bins_follow_edges() {
        // left half black, right half white: a vertical edge, gradient along +x
        let mut px = vec![0u8; 16 * 16 * 3];
        for y in 0..16 {
            for x in 8..16 {
                px[3 * (y * 16 + x)..3 * (y * 16 + x) + 3].copy_from_slice(&[255, 255, 255]);
            }
        }
        let frame = FrameImage::new(0, 16, 16, px).unwrap();
        let g = extract_features(&frame, 16, 10).unwrap();
        let cell = g.cell(0, 0);
        assert!(cell[6] > 0.0);
        assert_eq!(&cell[7..10], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn orientation_bins() {
        assert_eq!(orientation_bin(0, 0), None);
        assert_eq!(orientation_bin(5, 0), Some(0));
        assert_eq!(orientation_bin(-5, 0), Some(0));
        assert_eq!(orientation_bin(5, 5), Some(1));
        assert_eq!(orientation_bin(0, 5), Some(2));
        assert_eq!(orientation_bin(0, -5), Some(2));
        assert_eq!(orientation_bin(-5, 5), Some(3));
        assert_eq!(orientation_bin(5, -5), Some(3));
        assert_eq!(orientation_bin(-5, 4), Some(3));
    }

    #[test]
    fn extraction_errors() {
        let frame = FrameImage::filled(0, 16, 16, [0, 0, 0]).unwrap();
        assert!(matches!(extract_features(&frame, 8, 9), Err(Error::TooFewChannels(9))));
        assert!(matches!(extract_features(&frame, 4, 16), Err(Error::UnsupportedPatch(4))));
        assert!(matches!(extract_features(&frame, 32, 16), Err(Error::InvalidFrame(_))));
        assert!(FrameImage::filled(0, 8, 16, [0, 0, 0]).is_err());
        assert!(FrameImage::new(0, 16, 16, vec![0; 10]).is_err());
        assert!(Error::TooFewChannels(9).to_string().starts_with("descriptor needs ≥ 10 channels"));
    }

    #[test]
    fn pooling_examples() {
        let mut g = FeatureGrid::zeros(2, 1, 2);
        g.data = vec![1.0, 0.0, 0.0, 1.0];
        assert_eq!(pool_embedding(&g).values(), &[0.5, 0.5]);

        let mut same = FeatureGrid::zeros(3, 2, 3);
        for cell in same.data.chunks_exact_mut(3) {
            cell.copy_from_slice(&[0.25, 0.5, 0.75]);
        }
        assert_eq!(pool_embedding(&same).values(), &[0.25, 0.5, 0.75]);

        let zero = pool_embedding(&FeatureGrid::zeros(2, 2, 3));
        assert!(zero.is_zero());
    }
}
