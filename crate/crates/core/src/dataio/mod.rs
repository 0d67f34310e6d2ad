//! Synthetic sequences and their on-disk layout.
//!
//! ```text
//! <dir>/
//!   frames/00000.ppm   binary P6
//!   masks/00000.pgm    binary P5, pixel value = object id (0 = background)
//!   meta.json          {width, height, k, frame_count, seed, phases[]}
//! ```

mod generate;
pub mod pnm;
pub mod scenario;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use generate::generate;
pub use scenario::{ObjectSpec, Phase, ScenarioConfig};

use crate::embedding::FrameImage;
use crate::error::{Error, Result};
use crate::propagator::ObjectMaskMap;

/// Frames with their ground-truth label maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub frames: Vec<FrameImage>,
    pub masks: Vec<ObjectMaskMap>,
    pub objects: u8,
    pub seed: u64,
    pub phases: Vec<Phase>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames.first().map_or(0, |f| f.width)
    }

    pub fn height(&self) -> usize {
        self.frames.first().map_or(0, |f| f.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub width: usize,
    pub height: usize,
    pub k: u8,
    pub frame_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub phases: Vec<Phase>,
}

pub fn frame_file(index: usize) -> String {
    format!("frames/{index:05}.ppm")
}

pub fn mask_file(index: usize) -> String {
    format!("masks/{index:05}.pgm")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn save_sequence(seq: &Sequence, dir: &Path) -> Result<()> {
    if seq.masks.len() != seq.frames.len() {
        return Err(Error::format(dir, "frame and mask counts differ"));
    }
    create_dir(&dir.join("frames"))?;
    create_dir(&dir.join("masks"))?;
    for (i, (frame, mask)) in seq.frames.iter().zip(&seq.masks).enumerate() {
        pnm::write_ppm(&dir.join(frame_file(i)), frame.width, frame.height, &frame.pixels)?;
        pnm::write_pgm(&dir.join(mask_file(i)), mask.width, mask.height, &mask.labels)?;
    }
    let meta = SequenceMeta {
        width: seq.width(),
        height: seq.height(),
        k: seq.objects,
        frame_count: seq.len(),
        seed: seq.seed,
        phases: seq.phases.clone(),
    };
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn count_files(dir: &Path, ext: &str) -> Result<usize> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut n = 0;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().extension().is_some_and(|x| x == ext) {
            n += 1;
        }
    }
    Ok(n)
}

pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SequenceMeta =
        serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, e.to_string()))?;

    let mut frames = Vec::with_capacity(meta.frame_count);
    let mut masks = Vec::with_capacity(meta.frame_count);
    for i in 0..meta.frame_count {
        let path = dir.join(frame_file(i));
        let (w, h, px) = pnm::read_ppm(&path)?;
        if (w, h) != (meta.width, meta.height) {
            return Err(Error::format(
                &path,
                format!("{w}x{h} frame, meta.json says {}x{}", meta.width, meta.height),
            ));
        }
        frames.push(FrameImage::new(i as u64, w, h, px).map_err(|e| Error::format(&path, e.to_string()))?);

        let path = dir.join(mask_file(i));
        let (w, h, labels) = pnm::read_pgm(&path)?;
        if (w, h) != (meta.width, meta.height) {
            return Err(Error::format(
                &path,
                format!("{w}x{h} mask, meta.json says {}x{}", meta.width, meta.height),
            ));
        }
        if let Some(&id) = labels.iter().find(|&&id| id > meta.k) {
            return Err(Error::format(&path, format!("object id {id} exceeds k = {}", meta.k)));
        }
        masks.push(ObjectMaskMap::new(w, h, labels)?);
    }
    for (sub, ext) in [("frames", "ppm"), ("masks", "pgm")] {
        let found = count_files(&dir.join(sub), ext)?;
        if found != meta.frame_count {
            return Err(Error::format(
                dir.join(sub),
                format!("{found} .{ext} files, meta.json says {}", meta.frame_count),
            ));
        }
    }
    Ok(Sequence {
        frames,
        masks,
        objects: meta.k,
        seed: meta.seed,
        phases: meta.phases,
    })
}
