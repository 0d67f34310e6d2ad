use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::MIN_FRAME_SIDE;
use crate::error::{Error, Result};

/// Bumped whenever a built-in scenario definition changes.
pub const BUILTIN_VERSION: u32 = 1;

/// Minimum channel-sum RGB distance between an object and the background.
pub const MIN_COLOR_DISTANCE: u32 = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    /// Starting center, pixels.
    pub center: [f64; 2],
    /// Semi-axes along x and y, pixels.
    pub radii: [f64; 2],
    pub color: [u8; 3],
    /// Amplitude of the static surface texture, levels per channel.
    pub texture: u32,
    /// Direction of travel during motion phases (scaled by the phase velocity).
    pub heading: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Phase {
    /// Camera and objects at rest; centers jitter by at most `jitter_px`.
    Static { len: usize },
    /// Global brightness ramps by `slope` levels per frame.
    Drift { len: usize, slope: f64 },
    /// Objects travel `velocity × heading` pixels per frame, reflecting at the borders.
    Motion { len: usize, velocity: f64 },
    /// A background-colored vertical bar of `width` pixels sweeps left to right.
    Occlusion { len: usize, width: usize },
}

impl Phase {
    pub fn len(&self) -> usize {
        match *self {
            Phase::Static { len }
            | Phase::Drift { len, .. }
            | Phase::Motion { len, .. }
            | Phase::Occlusion { len, .. } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub background: [u8; 3],
    pub objects: Vec<ObjectSpec>,
    pub phases: Vec<Phase>,
    /// Per-pixel, per-frame noise amplitude, levels per channel.
    pub noise: u32,
    /// Center jitter in static phases, 0 or 1 pixel.
    #[serde(default = "default_jitter")]
    pub jitter_px: u32,
    /// Seeded displacement of the starting centers, pixels.
    #[serde(default)]
    pub placement_jitter: u32,
    pub seed: u64,
}

fn default_jitter() -> u32 {
    1
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.width < MIN_FRAME_SIDE || self.height < MIN_FRAME_SIDE {
            return bad(format!("{}x{} is below the 16x16 minimum", self.width, self.height));
        }
        if self.objects.is_empty() {
            return bad("at least one object is required".into());
        }
        if self.objects.len() > 255 {
            return bad("at most 255 objects fit an 8-bit mask".into());
        }
        let total: usize = self.phases.iter().map(Phase::len).sum();
        if total != self.frame_count {
            return bad(format!(
                "phase lengths sum to {total}, frame_count is {}",
                self.frame_count
            ));
        }
        if self.jitter_px > 1 {
            return bad("static jitter is limited to 1 pixel".into());
        }
        for (i, obj) in self.objects.iter().enumerate() {
            let dist: u32 = (0..3)
                .map(|c| obj.color[c].abs_diff(self.background[c]) as u32)
                .sum();
            if dist < MIN_COLOR_DISTANCE {
                return bad(format!(
                    "object {} color is {dist} from the background (minimum {MIN_COLOR_DISTANCE})",
                    i + 1
                ));
            }
            if !(obj.radii[0] > 0.0 && obj.radii[1] > 0.0) {
                return bad(format!("object {} has non-positive radii", i + 1));
            }
            let finite = obj.center.iter().chain(&obj.radii).chain(&obj.heading);
            if finite.into_iter().any(|v| !v.is_finite()) {
                return bad(format!("object {} has non-finite geometry", i + 1));
            }
        }
        for phase in &self.phases {
            match *phase {
                Phase::Drift { slope, .. } if !slope.is_finite() => {
                    return bad("drift slope must be finite".into())
                }
                Phase::Motion { velocity, .. } if !velocity.is_finite() => {
                    return bad("motion velocity must be finite".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn object_count(&self) -> u8 {
        self.objects.len() as u8
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON with the seed zeroed, so every seed of a
    /// scenario shares one hash.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.with_seed(0)).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Looks up a built-in scenario by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "redundant" => Some(redundant()),
            "still" => Some(still()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["redundant", "still"]
    }
}

fn instruments() -> Vec<ObjectSpec> {
    vec![
        ObjectSpec {
            center: [32.0, 30.0],
            radii: [22.0, 10.0],
            color: [206, 206, 216],
            texture: 3,
            heading: [1.0, 0.6],
        },
        ObjectSpec {
            center: [66.0, 64.0],
            radii: [12.0, 20.0],
            color: [64, 148, 212],
            texture: 3,
            heading: [-0.8, -0.5],
        },
    ]
}

/// 200 frames, two objects; 60% static, 20% brightness drift, 10% occlusion,
/// 10% motion, interleaved the way a mostly-still endoscope view behaves.
fn redundant() -> ScenarioConfig {
    ScenarioConfig {
        width: 96,
        height: 96,
        frame_count: 200,
        background: [150, 72, 68],
        objects: instruments(),
        phases: vec![
            Phase::Static { len: 50 },
            Phase::Drift { len: 20, slope: 0.8 },
            Phase::Static { len: 40 },
            Phase::Motion { len: 10, velocity: 1.5 },
            Phase::Static { len: 30 },
            Phase::Occlusion { len: 20, width: 14 },
            Phase::Drift { len: 20, slope: -0.8 },
            Phase::Motion { len: 10, velocity: 1.5 },
        ],
        noise: 2,
        jitter_px: 1,
        placement_jitter: 6,
        seed: 0,
    }
}

/// 40 still frames, two objects, for quick demos.
fn still() -> ScenarioConfig {
    ScenarioConfig {
        frame_count: 40,
        phases: vec![Phase::Static { len: 40 }],
        ..redundant()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_redundant_shape() {
        let cfg = ScenarioConfig::builtin("redundant").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.frame_count, 200);
        assert_eq!(cfg.object_count(), 2);
        let share = |f: fn(&Phase) -> bool| -> usize {
            cfg.phases.iter().filter(|p| f(p)).map(Phase::len).sum()
        };
        assert_eq!(share(|p| matches!(p, Phase::Static { .. })), 120);
        assert_eq!(share(|p| matches!(p, Phase::Drift { .. })), 40);
        assert_eq!(share(|p| matches!(p, Phase::Occlusion { .. })), 20);
        assert_eq!(share(|p| matches!(p, Phase::Motion { .. })), 20);
    }

    #[test]
    fn hash_ignores_seed_only() {
        let cfg = ScenarioConfig::builtin("redundant").unwrap();
        assert_eq!(cfg.config_hash(), cfg.with_seed(9).config_hash());
        let mut other = cfg.clone();
        other.noise += 1;
        assert_ne!(cfg.config_hash(), other.config_hash());
        assert_eq!(cfg.config_hash().len(), 64);
    }

    #[test]
    fn validation_errors() {
        let base = ScenarioConfig::builtin("redundant").unwrap();
        let mut c = base.clone();
        c.frame_count = 199;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.objects.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.objects[0].color = [160, 80, 70];
        assert!(c.validate().unwrap_err().to_string().contains("from the background"));
        let mut c = base;
        c.jitter_px = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = ScenarioConfig::builtin("redundant").unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert!(text.contains("\"kind\": \"occlusion\""));
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
    }
}
