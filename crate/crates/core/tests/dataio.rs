use std::fs;

use framebank::dataio::pnm::write_pgm;
use framebank::dataio::{generate, load_sequence, mask_file, save_sequence, ObjectSpec, Phase, ScenarioConfig};

/// Pinned so that reports stay comparable; bump `BUILTIN_VERSION` with it.
const REDUNDANT_HASH: &str = "0c1b3056070a5baa00031c6ec0a458a428333727ac09b97c2f16c19277eb3d17";

fn small(seed: u64, phases: Vec<Phase>, objects: usize) -> ScenarioConfig {
    let specs = [
        ObjectSpec {
            center: [12.0, 12.0],
            radii: [6.0, 4.0],
            color: [220, 220, 225],
            texture: 2,
            heading: [1.0, 0.5],
        },
        ObjectSpec {
            center: [26.0, 20.0],
            radii: [4.0, 7.0],
            color: [40, 140, 220],
            texture: 0,
            heading: [-1.0, 0.2],
        },
        ObjectSpec {
            center: [30.0, 8.0],
            radii: [3.0, 3.0],
            color: [40, 220, 60],
            texture: 4,
            heading: [0.0, 1.0],
        },
    ];
    ScenarioConfig {
        width: 40,
        height: 32,
        frame_count: phases.iter().map(Phase::len).sum(),
        background: [150, 70, 65],
        objects: specs[..objects].to_vec(),
        phases,
        noise: 3,
        jitter_px: 1,
        placement_jitter: 2,
        seed,
    }
}

fn configs() -> Vec<ScenarioConfig> {
    vec![
        small(0, vec![Phase::Static { len: 4 }], 1),
        small(1, vec![Phase::Drift { len: 3, slope: 2.0 }, Phase::Static { len: 2 }], 2),
        small(2, vec![Phase::Motion { len: 6, velocity: 2.5 }], 3),
        small(3, vec![Phase::Occlusion { len: 5, width: 10 }], 2),
        ScenarioConfig::builtin("still").unwrap().with_seed(4),
    ]
}

#[test]
fn save_then_load_is_identity() {
    for cfg in configs() {
        let seq = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_sequence(&seq, dir.path()).unwrap();
        let back = load_sequence(dir.path()).unwrap();
        assert_eq!(back, seq, "seed {}", cfg.seed);
    }
}

#[test]
fn layout_and_headers() {
    let seq = generate(&configs()[1]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_sequence(&seq, dir.path()).unwrap();
    let ppm = fs::read(dir.path().join("frames/00000.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n40 32\n255\n"));
    assert_eq!(ppm.len(), 13 + 40 * 32 * 3);
    let pgm = fs::read(dir.path().join("masks/00004.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n40 32\n255\n"));
    assert!(pgm[13..].iter().all(|&id| id <= 2));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["k"], 2);
    assert_eq!(meta["frame_count"], 5);
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["phases"][0]["kind"], "drift");
}

#[test]
fn missing_mask_is_named() {
    let seq = generate(&configs()[0]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_sequence(&seq, dir.path()).unwrap();
    fs::remove_file(dir.path().join(mask_file(3))).unwrap();
    let err = load_sequence(dir.path()).unwrap_err().to_string();
    assert!(err.contains("masks/00003.pgm"), "{err}");
}

#[test]
fn out_of_range_id_is_rejected() {
    let seq = generate(&configs()[0]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_sequence(&seq, dir.path()).unwrap();
    write_pgm(&dir.path().join(mask_file(2)), 40, 32, &vec![2u8; 40 * 32]).unwrap();
    let err = load_sequence(dir.path()).unwrap_err().to_string();
    assert!(err.contains("masks/00002.pgm") && err.contains("exceeds k"), "{err}");
}

#[test]
fn truncated_frame_is_rejected() {
    let seq = generate(&configs()[0]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_sequence(&seq, dir.path()).unwrap();
    let path = dir.path().join("frames/00001.ppm");
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    let err = load_sequence(dir.path()).unwrap_err().to_string();
    assert!(err.contains("frames/00001.ppm"), "{err}");
}

#[test]
fn builtin_hash_is_pinned() {
    let cfg = ScenarioConfig::builtin("redundant").unwrap();
    assert_eq!(cfg.config_hash(), REDUNDANT_HASH);
}
