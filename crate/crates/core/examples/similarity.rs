//! Frame embeddings and cosine similarity along a synthetic sequence.
//!
//! Still frames score close to 1 against each other; drift, motion and
//! occlusion pull the score down.

use framebank::dataio::{generate, ScenarioConfig};
use framebank::{cosine_similarity, extract_features, pool_embedding, EmbeddingVector};

fn main() -> framebank::Result<()> {
    let a = EmbeddingVector::new(vec![1.0, 2.0, 3.0]);
    let b = EmbeddingVector::new(vec![4.0, 5.0, 6.0]);
    println!("S((1,2,3), (4,5,6)) = {:.6}", cosine_similarity(&a, &b)?);

    let seq = generate(&ScenarioConfig::builtin("redundant").unwrap())?;
    let embed = |t: usize| -> framebank::Result<EmbeddingVector> {
        Ok(pool_embedding(&extract_features(&seq.frames[t], 8, 14)?))
    };
    let anchor = embed(0)?;
    println!("\nframe  phase        S(frame 0, frame)");
    let mut t = 0;
    for phase in &seq.phases {
        let name = serde_json::to_value(phase).unwrap()["kind"].as_str().unwrap().to_string();
        for step in [0, phase.len() / 2, phase.len() - 1] {
            let s = cosine_similarity(&anchor, &embed(t + step)?)?;
            println!("{:>5}  {name:<11}  {s:.6}", t + step);
        }
        t += phase.len();
    }
    Ok(())
}
