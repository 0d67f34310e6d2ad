//! Active-set selection under FIFO, EFP and random pruning.
//!
//! Embeddings are one-hot-ish so the similarity ranking is easy to read.

use framebank::{BankParams, EmbeddingVector, FeatureGrid, MemoryBank, MemoryEntry, Policy};

fn entry(index: u64, emb: &[f64], reference: bool) -> MemoryEntry {
    let keys = FeatureGrid::zeros(2, 2, 4);
    let values = FeatureGrid::zeros(2, 2, 1);
    MemoryEntry::new(index, EmbeddingVector::new(emb.to_vec()), keys, values, reference).unwrap()
}

fn main() -> framebank::Result<()> {
    // the query looks most like frames 5 and 6
    let history: [(u64, [f64; 3]); 5] = [
        (5, [1.0, 0.1, 0.0]),
        (6, [0.9, 0.2, 0.0]),
        (7, [0.0, 1.0, 0.0]),
        (8, [0.0, 0.2, 1.0]),
        (9, [0.1, 0.0, 1.0]),
    ];
    let query = EmbeddingVector::new(vec![1.0, 0.15, 0.0]);

    for params in [
        BankParams::fifo(5),
        BankParams::efp(5, 2),
        BankParams::new(Policy::Random { seed: 3 }, 5, 2)?,
    ] {
        let mut bank = MemoryBank::new(params)?;
        bank.init_reference(entry(0, &[0.3, 0.3, 0.3], true))?;
        for (i, emb) in &history {
            bank.commit(entry(*i, emb, false))?;
        }
        let active = bank.select_active(&query)?;
        println!("{params}");
        for (frame, s) in &active.decision.similarities {
            println!("  S(query, frame {frame}) = {s:.4}");
        }
        println!("  pruned   {:?}", active.decision.pruned);
        println!("  attended {:?}", active.frame_indices());
        println!("  stored {} entries, {} bytes\n", bank.stored_len(), bank.footprint_bytes());
    }

    // steady-state sizes behind the 4/7 and 6/7 ratios
    for params in [BankParams::fifo(6), BankParams::efp(5, 2), BankParams::fifo(3)] {
        println!(
            "{params}: attends {}, stores {}",
            params.steady_attended(),
            params.steady_stored()
        );
    }
    Ok(())
}
