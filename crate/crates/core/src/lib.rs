//! Similarity-pruned memory banks for streaming video object segmentation.
//!
//! The crate is organized around the streaming loop:
//!
//! - [`embedding`]: deterministic frame descriptors and cosine similarity.
//! - [`membank`]: the memory bank and its retention policies (FIFO, EFP, random).
//! - [`propagator`]: prompt encoding, cross-attention readout, mask decoding.
//! - [`dataio`]: synthetic sequences with ground truth, PPM/PGM directories.
//! - [`metrics`]: J, F, J&F, Dice, challenge IoU and throughput.
//! - [`bench`]: policy-vs-policy runs producing JSON/CSV reports.
//!
//! Runnable walkthroughs live in `examples/`; `framebank-bench` is the CLI.

pub mod bench;
pub mod dataio;
pub mod embedding;
pub mod error;
pub mod membank;
pub mod metrics;
pub mod propagator;
pub mod rng;

pub use embedding::{cosine_similarity, extract_features, pool_embedding, EmbeddingVector, FeatureGrid, FrameImage};
pub use error::{Error, Result};
pub use membank::{ActiveSet, BankParams, MemoryBank, MemoryEntry, Policy, PruneDecision};
pub use propagator::{propagate, ObjectMaskMap, PointPrompt, Prompt, PropagationConfig, PropagationResult};
