//! Claim verification with hierarchical guided attention, plus
//! topic-diversified extractive summaries that explain the verdict.
//!
//! The pipeline: evidence documents are encoded by a two-level GRU
//! ([`encoder`]); claim-, title-, and self-attention weights are fused
//! ([`attention`]) and pooled into document vectors that a softmax layer
//! classifies ([`classifier`]); the learned attention weights, combined
//! with per-sentence topic distributions ([`topic`]), drive a greedy
//! set-cover selection of explanation sentences ([`summarize`]), which
//! are scored against gold references ([`rouge`]).

pub mod attention;
pub mod classifier;
pub mod corpus;
pub mod encoder;
pub mod gradcheck;
pub mod rouge;
pub mod summarize;
pub mod tensor;
pub mod topic;

/// Derive a per-component seed from the run's master seed, so components
/// can be reproduced in isolation.
pub fn derive_seed(master: u64, stream: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in stream.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    master ^ hash
}
