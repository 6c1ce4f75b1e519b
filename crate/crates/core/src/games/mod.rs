//! Communication games cut from traces, and the protocols that simulate a
//! structure across the cut.

pub mod bloom;
pub mod game;
pub mod protocols;
pub mod retrieval;

pub use bloom::BloomFilter;
pub use game::{cut_game, AliceView, Cut, CutSource, GameInstance};
pub use protocols::{
    honest_proof, mutate_proof, run_bloom_protocol, run_nondet_protocol, BloomOutcome, Message,
    Mutation, NondetOutcome, Party, Proof, Prover, Transcript, MUTATIONS,
};
pub use retrieval::RetrievalDictionary;
