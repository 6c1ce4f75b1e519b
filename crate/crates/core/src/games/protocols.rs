//! The two simulation protocols.
//!
//! In the Bloom-filter protocol Alice sends a filter of the cells she wrote;
//! Bob asks for a cell only when the filter says Alice may have written it.
//! In the nondeterministic protocol a prover publishes the cells written by
//! Alice and read by Bob, with contents, plus a retrieval dictionary that
//! tells the two sides of the symmetric difference apart.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bloom::BloomFilter;
use super::game::{run_block, GameInstance, PlayerMemory, Resolver};
use super::retrieval::RetrievalDictionary;
use crate::arena::{Addr, Word, WORD_BITS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
    Prover,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: Party,
    pub kind: String,
    pub bits: u64,
}

/// Hash seeds are public coins: recorded, not charged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub hash_seed: u64,
    pub messages: Vec<Message>,
    pub total_bits: u64,
}

impl Transcript {
    pub fn new(hash_seed: u64) -> Self {
        Self {
            hash_seed,
            ..Default::default()
        }
    }

    pub fn push(&mut self, sender: Party, kind: &str, bits: u64) {
        self.total_bits += bits;
        self.messages.push(Message {
            sender,
            kind: kind.to_string(),
            bits,
        });
    }

    /// A header line with the seed, then one line per message.
    pub fn to_json_lines(&self) -> String {
        let mut out =
            serde_json::json!({ "hash_seed": self.hash_seed, "total_bits": self.total_bits })
                .to_string();
        out.push('\n');
        for m in &self.messages {
            out.push_str(&serde_json::to_string(m).expect("message serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BloomOutcome {
    pub answer: bool,
    pub transcript: Transcript,
    pub round_trips: u64,
    /// Round trips for cells Alice did not write.
    pub false_positives: u64,
    pub filter_bits: u64,
    pub written: usize,
    pub read: usize,
    pub overlap: usize,
}

struct BloomResolver<'a> {
    filter: &'a BloomFilter,
    game: &'a GameInstance,
    fetched: HashMap<Addr, Word>,
    transcript: Transcript,
    false_positives: u64,
}

impl Resolver for BloomResolver<'_> {
    fn resolve(&mut self, addr: Addr, start: Word) -> Result<Word> {
        if !self.filter.contains(addr) {
            return Ok(start);
        }
        if let Some(&v) = self.fetched.get(&addr) {
            return Ok(v);
        }
        self.transcript.push(Party::Bob, "request", WORD_BITS);
        let v = self.game.alice.value(addr);
        self.transcript.push(Party::Alice, "reply", WORD_BITS);
        if !self.game.alice.written.contains(&addr) {
            self.false_positives += 1;
        }
        self.fetched.insert(addr, v);
        Ok(v)
    }
}

fn probe_limit(g: &GameInstance) -> u64 {
    4 * g.bob_probes + 10_000
}

fn addr_limit(g: &GameInstance) -> Addr {
    g.max_addr.saturating_mul(2).saturating_add(1 << 16)
}

/// Zero-error: the answer always equals the game's ground truth.
pub fn run_bloom_protocol(g: &GameInstance, p: f64, seed: u64) -> Result<BloomOutcome> {
    let written: Vec<Addr> = g.alice.written.iter().copied().collect();
    let filter = BloomFilter::build(&written, p, seed)?;
    let mut transcript = Transcript::new(seed);
    transcript.push(Party::Alice, "filter", filter.serialized_bits());

    let resolver = BloomResolver {
        filter: &filter,
        game: g,
        fetched: HashMap::new(),
        transcript,
        false_positives: 0,
    };
    let mut mem = PlayerMemory::new(&g.start_image, resolver, probe_limit(g), addr_limit(g));
    let mut handle = g.handle.clone();
    let checks = run_block(&mut handle, &mut mem, &g.bob_ops)
        .map_err(|e| Error::SimulationDiverged(format!("Bob's simulation failed: {e}")))?;
    if checks != g.reference_checks {
        return Err(Error::SimulationDiverged(
            "Bob's answers differ from the direct run".into(),
        ));
    }
    let answer = checks.iter().all(|&c| c);
    let mut r = mem.resolver;
    r.transcript.push(Party::Bob, "answer", 1);
    let round_trips = r.fetched.len() as u64;
    Ok(BloomOutcome {
        answer,
        round_trips,
        false_positives: r.false_positives,
        filter_bits: filter.serialized_bits(),
        written: g.alice.written.len(),
        read: g.bob_read.len(),
        overlap: g.overlap(),
        transcript: r.transcript,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    /// Claimed `W_A ∩ R_B` with contents after `I_A`.
    pub cells: Vec<(Addr, Word)>,
    /// 0 on cells written by Alice only, 1 on cells read by Bob only.
    pub dictionary: RetrievalDictionary,
}

impl Proof {
    /// Count prefix, address and content per cell, then the dictionary.
    pub fn bits(&self) -> u64 {
        64 + 2 * WORD_BITS * self.cells.len() as u64 + self.dictionary.size_bits()
    }
}

#[derive(Debug, Clone)]
pub enum Prover {
    Honest,
    Adversarial(Proof),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NondetOutcome {
    pub proof_bits: u64,
    pub accept_alice: bool,
    pub accept_bob: bool,
    pub alice_reason: Option<String>,
    pub bob_reason: Option<String>,
}

impl NondetOutcome {
    pub fn accepted(&self) -> bool {
        self.accept_alice && self.accept_bob
    }
}

pub fn honest_proof(g: &GameInstance, seed: u64) -> Result<Proof> {
    let w = &g.alice.written;
    let r = &g.bob_read;
    let cells = w.intersection(r).map(|&a| (a, g.alice.value(a))).collect();
    let pairs: Vec<(Addr, bool)> = w
        .difference(r)
        .map(|&a| (a, false))
        .chain(r.difference(w).map(|&a| (a, true)))
        .collect();
    Ok(Proof {
        cells,
        dictionary: RetrievalDictionary::build(&pairs, seed)?,
    })
}

fn alice_verifies(g: &GameInstance, proof: &Proof) -> std::result::Result<(), String> {
    let mut claimed = HashSet::with_capacity(proof.cells.len());
    for &(a, v) in &proof.cells {
        if !claimed.insert(a) {
            return Err(format!("cell {a} listed twice"));
        }
        if !g.alice.written.contains(&a) {
            return Err(format!("cell {a} was not written by Alice"));
        }
        if g.alice.value(a) != v {
            return Err(format!("wrong contents for cell {a}"));
        }
    }
    for &a in &g.alice.written {
        if !claimed.contains(&a) && proof.dictionary.get(a) {
            return Err(format!("dictionary marks written cell {a} as unwritten"));
        }
    }
    Ok(())
}

struct ProofResolver<'a> {
    cells: HashMap<Addr, Word>,
    dictionary: &'a RetrievalDictionary,
}

impl Resolver for ProofResolver<'_> {
    fn resolve(&mut self, addr: Addr, start: Word) -> Result<Word> {
        if let Some(&v) = self.cells.get(&addr) {
            return Ok(v);
        }
        if self.dictionary.get(addr) {
            return Ok(start);
        }
        Err(Error::Rejected(format!(
            "cell {addr} retrieves 0 but is not in the proof"
        )))
    }
}

fn bob_verifies(g: &GameInstance, proof: &Proof) -> std::result::Result<(), String> {
    let mut cells = HashMap::with_capacity(proof.cells.len());
    for &(a, v) in &proof.cells {
        if cells.insert(a, v).is_some() {
            return Err(format!("cell {a} listed twice"));
        }
    }
    let resolver = ProofResolver {
        cells,
        dictionary: &proof.dictionary,
    };
    let mut mem = PlayerMemory::new(&g.start_image, resolver, probe_limit(g), addr_limit(g));
    let mut handle = g.handle.clone();
    match run_block(&mut handle, &mut mem, &g.bob_ops) {
        Ok(checks) if checks.iter().all(|&c| c) => Ok(()),
        Ok(_) => Err("a query of I_B came out false".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// Alice and Bob check the proof independently. Soundness: if both accept,
/// the game's answer is true.
pub fn run_nondet_protocol(g: &GameInstance, prover: &Prover, seed: u64) -> Result<NondetOutcome> {
    let honest;
    let proof = match prover {
        Prover::Honest => {
            honest = honest_proof(g, seed)?;
            &honest
        }
        Prover::Adversarial(p) => p,
    };
    let a = alice_verifies(g, proof);
    let b = bob_verifies(g, proof);
    Ok(NondetOutcome {
        proof_bits: proof.bits(),
        accept_alice: a.is_ok(),
        accept_bob: b.is_ok(),
        alice_reason: a.err(),
        bob_reason: b.err(),
    })
}

/// Ways of corrupting an honest proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    /// Change the contents of one listed cell.
    Contents,
    /// Flip a few dictionary table bits.
    PayloadFlip,
    /// Drop one listed cell.
    Omission,
    /// List a cell Alice did not write, or Bob did not read.
    ExtraCell,
    /// Drop a suffix of the listed cells.
    Truncation,
    /// Claim Alice and Bob share nothing: no cells, every read marked 1.
    DenyOverlap,
    /// List the shared cells with their contents before `I_A`.
    StaleContents,
    /// Apply two random mutations.
    Combined,
}

pub const MUTATIONS: [Mutation; 8] = [
    Mutation::Contents,
    Mutation::PayloadFlip,
    Mutation::Omission,
    Mutation::ExtraCell,
    Mutation::Truncation,
    Mutation::DenyOverlap,
    Mutation::StaleContents,
    Mutation::Combined,
];

pub fn mutate_proof<R: Rng>(
    g: &GameInstance,
    honest: &Proof,
    m: Mutation,
    rng: &mut R,
) -> Result<Proof> {
    let mut p = honest.clone();
    match m {
        Mutation::Contents => {
            if let Some(c) = p.cells.choose_mut(rng) {
                c.1 ^= rng.gen_range(1..=u64::MAX);
            } else {
                p.dictionary.flip_table_bit(rng.gen());
            }
        }
        Mutation::PayloadFlip => {
            for _ in 0..rng.gen_range(1..=4) {
                p.dictionary.flip_table_bit(rng.gen());
            }
        }
        Mutation::Omission => {
            if !p.cells.is_empty() {
                let i = rng.gen_range(0..p.cells.len());
                p.cells.remove(i);
            }
        }
        Mutation::ExtraCell => {
            let pool: Vec<Addr> = g
                .alice
                .written
                .symmetric_difference(&g.bob_read)
                .copied()
                .collect();
            let addr = pool
                .choose(rng)
                .copied()
                .unwrap_or_else(|| rng.gen_range(0..=g.max_addr));
            let value = if rng.gen_bool(0.5) {
                g.alice.value(addr)
            } else {
                rng.gen()
            };
            p.cells.push((addr, value));
        }
        Mutation::Truncation => {
            let keep = rng.gen_range(0..=p.cells.len());
            p.cells.truncate(keep);
        }
        Mutation::DenyOverlap => {
            let pairs: Vec<(Addr, bool)> = g
                .alice
                .written
                .difference(&g.bob_read)
                .map(|&a| (a, false))
                .chain(g.bob_read.iter().map(|&a| (a, true)))
                .collect();
            p.cells.clear();
            p.dictionary = RetrievalDictionary::build(&pairs, rng.gen())?;
        }
        Mutation::StaleContents => {
            for c in &mut p.cells {
                c.1 = g.start_image.get(c.0 as usize).copied().unwrap_or(0);
            }
        }
        Mutation::Combined => {
            let simple = &MUTATIONS[..7];
            let first = *simple.choose(rng).expect("non-empty");
            let second = *simple.choose(rng).expect("non-empty");
            let once = mutate_proof(g, honest, first, rng)?;
            return mutate_proof(g, &once, second, rng);
        }
    }
    Ok(p)
}

/// Cells Alice wrote, Bob read, and both.
pub fn overlap_sets(g: &GameInstance) -> (BTreeSet<Addr>, BTreeSet<Addr>) {
    let shared = g.alice.written.intersection(&g.bob_read).copied().collect();
    let union = g.alice.written.union(&g.bob_read).copied().collect();
    (shared, union)
}
