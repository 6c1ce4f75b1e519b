//! The nondeterministic protocol: a prover publishes the shared cells and a
//! retrieval dictionary marking the rest; both players verify on their own.

use probelab::games::{
    cut_game, honest_proof, mutate_proof, run_nondet_protocol, Cut, Prover, RetrievalDictionary,
    MUTATIONS,
};
use probelab::instances::{gen_incremental_with, IncOptions, IncOverrides, IncParams};
use probelab::{IntervalTag, StructureKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> probelab::Result<()> {
    let pairs: Vec<(u64, bool)> = (0..10_000u64).map(|k| (k * 31, k % 3 == 0)).collect();
    let dict = RetrievalDictionary::build(&pairs, 2)?;
    let ok = pairs.iter().all(|&(k, v)| dict.get(k) == v);
    println!(
        "retrieval: {} keys in {} bits, all correct: {ok}",
        pairs.len(),
        dict.size_bits()
    );

    let params = IncParams::derive(
        1 << 10,
        0.3,
        IncOverrides {
            branching: Some(4),
            ..Default::default()
        },
    )?;
    let cut = Cut::new([IntervalTag::Epoch(1)], [IntervalTag::Metaquery(0)]);
    for inconsistencies in [0, 1] {
        let opts = IncOptions {
            metaqueries: 1,
            inconsistencies,
        };
        let inst = gen_incremental_with(&params, 21, opts)?;
        let game = cut_game(&inst.trace, StructureKind::LfGeneral, &cut)?;
        let honest = run_nondet_protocol(&game, &Prover::Honest, 5)?;
        println!(
            "\ngame truth {}: honest proof of {} bits accepted = {}",
            game.ground_truth,
            honest.proof_bits,
            honest.accepted()
        );
        let proof = honest_proof(&game, 5)?;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for m in MUTATIONS {
            let bad = mutate_proof(&game, &proof, m, &mut rng)?;
            let o = run_nondet_protocol(&game, &Prover::Adversarial(bad), 5)?;
            let why = o.alice_reason.or(o.bob_reason).unwrap_or_default();
            println!(
                "  {m:?}: accepted = {} {why}",
                o.accept_alice && o.accept_bob
            );
        }
    }
    Ok(())
}
