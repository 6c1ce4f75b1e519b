//! Zero-error simulation of a cut through a trace: Alice sends a Bloom filter
//! of the cells she wrote, Bob asks for a cell only when the filter says yes.

use probelab::games::{cut_game, run_bloom_protocol, BloomFilter, Cut};
use probelab::instances::{gen_incremental, IncOverrides, IncParams};
use probelab::{IntervalTag, StructureKind};

fn main() -> probelab::Result<()> {
    let keys: Vec<u64> = (0..10_000).map(|i| i * 7919).collect();
    for p in [1.0 / 8.0, 1.0 / 64.0] {
        let f = BloomFilter::build(&keys, p, 1)?;
        let fp = (0..100_000u64)
            .map(|i| 1 + i * 7919 * 2)
            .filter(|&k| f.contains(k))
            .count();
        println!(
            "p = {p}: {} bits, {} hashes, measured rate {:.4}",
            f.size_bits(),
            f.hashes(),
            fp as f64 / 1e5
        );
    }

    let params = IncParams::derive(
        1 << 10,
        0.3,
        IncOverrides {
            branching: Some(4),
            ..Default::default()
        },
    )?;
    let inst = gen_incremental(&params, 9)?;
    let cut = Cut::new([IntervalTag::Epoch(1)], [IntervalTag::Metaquery(0)]);
    let game = cut_game(&inst.trace, StructureKind::LfGeneral, &cut)?;
    println!(
        "\n|W_A| = {}, |R_B| = {}, overlap = {}",
        game.alice.written.len(),
        game.bob_read.len(),
        game.overlap()
    );
    for p in [1.0 / 8.0, 1.0 / 64.0] {
        let o = run_bloom_protocol(&game, p, 4)?;
        println!(
            "p = {p}: answer {} (truth {}), {} bits, {} round trips, {} false positives",
            o.answer, game.ground_truth, o.transcript.total_bits, o.round_trips, o.false_positives
        );
    }
    Ok(())
}
