//! Probe accounting on a bare arena: the read-before-write rule, interval
//! tags, snapshots, and the write/read overlap of two intervals.

use std::collections::BTreeSet;

use probelab::arena::stats;
use probelab::{IntervalTag, ProbeArena};

fn main() -> probelab::Result<()> {
    let mut arena = ProbeArena::new();
    let base = arena.alloc(8);

    arena.set_interval(IntervalTag::Epoch(2))?;
    for i in 0..4 {
        arena.read(base + i);
        arena.write(base + i, 100 + i)?;
    }
    arena.end_interval()?;

    // A write without the preceding read is refused.
    match arena.write(base + 5, 1) {
        Err(e) => println!("refused: {e}"),
        Ok(()) => unreachable!(),
    }

    let snap = arena.snapshot();
    arena.set_interval(IntervalTag::Epoch(1))?;
    for i in 2..6 {
        let v = arena.read(base + i);
        arena.write(base + i, v + 1)?;
    }
    arena.end_interval()?;
    println!("cell {} before restore: {}", base + 2, arena.peek(base + 2));
    arena.restore(snap)?;
    println!("cell {} after restore: {}", base + 2, arena.peek(base + 2));

    let a = BTreeSet::from([IntervalTag::Epoch(2)]);
    let b = BTreeSet::from([IntervalTag::Epoch(1)]);
    let s = stats(arena.log(), &a, &b);
    println!(
        "|W_A| = {}, |R_B| = {}, overlap = {}, union = {}",
        s.written.len(),
        s.read.len(),
        s.overlap,
        s.union_size
    );
    for (epoch, cells) in &s.fresh {
        println!("epoch {epoch}: {} cells last written here", cells.len());
    }
    println!(
        "{} probes, log:\n{}",
        arena.probe_count(),
        arena.log().export_text()
    );
    Ok(())
}
