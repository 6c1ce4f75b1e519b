//! The dynamic instance: a permutation grid updated in bit-reversal order,
//! with reads charged to the lowest common ancestor of writer and reader in
//! the timeline tree.

use std::collections::BTreeSet;

use probelab::instances::{bit_reversal, gen_dynamic, interleave_check, schedule, DynParams};
use probelab::report::run_report;
use probelab::StructureKind;

fn main() -> probelab::Result<()> {
    let order = schedule(8)?;
    println!("schedule for 8 steps: {order:?}");
    println!("bit reversal of 3 over 3 bits: {}", bit_reversal(3, 3)?);
    // Steps 0..4 and 4..8 are sibling subtrees; their positions interleave.
    let left: BTreeSet<u64> = order[..4].iter().copied().collect();
    let right: BTreeSet<u64> = order[4..].iter().copied().collect();
    println!(
        "left {left:?} interleaves right {right:?}: {}",
        interleave_check(&left, &right)
    );

    let p = DynParams::new(8, 4, 9)?;
    let inst = gen_dynamic(&p, 3)?;
    println!(
        "\n{}: {} nodes, {} steps, {} ops",
        p.id(),
        p.nodes(),
        p.steps(),
        inst.trace.len()
    );
    for s in inst.steps.iter().take(3) {
        println!(
            "  step {} touches position {} and queries coloring {:?}",
            s.step, s.position, s.coloring
        );
    }
    let (report, _) = run_report(&inst.trace, StructureKind::Naive)?;
    println!("mismatches: {}", report.mismatches.len());
    println!(
        "{:>6} {:>7} {:>12} {:>8}",
        "node", "height", "leaves", "charge"
    );
    for row in &report.timeline {
        println!(
            "{:>6} {:>7} {:>12} {:>8}",
            row.node,
            row.height,
            format!("{}..={}", row.first_leaf, row.last_leaf),
            row.charge
        );
    }
    Ok(())
}
