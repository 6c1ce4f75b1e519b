//! Link-find with arbitrary link endpoints. The general variant converts a
//! free component once it meets a find; the forest variant waits until the
//! component reaches α(q, q) nodes.

use probelab::ackermann::alpha_sym;
use probelab::link_find::Role;
use probelab::{LfStructure, LfVariant, ProbeArena};

fn main() -> probelab::Result<()> {
    let n = 12;
    let mut arena = ProbeArena::new();
    let mut lf = LfStructure::new(&mut arena, n, LfVariant::General)?;

    // A path 0-1-2-3 and a star around 6; neither endpoint needs to be a root.
    for (u, v) in [(0, 1), (1, 2), (3, 2), (6, 7), (6, 8), (6, 9)] {
        lf.link(&mut arena, u, v)?;
    }
    println!("free neighbours of 2: {:?}", lf.free_neighbors(&arena, 2));
    let r = lf.find(&mut arena, 3)?;
    println!(
        "find(3) = {r}, roles now: {:?}",
        (0..4).map(|v| lf.role(&arena, v)).collect::<Vec<_>>()
    );
    lf.link(&mut arena, 2, 8)?;
    println!(
        "after linking 2-8: find(9) = {}, find(0) = {}",
        lf.find(&mut arena, 9)?,
        lf.find(&mut arena, 0)?
    );
    println!(
        "union nodes: {}, counters: {:?}",
        lf.union_node_count(&arena),
        lf.counters()
    );
    lf.check_invariants(&arena).expect("invariants hold");

    let (q, u) = (1 << 16, 1 << 16);
    let mut arena = ProbeArena::new();
    let forest = LfStructure::new(
        &mut arena,
        n,
        LfVariant::Forest {
            queries: q,
            updates: u,
        },
    )?;
    println!(
        "forest variant: α({q}, {q}) = {}, threshold {}",
        alpha_sym(q, q),
        forest.threshold()
    );
    let mut small = forest.with_threshold(4);
    for (a, b) in [(0, 1), (1, 2)] {
        small.link(&mut arena, a, b)?;
    }
    small.find(&mut arena, 0)?;
    println!(
        "3-node component below threshold 4 stays free: {}",
        small.role(&arena, 0) == Role::Free
    );
    small.link(&mut arena, 2, 3)?;
    small.find(&mut arena, 0)?;
    println!("4-node component after a find: {:?}", small.role(&arena, 0));
    Ok(())
}
