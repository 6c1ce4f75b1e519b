//! Amortized versus worst-case union-find on the same random workload:
//! cheaper unions buy slower finds.

use probelab::{LogMode, ProbeArena, UfForest, UfMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn measure(n: u64, ops: usize, mode: UfMode, seed: u64) -> probelab::Result<(f64, f64, u64)> {
    let mut arena = ProbeArena::with_mode(LogMode::CountOnly);
    let uf = UfForest::new(&mut arena, n, mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut union_probes, mut unions, mut find_probes, mut finds, mut worst_find) =
        (0, 0u64, 0, 0u64, 0);
    for _ in 0..ops {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let before = arena.probe_count();
        let (ra, rb) = (uf.find(&mut arena, a)?, uf.find(&mut arena, b)?);
        let after_finds = arena.probe_count();
        let per_find = (after_finds - before) / 2;
        worst_find = worst_find.max(per_find);
        find_probes += after_finds - before;
        finds += 2;
        if ra != rb && rng.gen_bool(0.5) {
            uf.union(&mut arena, ra, rb)?;
            union_probes += arena.probe_count() - after_finds;
            unions += 1;
        }
    }
    Ok((
        union_probes as f64 / unions.max(1) as f64,
        find_probes as f64 / finds as f64,
        worst_find,
    ))
}

fn main() -> probelab::Result<()> {
    let n = 1 << 14;
    println!(
        "{:<16} {:>12} {:>12} {:>12}",
        "mode", "union avg", "find avg", "find max"
    );
    let modes = [
        ("amortized", UfMode::Amortized),
        ("worst-case k=2", UfMode::WorstCase { k: 2 }),
        ("worst-case k=8", UfMode::WorstCase { k: 8 }),
        ("worst-case k=64", UfMode::WorstCase { k: 64 }),
    ];
    for (name, mode) in modes {
        let (u, f, worst) = measure(n, 4 * n as usize, mode, 11)?;
        println!("{name:<16} {u:>12.2} {f:>12.2} {worst:>12}");
    }
    Ok(())
}
