//! The inverse-Ackermann workload: union rounds pair up roots, find rounds
//! link leaves to their roots and then check every root with a find.

use probelab::ackermann::alpha;
use probelab::instances::{appendix_rounds, AppendixParams};
use probelab::report::run_report;
use probelab::StructureKind;

fn main() -> probelab::Result<()> {
    let n = 1 << 10;
    for corrupt in [false, true] {
        let mut p = AppendixParams::new(n, 10);
        p.corrupt = corrupt;
        let inst = appendix_rounds(&p, 17)?;
        let (report, _) = run_report(&inst.trace, StructureKind::LfGeneral)?;
        println!(
            "{}: {} ops, {} probes, {} root finds, {} deviate",
            p.id(),
            report.per_op.len(),
            report.total_probes,
            report.expectations,
            report.mismatches.len()
        );
        for round in inst
            .find_rounds
            .iter()
            .filter(|r| r.corrupted.is_some())
            .take(3)
        {
            let (leaf, to, intended) = round.corrupted.expect("filtered");
            println!(
                "  round {}: leaf {leaf} linked to {to} instead of {intended}",
                round.round
            );
        }
    }
    println!("α(m, n) for m = 8n, n = {n}: {}", alpha(8 * n, n)?);
    Ok(())
}
