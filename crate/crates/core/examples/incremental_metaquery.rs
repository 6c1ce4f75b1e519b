//! The incremental hard instance: a colored B-ary forest built in epochs, and
//! metaqueries that check a proposed coloring of sampled leaves.

use probelab::instances::{
    gen_incremental_with, metaquery_oracle, naive_replay, verdict_from_answers, IncOptions,
    IncOverrides, IncParams,
};
use probelab::report::run_report;
use probelab::{Answer, IntervalTag, Op, StructureKind};

fn main() -> probelab::Result<()> {
    let p = IncParams::derive(
        1 << 12,
        0.25,
        IncOverrides {
            branching: Some(4),
            ..Default::default()
        },
    )?;
    println!("{}: {} vertices", p.id(), p.vertex_count());

    for inconsistencies in [0, 1] {
        let opts = IncOptions {
            metaqueries: 3,
            inconsistencies,
        };
        let inst = gen_incremental_with(&p, 5, opts)?;
        let (report, outcome) = run_report(&inst.trace, StructureKind::LfGeneral)?;
        println!(
            "\n{inconsistencies} wrong leaves per metaquery; {} probes",
            report.total_probes
        );
        for row in &report.epochs {
            println!(
                "  epoch {}: |W| = {}, fresh = {}, read by queries = {}",
                row.epoch, row.written, row.fresh, row.query_overlap
            );
        }
        let spans = inst.trace.interval_spans();
        for (j, (q, chi)) in inst.queries.iter().enumerate() {
            let verdict = metaquery_oracle(q, chi, &inst.forest);
            let (_, begin, end) = spans
                .iter()
                .find(|s| s.0 == IntervalTag::Metaquery(j as u32))
                .copied()
                .expect("every metaquery is tagged");
            let connected: Vec<bool> = outcome
                .answers
                .iter()
                .filter(|(i, _)| {
                    (begin..end).contains(i) && matches!(inst.trace.ops[*i], Op::ConnQuery { .. })
                })
                .map(|(_, a)| *a == Answer::Connected(true))
                .collect();
            println!(
                "  metaquery {j}: oracle {verdict:?}, structure {:?}",
                verdict_from_answers(&connected)
            );
        }
        let (_, checks) = naive_replay(&inst.trace.ops)?;
        println!(
            "  naive oracle checks failing: {}",
            checks.iter().filter(|c| !c.1).count()
        );
    }
    Ok(())
}
