//! Run reports and the versioned CSV tables derived from them.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arena::{
    charge_to_lca, fresh_sets, read_under, Access, IntervalTag, LogMode, ProbeArena, Timeline,
};
use crate::error::{Error, Result};
use crate::replay::{replay, Mismatch, OpRecord, ReplayOutcome, StructureKind};
use crate::trace::OpTrace;

pub const REPORT_SCHEMA: &str = "probelab-report v1";
pub const CSV_VERSION: &str = "probelab-csv v1";

/// Hex SHA-256 of a trace's text form.
pub fn content_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRow {
    pub structure: String,
    pub epoch: u32,
    pub written: usize,
    pub read: usize,
    /// Cells last written in this epoch.
    pub fresh: usize,
    /// Fresh cells read by the metaqueries.
    pub query_overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeRow {
    pub structure: String,
    pub node: u64,
    /// Levels above the leaves.
    pub height: u32,
    pub first_leaf: usize,
    pub last_leaf: usize,
    pub charge: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRow {
    pub index: usize,
    pub kind: String,
    pub probes: u64,
    pub cumulative: u64,
}

impl From<&OpRecord> for OpRow {
    fn from(r: &OpRecord) -> Self {
        Self {
            index: r.index,
            kind: r.kind.to_string(),
            probes: r.probes,
            cumulative: r.cumulative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchRow {
    pub index: usize,
    pub op: String,
    pub answer: String,
}

impl From<&Mismatch> for MismatchRow {
    fn from(m: &Mismatch) -> Self {
        Self {
            index: m.index,
            op: m.op.clone(),
            answer: m.answer.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub params: String,
    pub structure: String,
    pub seed: u64,
    pub trace_hash: String,
    pub construction_probes: u64,
    pub total_probes: u64,
    pub expectations: usize,
    pub mismatches: Vec<MismatchRow>,
    pub per_op: Vec<OpRow>,
    pub epochs: Vec<EpochRow>,
    pub timeline: Vec<ChargeRow>,
}

impl RunReport {
    /// Totals equal the sum of their parts.
    pub fn is_consistent(&self) -> bool {
        self.per_op.iter().map(|r| r.probes).sum::<u64>() == self.total_probes
            && self.per_op.last().map_or(0, |r| r.cumulative) == self.total_probes
    }
}

/// Per-epoch write/read/fresh counts.
pub fn epoch_rows(structure: &str, arena: &ProbeArena) -> Vec<EpochRow> {
    let log = arena.log();
    let fresh = fresh_sets(log);
    let query_tags: BTreeSet<IntervalTag> = arena
        .intervals()
        .iter()
        .map(|s| s.tag)
        .filter(|t| matches!(t, IntervalTag::Metaquery(_)))
        .collect();
    let query_reads = read_under(log, &query_tags);
    let mut rows = Vec::new();
    for (&i, f) in &fresh {
        let tag = BTreeSet::from([IntervalTag::Epoch(i)]);
        let written = log
            .events()
            .iter()
            .filter(|e| e.kind == Access::Write && e.tag == IntervalTag::Epoch(i))
            .map(|e| e.addr)
            .collect::<BTreeSet<_>>()
            .len();
        rows.push(EpochRow {
            structure: structure.to_string(),
            epoch: i,
            written,
            read: read_under(log, &tag).len(),
            fresh: f.len(),
            query_overlap: f.intersection(&query_reads).count(),
        });
    }
    rows
}

/// Reads charged to timeline nodes, with step intervals as leaves.
pub fn charge_rows(structure: &str, arena: &ProbeArena) -> Result<Vec<ChargeRow>> {
    if !arena
        .intervals()
        .iter()
        .any(|s| matches!(s.tag, IntervalTag::Step(_)))
    {
        return Ok(Vec::new());
    }
    let timeline =
        Timeline::from_intervals(arena.intervals(), |t| matches!(t, IntervalTag::Step(_)))?;
    let width_depth = timeline.width().trailing_zeros();
    Ok(charge_to_lca(arena.log(), &timeline)
        .into_iter()
        .map(|(node, charge)| {
            let leaves = timeline.leaves_under(node);
            ChargeRow {
                structure: structure.to_string(),
                node,
                height: width_depth - (63 - node.leading_zeros()).min(width_depth),
                first_leaf: leaves.start,
                last_leaf: leaves.end.saturating_sub(1),
                charge,
            }
        })
        .collect())
}

/// Replay `trace` on a fresh fully logged arena and summarize.
pub fn run_report(trace: &OpTrace, kind: StructureKind) -> Result<(RunReport, ReplayOutcome)> {
    let mut arena = ProbeArena::with_mode(LogMode::Full);
    let (_, outcome) = replay(trace, kind, &mut arena)?;
    let structure = kind.to_string();
    let report = RunReport {
        schema: REPORT_SCHEMA.to_string(),
        params: trace.meta.params.clone(),
        structure: structure.clone(),
        seed: trace.meta.seed,
        trace_hash: content_hash(&trace.to_text()),
        construction_probes: outcome.construction_probes,
        total_probes: outcome.total_probes(),
        expectations: outcome.checks.len(),
        mismatches: outcome.mismatches.iter().map(MismatchRow::from).collect(),
        per_op: outcome.records.iter().map(OpRow::from).collect(),
        epochs: epoch_rows(&structure, &arena),
        timeline: charge_rows(&structure, &arena)?,
    };
    Ok((report, outcome))
}

/// CSV with a leading `# probelab-csv v1 <table>` comment line.
pub fn write_csv<T: Serialize, W: Write>(out: W, table: &str, rows: &[T]) -> Result<()> {
    let mut out = out;
    writeln!(out, "# {CSV_VERSION} {table}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(table: &str, rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, table, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Parse a table written by [`write_csv`], checking the version line.
pub fn read_csv<T: for<'de> Deserialize<'de>>(text: &str, table: &str) -> Result<Vec<T>> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let expected = format!("# {CSV_VERSION} {table}");
    if first.trim_end() != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected {expected:?}, found {first:?}"),
        });
    }
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                line: i + 3,
                message: e.to_string(),
            })
        })
        .collect()
}
