//! Replaying traces against the arena-resident structures.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::arena::{CellMemory, ProbeArena, SnapshotId};
use crate::error::{Error, Result};
use crate::graph::ProbedGraph;
use crate::link_find::{LfStructure, LfVariant};
use crate::trace::{Op, OpTrace};
use crate::uf::{UfForest, UfMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    UfAmortized,
    UfWorstCase {
        k: u64,
    },
    LfGeneral,
    /// Declared query and update counts are taken from the trace.
    LfForest,
    /// Arena-resident adjacency lists with search; supports deletions.
    Naive,
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureKind::UfAmortized => write!(f, "uf-amortized"),
            StructureKind::UfWorstCase { k } => write!(f, "uf-worstcase:{k}"),
            StructureKind::LfGeneral => write!(f, "lf-general"),
            StructureKind::LfForest => write!(f, "lf-forest"),
            StructureKind::Naive => write!(f, "naive"),
        }
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uf-amortized" => Ok(StructureKind::UfAmortized),
            "lf-general" => Ok(StructureKind::LfGeneral),
            "lf-forest" => Ok(StructureKind::LfForest),
            "naive" => Ok(StructureKind::Naive),
            _ => {
                if let Some(k) = s.strip_prefix("uf-worstcase:") {
                    let k = k
                        .parse()
                        .map_err(|_| Error::InvalidArgs(format!("bad arity in {s:?}")))?;
                    Ok(StructureKind::UfWorstCase { k })
                } else {
                    Err(Error::InvalidArgs(format!(
                        "unknown structure {s:?} (uf-amortized, uf-worstcase:K, lf-general, lf-forest, naive)"
                    )))
                }
            }
        }
    }
}

/// Result of a query-like operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Answer {
    Rep(u64),
    Connected(bool),
}

/// Finds and links counted the way the link-find bounds count them.
pub fn declared_counts(trace: &OpTrace) -> (u64, u64) {
    let mut queries = 0;
    let mut updates = 0;
    for op in &trace.ops {
        match op {
            Op::Find { .. } => queries += 1,
            Op::ConnQuery { .. } => queries += 2,
            Op::Link(..) | Op::Union(..) | Op::InsertEdge(..) => updates += 1,
            _ => {}
        }
    }
    (queries, updates)
}

/// A structure placed in an arena. The handle only holds layout and
/// instrumentation, so clones can be run against other memories holding the
/// same image.
#[derive(Debug, Clone)]
pub enum Structure {
    Uf(UfForest),
    Lf(LfStructure),
    Graph(ProbedGraph),
}

impl Structure {
    pub fn build(kind: StructureKind, arena: &mut ProbeArena, trace: &OpTrace) -> Result<Self> {
        let n = trace.meta.nodes;
        Ok(match kind {
            StructureKind::UfAmortized => {
                Structure::Uf(UfForest::new(arena, n, UfMode::Amortized)?)
            }
            StructureKind::UfWorstCase { k } => {
                Structure::Uf(UfForest::new(arena, n, UfMode::WorstCase { k })?)
            }
            StructureKind::LfGeneral => {
                Structure::Lf(LfStructure::new(arena, n, LfVariant::General)?)
            }
            StructureKind::LfForest => {
                let (queries, updates) = declared_counts(trace);
                Structure::Lf(LfStructure::new(
                    arena,
                    n,
                    LfVariant::Forest { queries, updates },
                )?)
            }
            StructureKind::Naive => Structure::Graph(ProbedGraph::new(arena, n)?),
        })
    }

    /// Execute one non-marker operation.
    pub fn apply<M: CellMemory>(&mut self, mem: &mut M, op: &Op) -> Result<Option<Answer>> {
        match self {
            Structure::Uf(uf) => match *op {
                Op::Union(a, b) => uf.union(mem, a, b).map(|_| None),
                Op::Link(a, b) => {
                    if !uf.is_root(mem, a)? || !uf.is_root(mem, b)? {
                        return Err(Error::UnsupportedOp(format!(
                            "union-find can only link roots, got L {a} {b}"
                        )));
                    }
                    uf.union(mem, a, b).map(|_| None)
                }
                Op::Find { v, .. } => uf.find(mem, v).map(|r| Some(Answer::Rep(r))),
                Op::ConnQuery { u, v, .. } => {
                    let same = uf.find(mem, u)? == uf.find(mem, v)?;
                    Ok(Some(Answer::Connected(same)))
                }
                _ => Err(Error::UnsupportedOp(format!(
                    "union-find cannot run {}",
                    op.kind()
                ))),
            },
            Structure::Lf(lf) => match *op {
                Op::Link(a, b) | Op::Union(a, b) => lf.link(mem, a, b).map(|_| None),
                Op::Find { v, .. } => lf.find(mem, v).map(|r| Some(Answer::Rep(r))),
                Op::ConnQuery { u, v, .. } => {
                    let same = lf.find(mem, u)? == lf.find(mem, v)?;
                    Ok(Some(Answer::Connected(same)))
                }
                _ => Err(Error::UnsupportedOp(format!(
                    "link-find cannot run {}",
                    op.kind()
                ))),
            },
            Structure::Graph(g) => match *op {
                Op::Link(a, b) | Op::Union(a, b) | Op::InsertEdge(a, b) => {
                    g.insert_edge(mem, a, b).map(|_| None)
                }
                Op::DeleteEdge(a, b) => g.delete_edge(mem, a, b).map(|_| None),
                Op::Find { v, .. } => g.find(mem, v).map(|r| Some(Answer::Rep(r))),
                Op::ConnQuery { u, v, .. } => {
                    g.connected(mem, u, v).map(|c| Some(Answer::Connected(c)))
                }
                _ => Err(Error::UnsupportedOp(format!(
                    "graph cannot run {}",
                    op.kind()
                ))),
            },
        }
    }
}

/// Checks `expect` annotations.
///
/// Connectivity answers must match literally. A find's representative only
/// has to be stable between updates, so `F v expect r` is checked up to
/// relabeling: between two updates the map from expected to returned
/// representatives must be a bijection.
#[derive(Debug, Default, Clone)]
pub struct Checker {
    expected_to_got: HashMap<u64, u64>,
    got_to_expected: HashMap<u64, u64>,
}

impl Checker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.expected_to_got.clear();
        self.got_to_expected.clear();
    }

    /// Observe an executed operation. Returns whether its expectation held,
    /// or `None` if it carries none.
    pub fn observe(&mut self, op: &Op, answer: Option<Answer>) -> Option<bool> {
        match (*op, answer) {
            (Op::ConnQuery { expected, .. }, Some(Answer::Connected(got))) => Some(got == expected),
            (
                Op::Find {
                    expect: Some(r), ..
                },
                Some(Answer::Rep(got)),
            ) => {
                let forward = *self.expected_to_got.entry(r).or_insert(got);
                let backward = *self.got_to_expected.entry(got).or_insert(r);
                Some(forward == got && backward == r)
            }
            (Op::Find { expect: None, .. }, _) => None,
            (op, _) if op.is_marker() => {
                if op == Op::Restore {
                    self.reset();
                }
                None
            }
            _ => {
                self.reset();
                None
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OpRecord {
    pub index: usize,
    pub kind: &'static str,
    pub probes: u64,
    pub cumulative: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub index: usize,
    pub op: String,
    pub answer: String,
}

#[derive(Debug, Clone, Default)]
pub struct ReplayOutcome {
    pub records: Vec<OpRecord>,
    pub answers: Vec<(usize, Answer)>,
    /// `(op index, expectation held)` for every annotated operation.
    pub checks: Vec<(usize, bool)>,
    pub mismatches: Vec<Mismatch>,
    /// Probes spent building the structure.
    pub construction_probes: u64,
}

impl ReplayOutcome {
    pub fn total_probes(&self) -> u64 {
        self.records.last().map_or(0, |r| r.cumulative)
    }
}

/// Drives a structure through a trace, handling interval and snapshot markers.
pub struct Replayer {
    pub structure: Structure,
    checker: Checker,
    snapshots: Vec<SnapshotId>,
    outcome: ReplayOutcome,
    cumulative: u64,
}

impl Replayer {
    pub fn new(kind: StructureKind, arena: &mut ProbeArena, trace: &OpTrace) -> Result<Self> {
        let before = arena.probe_count();
        let structure = Structure::build(kind, arena, trace)?;
        let outcome = ReplayOutcome {
            construction_probes: arena.probe_count() - before,
            ..Default::default()
        };
        Ok(Self {
            structure,
            checker: Checker::new(),
            snapshots: Vec::new(),
            outcome,
            cumulative: 0,
        })
    }

    /// Continue with a structure already placed in the arena's image.
    pub fn resume(structure: Structure) -> Self {
        Self {
            structure,
            checker: Checker::new(),
            snapshots: Vec::new(),
            outcome: ReplayOutcome::default(),
            cumulative: 0,
        }
    }

    pub fn step(
        &mut self,
        arena: &mut ProbeArena,
        index: usize,
        op: &Op,
    ) -> Result<Option<Answer>> {
        let answer = match *op {
            Op::BeginInterval(tag) => {
                arena.set_interval(tag)?;
                None
            }
            Op::EndInterval => {
                arena.end_interval()?;
                None
            }
            Op::Snapshot => {
                self.snapshots.push(arena.snapshot());
                None
            }
            Op::Restore => {
                let id = self.snapshots.pop().ok_or_else(|| {
                    Error::InvalidParams(format!("op {index}: restore without snapshot"))
                })?;
                arena.restore(id)?;
                None
            }
            _ => {
                let before = arena.probe_count();
                let answer = self.structure.apply(arena, op)?;
                let probes = arena.probe_count() - before;
                self.cumulative += probes;
                self.outcome.records.push(OpRecord {
                    index,
                    kind: op.kind(),
                    probes,
                    cumulative: self.cumulative,
                });
                answer
            }
        };
        if let Some(a) = answer {
            self.outcome.answers.push((index, a));
        }
        if let Some(ok) = self.checker.observe(op, answer) {
            self.outcome.checks.push((index, ok));
            if !ok {
                self.outcome.mismatches.push(Mismatch {
                    index,
                    op: format!("{op:?}"),
                    answer: format!("{answer:?}"),
                });
            }
        }
        Ok(answer)
    }

    pub fn finish(self) -> (Structure, ReplayOutcome) {
        (self.structure, self.outcome)
    }
}

/// Replay a whole trace on `arena`. Expectation failures are collected, not
/// raised.
pub fn replay(
    trace: &OpTrace,
    kind: StructureKind,
    arena: &mut ProbeArena,
) -> Result<(Structure, ReplayOutcome)> {
    let mut r = Replayer::new(kind, arena, trace)?;
    for (i, op) in trace.ops.iter().enumerate() {
        r.step(arena, i, op)?;
    }
    Ok(r.finish())
}
