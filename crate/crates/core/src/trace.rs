//! Replayable operation traces and their line-oriented text format.
//!
//! ```text
//! # probelab-trace v1
//! # nodes 24
//! # seed 7
//! # params inc:n=16,...
//! L 3 9            link
//! U 0 4            union of two roots
//! F 5 expect 2     find, optionally with the expected representative
//! I 1 2 / D 1 2    insert / delete an edge
//! Q 1 2 expect 0   connectivity query with expected answer
//! # tag epoch:2 / # endtag
//! # snap / # restore
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::arena::IntervalTag;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "# probelab-trace v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Link(u64, u64),
    Find { v: u64, expect: Option<u64> },
    Union(u64, u64),
    InsertEdge(u64, u64),
    DeleteEdge(u64, u64),
    ConnQuery { u: u64, v: u64, expected: bool },
    BeginInterval(IntervalTag),
    EndInterval,
    Snapshot,
    Restore,
}

impl Op {
    pub fn kind(&self) -> &'static str {
        match self {
            Op::Link(..) => "link",
            Op::Find { .. } => "find",
            Op::Union(..) => "union",
            Op::InsertEdge(..) => "insert",
            Op::DeleteEdge(..) => "delete",
            Op::ConnQuery { .. } => "query",
            Op::BeginInterval(_) => "tag",
            Op::EndInterval => "endtag",
            Op::Snapshot => "snap",
            Op::Restore => "restore",
        }
    }

    /// Markers structure the trace; they are not data-structure operations.
    pub fn is_marker(&self) -> bool {
        matches!(
            self,
            Op::BeginInterval(_) | Op::EndInterval | Op::Snapshot | Op::Restore
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Node ids are in `[0, nodes)`.
    pub nodes: u64,
    pub seed: u64,
    pub params: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpTrace {
    pub meta: TraceMeta,
    pub ops: Vec<Op>,
}

impl OpTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            meta,
            ops: Vec::new(),
        }
    }

    pub fn push(&mut self, op: Op) {
        self.ops.push(op);
    }

    pub fn extend(&mut self, ops: impl IntoIterator<Item = Op>) {
        self.ops.extend(ops);
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Interval tags in the order they open.
    pub fn interval_tags(&self) -> Vec<IntervalTag> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                Op::BeginInterval(t) => Some(*t),
                _ => None,
            })
            .collect()
    }

    /// Index range `[begin, end]` (marker positions inclusive) of each interval.
    pub fn interval_spans(&self) -> Vec<(IntervalTag, usize, usize)> {
        let mut spans = Vec::new();
        let mut open: Option<(IntervalTag, usize)> = None;
        for (i, op) in self.ops.iter().enumerate() {
            match op {
                Op::BeginInterval(t) => open = Some((*t, i)),
                Op::EndInterval => {
                    if let Some((t, b)) = open.take() {
                        spans.push((t, b, i));
                    }
                }
                _ => {}
            }
        }
        spans
    }

    /// Balanced, non-nested interval markers; balanced snapshots; deletions
    /// only of present edges.
    pub fn validate(&self) -> Result<()> {
        let err = |i: usize, m: &str| Error::InvalidParams(format!("trace op {i}: {m}"));
        let mut open = false;
        let mut snaps: Vec<HashMap<(u64, u64), u32>> = Vec::new();
        let mut edges: HashMap<(u64, u64), u32> = HashMap::new();
        let key = |u: u64, v: u64| if u <= v { (u, v) } else { (v, u) };
        for (i, op) in self.ops.iter().enumerate() {
            let in_range = |x: u64| x < self.meta.nodes;
            match *op {
                Op::BeginInterval(_) => {
                    if open {
                        return Err(err(i, "nested interval"));
                    }
                    open = true;
                }
                Op::EndInterval => {
                    if !open {
                        return Err(err(i, "endtag without tag"));
                    }
                    open = false;
                }
                Op::Snapshot => snaps.push(edges.clone()),
                Op::Restore => {
                    edges = snaps
                        .pop()
                        .ok_or_else(|| err(i, "restore without snapshot"))?;
                }
                Op::Link(u, v) | Op::Union(u, v) | Op::InsertEdge(u, v) => {
                    if !in_range(u) || !in_range(v) {
                        return Err(err(i, "node out of range"));
                    }
                    *edges.entry(key(u, v)).or_insert(0) += 1;
                }
                Op::DeleteEdge(u, v) => {
                    let count = edges.get_mut(&key(u, v)).filter(|c| **c > 0);
                    match count {
                        Some(c) => *c -= 1,
                        None => return Err(err(i, "delete of absent edge")),
                    }
                }
                Op::Find { v, .. } => {
                    if !in_range(v) {
                        return Err(err(i, "node out of range"));
                    }
                }
                Op::ConnQuery { u, v, .. } => {
                    if !in_range(u) || !in_range(v) {
                        return Err(err(i, "node out of range"));
                    }
                }
            }
        }
        if open {
            return Err(err(self.ops.len(), "unterminated interval"));
        }
        if !snaps.is_empty() {
            return Err(err(self.ops.len(), "snapshot without restore"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{TRACE_HEADER}").unwrap();
        writeln!(out, "# nodes {}", self.meta.nodes).unwrap();
        writeln!(out, "# seed {}", self.meta.seed).unwrap();
        writeln!(out, "# params {}", self.meta.params).unwrap();
        for op in &self.ops {
            match *op {
                Op::Link(u, v) => writeln!(out, "L {u} {v}"),
                Op::Union(u, v) => writeln!(out, "U {u} {v}"),
                Op::Find { v, expect: None } => writeln!(out, "F {v}"),
                Op::Find { v, expect: Some(r) } => writeln!(out, "F {v} expect {r}"),
                Op::InsertEdge(u, v) => writeln!(out, "I {u} {v}"),
                Op::DeleteEdge(u, v) => writeln!(out, "D {u} {v}"),
                Op::ConnQuery { u, v, expected } => {
                    writeln!(out, "Q {u} {v} expect {}", expected as u8)
                }
                Op::BeginInterval(t) => writeln!(out, "# tag {t}"),
                Op::EndInterval => writeln!(out, "# endtag"),
                Op::Snapshot => writeln!(out, "# snap"),
                Op::Restore => writeln!(out, "# restore"),
            }
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut trace = OpTrace::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Parse {
                line: n + 1,
                message: format!("{m}: {line:?}"),
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<u64> {
                parts
                    .get(i)
                    .ok_or_else(|| err("missing field"))?
                    .parse()
                    .map_err(|_| err("bad number"))
            };
            if parts[0] == "#" {
                match parts.get(1).copied() {
                    Some("tag") => {
                        let tag = parts
                            .get(2)
                            .ok_or_else(|| err("missing tag"))?
                            .parse()
                            .map_err(|_| err("bad tag"))?;
                        trace.ops.push(Op::BeginInterval(tag));
                    }
                    Some("endtag") => trace.ops.push(Op::EndInterval),
                    Some("snap") => trace.ops.push(Op::Snapshot),
                    Some("restore") => trace.ops.push(Op::Restore),
                    Some("nodes") => trace.meta.nodes = num(2)?,
                    Some("seed") => trace.meta.seed = num(2)?,
                    Some("params") => trace.meta.params = parts[2..].join(" "),
                    // free-form comment, including the version header
                    _ => {}
                }
                continue;
            }
            let op = match parts[0] {
                "L" => Op::Link(num(1)?, num(2)?),
                "U" => Op::Union(num(1)?, num(2)?),
                "I" => Op::InsertEdge(num(1)?, num(2)?),
                "D" => Op::DeleteEdge(num(1)?, num(2)?),
                "F" => {
                    let expect = match parts.get(2) {
                        None => None,
                        Some(&"expect") => Some(num(3)?),
                        Some(_) => return Err(err("expected `expect`")),
                    };
                    Op::Find { v: num(1)?, expect }
                }
                "Q" => {
                    if parts.get(3) != Some(&"expect") {
                        return Err(err("query needs `expect 0|1`"));
                    }
                    let expected = match num(4)? {
                        0 => false,
                        1 => true,
                        _ => return Err(err("expect must be 0 or 1")),
                    };
                    Op::ConnQuery {
                        u: num(1)?,
                        v: num(2)?,
                        expected,
                    }
                }
                _ => return Err(err("unknown operation")),
            };
            trace.ops.push(op);
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_op() -> impl Strategy<Value = Op> {
        let node = 0u64..50;
        prop_oneof![
            (node.clone(), node.clone()).prop_map(|(u, v)| Op::Link(u, v)),
            (node.clone(), node.clone()).prop_map(|(u, v)| Op::Union(u, v)),
            (node.clone(), proptest::option::of(node.clone()))
                .prop_map(|(v, expect)| Op::Find { v, expect }),
            (node.clone(), node.clone()).prop_map(|(u, v)| Op::InsertEdge(u, v)),
            (node.clone(), node.clone()).prop_map(|(u, v)| Op::DeleteEdge(u, v)),
            (node.clone(), node.clone(), any::<bool>())
                .prop_map(|(u, v, expected)| Op::ConnQuery { u, v, expected }),
            (0u32..9).prop_map(|i| Op::BeginInterval(IntervalTag::Epoch(i))),
            (0u32..9).prop_map(|i| Op::BeginInterval(IntervalTag::Metaquery(i))),
            Just(Op::BeginInterval(IntervalTag::Prefix)),
            Just(Op::EndInterval),
            Just(Op::Snapshot),
            Just(Op::Restore),
        ]
    }

    proptest! {
        #[test]
        fn text_format_round_trips(ops in proptest::collection::vec(arb_op(), 0..60), seed in any::<u64>()) {
            let trace = OpTrace {
                meta: TraceMeta { nodes: 50, seed, params: "inc:n=16,eps=0.5".into() },
                ops,
            };
            let parsed = OpTrace::parse(&trace.to_text()).unwrap();
            prop_assert_eq!(parsed, trace);
        }
    }

    #[test]
    fn validate_catches_unbalanced_and_missing_edges() {
        let meta = TraceMeta {
            nodes: 4,
            ..Default::default()
        };
        let mut t = OpTrace::new(meta.clone());
        t.extend([
            Op::BeginInterval(IntervalTag::Step(0)),
            Op::BeginInterval(IntervalTag::Step(1)),
        ]);
        assert!(t.validate().is_err());
        let mut t = OpTrace::new(meta.clone());
        t.extend([
            Op::InsertEdge(0, 1),
            Op::DeleteEdge(1, 0),
            Op::DeleteEdge(0, 1),
        ]);
        assert!(t.validate().is_err());
        let mut t = OpTrace::new(meta);
        t.extend([
            Op::Snapshot,
            Op::InsertEdge(0, 1),
            Op::Restore,
            Op::DeleteEdge(0, 1),
        ]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(OpTrace::parse("X 1 2").is_err());
        assert!(OpTrace::parse("Q 1 2 expect 3").is_err());
        assert!(OpTrace::parse("F 1 maybe 3").is_err());
    }
}
