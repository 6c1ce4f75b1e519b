//! Reference connectivity over an edge multiset. Not probed; used as the
//! oracle for generated traces and for game ground truth.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::replay::{Answer, Checker};
use crate::trace::Op;

#[derive(Debug, Clone, Default)]
pub struct NaiveConnectivity {
    adj: BTreeMap<u64, BTreeMap<u64, u32>>,
    snapshots: Vec<BTreeMap<u64, BTreeMap<u64, u32>>>,
}

impl NaiveConnectivity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, u: u64, v: u64) {
        *self.adj.entry(u).or_default().entry(v).or_insert(0) += 1;
        *self.adj.entry(v).or_default().entry(u).or_insert(0) += 1;
    }

    pub fn delete(&mut self, u: u64, v: u64) -> Result<()> {
        let present = self
            .adj
            .get(&u)
            .and_then(|m| m.get(&v))
            .copied()
            .unwrap_or(0);
        if present == 0 {
            return Err(Error::DeleteMissingEdge(u, v));
        }
        for (a, b) in [(u, v), (v, u)] {
            let m = self.adj.get_mut(&a).expect("present");
            let c = m.get_mut(&b).expect("present");
            *c -= 1;
            if *c == 0 {
                m.remove(&b);
            }
        }
        Ok(())
    }

    pub fn component(&self, v: u64) -> BTreeSet<u64> {
        let mut seen = BTreeSet::from([v]);
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            if let Some(m) = self.adj.get(&x) {
                for &y in m.keys() {
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        seen
    }

    pub fn connected(&self, u: u64, v: u64) -> bool {
        u == v || self.component(u).contains(&v)
    }

    /// Canonical representative: the smallest node of the component.
    pub fn find(&self, v: u64) -> u64 {
        *self
            .component(v)
            .iter()
            .next()
            .expect("component contains v")
    }

    pub fn edge_count(&self, u: u64, v: u64) -> u32 {
        self.adj
            .get(&u)
            .and_then(|m| m.get(&v))
            .copied()
            .unwrap_or(0)
    }

    /// Edge multiset keyed by `(min, max)` endpoint.
    pub fn edges(&self) -> BTreeMap<(u64, u64), u32> {
        let mut out = BTreeMap::new();
        for (&u, m) in &self.adj {
            for (&v, &c) in m {
                match u.cmp(&v) {
                    std::cmp::Ordering::Less => {
                        out.insert((u, v), c);
                    }
                    std::cmp::Ordering::Equal => {
                        out.insert((u, v), c / 2);
                    }
                    std::cmp::Ordering::Greater => {}
                }
            }
        }
        out
    }

    /// Execute one operation; markers other than snapshot/restore are ignored.
    pub fn apply(&mut self, op: &Op) -> Result<Option<Answer>> {
        Ok(match *op {
            Op::Link(u, v) | Op::Union(u, v) | Op::InsertEdge(u, v) => {
                if u == v {
                    return Err(Error::SelfLink(u));
                }
                self.insert(u, v);
                None
            }
            Op::DeleteEdge(u, v) => {
                self.delete(u, v)?;
                None
            }
            Op::Find { v, .. } => Some(Answer::Rep(self.find(v))),
            Op::ConnQuery { u, v, .. } => Some(Answer::Connected(self.connected(u, v))),
            Op::Snapshot => {
                self.snapshots.push(self.adj.clone());
                None
            }
            Op::Restore => {
                self.adj = self
                    .snapshots
                    .pop()
                    .ok_or_else(|| Error::InvalidParams("restore without snapshot".into()))?;
                None
            }
            Op::BeginInterval(_) | Op::EndInterval => None,
        })
    }
}

/// Replay `ops` on a fresh oracle, returning it with the checked expectations.
pub fn naive_replay(ops: &[Op]) -> Result<(NaiveConnectivity, Vec<(usize, bool)>)> {
    let mut g = NaiveConnectivity::new();
    let mut checker = Checker::new();
    let mut checks = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        let answer = g.apply(op)?;
        if let Some(ok) = checker.observe(op, answer) {
            checks.push((i, ok));
        }
    }
    Ok((g, checks))
}
