//! Fully dynamic graph resident in a [`ProbeArena`]: adjacency lists with edge
//! deletion, connectivity by breadth-first search.
//!
//! This is the deletion-capable structure used to replay and simulate the
//! dynamic hard instance. Queries cost time linear in the component size.

use std::collections::VecDeque;

use crate::arena::{bounded, Addr, CellMemory, ProbeArena, SLOT_LIMIT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbedGraph {
    n: u64,
    adj_base: Addr,
    bitmap_base: Addr,
    edge_counter: Addr,
    pool: Addr,
}

impl ProbedGraph {
    /// Allocates the edge pool as the arena's unbounded tail.
    pub fn new(arena: &mut ProbeArena, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgs("graph needs n >= 1".into()));
        }
        let adj_base = arena.alloc(n);
        let bitmap_base = arena.alloc(n.div_ceil(64));
        let edge_counter = arena.alloc(1);
        let pool = arena.alloc_tail();
        Ok(Self {
            n,
            adj_base,
            bitmap_base,
            edge_counter,
            pool,
        })
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check(&self, v: u64) -> Result<()> {
        if v >= self.n {
            Err(Error::OutOfRange {
                value: v,
                limit: self.n,
            })
        } else {
            Ok(())
        }
    }

    fn target_addr(&self, slot: u64) -> Addr {
        self.pool + 2 * slot
    }

    fn next_addr(&self, slot: u64) -> Addr {
        self.pool + 2 * slot + 1
    }

    fn push_half_edge<M: CellMemory>(
        &self,
        mem: &mut M,
        from: u64,
        to: u64,
        slot: u64,
    ) -> Result<()> {
        mem.set(self.target_addr(slot), to)?;
        let head = mem.read(self.adj_base + from)?;
        mem.write(self.adj_base + from, slot + 1)?;
        mem.set(self.next_addr(slot), head)?;
        Ok(())
    }

    pub fn insert_edge<M: CellMemory>(&self, mem: &mut M, u: u64, v: u64) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::SelfLink(u));
        }
        let slot = bounded(mem.read(self.edge_counter)?, SLOT_LIMIT)?;
        mem.write(self.edge_counter, slot + 2)?;
        self.push_half_edge(mem, u, v, slot)?;
        self.push_half_edge(mem, v, u, slot + 1)
    }

    /// Unlink one half-edge `from → to`; false if absent.
    fn remove_half_edge<M: CellMemory>(&self, mem: &mut M, from: u64, to: u64) -> Result<bool> {
        let mut prev: Option<u64> = None;
        let mut link = mem.read(self.adj_base + from)?;
        while link != 0 {
            let slot = bounded(link - 1, SLOT_LIMIT)?;
            let target = mem.read(self.target_addr(slot))?;
            let next = mem.read(self.next_addr(slot))?;
            if target == to {
                match prev {
                    None => mem.set(self.adj_base + from, next)?,
                    Some(p) => mem.set(self.next_addr(p), next)?,
                };
                return Ok(true);
            }
            prev = Some(slot);
            link = next;
        }
        Ok(false)
    }

    /// Delete one copy of edge `{u, v}`.
    pub fn delete_edge<M: CellMemory>(&self, mem: &mut M, u: u64, v: u64) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        if !self.remove_half_edge(mem, u, v)? {
            return Err(Error::DeleteMissingEdge(u, v));
        }
        if !self.remove_half_edge(mem, v, u)? {
            return Err(Error::SimulationDiverged(format!(
                "half-edge {v}->{u} missing while {u}->{v} was present"
            )));
        }
        Ok(())
    }

    /// Scan the component of `start`, stopping early once `stop` is reached.
    fn scan<M: CellMemory>(&self, mem: &mut M, start: u64, stop: Option<u64>) -> Result<Vec<u64>> {
        let mut seen = vec![start];
        self.mark(mem, start)?;
        let mut queue = VecDeque::from([start]);
        'outer: while let Some(x) = queue.pop_front() {
            if Some(x) == stop {
                break;
            }
            let mut link = mem.read(self.adj_base + x)?;
            while link != 0 {
                let slot = bounded(link - 1, SLOT_LIMIT)?;
                let y = bounded(mem.read(self.target_addr(slot))?, self.n)?;
                link = mem.read(self.next_addr(slot))?;
                if self.mark(mem, y)? {
                    seen.push(y);
                    if Some(y) == stop {
                        break 'outer;
                    }
                    queue.push_back(y);
                }
            }
        }
        let mut words: Vec<u64> = seen.iter().map(|&x| x / 64).collect();
        words.sort_unstable();
        words.dedup();
        for w in words {
            mem.set(self.bitmap_base + w, 0)?;
        }
        Ok(seen)
    }

    fn mark<M: CellMemory>(&self, mem: &mut M, v: u64) -> Result<bool> {
        let addr = self.bitmap_base + v / 64;
        let bit = 1u64 << (v % 64);
        let word = mem.read(addr)?;
        if word & bit != 0 {
            return Ok(false);
        }
        mem.write(addr, word | bit)?;
        Ok(true)
    }

    pub fn connected<M: CellMemory>(&self, mem: &mut M, u: u64, v: u64) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Ok(true);
        }
        Ok(self.scan(mem, u, Some(v))?.contains(&v))
    }

    /// Smallest node of `v`'s component.
    pub fn find<M: CellMemory>(&self, mem: &mut M, v: u64) -> Result<u64> {
        self.check(v)?;
        Ok(self
            .scan(mem, v, None)?
            .into_iter()
            .min()
            .expect("scan includes start"))
    }
}
