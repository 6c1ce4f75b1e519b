//! Link-find: links between arbitrary nodes, finds that return a component
//! representative which stays fixed until the component is linked again.
//!
//! Nodes are free, leaves, or union nodes. A component containing a free node
//! is entirely free and is stored as plain adjacency lists. A find on a free
//! node scans its component and, if it is large enough, turns the smallest
//! node into a union node and every other node into a leaf pointing at it.
//! Union nodes live in an ordinary [`UfForest`]; finds on non-free nodes go
//! through it.
//!
//! The forest variant leaves components with fewer than `τ = α(q, q)` nodes
//! free and answers with their smallest node. Its links must join distinct
//! components; a link between two non-free nodes of one component is reported
//! as [`Error::ForestViolation`], a cycle inside a free component goes
//! unnoticed.

use std::collections::VecDeque;

use crate::ackermann::alpha;
use crate::arena::{bounded, Addr, CellMemory, ProbeArena, SLOT_LIMIT};
use crate::error::{Error, Result};
use crate::uf::{UfForest, UfMode};

const FREE: u64 = 0;
const LEAF: u64 = 1;
const UNION: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfVariant {
    General,
    /// For workloads whose links always join distinct components, with the
    /// number of finds and links declared up front.
    Forest {
        queries: u64,
        updates: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Free,
    Leaf { parent: u64 },
    Union,
}

/// Instrumentation kept outside the arena.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LfCounters {
    pub links: u64,
    pub finds: u64,
    /// Nodes that went from free to leaf or union.
    pub conversions: u64,
    pub union_nodes_created: u64,
    /// Probes spent in operations, excluding construction.
    pub probes: u64,
    pub inner_finds: u64,
    pub inner_unions: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfStructure {
    n: u64,
    variant: LfVariant,
    /// Free components at least this large are converted on find.
    threshold: u64,
    inner: UfForest,
    role_base: Addr,
    leaf_parent_base: Addr,
    adj_base: Addr,
    bitmap_base: Addr,
    edge_counter: Addr,
    pool: Addr,
    counters: LfCounters,
}

impl LfStructure {
    /// Allocates the edge pool as the arena's unbounded tail, so this must be
    /// the last structure placed in `arena`.
    pub fn new(arena: &mut ProbeArena, n: u64, variant: LfVariant) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgs("link-find needs n >= 1".into()));
        }
        let threshold = match variant {
            LfVariant::General => 2,
            LfVariant::Forest { queries, .. } => alpha(queries.max(1), queries.max(1))? as u64,
        };
        let inner = UfForest::new(arena, n, UfMode::Amortized)?;
        let role_base = arena.alloc(n);
        let leaf_parent_base = arena.alloc(n);
        let adj_base = arena.alloc(n);
        let bitmap_base = arena.alloc(n.div_ceil(64));
        let edge_counter = arena.alloc(1);
        let pool = arena.alloc_tail();
        Ok(Self {
            n,
            variant,
            threshold,
            inner,
            role_base,
            leaf_parent_base,
            adj_base,
            bitmap_base,
            edge_counter,
            pool,
            counters: LfCounters::default(),
        })
    }

    /// Override the conversion threshold of the forest variant.
    pub fn with_threshold(mut self, tau: u64) -> Self {
        if matches!(self.variant, LfVariant::Forest { .. }) {
            self.threshold = tau.max(1);
        }
        self
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn variant(&self) -> LfVariant {
        self.variant
    }

    /// Smallest free-component size converted by a find (`τ` for the forest
    /// variant, 2 otherwise).
    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn counters(&self) -> LfCounters {
        self.counters
    }

    /// Cumulative probes of all link and find operations.
    pub fn total_cost(&self) -> u64 {
        self.counters.probes
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

    fn role_addr(&self, v: u64) -> Addr {
        self.role_base + v
    }

    fn leaf_parent_addr(&self, v: u64) -> Addr {
        self.leaf_parent_base + v
    }

    fn adj_addr(&self, v: u64) -> Addr {
        self.adj_base + v
    }

    fn target_addr(&self, slot: u64) -> Addr {
        self.pool + 2 * slot
    }

    fn next_addr(&self, slot: u64) -> Addr {
        self.pool + 2 * slot + 1
    }

    pub fn link<M: CellMemory>(&mut self, mem: &mut M, u: u64, v: u64) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::SelfLink(u));
        }
        let start = mem.probes();
        let result = self.link_inner(mem, u, v);
        self.counters.links += 1;
        self.counters.probes += mem.probes() - start;
        result
    }

    fn link_inner<M: CellMemory>(&mut self, mem: &mut M, u: u64, v: u64) -> Result<()> {
        let role_u = mem.read(self.role_addr(u))?;
        let role_v = mem.read(self.role_addr(v))?;
        match (role_u == FREE, role_v == FREE) {
            (true, true) => {
                let slot = bounded(mem.read(self.edge_counter)?, SLOT_LIMIT)?;
                mem.write(self.edge_counter, slot + 2)?;
                self.push_half_edge(mem, u, v, slot)?;
                self.push_half_edge(mem, v, u, slot + 1)
            }
            (true, false) => self.attach_free_component(mem, u, v, role_v),
            (false, true) => self.attach_free_component(mem, v, u, role_u),
            (false, false) => {
                let pu = self.union_parent(mem, u, role_u)?;
                let pv = self.union_parent(mem, v, role_v)?;
                let ru = self.inner_find(mem, pu)?;
                let rv = self.inner_find(mem, pv)?;
                if ru == rv {
                    return match self.variant {
                        LfVariant::General => Ok(()),
                        LfVariant::Forest { .. } => Err(Error::ForestViolation(u, v)),
                    };
                }
                self.counters.inner_unions += 1;
                self.inner.union(mem, ru, rv).map(|_| ())
            }
        }
    }

    fn push_half_edge<M: CellMemory>(
        &self,
        mem: &mut M,
        from: u64,
        to: u64,
        slot: u64,
    ) -> Result<()> {
        mem.set(self.target_addr(slot), to)?;
        let head = mem.read(self.adj_addr(from))?;
        mem.write(self.adj_addr(from), slot + 1)?;
        mem.set(self.next_addr(slot), head)?;
        Ok(())
    }

    /// Leaf → its union node; union node → itself.
    fn union_parent<M: CellMemory>(&self, mem: &mut M, v: u64, role: u64) -> Result<u64> {
        if role == LEAF {
            bounded(mem.read(self.leaf_parent_addr(v))?, self.n)
        } else {
            Ok(v)
        }
    }

    fn inner_find<M: CellMemory>(&mut self, mem: &mut M, v: u64) -> Result<u64> {
        self.counters.inner_finds += 1;
        self.inner.find(mem, v)
    }

    fn attach_free_component<M: CellMemory>(
        &mut self,
        mem: &mut M,
        free: u64,
        anchor: u64,
        anchor_role: u64,
    ) -> Result<()> {
        let target = self.union_parent(mem, anchor, anchor_role)?;
        let component = self.scan(mem, free)?;
        for &x in &component {
            mem.set(self.role_addr(x), LEAF)?;
            mem.set(self.leaf_parent_addr(x), target)?;
        }
        self.counters.conversions += component.len() as u64;
        Ok(())
    }

    /// Breadth-first scan of a free component, marking visited nodes in the
    /// arena bitmap and clearing the marks afterwards.
    fn scan<M: CellMemory>(&self, mem: &mut M, start: u64) -> Result<Vec<u64>> {
        let mut seen = vec![start];
        self.mark(mem, start)?;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            let mut link = mem.read(self.adj_addr(x))?;
            while link != 0 {
                let slot = bounded(link - 1, SLOT_LIMIT)?;
                let y = bounded(mem.read(self.target_addr(slot))?, self.n)?;
                link = mem.read(self.next_addr(slot))?;
                if self.mark(mem, y)? {
                    seen.push(y);
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

    /// Set the visited bit of `v`; false if it was already set.
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

    pub fn find<M: CellMemory>(&mut self, mem: &mut M, v: u64) -> Result<u64> {
        self.check(v)?;
        let start = mem.probes();
        let result = self.find_inner(mem, v);
        self.counters.finds += 1;
        self.counters.probes += mem.probes() - start;
        result
    }

    fn find_inner<M: CellMemory>(&mut self, mem: &mut M, v: u64) -> Result<u64> {
        match mem.read(self.role_addr(v))? {
            FREE => {
                let component = self.scan(mem, v)?;
                let smallest = *component.iter().min().expect("scan includes start");
                if (component.len() as u64) < self.threshold {
                    return Ok(smallest);
                }
                mem.set(self.role_addr(smallest), UNION)?;
                for &x in component.iter().filter(|&&x| x != smallest) {
                    mem.set(self.role_addr(x), LEAF)?;
                    mem.set(self.leaf_parent_addr(x), smallest)?;
                }
                self.counters.conversions += component.len() as u64;
                self.counters.union_nodes_created += 1;
                // A fresh union node is a singleton root of the inner forest.
                Ok(smallest)
            }
            LEAF => {
                let p = bounded(mem.read(self.leaf_parent_addr(v))?, self.n)?;
                self.inner_find(mem, p)
            }
            _ => self.inner_find(mem, v),
        }
    }

    /// Unprobed role lookup, for tests and reports.
    pub fn role(&self, arena: &ProbeArena, v: u64) -> Role {
        match arena.peek(self.role_addr(v)) {
            FREE => Role::Free,
            LEAF => Role::Leaf {
                parent: arena.peek(self.leaf_parent_addr(v)),
            },
            _ => Role::Union,
        }
    }

    /// Unprobed free-adjacency of `v`.
    pub fn free_neighbors(&self, arena: &ProbeArena, v: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut link = arena.peek(self.adj_addr(v));
        while link != 0 {
            out.push(arena.peek(self.target_addr(link - 1)));
            link = arena.peek(self.next_addr(link - 1));
        }
        out
    }

    pub fn union_node_count(&self, arena: &ProbeArena) -> u64 {
        (0..self.n)
            .filter(|&v| self.role(arena, v) == Role::Union)
            .count() as u64
    }

    /// Purity: free adjacency only joins free nodes, leaves point at union
    /// nodes, and the bitmap is clear between operations.
    pub fn check_invariants(&self, arena: &ProbeArena) -> std::result::Result<(), String> {
        for v in 0..self.n {
            match self.role(arena, v) {
                Role::Free => {
                    for w in self.free_neighbors(arena, v) {
                        if self.role(arena, w) != Role::Free {
                            return Err(format!("free node {v} adjacent to non-free {w}"));
                        }
                    }
                }
                Role::Leaf { parent } => {
                    if self.role(arena, parent) != Role::Union {
                        return Err(format!("leaf {v} points at non-union node {parent}"));
                    }
                }
                Role::Union => {}
            }
        }
        for w in 0..self.n.div_ceil(64) {
            if arena.peek(self.bitmap_base + w) != 0 {
                return Err(format!("scan bitmap word {w} left dirty"));
            }
        }
        self.inner.check_invariants(arena)
    }
}
