//! Union-find resident in a [`ProbeArena`].
//!
//! Two modes:
//!
//! * [`UfMode::Amortized`]: union by rank with full path compression.
//! * [`UfMode::WorstCase`]: leveled `k`-ary trees. Elements are the leaves and
//!   all of them sit at the same depth; internal nodes are auxiliary cells.
//!   Every non-root internal node has at least `k` children and a root of
//!   height ≥ 1 has at least two, so a set of size `s` has height at most
//!   `1 + log_k(s / 2)`. A find walks one parent chain. A union touches at
//!   most `k - 1` moved children plus a constant number of cells, using a
//!   per-tree "spine" table that names one node on every level.
//!
//! All state lives in the arena; the handle only stores the layout.

use crate::arena::{bounded, Addr, CellMemory, ProbeArena, Word};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UfMode {
    Amortized,
    WorstCase { k: u64 },
}

// Field order of the worst-case node table.
const PARENT: u64 = 0;
const FIRST_CHILD: u64 = 1;
const NEXT_SIBLING: u64 = 2;
const CHILD_COUNT: u64 = 3;
const HEIGHT: u64 = 4;
const REP: u64 = 5;
const SPINE: u64 = 6;
const NODE_FIELDS: u64 = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UfForest {
    n: u64,
    mode: UfMode,
    base: Addr,
    /// Worst-case mode: start of the spine blocks.
    spine_base: Addr,
    /// Worst-case mode: entries per spine block.
    spine_len: u64,
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

impl UfForest {
    /// `n` singleton sets. Initialization probes are logged under whatever
    /// interval is active.
    pub fn new(arena: &mut ProbeArena, n: u64, mode: UfMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgs("union-find needs n >= 1".into()));
        }
        match mode {
            UfMode::Amortized => {
                let base = arena.alloc(2 * n);
                let uf = Self {
                    n,
                    mode,
                    base,
                    spine_base: 0,
                    spine_len: 0,
                };
                for v in 0..n {
                    arena.set(uf.parent_addr(v), v)?;
                }
                Ok(uf)
            }
            UfMode::WorstCase { k } => {
                if k < 2 {
                    return Err(Error::InvalidArgs(format!("arity k must be >= 2, got {k}")));
                }
                // 2n node slots (n elements, up to n - 1 auxiliary), n root_of
                // cells, one allocation counter.
                let base = arena.alloc(NODE_FIELDS * 2 * n + n + 1);
                let spine_len = ceil_log2(n) + 2;
                let spine_base = arena.alloc(n * spine_len);
                let uf = Self {
                    n,
                    mode,
                    base,
                    spine_base,
                    spine_len,
                };
                for e in 0..n {
                    arena.set(uf.field(e, PARENT), e)?;
                    arena.set(uf.field(e, REP), e)?;
                    arena.set(uf.field(e, SPINE), e)?;
                    arena.set(uf.root_of_addr(e), e)?;
                }
                arena.set(uf.aux_counter_addr(), n)?;
                Ok(uf)
            }
        }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mode(&self) -> UfMode {
        self.mode
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

    fn parent_addr(&self, v: u64) -> Addr {
        self.base + v
    }

    fn rank_addr(&self, v: u64) -> Addr {
        self.base + self.n + v
    }

    fn field(&self, node: u64, f: u64) -> Addr {
        self.base + f * 2 * self.n + node
    }

    fn root_of_addr(&self, e: u64) -> Addr {
        self.base + NODE_FIELDS * 2 * self.n + e
    }

    fn aux_counter_addr(&self) -> Addr {
        self.base + NODE_FIELDS * 2 * self.n + self.n
    }

    fn spine_addr(&self, block: u64, level: u64) -> Addr {
        self.spine_base + block * self.spine_len + level
    }

    /// Representative of `v`'s set.
    pub fn find<M: CellMemory>(&self, mem: &mut M, v: u64) -> Result<u64> {
        self.check(v)?;
        match self.mode {
            UfMode::Amortized => self.find_compress(mem, v),
            UfMode::WorstCase { .. } => {
                let root = self.climb(mem, v)?;
                mem.read(self.field(root, REP))
            }
        }
    }

    /// Whether `r` currently represents its set.
    pub fn is_root<M: CellMemory>(&self, mem: &mut M, r: u64) -> Result<bool> {
        self.check(r)?;
        match self.mode {
            UfMode::Amortized => Ok(mem.read(self.parent_addr(r))? == r),
            UfMode::WorstCase { .. } => Ok(self.tree_of(mem, r)?.is_some()),
        }
    }

    /// Merge the sets represented by `r1` and `r2`; returns the new
    /// representative.
    pub fn union<M: CellMemory>(&self, mem: &mut M, r1: u64, r2: u64) -> Result<u64> {
        self.check(r1)?;
        self.check(r2)?;
        if r1 == r2 {
            return Err(Error::SameSet(r1, r2));
        }
        match self.mode {
            UfMode::Amortized => self.union_by_rank(mem, r1, r2),
            UfMode::WorstCase { k } => self.union_leveled(mem, r1, r2, k),
        }
    }

    fn find_compress<M: CellMemory>(&self, mem: &mut M, v: u64) -> Result<u64> {
        let mut path = Vec::new();
        let mut x = v;
        loop {
            let p = bounded(mem.read(self.parent_addr(x))?, self.n)?;
            if p == x {
                break;
            }
            path.push((x, p));
            x = p;
        }
        let root = x;
        for &(node, parent) in &path {
            if parent != root {
                mem.set(self.parent_addr(node), root)?;
            }
        }
        Ok(root)
    }

    fn union_by_rank<M: CellMemory>(&self, mem: &mut M, r1: u64, r2: u64) -> Result<u64> {
        for r in [r1, r2] {
            if mem.read(self.parent_addr(r))? != r {
                return Err(Error::NotARoot(r));
            }
        }
        let rank1 = mem.read(self.rank_addr(r1))?;
        let rank2 = mem.read(self.rank_addr(r2))?;
        if rank1 < rank2 {
            mem.set(self.parent_addr(r1), r2)?;
            Ok(r2)
        } else {
            mem.set(self.parent_addr(r2), r1)?;
            if rank1 == rank2 {
                mem.set(self.rank_addr(r1), rank1.wrapping_add(1))?;
            }
            Ok(r1)
        }
    }

    fn climb<M: CellMemory>(&self, mem: &mut M, v: u64) -> Result<u64> {
        let mut x = v;
        loop {
            let p = bounded(mem.read(self.field(x, PARENT))?, 2 * self.n)?;
            if p == x {
                return Ok(x);
            }
            x = p;
        }
    }

    /// Root node of the tree represented by element `r`, if `r` is a
    /// representative.
    fn tree_of<M: CellMemory>(&self, mem: &mut M, r: u64) -> Result<Option<u64>> {
        let root = bounded(mem.read(self.root_of_addr(r))?, 2 * self.n)?;
        if mem.read(self.field(root, PARENT))? != root {
            return Ok(None);
        }
        if mem.read(self.field(root, REP))? != r {
            return Ok(None);
        }
        Ok(Some(root))
    }

    fn prepend_child<M: CellMemory>(&self, mem: &mut M, parent: u64, child: u64) -> Result<()> {
        mem.set(self.field(child, PARENT), parent)?;
        let head = mem.read(self.field(parent, FIRST_CHILD))?;
        mem.write(self.field(parent, FIRST_CHILD), child + 1)?;
        mem.set(self.field(child, NEXT_SIBLING), head)?;
        Ok(())
    }

    /// Move every child of `from` under `to`; returns how many moved.
    fn move_children<M: CellMemory>(&self, mem: &mut M, from: u64, to: u64) -> Result<u64> {
        let mut moved = 0;
        let mut link = mem.set(self.field(from, FIRST_CHILD), 0)?;
        while link != 0 {
            let c = bounded(link - 1, 2 * self.n)?;
            link = mem.read(self.field(c, NEXT_SIBLING))?;
            self.prepend_child(mem, to, c)?;
            moved += 1;
        }
        mem.set(self.field(from, CHILD_COUNT), 0)?;
        let count = mem.read(self.field(to, CHILD_COUNT))?;
        mem.write(self.field(to, CHILD_COUNT), count.wrapping_add(moved))?;
        Ok(moved)
    }

    fn add_child<M: CellMemory>(&self, mem: &mut M, parent: u64, child: u64) -> Result<()> {
        self.prepend_child(mem, parent, child)?;
        let count = mem.read(self.field(parent, CHILD_COUNT))?;
        mem.write(self.field(parent, CHILD_COUNT), count.wrapping_add(1))
    }

    fn new_root<M: CellMemory>(
        &self,
        mem: &mut M,
        height: Word,
        rep: u64,
        block: u64,
    ) -> Result<u64> {
        let node = mem.read(self.aux_counter_addr())?;
        if node >= 2 * self.n {
            return Err(Error::InvalidArgs("auxiliary node pool exhausted".into()));
        }
        mem.write(self.aux_counter_addr(), node + 1)?;
        mem.set(self.field(node, PARENT), node)?;
        mem.set(self.field(node, HEIGHT), height)?;
        mem.set(self.field(node, REP), rep)?;
        mem.set(self.field(node, SPINE), block)?;
        mem.set(self.spine_addr(block, height), node)?;
        mem.set(self.root_of_addr(rep), node)?;
        Ok(node)
    }

    fn union_leveled<M: CellMemory>(&self, mem: &mut M, r1: u64, r2: u64, k: u64) -> Result<u64> {
        let root_a = self.tree_of(mem, r1)?.ok_or(Error::NotARoot(r1))?;
        let root_b = self.tree_of(mem, r2)?.ok_or(Error::NotARoot(r2))?;
        let h_a = bounded(mem.read(self.field(root_a, HEIGHT))?, self.spine_len - 1)?;
        let h_b = bounded(mem.read(self.field(root_b, HEIGHT))?, self.spine_len - 1)?;
        // (tall, short); the taller tree's representative survives, `r1` on ties.
        let (rep, tall, h_tall, short, h_short) = if h_a >= h_b {
            (r1, root_a, h_a, root_b, h_b)
        } else {
            (r2, root_b, h_b, root_a, h_a)
        };

        if h_tall == 0 {
            let block = bounded(mem.read(self.field(tall, SPINE))?, self.n)?;
            let root = self.new_root(mem, 1, rep, block)?;
            self.add_child(mem, root, tall)?;
            self.add_child(mem, root, short)?;
            return Ok(rep);
        }

        if h_tall == h_short {
            let c_short = mem.read(self.field(short, CHILD_COUNT))?;
            if c_short < k {
                self.move_children(mem, short, tall)?;
                mem.set(self.field(short, PARENT), tall)?;
                return Ok(rep);
            }
            let c_tall = mem.read(self.field(tall, CHILD_COUNT))?;
            if c_tall < k {
                // Dissolve the surviving representative's root into the other tree.
                self.move_children(mem, tall, short)?;
                mem.set(self.field(tall, PARENT), short)?;
                mem.set(self.field(short, REP), rep)?;
                mem.set(self.root_of_addr(rep), short)?;
                return Ok(rep);
            }
            let block = bounded(mem.read(self.field(tall, SPINE))?, self.n)?;
            let root = self.new_root(mem, h_tall + 1, rep, block)?;
            self.add_child(mem, root, tall)?;
            self.add_child(mem, root, short)?;
            return Ok(rep);
        }

        // A strong short root hangs one level above its height; a weak one
        // hands its children to the spine node at its own height.
        let block = bounded(mem.read(self.field(tall, SPINE))?, self.n)?;
        let c_short = if h_short == 0 {
            k
        } else {
            mem.read(self.field(short, CHILD_COUNT))?
        };
        if c_short >= k {
            let target = bounded(mem.read(self.spine_addr(block, h_short + 1))?, 2 * self.n)?;
            self.add_child(mem, target, short)?;
        } else {
            let target = bounded(mem.read(self.spine_addr(block, h_short))?, 2 * self.n)?;
            self.move_children(mem, short, target)?;
            mem.set(self.field(short, PARENT), target)?;
        }
        Ok(rep)
    }

    /// Unprobed structural check against the arena image, for tests.
    pub fn check_invariants(&self, arena: &ProbeArena) -> std::result::Result<(), String> {
        match self.mode {
            UfMode::Amortized => {
                for v in 0..self.n {
                    let mut x = v;
                    let mut steps = 0;
                    loop {
                        let p = arena.peek(self.parent_addr(x));
                        if p >= self.n {
                            return Err(format!("parent of {x} out of range"));
                        }
                        if p == x {
                            break;
                        }
                        if arena.peek(self.rank_addr(p)) <= arena.peek(self.rank_addr(x)) {
                            return Err(format!("rank({p}) <= rank({x})"));
                        }
                        x = p;
                        steps += 1;
                        if steps > self.n {
                            return Err(format!("cycle through {v}"));
                        }
                    }
                }
                Ok(())
            }
            UfMode::WorstCase { k } => {
                let pool = arena.peek(self.aux_counter_addr());
                let mut depth_of_root: std::collections::HashMap<u64, (u64, u64)> =
                    Default::default();
                for e in 0..self.n {
                    let mut x = e;
                    let mut depth = 0;
                    loop {
                        let p = arena.peek(self.field(x, PARENT));
                        if p == x {
                            break;
                        }
                        if p >= pool {
                            return Err(format!("parent {p} outside node pool"));
                        }
                        x = p;
                        depth += 1;
                        if depth > 2 * self.n {
                            return Err(format!("cycle through {e}"));
                        }
                    }
                    let entry = depth_of_root.entry(x).or_insert((depth, 0));
                    if entry.0 != depth {
                        return Err(format!(
                            "element {e} at depth {depth}, expected {}",
                            entry.0
                        ));
                    }
                    entry.1 += 1;
                }
                for (&root, &(height, size)) in &depth_of_root {
                    if arena.peek(self.field(root, HEIGHT)) != height {
                        return Err(format!("stored height of root {root} is stale"));
                    }
                    if height >= 1 && (size as f64) < 2.0 * (k as f64).powi(height as i32 - 1) {
                        return Err(format!("tree of height {height} has only {size} elements"));
                    }
                    let rep = arena.peek(self.field(root, REP));
                    if arena.peek(self.root_of_addr(rep)) != root {
                        return Err(format!("root_of({rep}) does not point at {root}"));
                    }
                }
                // Child counts of live internal nodes.
                for node in self.n..pool {
                    let p = arena.peek(self.field(node, PARENT));
                    let count = arena.peek(self.field(node, CHILD_COUNT));
                    let mut listed = 0;
                    let mut link = arena.peek(self.field(node, FIRST_CHILD));
                    while link != 0 {
                        listed += 1;
                        link = arena.peek(self.field(link - 1, NEXT_SIBLING));
                    }
                    if listed != count {
                        return Err(format!(
                            "node {node} lists {listed} children, count {count}"
                        ));
                    }
                    if count > 0 && p != node && count < k {
                        return Err(format!("internal node {node} has {count} < k children"));
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn modes() -> Vec<UfMode> {
        vec![
            UfMode::Amortized,
            UfMode::WorstCase { k: 2 },
            UfMode::WorstCase { k: 3 },
            UfMode::WorstCase { k: 8 },
        ]
    }

    #[test]
    fn singletons_are_their_own_roots() {
        for mode in modes() {
            let mut a = ProbeArena::new();
            let uf = UfForest::new(&mut a, 3, mode).unwrap();
            for i in 0..3 {
                assert_eq!(uf.find(&mut a, i).unwrap(), i);
            }
            assert!(matches!(uf.find(&mut a, 3), Err(Error::OutOfRange { .. })));
        }
    }

    #[test]
    fn single_element_cannot_union() {
        let mut a = ProbeArena::new();
        let uf = UfForest::new(&mut a, 1, UfMode::Amortized).unwrap();
        assert_eq!(uf.union(&mut a, 0, 0), Err(Error::SameSet(0, 0)));
        assert!(UfForest::new(&mut a, 0, UfMode::Amortized).is_err());
    }

    #[test]
    fn construction_probes_carry_active_tag() {
        use crate::arena::IntervalTag;
        let mut a = ProbeArena::new();
        a.set_interval(IntervalTag::Custom(1)).unwrap();
        UfForest::new(&mut a, 4, UfMode::WorstCase { k: 2 }).unwrap();
        a.end_interval().unwrap();
        assert!(!a.log().is_empty());
        assert!(a
            .log()
            .events()
            .iter()
            .all(|e| e.tag == IntervalTag::Custom(1)));
    }

    #[test]
    fn union_then_finds_agree() {
        for mode in modes() {
            let mut a = ProbeArena::new();
            let uf = UfForest::new(&mut a, 2, mode).unwrap();
            let root = uf.union(&mut a, 0, 1).unwrap();
            assert!(root == 0 || root == 1);
            assert_eq!(uf.find(&mut a, 0).unwrap(), uf.find(&mut a, 1).unwrap());
            assert_eq!(uf.find(&mut a, 0).unwrap(), root);
        }
    }

    #[test]
    fn union_of_non_root_is_rejected() {
        for mode in modes() {
            let mut a = ProbeArena::new();
            let uf = UfForest::new(&mut a, 3, mode).unwrap();
            let root = uf.union(&mut a, 0, 1).unwrap();
            let other = 1 - root;
            assert_eq!(uf.union(&mut a, other, 2), Err(Error::NotARoot(other)));
            assert!(!uf.is_root(&mut a, other).unwrap());
            assert!(uf.is_root(&mut a, root).unwrap());
        }
    }

    #[test]
    fn equal_ranks_attach_second_under_first() {
        let mut a = ProbeArena::new();
        let uf = UfForest::new(&mut a, 4, UfMode::Amortized).unwrap();
        assert_eq!(uf.union(&mut a, 2, 3).unwrap(), 2);
        assert_eq!(uf.union(&mut a, 0, 1).unwrap(), 0);
        assert_eq!(uf.union(&mut a, 2, 0).unwrap(), 2);
    }

    #[test]
    fn random_sequences_match_label_oracle() {
        for mode in modes() {
            for seed in 0..5 {
                let n = 200;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut a = ProbeArena::counting_only();
                let uf = UfForest::new(&mut a, n, mode).unwrap();
                let mut label: Vec<u64> = (0..n).collect();
                for _ in 0..2000 {
                    let x = rng.gen_range(0..n);
                    let y = rng.gen_range(0..n);
                    if rng.gen_bool(0.3) {
                        let rx = uf.find(&mut a, x).unwrap();
                        let ry = uf.find(&mut a, y).unwrap();
                        if label[x as usize] != label[y as usize] {
                            assert_ne!(rx, ry);
                            uf.union(&mut a, rx, ry).unwrap();
                            let (from, to) = (label[y as usize], label[x as usize]);
                            for l in label.iter_mut() {
                                if *l == from {
                                    *l = to;
                                }
                            }
                        } else {
                            assert_eq!(rx, ry);
                        }
                    } else {
                        let same = uf.find(&mut a, x).unwrap() == uf.find(&mut a, y).unwrap();
                        assert_eq!(same, label[x as usize] == label[y as usize]);
                    }
                }
                uf.check_invariants(&a).unwrap();
            }
        }
    }

    #[test]
    fn leveled_trees_stay_shallow_under_pairing_rounds() {
        for k in [2u64, 4, 16] {
            let n = 1 << 10;
            let mut a = ProbeArena::counting_only();
            let uf = UfForest::new(&mut a, n, UfMode::WorstCase { k }).unwrap();
            let mut roots: Vec<u64> = (0..n).collect();
            while roots.len() > 1 {
                let mut next = Vec::new();
                for pair in roots.chunks(2) {
                    if pair.len() == 2 {
                        next.push(uf.union(&mut a, pair[0], pair[1]).unwrap());
                    } else {
                        next.push(pair[0]);
                    }
                }
                roots = next;
                uf.check_invariants(&a).unwrap();
            }
            let bound = 1.0 + ((n / 2) as f64).log(k as f64);
            for v in 0..n {
                let before = a.probe_count();
                uf.find(&mut a, v).unwrap();
                let depth = a.probe_count() - before - 2;
                assert!(
                    depth as f64 <= bound + 1e-9,
                    "k={k} depth {depth} > {bound}"
                );
            }
        }
    }
}
