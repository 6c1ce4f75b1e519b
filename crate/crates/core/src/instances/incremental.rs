//! Incremental hard instance: a forest of perfect `B`-ary trees built bottom-up
//! in epochs, roots attached to colored vertices, and metaqueries that check a
//! proposed coloring of `M` leaves.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::naive::NaiveConnectivity;
use crate::arena::IntervalTag;
use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::trace::{Op, OpTrace, TraceMeta};

/// Upper bound on generated vertices, to keep instances in memory.
pub const MAX_VERTICES: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IncOverrides {
    pub branching: Option<u64>,
    pub colors: Option<u64>,
    pub trees: Option<u64>,
    pub depth: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncParams {
    pub n: u64,
    pub eps: f64,
    /// `B`, the tree degree.
    pub branching: u64,
    /// `C`, the number of colors; divides `trees`.
    pub colors: u64,
    /// `M`, the number of trees.
    pub trees: u64,
    /// `d`, the number of epochs.
    pub depth: u32,
}

/// Largest divisor of `m` that is at most `target`.
fn divisor_at_most(m: u64, target: u64) -> u64 {
    (1..=target.min(m)).rev().find(|c| m.is_multiple_of(*c)).unwrap_or(1)
}

impl IncParams {
    /// Defaults `B = ⌈lg² n⌉`, `M = ⌈n^(1-ε)⌉`, `C` the largest divisor of `M`
    /// not above `⌈n^ε⌉`, and `d` the least depth with `M·B^d ≥ n`.
    pub fn derive(n: u64, eps: f64, o: IncOverrides) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n = {n} is too small")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParams(format!("eps = {eps} not in (0, 1)")));
        }
        let lg = (n as f64).log2();
        let branching = o.branching.unwrap_or((lg * lg).ceil() as u64);
        if branching < 2 {
            return Err(Error::InvalidParams("branching must be at least 2".into()));
        }
        let trees = o
            .trees
            .unwrap_or(((n as f64).powf(1.0 - eps)).ceil() as u64);
        if trees == 0 {
            return Err(Error::InvalidParams("need at least one tree".into()));
        }
        let colors = match o.colors {
            Some(c) if c == 0 || !trees.is_multiple_of(c) => {
                return Err(Error::InvalidParams(format!(
                    "colors {c} must divide trees {trees}"
                )))
            }
            Some(c) => c,
            None => divisor_at_most(trees, ((n as f64).powf(eps)).ceil() as u64),
        };
        let depth = match o.depth {
            Some(d) => d,
            None => {
                let mut d = 1u32;
                let mut size = trees.saturating_mul(branching);
                while size < n {
                    size = size.saturating_mul(branching);
                    d += 1;
                }
                d
            }
        };
        if depth == 0 {
            return Err(Error::InvalidParams("depth must be at least 1".into()));
        }
        let p = Self {
            n,
            eps,
            branching,
            colors,
            trees,
            depth,
        };
        let leaves = p.level_size(depth);
        if leaves.saturating_mul(2) < n {
            return Err(Error::InvalidParams(format!(
                "M·B^d = {leaves} is below n/2 = {}",
                n / 2
            )));
        }
        if p.vertex_count() > MAX_VERTICES {
            return Err(Error::InvalidParams(format!(
                "instance needs {} vertices, limit {MAX_VERTICES}",
                p.vertex_count()
            )));
        }
        Ok(p)
    }

    /// `M·B^i`, saturating.
    pub fn level_size(&self, i: u32) -> u64 {
        (0..i).fold(self.trees, |s, _| s.saturating_mul(self.branching))
    }

    /// Forest vertices plus colored vertices.
    pub fn vertex_count(&self) -> u64 {
        (0..=self.depth)
            .fold(0u64, |s, i| s.saturating_add(self.level_size(i)))
            .saturating_add(self.colors)
    }

    pub fn id(&self) -> String {
        format!(
            "inc:n={},eps={},B={},C={},M={},d={}",
            self.n, self.eps, self.branching, self.colors, self.trees, self.depth
        )
    }
}

/// The generated forest. Level 0 holds the roots, level `d` the leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forest {
    params_depth: u32,
    trees: u64,
    colors: u64,
    /// `parents[i - 1][x]`: index on level `i - 1` of the parent of vertex `x`
    /// on level `i`.
    parents: Vec<Vec<u32>>,
    offsets: Vec<u64>,
    color_base: u64,
}

impl Forest {
    /// Each `f_i` is uniform over balanced maps: shuffle `B` copies of every
    /// level-`(i-1)` index.
    pub fn generate<R: Rng>(p: &IncParams, rng: &mut R) -> Self {
        let mut parents = Vec::with_capacity(p.depth as usize);
        for i in 1..=p.depth {
            let above = p.level_size(i - 1);
            let mut slots: Vec<u32> = (0..above)
                .flat_map(|x| std::iter::repeat_n(x as u32, p.branching as usize))
                .collect();
            slots.shuffle(rng);
            parents.push(slots);
        }
        let mut offsets = Vec::with_capacity(p.depth as usize + 1);
        let mut next = 0;
        for i in 0..=p.depth {
            offsets.push(next);
            next += p.level_size(i);
        }
        Self {
            params_depth: p.depth,
            trees: p.trees,
            colors: p.colors,
            parents,
            offsets,
            color_base: next,
        }
    }

    pub fn depth(&self) -> u32 {
        self.params_depth
    }

    pub fn level_size(&self, i: u32) -> u64 {
        if i == 0 {
            self.trees
        } else {
            self.parents[i as usize - 1].len() as u64
        }
    }

    pub fn leaves(&self) -> u64 {
        self.level_size(self.params_depth)
    }

    pub fn colors(&self) -> u64 {
        self.colors
    }

    pub fn trees(&self) -> u64 {
        self.trees
    }

    pub fn nodes(&self) -> u64 {
        self.color_base + self.colors
    }

    pub fn vertex(&self, level: u32, index: u64) -> u64 {
        self.offsets[level as usize] + index
    }

    pub fn leaf_vertex(&self, leaf: u64) -> u64 {
        self.vertex(self.params_depth, leaf)
    }

    /// Vertex id of color `c ∈ [1, C]`.
    pub fn color_vertex(&self, c: u32) -> u64 {
        self.color_base + c as u64 - 1
    }

    pub fn parent(&self, level: u32, index: u64) -> u64 {
        self.parents[level as usize - 1][index as usize] as u64
    }

    /// Index on `level` of the ancestor of `leaf`.
    pub fn ancestor(&self, leaf: u64, level: u32) -> u64 {
        let mut x = leaf;
        for i in (level + 1..=self.params_depth).rev() {
            x = self.parent(i, x);
        }
        x
    }

    /// Colored vertex `c` is attached to roots `(c-1)·M/C .. c·M/C`.
    pub fn root_color(&self, root: u64) -> u32 {
        (root / (self.trees / self.colors)) as u32 + 1
    }

    pub fn leaf_color(&self, leaf: u64) -> u32 {
        self.root_color(self.ancestor(leaf, 0))
    }

    /// Every vertex above level `d` has exactly `B` children.
    pub fn is_balanced(&self, branching: u64) -> bool {
        (1..=self.params_depth).all(|i| {
            let mut count = vec![0u64; self.level_size(i - 1) as usize];
            for &p in &self.parents[i as usize - 1] {
                count[p as usize] += 1;
            }
            count.iter().all(|&c| c == branching)
        })
    }

    /// A uniform `M`-subset of leaves, sorted.
    pub fn random_query<R: Rng>(&self, rng: &mut R) -> Vec<u64> {
        let mut q: Vec<u64> =
            rand::seq::index::sample(rng, self.leaves() as usize, self.trees as usize)
                .into_iter()
                .map(|x| x as u64)
                .collect();
        q.sort_unstable();
        q
    }

    pub fn true_coloring(&self, q: &[u64]) -> Vec<u32> {
        q.iter().map(|&x| self.leaf_color(x)).collect()
    }
}

/// Options beyond the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncOptions {
    /// Number of metaqueries, each isolated by snapshot/restore.
    pub metaqueries: usize,
    /// Leaves per metaquery whose proposed color is changed to a wrong one.
    pub inconsistencies: usize,
}

impl Default for IncOptions {
    fn default() -> Self {
        Self {
            metaqueries: 1,
            inconsistencies: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IncInstance {
    pub params: IncParams,
    pub forest: Forest,
    pub trace: OpTrace,
    /// `(Q, χ)` of each metaquery.
    pub queries: Vec<(Vec<u64>, Vec<u32>)>,
}

impl IncInstance {
    /// Root color of every leaf.
    pub fn ground_truth(&self) -> Vec<u32> {
        (0..self.forest.leaves())
            .map(|x| self.forest.leaf_color(x))
            .collect()
    }
}

pub fn gen_incremental(p: &IncParams, seed: u64) -> Result<IncInstance> {
    gen_incremental_with(p, seed, IncOptions::default())
}

pub fn gen_incremental_with(p: &IncParams, seed: u64, opts: IncOptions) -> Result<IncInstance> {
    if opts.inconsistencies > 0 && p.colors < 2 {
        return Err(Error::InvalidParams(
            "inconsistencies need at least two colors".into(),
        ));
    }
    let seeds = SeedStream::new(seed);
    let forest = Forest::generate(p, &mut seeds.derive("forest").rng());
    let mut trace = OpTrace::new(TraceMeta {
        nodes: forest.nodes(),
        seed,
        params: p.id(),
    });

    trace.push(Op::BeginInterval(IntervalTag::Prefix));
    for root in 0..p.trees {
        let c = forest.root_color(root);
        trace.push(Op::Link(forest.color_vertex(c), forest.vertex(0, root)));
    }
    trace.push(Op::EndInterval);

    for i in (1..=p.depth).rev() {
        trace.push(Op::BeginInterval(IntervalTag::Epoch(i)));
        for x in 0..forest.level_size(i) {
            trace.push(Op::Link(
                forest.vertex(i, x),
                forest.vertex(i - 1, forest.parent(i, x)),
            ));
        }
        trace.push(Op::EndInterval);
    }

    let mut queries = Vec::with_capacity(opts.metaqueries);
    for j in 0..opts.metaqueries {
        let mut rng = seeds.derive_index("metaquery", j as u64).rng();
        let q = forest.random_query(&mut rng);
        let mut chi = forest.true_coloring(&q);
        for pos in rand::seq::index::sample(&mut rng, q.len(), opts.inconsistencies.min(q.len())) {
            let shift = rng.gen_range(1..p.colors as u32);
            chi[pos] = (chi[pos] - 1 + shift) % p.colors as u32 + 1;
        }
        trace.push(Op::BeginInterval(IntervalTag::Metaquery(j as u32)));
        trace.extend(metaquery_trace(&forest, &q, &chi)?.ops);
        trace.push(Op::EndInterval);
        queries.push((q, chi));
    }

    Ok(IncInstance {
        params: *p,
        forest,
        trace,
        queries,
    })
}

/// Snapshot, link each query leaf to its proposed colored vertex, then for
/// `i = 2..=C` query color `i` against `i - 1` and chain them; restore.
pub fn metaquery_trace(forest: &Forest, q: &[u64], chi: &[u32]) -> Result<OpTrace> {
    if q.len() as u64 != forest.trees() {
        return Err(Error::BadQuery(format!(
            "|Q| = {}, expected M = {}",
            q.len(),
            forest.trees()
        )));
    }
    if chi.len() != q.len() {
        return Err(Error::BadQuery(
            "coloring and query differ in length".into(),
        ));
    }
    if let Some(&x) = q.iter().find(|&&x| x >= forest.leaves()) {
        return Err(Error::BadQuery(format!("leaf {x} out of range")));
    }
    if let Some(&c) = chi.iter().find(|&&c| c == 0 || c as u64 > forest.colors()) {
        return Err(Error::BadQuery(format!(
            "color {c} outside [1, {}]",
            forest.colors()
        )));
    }
    let mut t = OpTrace::new(TraceMeta {
        nodes: forest.nodes(),
        ..Default::default()
    });
    t.push(Op::Snapshot);
    for (&x, &c) in q.iter().zip(chi) {
        t.push(Op::Link(forest.leaf_vertex(x), forest.color_vertex(c)));
    }
    for c in 2..=forest.colors() as u32 {
        t.push(Op::ConnQuery {
            u: forest.color_vertex(c),
            v: forest.color_vertex(c - 1),
            expected: false,
        });
        t.push(Op::Link(forest.color_vertex(c), forest.color_vertex(c - 1)));
    }
    t.push(Op::Restore);
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MetaqueryVerdict {
    pub consistent: bool,
    /// Color index of the first query that answers "connected".
    pub first_failure: Option<u32>,
    /// `min max{i, j}` over inconsistent leaves (proposed `i`, true `j`).
    pub min_max: Option<u32>,
}

/// With several inconsistencies the first failing query can come before
/// `min max{i, j}`: a path through the colors above may join two lower
/// colors. `first_failure` is the exact answer; `min_max` the per-leaf bound.
pub fn metaquery_oracle(q: &[u64], chi: &[u32], forest: &Forest) -> MetaqueryVerdict {
    let c = forest.colors() as usize;
    let mut comp: Vec<usize> = (0..=c).collect();
    fn root(comp: &mut [usize], mut x: usize) -> usize {
        while comp[x] != x {
            comp[x] = comp[comp[x]];
            x = comp[x];
        }
        x
    }
    let mut min_max: Option<u32> = None;
    for (&x, &proposed) in q.iter().zip(chi) {
        let truth = forest.leaf_color(x);
        if truth != proposed {
            let m = truth.max(proposed);
            min_max = Some(min_max.map_or(m, |v| v.min(m)));
            let (a, b) = (
                root(&mut comp, truth as usize),
                root(&mut comp, proposed as usize),
            );
            // keep the smaller color as the component label
            comp[a.max(b)] = a.min(b);
        }
    }
    let first_failure = (2..=c).find(|&k| root(&mut comp, k) != k).map(|k| k as u32);
    MetaqueryVerdict {
        consistent: min_max.is_none(),
        first_failure,
        min_max,
    }
}

/// Verdict of a metaquery from the answers of its connectivity queries, in
/// order: true iff all are negative, and the color index of the first
/// positive one.
pub fn verdict_from_answers(answers: &[bool]) -> (bool, Option<u32>) {
    match answers.iter().position(|&a| a) {
        None => (true, None),
        Some(k) => (false, Some(k as u32 + 2)),
    }
}

/// Replay the instance prefix and epochs, then metaquery `(q, chi)`, on the
/// naive oracle.
pub fn naive_metaquery(
    forest: &Forest,
    base: &NaiveConnectivity,
    q: &[u64],
    chi: &[u32],
) -> Result<(bool, Option<u32>)> {
    let t = metaquery_trace(forest, q, chi)?;
    let mut g = base.clone();
    let mut answers = Vec::new();
    for op in &t.ops {
        if let Some(crate::replay::Answer::Connected(c)) = g.apply(op)? {
            answers.push(c);
        }
    }
    Ok(verdict_from_answers(&answers))
}

/// Number of distinct level-`level` ancestors of the leaves in `qstar`.
pub fn distinct_ancestors(qstar: &[u64], level: u32, forest: &Forest) -> usize {
    let mut a: Vec<u64> = qstar.iter().map(|&x| forest.ancestor(x, level)).collect();
    a.sort_unstable();
    a.dedup();
    a.len()
}
