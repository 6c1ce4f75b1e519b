//! Dynamic hard instance: an `M × columns` grid whose consecutive columns are
//! joined by permutations, updated in bit-reversal order and queried with
//! the coloring the first column induces.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::schedule::schedule;
use crate::arena::IntervalTag;
use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::trace::{Op, OpTrace, TraceMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynParams {
    /// `M`, rows.
    pub trees: u64,
    /// `C`, divides `trees`.
    pub colors: u64,
    /// `n / M`; `columns - 1` is a power of two.
    pub columns: u64,
}

impl DynParams {
    pub fn new(trees: u64, colors: u64, columns: u64) -> Result<Self> {
        if trees == 0 || colors == 0 || !trees.is_multiple_of(colors) {
            return Err(Error::InvalidParams(format!(
                "colors {colors} must divide rows {trees}"
            )));
        }
        if columns < 2 || !(columns - 1).is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "n/M - 1 = {} is not a power of two",
                columns.saturating_sub(1)
            )));
        }
        if trees.saturating_mul(columns) > super::incremental::MAX_VERTICES {
            return Err(Error::InvalidParams("grid too large".into()));
        }
        Ok(Self {
            trees,
            colors,
            columns,
        })
    }

    /// `M = ⌈n^(1-ε)⌉` and `C` the largest divisor of `M` not above `⌈n^ε⌉`,
    /// unless overridden; `M` must divide `n`.
    pub fn from_n(n: u64, eps: f64, trees: Option<u64>, colors: Option<u64>) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParams(format!("eps = {eps} not in (0, 1)")));
        }
        let m = trees.unwrap_or(((n as f64).powf(1.0 - eps)).ceil() as u64);
        if m == 0 || !n.is_multiple_of(m) {
            return Err(Error::InvalidParams(format!(
                "M = {m} does not divide n = {n}"
            )));
        }
        let c = colors.unwrap_or_else(|| {
            let target = ((n as f64).powf(eps)).ceil() as u64;
            (1..=target.min(m)).rev().find(|c| m.is_multiple_of(*c)).unwrap_or(1)
        });
        Self::new(m, c, n / m)
    }

    pub fn n(&self) -> u64 {
        self.trees * self.columns
    }

    pub fn steps(&self) -> u64 {
        self.columns - 1
    }

    /// Grid vertex of `row` in 0-based `column`.
    pub fn vertex(&self, row: u64, column: u64) -> u64 {
        column * self.trees + row
    }

    pub fn color_vertex(&self, c: u32) -> u64 {
        self.n() + c as u64 - 1
    }

    pub fn nodes(&self) -> u64 {
        self.n() + self.colors
    }

    /// Color of `row` in the first column.
    pub fn first_color(&self, row: u64) -> u32 {
        (row / (self.trees / self.colors)) as u32 + 1
    }

    pub fn id(&self) -> String {
        format!(
            "dyn:M={},C={},columns={}",
            self.trees, self.colors, self.columns
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynOptions {
    /// Recolor one row of this step's query to a wrong color.
    pub corrupt_step: Option<u64>,
}

/// What a step did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTruth {
    pub step: u64,
    /// Permutation position `j = σ(step) + 1`, joining 0-based columns
    /// `j - 1` and `j`.
    pub position: u64,
    /// New `π_j`: row `r` of column `j - 1` joins row `perm[r]` of column `j`.
    pub perm: Vec<u32>,
    /// Queried coloring of column `j - 1`, by row.
    pub coloring: Vec<u32>,
    pub corrupted: bool,
}

#[derive(Debug, Clone)]
pub struct DynInstance {
    pub params: DynParams,
    pub trace: OpTrace,
    pub steps: Vec<StepTruth>,
}

pub fn gen_dynamic(p: &DynParams, seed: u64) -> Result<DynInstance> {
    gen_dynamic_with(p, seed, DynOptions::default())
}

pub fn gen_dynamic_with(p: &DynParams, seed: u64, opts: DynOptions) -> Result<DynInstance> {
    let p = DynParams::new(p.trees, p.colors, p.columns)?;
    if opts.corrupt_step.is_some() && p.colors < 2 {
        return Err(Error::InvalidParams(
            "corruption needs at least two colors".into(),
        ));
    }
    let seeds = SeedStream::new(seed);
    let m = p.trees as usize;
    let mut trace = OpTrace::new(TraceMeta {
        nodes: p.nodes(),
        seed,
        params: p.id(),
    });

    // perms[j] for j in 1..columns; identity to start.
    let identity: Vec<u32> = (0..m as u32).collect();
    let mut perms: Vec<Vec<u32>> = vec![identity.clone(); p.columns as usize];

    trace.push(Op::BeginInterval(IntervalTag::Prefix));
    for c in 0..p.columns - 1 {
        for r in 0..p.trees {
            trace.push(Op::InsertEdge(p.vertex(r, c), p.vertex(r, c + 1)));
        }
    }
    for r in 0..p.trees {
        trace.push(Op::InsertEdge(
            p.color_vertex(p.first_color(r)),
            p.vertex(r, 0),
        ));
    }
    trace.push(Op::EndInterval);

    let mut steps = Vec::new();
    for (i, &j) in schedule(p.steps())?.iter().enumerate() {
        let i = i as u64;
        let mut rng = seeds.derive_index("step", i).rng();
        trace.push(Op::BeginInterval(IntervalTag::Step(i as u32)));

        let mut fresh = identity.clone();
        fresh.shuffle(&mut rng);
        let (left, right) = (j - 1, j);
        for r in 0..p.trees {
            let old = perms[j as usize][r as usize] as u64;
            trace.push(Op::DeleteEdge(p.vertex(r, left), p.vertex(old, right)));
        }
        for r in 0..p.trees {
            trace.push(Op::InsertEdge(
                p.vertex(r, left),
                p.vertex(fresh[r as usize] as u64, right),
            ));
        }
        perms[j as usize] = fresh.clone();

        // Coloring of column j-1: carry first-column colors through π_1..π_{j-1}.
        let mut coloring = vec![0u32; m];
        for r in 0..p.trees {
            let mut row = r;
            for perm in &perms[1..j as usize] {
                row = perm[row as usize] as u64;
            }
            coloring[row as usize] = p.first_color(r);
        }
        let corrupted = opts.corrupt_step == Some(i);
        let mut proposed = coloring.clone();
        if corrupted {
            let row = rng.gen_range(0..m);
            let shift = rng.gen_range(1..p.colors as u32);
            proposed[row] = (proposed[row] - 1 + shift) % p.colors as u32 + 1;
        }

        let mut inserted = Vec::with_capacity(m + p.colors as usize);
        for r in 0..p.trees {
            let e = (p.vertex(r, left), p.color_vertex(proposed[r as usize]));
            trace.push(Op::InsertEdge(e.0, e.1));
            inserted.push(e);
        }
        for c in 2..=p.colors as u32 {
            trace.push(Op::ConnQuery {
                u: p.color_vertex(c),
                v: p.color_vertex(c - 1),
                expected: false,
            });
            let e = (p.color_vertex(c), p.color_vertex(c - 1));
            trace.push(Op::InsertEdge(e.0, e.1));
            inserted.push(e);
        }
        for (a, b) in inserted {
            trace.push(Op::DeleteEdge(a, b));
        }
        trace.push(Op::EndInterval);

        steps.push(StepTruth {
            step: i,
            position: j,
            perm: fresh,
            coloring: proposed,
            corrupted,
        });
    }

    Ok(DynInstance {
        params: p,
        trace,
        steps,
    })
}
