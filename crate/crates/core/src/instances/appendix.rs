//! Workload for the inverse-Ackermann lower bound: alternating union rounds,
//! which pair all current roots at random, and find rounds, where each find
//! from a leaf is replaced by a link from the leaf to its root and each root
//! is then checked with a find.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arena::IntervalTag;
use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::trace::{Op, OpTrace, TraceMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppendixParams {
    /// Initial roots; a power of two.
    pub n: u64,
    /// Round blocks, alternating union and find, starting with union.
    pub rounds: u32,
    /// Leaf-to-root links per find round; `None` means one per current root.
    pub finds_per_round: Option<u64>,
    /// Make one link of every find round go to a wrong root.
    pub corrupt: bool,
}

impl AppendixParams {
    pub fn new(n: u64, rounds: u32) -> Self {
        Self {
            n,
            rounds,
            finds_per_round: None,
            corrupt: false,
        }
    }

    pub fn id(&self) -> String {
        format!(
            "appendix:n={},rounds={},finds={},corrupt={}",
            self.n,
            self.rounds,
            self.finds_per_round
                .map_or("roots".to_string(), |f| f.to_string()),
            self.corrupt
        )
    }
}

/// A find round as generated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindRound {
    pub round: u32,
    /// Roots checked, each expected to find itself.
    pub roots: Vec<u64>,
    /// `(leaf, linked-to root, intended root)` of the corrupted link.
    pub corrupted: Option<(u64, u64, u64)>,
}

#[derive(Debug, Clone)]
pub struct AppendixInstance {
    pub params: AppendixParams,
    pub trace: OpTrace,
    pub find_rounds: Vec<FindRound>,
}

fn root_of(label: &mut [u64], mut x: u64) -> u64 {
    while label[x as usize] != x {
        let p = label[x as usize];
        label[x as usize] = label[p as usize];
        x = p;
    }
    x
}

/// Merge two components, keeping the smaller root.
fn merge(label: &mut [u64], a: u64, b: u64) -> u64 {
    let (ra, rb) = (root_of(label, a), root_of(label, b));
    let (keep, drop) = (ra.min(rb), ra.max(rb));
    label[drop as usize] = keep;
    keep
}

pub fn appendix_rounds(p: &AppendixParams, seed: u64) -> Result<AppendixInstance> {
    if p.n < 2 || !p.n.is_power_of_two() {
        return Err(Error::InvalidParams(format!(
            "n = {} is not a power of two >= 2",
            p.n
        )));
    }
    let lg = p.n.trailing_zeros();
    if p.rounds > lg {
        return Err(Error::InvalidParams(format!(
            "rounds {} exceeds lg n = {lg}",
            p.rounds
        )));
    }
    let seeds = SeedStream::new(seed);
    let mut trace = OpTrace::new(TraceMeta {
        nodes: p.n,
        seed,
        params: p.id(),
    });
    let mut label: Vec<u64> = (0..p.n).collect();
    let mut roots: Vec<u64> = (0..p.n).collect();
    let mut find_rounds = Vec::new();

    for r in 0..p.rounds {
        let mut rng = seeds.derive_index("round", r as u64).rng();
        trace.push(Op::BeginInterval(IntervalTag::Step(r)));
        if r % 2 == 0 {
            roots.shuffle(&mut rng);
            let mut next = Vec::with_capacity(roots.len() / 2 + 1);
            for pair in roots.chunks(2) {
                match *pair {
                    [a, b] => {
                        trace.push(Op::Link(a, b));
                        next.push(merge(&mut label, a, b));
                    }
                    [a] => next.push(a),
                    _ => unreachable!(),
                }
            }
            roots = next;
            roots.sort_unstable();
        } else {
            let is_root: std::collections::HashSet<u64> = roots.iter().copied().collect();
            let leaves: Vec<u64> = (0..p.n).filter(|v| !is_root.contains(v)).collect();
            let links = p.finds_per_round.unwrap_or(roots.len() as u64);
            let intended: Vec<u64> = (0..p.n).map(|v| root_of(&mut label, v)).collect();
            let bad_index = if p.corrupt && roots.len() >= 2 && links > 0 && !leaves.is_empty() {
                Some(rng.gen_range(0..links))
            } else {
                None
            };
            let mut corrupted = None;
            for f in 0..links {
                if leaves.is_empty() {
                    break;
                }
                let v = *leaves.choose(&mut rng).expect("non-empty");
                let target = intended[v as usize];
                if Some(f) == bad_index {
                    let wrong = loop {
                        let w = *roots.choose(&mut rng).expect("two roots");
                        if w != target {
                            break w;
                        }
                    };
                    trace.push(Op::Link(v, wrong));
                    merge(&mut label, v, wrong);
                    corrupted = Some((v, wrong, target));
                } else {
                    trace.push(Op::Link(v, target));
                }
            }
            for &root in &roots {
                trace.push(Op::Find {
                    v: root,
                    expect: Some(root),
                });
            }
            find_rounds.push(FindRound {
                round: r,
                roots: roots.clone(),
                corrupted,
            });
            // Later rounds work with the components as they actually are.
            let mut actual: Vec<u64> = roots.iter().map(|&x| root_of(&mut label, x)).collect();
            actual.sort_unstable();
            actual.dedup();
            roots = actual;
        }
        trace.push(Op::EndInterval);
    }

    Ok(AppendixInstance {
        params: *p,
        trace,
        find_rounds,
    })
}
