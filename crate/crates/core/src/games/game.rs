//! Two adjacent groups of intervals cut from a trace, as a communication game:
//! Alice holds the operations of `I_A`, Bob those of `I_B`, and both know the
//! memory state at the start of `I_A`.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::arena::{Addr, CellMemory, IntervalTag, LogMode, ProbeArena, Word};
use crate::error::{Error, Result};
use crate::instances::naive::naive_replay;
use crate::replay::{Checker, Replayer, Structure, StructureKind};
use crate::trace::{Op, OpTrace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    pub alice: Vec<IntervalTag>,
    pub bob: Vec<IntervalTag>,
}

impl Cut {
    pub fn new(
        alice: impl IntoIterator<Item = IntervalTag>,
        bob: impl IntoIterator<Item = IntervalTag>,
    ) -> Self {
        Self {
            alice: alice.into_iter().collect(),
            bob: bob.into_iter().collect(),
        }
    }
}

/// What Alice knows after simulating `I_A`.
#[derive(Debug, Clone)]
pub struct AliceView {
    pub written: BTreeSet<Addr>,
    pub final_image: Vec<Word>,
}

impl AliceView {
    pub fn value(&self, addr: Addr) -> Word {
        self.final_image.get(addr as usize).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct GameInstance {
    pub kind: StructureKind,
    pub cut: Cut,
    pub handle: Structure,
    /// Memory at the start of `I_A`.
    pub start_image: Vec<Word>,
    pub alice_ops: Vec<Op>,
    pub bob_ops: Vec<Op>,
    /// AND of Bob's expectations, according to the naive oracle.
    pub ground_truth: bool,
    pub alice: AliceView,
    /// `R_B` in a direct run of `I_A` then `I_B`.
    pub bob_read: BTreeSet<Addr>,
    /// Bob's expectation results in the direct run.
    pub reference_checks: Vec<bool>,
    pub bob_probes: u64,
    /// Largest address probed in the direct run.
    pub max_addr: Addr,
}

impl GameInstance {
    pub fn overlap(&self) -> usize {
        self.alice.written.intersection(&self.bob_read).count()
    }

    pub fn union_size(&self) -> usize {
        self.alice.written.union(&self.bob_read).count()
    }
}

/// A trace prepared for cutting: the naive oracle's expectation results are
/// computed once and shared by every cut.
pub struct CutSource<'a> {
    trace: &'a OpTrace,
    kind: StructureKind,
    truth: HashMap<usize, bool>,
}

fn locate(
    spans: &[(IntervalTag, usize, usize)],
    tags: &[IntervalTag],
    who: &str,
) -> Result<Option<(usize, usize)>> {
    if tags.is_empty() {
        return Ok(None);
    }
    let mut idx = Vec::with_capacity(tags.len());
    for t in tags {
        let hits: Vec<usize> = (0..spans.len()).filter(|&i| spans[i].0 == *t).collect();
        match hits.as_slice() {
            [i] => idx.push(*i),
            [] => {
                return Err(Error::BadCut(format!(
                    "{who}'s interval {t} is not in the trace"
                )))
            }
            _ => return Err(Error::BadCut(format!("interval {t} occurs more than once"))),
        }
    }
    idx.sort_unstable();
    if idx.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::BadCut(format!(
            "{who}'s intervals are not contiguous"
        )));
    }
    Ok(Some((idx[0], idx[idx.len() - 1])))
}

impl<'a> CutSource<'a> {
    pub fn new(trace: &'a OpTrace, kind: StructureKind) -> Result<Self> {
        let (_, checks) = naive_replay(&trace.ops)?;
        Ok(Self {
            trace,
            kind,
            truth: checks.into_iter().collect(),
        })
    }

    pub fn cut(&self, cut: &Cut) -> Result<GameInstance> {
        let spans = self.trace.interval_spans();
        let b = locate(&spans, &cut.bob, "Bob")?
            .ok_or_else(|| Error::BadCut("Bob needs at least one interval".into()))?;
        let (a_begin, b_begin) = match locate(&spans, &cut.alice, "Alice")? {
            Some(a) => {
                if a.1 + 1 != b.0 {
                    return Err(Error::BadCut(
                        "Alice's intervals do not immediately precede Bob's".into(),
                    ));
                }
                let between = &self.trace.ops[spans[a.1].2 + 1..spans[b.0].1];
                if between.iter().any(|op| !op.is_marker()) {
                    return Err(Error::BadCut("operations between the two blocks".into()));
                }
                (spans[a.0].1, spans[b.0].1)
            }
            None => (spans[b.0].1, spans[b.0].1),
        };
        let a_end = if cut.alice.is_empty() {
            a_begin
        } else {
            spans[b.0 - 1].2 + 1
        };
        let b_end = spans[b.1].2 + 1;
        let ops = &self.trace.ops;

        let mut arena = ProbeArena::counting_only();
        let mut prefix = Replayer::new(self.kind, &mut arena, self.trace)?;
        for (i, op) in ops[..a_begin].iter().enumerate() {
            prefix.step(&mut arena, i, op)?;
        }
        let (handle, _) = prefix.finish();
        let start_image = arena.image().to_vec();

        let mut alice_arena = ProbeArena::from_image(start_image.clone(), LogMode::Full);
        let mut alice = Replayer::resume(handle.clone());
        for (i, op) in ops[a_begin..a_end].iter().enumerate() {
            alice.step(&mut alice_arena, a_begin + i, op)?;
        }
        let written: BTreeSet<Addr> = alice_arena
            .log()
            .events()
            .iter()
            .filter(|e| e.kind == crate::arena::Access::Write)
            .map(|e| e.addr)
            .collect();
        let max_a = alice_arena
            .log()
            .events()
            .iter()
            .map(|e| e.addr)
            .max()
            .unwrap_or(0);
        let final_image = alice_arena.image().to_vec();

        let mut bob_arena = ProbeArena::from_image(final_image.clone(), LogMode::Full);
        let mut bob = Replayer::resume(handle.clone());
        for (i, op) in ops[b_begin..b_end].iter().enumerate() {
            bob.step(&mut bob_arena, b_begin + i, op)?;
        }
        let (_, outcome) = bob.finish();
        let bob_read: BTreeSet<Addr> = bob_arena.log().events().iter().map(|e| e.addr).collect();
        let max_b = bob_read.iter().next_back().copied().unwrap_or(0);

        let ground_truth = (b_begin..b_end).all(|i| self.truth.get(&i).copied().unwrap_or(true));

        Ok(GameInstance {
            kind: self.kind,
            cut: cut.clone(),
            handle,
            start_image,
            alice_ops: ops[a_begin..a_end].to_vec(),
            bob_ops: ops[b_begin..b_end].to_vec(),
            ground_truth,
            alice: AliceView {
                written,
                final_image,
            },
            bob_read,
            reference_checks: outcome.checks.iter().map(|c| c.1).collect(),
            bob_probes: bob_arena.probe_count(),
            max_addr: max_a.max(max_b),
        })
    }
}

pub fn cut_game(trace: &OpTrace, kind: StructureKind, cut: &Cut) -> Result<GameInstance> {
    CutSource::new(trace, kind)?.cut(cut)
}

/// Supplies the value of a cell the first time a player reads it.
pub(crate) trait Resolver {
    fn resolve(&mut self, addr: Addr, start: Word) -> Result<Word>;
}

/// A player's memory: the shared starting image plus the player's own
/// changes. Cells are resolved on first read; the read-before-write rule is
/// enforced as in the arena.
pub(crate) struct PlayerMemory<'a, R: Resolver> {
    base: &'a [Word],
    overlay: HashMap<Addr, Word>,
    known: HashSet<Addr>,
    stack: Vec<(HashMap<Addr, Word>, HashSet<Addr>)>,
    pub resolver: R,
    last_read: Option<Addr>,
    probes: u64,
    probe_limit: u64,
    addr_limit: Addr,
}

impl<'a, R: Resolver> PlayerMemory<'a, R> {
    pub fn new(base: &'a [Word], resolver: R, probe_limit: u64, addr_limit: Addr) -> Self {
        Self {
            base,
            overlay: HashMap::new(),
            known: HashSet::new(),
            stack: Vec::new(),
            resolver,
            last_read: None,
            probes: 0,
            probe_limit,
            addr_limit,
        }
    }

    fn current(&self, addr: Addr) -> Word {
        self.overlay
            .get(&addr)
            .copied()
            .unwrap_or_else(|| self.base.get(addr as usize).copied().unwrap_or(0))
    }

    fn guard(&mut self, addr: Addr) -> Result<()> {
        if addr > self.addr_limit {
            return Err(Error::Rejected(format!(
                "address {addr} outside the simulated memory"
            )));
        }
        self.probes += 1;
        if self.probes > self.probe_limit {
            return Err(Error::Rejected("probe budget exhausted".into()));
        }
        Ok(())
    }

    pub fn snapshot(&mut self) {
        self.stack.push((self.overlay.clone(), self.known.clone()));
    }

    pub fn restore(&mut self) -> Result<()> {
        let (overlay, known) = self
            .stack
            .pop()
            .ok_or_else(|| Error::InvalidParams("restore without snapshot".into()))?;
        self.overlay = overlay;
        self.known = known;
        Ok(())
    }
}

impl<R: Resolver> CellMemory for PlayerMemory<'_, R> {
    fn read(&mut self, addr: Addr) -> Result<Word> {
        self.guard(addr)?;
        self.last_read = Some(addr);
        if self.known.insert(addr) {
            let start = self.current(addr);
            let v = self.resolver.resolve(addr, start)?;
            if v != start {
                self.overlay.insert(addr, v);
            }
            return Ok(v);
        }
        Ok(self.current(addr))
    }

    fn write(&mut self, addr: Addr, value: Word) -> Result<()> {
        if self.last_read.take() != Some(addr) {
            return Err(Error::ProtocolViolation { addr });
        }
        self.guard(addr)?;
        self.overlay.insert(addr, value);
        Ok(())
    }

    fn probes(&self) -> u64 {
        self.probes
    }
}

/// Run a block of operations, returning the result of every expectation.
pub(crate) fn run_block<R: Resolver>(
    structure: &mut Structure,
    mem: &mut PlayerMemory<'_, R>,
    ops: &[Op],
) -> Result<Vec<bool>> {
    let mut checker = Checker::new();
    let mut out = Vec::new();
    for op in ops {
        let answer = match op {
            Op::BeginInterval(_) | Op::EndInterval => None,
            Op::Snapshot => {
                mem.snapshot();
                None
            }
            Op::Restore => {
                mem.restore()?;
                None
            }
            _ => structure.apply(mem, op)?,
        };
        if let Some(ok) = checker.observe(op, answer) {
            out.push(ok);
        }
    }
    Ok(out)
}
