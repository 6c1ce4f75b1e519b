//! Instrumented cell-probe memory.
//!
//! All persistent state of the data structures lives in a [`ProbeArena`], a
//! flat array of 64-bit words. Every read and write is appended to a
//! [`ProbeLog`] tagged with the interval that was active when it happened, so
//! that the sets of cells written and read in adjacent intervals can be
//! compared after the fact.
//!
//! A write must be immediately preceded by a read of the same cell. The arena
//! enforces this and fails with [`Error::ProtocolViolation`] otherwise; the
//! simulation protocols in [`crate::games`] rely on `W ⊆ R` within an interval.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell address (word index).
pub type Addr = u64;
/// Cell content. Cells are `w = 64` bits wide.
pub type Word = u64;

/// Width of a cell in bits.
pub const WORD_BITS: u64 = 64;

/// Label of a contiguous interval of operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntervalTag {
    /// Reserved for events outside any interval, in particular the fixed
    /// prefix executed before the first interval opens.
    Prefix,
    /// Epoch `i` of the incremental instance (epochs run `d, d-1, ..., 1`).
    Epoch(u32),
    /// Leaf `k` of a timeline (one update/query pair, or one round).
    Step(u32),
    /// The `j`-th metaquery.
    Metaquery(u32),
    Custom(u32),
}

impl IntervalTag {
    pub fn epoch(&self) -> Option<u32> {
        match self {
            IntervalTag::Epoch(i) => Some(*i),
            _ => None,
        }
    }
}

impl fmt::Display for IntervalTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalTag::Prefix => write!(f, "prefix"),
            IntervalTag::Epoch(i) => write!(f, "epoch:{i}"),
            IntervalTag::Step(i) => write!(f, "step:{i}"),
            IntervalTag::Metaquery(i) => write!(f, "metaquery:{i}"),
            IntervalTag::Custom(i) => write!(f, "custom:{i}"),
        }
    }
}

impl FromStr for IntervalTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            line: 0,
            message: format!("bad interval tag {s:?}"),
        };
        if s == "prefix" {
            return Ok(IntervalTag::Prefix);
        }
        let (kind, num) = s.split_once(':').ok_or_else(bad)?;
        let num: u32 = num.parse().map_err(|_| bad())?;
        match kind {
            "epoch" => Ok(IntervalTag::Epoch(num)),
            "step" => Ok(IntervalTag::Step(num)),
            "metaquery" => Ok(IntervalTag::Metaquery(num)),
            "custom" => Ok(IntervalTag::Custom(num)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Access {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeEvent {
    pub time: u64,
    pub kind: Access,
    pub addr: Addr,
    pub tag: IntervalTag,
}

/// Append-only record of every probe.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeLog {
    events: Vec<ProbeEvent>,
}

impl ProbeLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events(events: Vec<ProbeEvent>) -> Self {
        Self { events }
    }

    pub fn events(&self) -> &[ProbeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn push(&mut self, event: ProbeEvent) {
        self.events.push(event);
    }

    /// Check strictly increasing times and the read-before-write rule.
    pub fn validate(&self) -> Result<()> {
        for (k, e) in self.events.iter().enumerate() {
            if k > 0 && self.events[k - 1].time >= e.time {
                return Err(Error::InvalidArgs(format!(
                    "log times not increasing at event {k}"
                )));
            }
            if e.kind == Access::Write {
                let ok = k > 0 && {
                    let prev = &self.events[k - 1];
                    prev.kind == Access::Read && prev.addr == e.addr && prev.time + 1 == e.time
                };
                if !ok {
                    return Err(Error::ProtocolViolation { addr: e.addr });
                }
            }
        }
        Ok(())
    }

    /// One event per line: `t <time> <R|W> <addr> <tag>`.
    pub fn export_text(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 24);
        for e in &self.events {
            let kind = match e.kind {
                Access::Read => 'R',
                Access::Write => 'W',
            };
            out.push_str(&format!("t {} {} {} {}\n", e.time, kind, e.addr, e.tag));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| Error::Parse {
                line: n + 1,
                message: message.to_string(),
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 || parts[0] != "t" {
                return Err(err("expected `t <time> <R|W> <addr> <tag>`"));
            }
            let time = parts[1].parse().map_err(|_| err("bad time"))?;
            let kind = match parts[2] {
                "R" => Access::Read,
                "W" => Access::Write,
                _ => return Err(err("bad access kind")),
            };
            let addr = parts[3].parse().map_err(|_| err("bad address"))?;
            let tag = parts[4].parse().map_err(|_| err("bad tag"))?;
            events.push(ProbeEvent {
                time,
                kind,
                addr,
                tag,
            });
        }
        Ok(Self { events })
    }
}

/// Whether the arena keeps every event or only counts them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogMode {
    Full,
    /// Counters and the read-before-write check only; used for long
    /// cost-measurement runs where the event list would not fit in memory.
    CountOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SnapshotId(pub usize);

/// Start and end times of one interval as executed by an arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalSpan {
    pub tag: IntervalTag,
    pub start: u64,
    pub end: u64,
}

/// Anything the structures can probe. Implemented by [`ProbeArena`] and by
/// the player memories of the simulation protocols.
pub trait CellMemory {
    fn read(&mut self, addr: Addr) -> Result<Word>;
    fn write(&mut self, addr: Addr, value: Word) -> Result<()>;
    /// Total probes issued through this memory so far.
    fn probes(&self) -> u64;

    /// Read a cell and overwrite it, returning the old value.
    fn set(&mut self, addr: Addr, value: Word) -> Result<Word> {
        let old = self.read(addr)?;
        self.write(addr, value)?;
        Ok(old)
    }
}

/// Check a value read back from memory before using it as an index. Memory
/// handed to a player by a dishonest party can hold anything.
pub fn bounded(value: Word, limit: u64) -> Result<u64> {
    if value < limit {
        Ok(value)
    } else {
        Err(Error::CorruptValue { value, limit })
    }
}

/// Bound on stored edge-pool slots.
pub(crate) const SLOT_LIMIT: u64 = 1 << 40;

#[derive(Debug, Clone)]
pub struct ProbeArena {
    cells: Vec<Word>,
    log: ProbeLog,
    mode: LogMode,
    clock: u64,
    reads: u64,
    writes: u64,
    last: Option<(Access, Addr)>,
    current_tag: Option<IntervalTag>,
    intervals: Vec<IntervalSpan>,
    snapshots: Vec<(SnapshotId, Vec<Word>)>,
    next_snapshot: usize,
    next_free: Addr,
}

impl Default for ProbeArena {
    fn default() -> Self {
        Self::new()
    }
}

impl ProbeArena {
    pub fn new() -> Self {
        Self::with_mode(LogMode::Full)
    }

    pub fn counting_only() -> Self {
        Self::with_mode(LogMode::CountOnly)
    }

    pub fn with_mode(mode: LogMode) -> Self {
        Self {
            cells: Vec::new(),
            log: ProbeLog::new(),
            mode,
            clock: 0,
            reads: 0,
            writes: 0,
            last: None,
            current_tag: None,
            intervals: Vec::new(),
            snapshots: Vec::new(),
            next_snapshot: 0,
            next_free: 0,
        }
    }

    /// An arena whose memory starts as `image` (used to hand a player the
    /// fixed memory state at the start of its interval).
    pub fn from_image(image: Vec<Word>, mode: LogMode) -> Self {
        let next_free = image.len() as Addr;
        let mut arena = Self::with_mode(mode);
        arena.cells = image;
        arena.next_free = next_free;
        arena
    }

    pub fn mode(&self) -> LogMode {
        self.mode
    }

    fn record(&mut self, kind: Access, addr: Addr) {
        if self.mode == LogMode::Full {
            self.log.push(ProbeEvent {
                time: self.clock,
                kind,
                addr,
                tag: self.current_tag.unwrap_or(IntervalTag::Prefix),
            });
        }
        self.clock += 1;
        self.last = Some((kind, addr));
    }

    /// Return the last value written to `addr` (0 if never written).
    pub fn read(&mut self, addr: Addr) -> Word {
        self.reads += 1;
        self.record(Access::Read, addr);
        self.peek(addr)
    }

    pub fn write(&mut self, addr: Addr, value: Word) -> Result<()> {
        if self.last != Some((Access::Read, addr)) {
            return Err(Error::ProtocolViolation { addr });
        }
        self.writes += 1;
        self.record(Access::Write, addr);
        let idx = addr as usize;
        if idx >= self.cells.len() {
            self.cells.resize(idx + 1, 0);
        }
        self.cells[idx] = value;
        Ok(())
    }

    /// Unlogged inspection of a cell.
    pub fn peek(&self, addr: Addr) -> Word {
        self.cells.get(addr as usize).copied().unwrap_or(0)
    }

    /// Unlogged overwrite of a cell. Players use it to install values they
    /// learned by communication rather than by probing.
    pub fn poke(&mut self, addr: Addr, value: Word) {
        let idx = addr as usize;
        if idx >= self.cells.len() {
            self.cells.resize(idx + 1, 0);
        }
        self.cells[idx] = value;
    }

    pub fn set_interval(&mut self, tag: IntervalTag) -> Result<()> {
        if let Some(active) = self.current_tag {
            return Err(Error::NestedInterval {
                active,
                requested: tag,
            });
        }
        self.current_tag = Some(tag);
        self.intervals.push(IntervalSpan {
            tag,
            start: self.clock,
            end: self.clock,
        });
        Ok(())
    }

    pub fn end_interval(&mut self) -> Result<()> {
        if self.current_tag.take().is_none() {
            return Err(Error::NoActiveInterval);
        }
        if let Some(span) = self.intervals.last_mut() {
            span.end = self.clock;
        }
        Ok(())
    }

    pub fn current_tag(&self) -> Option<IntervalTag> {
        self.current_tag
    }

    /// Every interval opened so far, in order. The span of an interval that is
    /// still open ends at its start time.
    pub fn intervals(&self) -> &[IntervalSpan] {
        &self.intervals
    }

    pub fn snapshot(&mut self) -> SnapshotId {
        let id = SnapshotId(self.next_snapshot);
        self.next_snapshot += 1;
        self.snapshots.push((id, self.cells.clone()));
        id
    }

    /// Reinstate the memory image taken by `id`, dropping it and every later
    /// snapshot. The log is not rolled back.
    pub fn restore(&mut self, id: SnapshotId) -> Result<()> {
        let pos = self
            .snapshots
            .iter()
            .position(|(s, _)| *s == id)
            .ok_or(Error::UnknownSnapshot(id.0))?;
        let (_, image) = self.snapshots.swap_remove(pos);
        self.snapshots.truncate(pos);
        self.cells = image;
        Ok(())
    }

    pub fn latest_snapshot(&self) -> Option<SnapshotId> {
        self.snapshots.last().map(|(id, _)| *id)
    }

    /// Zero the memory and forget snapshots and allocations. The log and the
    /// clock keep running.
    pub fn clear(&mut self) {
        self.cells.clear();
        self.snapshots.clear();
        self.next_free = 0;
    }

    /// Reserve `len` consecutive cells. Layout is static, so allocation is not
    /// a probe.
    pub fn alloc(&mut self, len: u64) -> Addr {
        let base = self.next_free;
        self.next_free = self
            .next_free
            .checked_add(len)
            .expect("arena address space exhausted");
        base
    }

    /// Reserve everything from the current allocation point onwards, for a
    /// region that grows without a known bound. No allocation may follow.
    pub fn alloc_tail(&mut self) -> Addr {
        let base = self.next_free;
        self.next_free = Addr::MAX;
        base
    }

    pub fn image(&self) -> &[Word] {
        &self.cells
    }

    pub fn log(&self) -> &ProbeLog {
        &self.log
    }

    pub fn into_log(self) -> ProbeLog {
        self.log
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn reads(&self) -> u64 {
        self.reads
    }

    pub fn writes(&self) -> u64 {
        self.writes
    }

    pub fn probe_count(&self) -> u64 {
        self.reads + self.writes
    }
}

impl CellMemory for ProbeArena {
    fn read(&mut self, addr: Addr) -> Result<Word> {
        Ok(ProbeArena::read(self, addr))
    }

    fn write(&mut self, addr: Addr, value: Word) -> Result<()> {
        ProbeArena::write(self, addr, value)
    }

    fn probes(&self) -> u64 {
        self.probe_count()
    }
}

/// Write/read sets of two groups of intervals, plus per-epoch last-writer sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IntervalStats {
    /// Cells written under the first group of tags.
    pub written: BTreeSet<Addr>,
    /// Cells read under the second group of tags.
    pub read: BTreeSet<Addr>,
    pub overlap: usize,
    pub union_size: usize,
    /// Epoch `i` → cells last written in epoch `i` among all epochs
    /// (`W_i` minus the cells written by any smaller-numbered epoch).
    pub fresh: BTreeMap<u32, BTreeSet<Addr>>,
}

pub fn written_under(log: &ProbeLog, tags: &BTreeSet<IntervalTag>) -> BTreeSet<Addr> {
    log.events()
        .iter()
        .filter(|e| e.kind == Access::Write && tags.contains(&e.tag))
        .map(|e| e.addr)
        .collect()
}

pub fn read_under(log: &ProbeLog, tags: &BTreeSet<IntervalTag>) -> BTreeSet<Addr> {
    log.events()
        .iter()
        .filter(|e| e.kind == Access::Read && tags.contains(&e.tag))
        .map(|e| e.addr)
        .collect()
}

/// `W_i` for every epoch tag present in the log.
pub fn epoch_writes(log: &ProbeLog) -> BTreeMap<u32, BTreeSet<Addr>> {
    let mut by_epoch: BTreeMap<u32, BTreeSet<Addr>> = BTreeMap::new();
    for e in log.events() {
        if let (Access::Write, Some(i)) = (e.kind, e.tag.epoch()) {
            by_epoch.entry(i).or_default().insert(e.addr);
        }
    }
    by_epoch
}

/// `W_i ∖ W_{<i}` for every epoch.
pub fn fresh_sets(log: &ProbeLog) -> BTreeMap<u32, BTreeSet<Addr>> {
    let by_epoch = epoch_writes(log);
    let mut fresh = BTreeMap::new();
    let mut lower: BTreeSet<Addr> = BTreeSet::new();
    // Ascending epoch index: `lower` holds W_{<i} when epoch i is visited.
    for (&i, w) in &by_epoch {
        fresh.insert(i, w.difference(&lower).copied().collect());
        lower.extend(w.iter().copied());
    }
    fresh
}

pub fn stats(
    log: &ProbeLog,
    tags_a: &BTreeSet<IntervalTag>,
    tags_b: &BTreeSet<IntervalTag>,
) -> IntervalStats {
    debug_assert!(tags_a.is_disjoint(tags_b), "tag groups must be disjoint");
    let written = written_under(log, tags_a);
    let read = read_under(log, tags_b);
    let overlap = written.intersection(&read).count();
    let union_size = written.len() + read.len() - overlap;
    IntervalStats {
        written,
        read,
        overlap,
        union_size,
        fresh: fresh_sets(log),
    }
}

/// JSON record `{tagsA, tagsB, W, R, overlap, union}` with set sizes.
pub fn stats_json(
    tags_a: &BTreeSet<IntervalTag>,
    tags_b: &BTreeSet<IntervalTag>,
    s: &IntervalStats,
) -> serde_json::Value {
    serde_json::json!({
        "tagsA": tags_a.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "tagsB": tags_b.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "W": s.written.len(),
        "R": s.read.len(),
        "overlap": s.overlap,
        "union": s.union_size,
    })
}

/// Node of a [`Timeline`], heap-numbered: the root is 1, the children of `v`
/// are `2v` and `2v + 1`.
pub type TimelineNode = u64;

/// Perfect binary tree whose leaves are consecutive time ranges.
///
/// Leaf `k` covers `[starts[k], starts[k + 1])`; the last leaf extends to the
/// end of the log and events before `starts[0]` are folded into leaf 0. The
/// leaf count is padded up to a power of two with empty leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    starts: Vec<u64>,
    width: u64,
}

impl Timeline {
    pub fn new(starts: Vec<u64>) -> Result<Self> {
        if starts.is_empty() {
            return Err(Error::InvalidArgs(
                "timeline needs at least one leaf".into(),
            ));
        }
        if starts.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgs(
                "timeline leaf starts must be sorted".into(),
            ));
        }
        let width = (starts.len() as u64).next_power_of_two();
        Ok(Self { starts, width })
    }

    /// One leaf per interval whose tag satisfies `keep`, in execution order.
    pub fn from_intervals(
        spans: &[IntervalSpan],
        keep: impl Fn(&IntervalTag) -> bool,
    ) -> Result<Self> {
        Self::new(
            spans
                .iter()
                .filter(|s| keep(&s.tag))
                .map(|s| s.start)
                .collect(),
        )
    }

    pub fn leaves(&self) -> usize {
        self.starts.len()
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn root(&self) -> TimelineNode {
        1
    }

    pub fn leaf_node(&self, leaf: usize) -> TimelineNode {
        self.width + leaf as u64
    }

    pub fn leaf_of_time(&self, time: u64) -> usize {
        self.starts
            .partition_point(|&s| s <= time)
            .saturating_sub(1)
    }

    pub fn lca(&self, mut a: TimelineNode, mut b: TimelineNode) -> TimelineNode {
        while a != b {
            if a > b {
                a /= 2;
            } else {
                b /= 2;
            }
        }
        a
    }

    pub fn is_leaf(&self, node: TimelineNode) -> bool {
        node >= self.width
    }

    /// Leaf indices under `node`, clipped to the real leaves.
    pub fn leaves_under(&self, node: TimelineNode) -> std::ops::Range<usize> {
        let depth_below = (self.width.trailing_zeros() as i64) - (63 - node.leading_zeros() as i64);
        let lo = (node << depth_below) - self.width;
        let hi = ((node + 1) << depth_below) - self.width;
        let n = self.starts.len() as u64;
        (lo.min(n) as usize)..(hi.min(n) as usize)
    }

    /// Internal nodes with at least one real leaf in each subtree.
    pub fn internal_nodes(&self) -> Vec<TimelineNode> {
        (1..self.width)
            .filter(|&v| {
                !self.leaves_under(2 * v).is_empty() && !self.leaves_under(2 * v + 1).is_empty()
            })
            .collect()
    }
}

/// Charge every read of a previously written cell to the lowest common
/// ancestor of the leaf containing the read and the leaf containing the most
/// recent write of that cell. Reads of never-written cells are not charged.
pub fn charge_to_lca(log: &ProbeLog, timeline: &Timeline) -> BTreeMap<TimelineNode, u64> {
    let mut last_write: HashMap<Addr, u64> = HashMap::new();
    let mut charges = BTreeMap::new();
    for e in log.events() {
        match e.kind {
            Access::Write => {
                last_write.insert(e.addr, e.time);
            }
            Access::Read => {
                if let Some(&wt) = last_write.get(&e.addr) {
                    let a = timeline.leaf_node(timeline.leaf_of_time(wt));
                    let b = timeline.leaf_node(timeline.leaf_of_time(e.time));
                    *charges.entry(timeline.lca(a, b)).or_insert(0) += 1;
                }
            }
        }
    }
    charges
}
