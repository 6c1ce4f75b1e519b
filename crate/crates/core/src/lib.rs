//! Cell-probe instrumented connectivity structures.
//!
//! Every structure here keeps its state in a [`ProbeArena`], a word-addressed
//! memory that logs each read and write with the interval it happened in.
//! On top of that sit the hard-instance generators, trace replay, and the
//! two-party simulation protocols that turn a cut of a trace into a
//! communication game.

pub mod ackermann;
pub mod arena;
pub mod cli;
pub mod error;
pub mod games;
pub mod graph;
pub mod instances;
pub mod link_find;
pub mod replay;
pub mod report;
pub mod seed;
pub mod trace;
pub mod uf;

pub use arena::{Addr, CellMemory, IntervalTag, LogMode, ProbeArena, ProbeLog, Word};
pub use error::{Error, Result};
pub use link_find::{LfStructure, LfVariant};
pub use replay::{replay, Answer, StructureKind};
pub use trace::{Op, OpTrace};
pub use uf::{UfForest, UfMode};
