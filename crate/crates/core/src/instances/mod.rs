//! Hard-instance generators and the oracles that check them.

pub mod appendix;
pub mod dynamic;
pub mod incremental;
pub mod naive;
pub mod schedule;

pub use appendix::{appendix_rounds, AppendixInstance, AppendixParams};
pub use dynamic::{gen_dynamic, gen_dynamic_with, DynInstance, DynOptions, DynParams};
pub use incremental::{
    distinct_ancestors, gen_incremental, gen_incremental_with, metaquery_oracle, metaquery_trace,
    naive_metaquery, verdict_from_answers, Forest, IncInstance, IncOptions, IncOverrides,
    IncParams, MetaqueryVerdict,
};
pub use naive::{naive_replay, NaiveConnectivity};
pub use schedule::{bit_reversal, interleave_check, schedule};

/// Colors in `[1, C]`, by position.
pub type Coloring = Vec<u32>;
