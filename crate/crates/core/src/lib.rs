//! Belief propagation on pairwise Markov random fields, and beam search for
//! small tree-shaped subgraphs whose marginal for a target node stays close to
//! the marginal computed on the whole model.

pub mod batch;
pub mod bp;
pub mod distribution;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod io;
pub mod mrf;
pub mod search;

pub use batch::{count_bp_invocations, explain_targets, run_batch, BatchOptions, RunReport};
pub use bp::{
    belief, compute_message, run_bp, BeliefTable, BpConfig, BpResult, MessageTable, Schedule,
};
pub use distribution::{kl, sym_kl, CompatibilityMatrix, LabelDistribution};
pub use error::{Error, Result};
pub use mrf::{normalize_edge, Edge, Mrf, MrfBuilder, NodeId};
pub use search::{
    beam_search, combine, evaluate_candidate, frontier, Beam, ExplanationSubgraph, GelVariant,
    Method, MethodTag, SearchConfig, SearchOutcome, Subgraph,
};
