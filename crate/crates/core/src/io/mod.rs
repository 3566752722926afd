//! Loading graphs and labels, building models, bundled and synthetic graphs,
//! and the JSON documents written by the tools.

mod dataset;
mod document;
mod karate;
mod presets;
mod synthetic;
mod text;

pub use dataset::{build_mrf, sample_labels, DatasetSpec, GraphData, LABELED_CONFIDENCE};
pub use document::{
    explain_documents, from_json, to_json, BeliefsDocument, DirectedMessage, ExplainOutput,
    ExplanationDocument, NodeBelief, NodePrior, FORMAT_VERSION,
};
pub use karate::{karate_club, karate_edges, karate_factions, ADMINISTRATOR, INSTRUCTOR};
pub use presets::{preset, synthetic_model, PRESETS};
pub use synthetic::{generate_synthetic, random_labels, SyntheticKind};
pub use text::{
    load_edges, load_labels, load_node_list, load_priors, parse_edges, parse_labels,
    parse_node_list, parse_priors,
};
