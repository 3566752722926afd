use crate::error::{Error, Result};
use crate::fixtures::counterexample;
use crate::mrf::Mrf;

use super::dataset::{build_mrf, DatasetSpec, GraphData};
use super::karate::karate_club;
use super::synthetic::{generate_synthetic, random_labels, SyntheticKind};

pub const PRESETS: [&str; 2] = ["karate", "counterexample"];

/// Named built-in models.
///
/// `karate`: the karate club network with the two faction heads labeled,
/// two classes and the default homophily. `counterexample`: three nodes where
/// the best pair does not contain the best single neighbor.
pub fn preset(name: &str) -> Result<Mrf> {
    match name {
        "karate" => {
            let (edges, labels) = karate_club();
            let data = GraphData {
                edges,
                labels,
                ..GraphData::default()
            };
            build_mrf(&DatasetSpec::default(), &data)
        }
        "counterexample" => Ok(counterexample()),
        other => Err(Error::InvalidConfig(format!(
            "unknown preset '{other}', expected one of {}",
            PRESETS.join(", ")
        ))),
    }
}

/// A generated graph of `n` nodes with a random `labeled_ratio` of them
/// labeled, all drawn from `spec.seed`; priors and potentials as in
/// [`build_mrf`].
pub fn synthetic_model(kind: SyntheticKind, n: usize, spec: &DatasetSpec) -> Result<Mrf> {
    spec.validate()?;
    let edges = generate_synthetic(kind, n, spec.seed)?;
    let mut nodes: Vec<_> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let labels = random_labels(&nodes, spec.class_count, spec.labeled_ratio, spec.seed);
    let all_kept = DatasetSpec {
        labeled_ratio: 1.0,
        ..spec.clone()
    };
    build_mrf(
        &all_kept,
        &GraphData {
            edges,
            labels,
            ..GraphData::default()
        },
    )
}
