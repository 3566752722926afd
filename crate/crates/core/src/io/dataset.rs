use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{CompatibilityMatrix, LabelDistribution};
use crate::error::{Error, Result};
use crate::mrf::{Edge, Mrf, NodeId};

use super::text::{load_edges, load_labels, load_priors};

/// Prior mass placed on the known class of a labeled node.
pub const LABELED_CONFIDENCE: f64 = 0.9;

/// Where a model comes from and how its priors and potentials are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub edge_file: Option<PathBuf>,
    pub labels_file: Option<PathBuf>,
    /// Explicit per-node priors; these override label-derived priors.
    pub priors_file: Option<PathBuf>,
    pub class_count: usize,
    /// Fraction of the label file's entries kept as labeled nodes.
    pub labeled_ratio: f64,
    /// Diagonal of the homophily potential.
    pub homophily: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            edge_file: None,
            labels_file: None,
            priors_file: None,
            class_count: 2,
            labeled_ratio: 1.0,
            homophily: 0.9,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "class count must be at least 2, got {}",
                self.class_count
            )));
        }
        if !(self.homophily > 0.0 && self.homophily < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "homophily must lie in (0, 1), got {}",
                self.homophily
            )));
        }
        if !(0.0..=1.0).contains(&self.labeled_ratio) {
            return Err(Error::InvalidConfig(format!(
                "labeled ratio must lie in [0, 1], got {}",
                self.labeled_ratio
            )));
        }
        Ok(())
    }

    /// Reads the files named by the spec.
    pub fn load(&self) -> Result<GraphData> {
        let edge_file = self
            .edge_file
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("an edge file is required".into()))?;
        Ok(GraphData {
            edges: load_edges(edge_file)?,
            labels: match &self.labels_file {
                Some(p) => load_labels(p)?,
                None => BTreeMap::new(),
            },
            priors: match &self.priors_file {
                Some(p) => load_priors(p)?,
                None => BTreeMap::new(),
            },
        })
    }
}

/// Parsed graph inputs prior to model construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphData {
    pub edges: Vec<Edge>,
    /// 1-based class per labeled node.
    pub labels: BTreeMap<NodeId, usize>,
    pub priors: BTreeMap<NodeId, LabelDistribution>,
}

/// Subset of `labels` kept under `ratio`, sampled deterministically by `seed`.
pub fn sample_labels(
    labels: &BTreeMap<NodeId, usize>,
    ratio: f64,
    seed: u64,
) -> BTreeMap<NodeId, usize> {
    if ratio >= 1.0 {
        return labels.clone();
    }
    let keep = (ratio * labels.len() as f64).round() as usize;
    let mut ids: Vec<NodeId> = labels.keys().copied().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids.truncate(keep);
    ids.into_iter().map(|id| (id, labels[&id])).collect()
}

/// Builds the model: labeled nodes get `0.9` on their class and `0.1/(c-1)`
/// elsewhere, unlabeled nodes a uniform prior, explicit priors win over both,
/// and every edge gets the homophily potential.
pub fn build_mrf(spec: &DatasetSpec, data: &GraphData) -> Result<Mrf> {
    spec.validate()?;
    let c = spec.class_count;
    let labels = sample_labels(&data.labels, spec.labeled_ratio, spec.seed);

    let mut nodes: BTreeSet<NodeId> = data.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.extend(data.labels.keys().copied());
    nodes.extend(data.priors.keys().copied());

    let mut builder = Mrf::builder(c);
    for id in nodes {
        let prior = if let Some(p) = data.priors.get(&id) {
            p.clone()
        } else if let Some(&class) = labels.get(&id) {
            if class == 0 || class > c {
                return Err(Error::LabelOutOfRange {
                    node: id,
                    class,
                    classes: c,
                });
            }
            LabelDistribution::peaked(c, class - 1, LABELED_CONFIDENCE)?
        } else {
            LabelDistribution::uniform(c)
        };
        builder.add_node(id, prior)?;
    }
    let potential = CompatibilityMatrix::homophily(c, spec.homophily)?;
    for &(u, v) in &data.edges {
        builder.add_edge(u, v, potential.clone())?;
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(edges: &[(u64, u64)], labels: &[(u64, usize)]) -> GraphData {
        GraphData {
            edges: edges.iter().map(|&(a, b)| (NodeId(a), NodeId(b))).collect(),
            labels: labels.iter().map(|&(n, c)| (NodeId(n), c)).collect(),
            priors: BTreeMap::new(),
        }
    }

    #[test]
    fn labeled_and_unlabeled_priors() {
        let spec = DatasetSpec::default();
        let m = build_mrf(&spec, &data(&[(0, 1)], &[(0, 1)])).unwrap();
        let labeled = m.prior_of(NodeId(0)).unwrap();
        assert_eq!(labeled[0], 0.9);
        assert!((labeled[1] - 0.1).abs() < 1e-15);
        assert_eq!(m.prior_of(NodeId(1)).unwrap().probs(), &[0.5, 0.5]);

        let spec5 = DatasetSpec {
            class_count: 5,
            ..DatasetSpec::default()
        };
        let m5 = build_mrf(&spec5, &data(&[(0, 1)], &[])).unwrap();
        assert_eq!(m5.prior_of(NodeId(1)).unwrap().probs(), &[0.2; 5]);
    }

    #[test]
    fn potentials_follow_homophily() {
        let spec = DatasetSpec {
            class_count: 3,
            ..DatasetSpec::default()
        };
        let m = build_mrf(&spec, &data(&[(0, 1)], &[(1, 3)])).unwrap();
        let pot = m.potential_of(NodeId(0), NodeId(1)).unwrap();
        assert_eq!(pot.get(1, 1), 0.9);
        assert!((pot.get(0, 2) - 0.05).abs() < 1e-15);
        let prior = m.prior_of(NodeId(1)).unwrap();
        assert!((prior[0] - 0.05).abs() < 1e-15);
        assert_eq!(prior[2], 0.9);
    }

    #[test]
    fn class_out_of_range() {
        let spec = DatasetSpec::default();
        assert!(build_mrf(&spec, &data(&[(0, 1)], &[(0, 3)])).is_err());
        assert!(build_mrf(&spec, &data(&[(0, 1)], &[(0, 0)])).is_err());
        let bad = DatasetSpec {
            homophily: 1.0,
            ..DatasetSpec::default()
        };
        assert!(build_mrf(&bad, &data(&[(0, 1)], &[])).is_err());
    }

    #[test]
    fn label_sampling_is_seeded() {
        let labels: BTreeMap<NodeId, usize> =
            (0..20).map(|i| (NodeId(i), 1 + (i as usize % 2))).collect();
        let a = sample_labels(&labels, 0.5, 7);
        let b = sample_labels(&labels, 0.5, 7);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(sample_labels(&labels, 0.0, 7).is_empty());
    }
}
