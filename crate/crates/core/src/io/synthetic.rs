//! Seeded random graph generators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mrf::{normalize_edge, Edge, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Random recursive tree: node `i` attaches to a uniform earlier node.
    Tree,
    /// Path `0 - 1 - ... - (n-1)`.
    Chain,
    /// `G(n, p)`, restricted to its largest connected component.
    ErdosRenyi { p: f64 },
    /// Bipartite review network: `n` reviews, each joined to one reviewer and
    /// one product; `per_entity` is the mean number of reviews per reviewer
    /// and per product.
    Review { per_entity: f64 },
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticKind::Tree => f.write_str("tree"),
            SyntheticKind::Chain => f.write_str("chain"),
            SyntheticKind::ErdosRenyi { p } => write!(f, "erdos-renyi:{p}"),
            SyntheticKind::Review { per_entity } => write!(f, "review:{per_entity}"),
        }
    }
}

/// Parses `tree`, `chain`, `erdos-renyi:P` or `review:R`.
impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let number = |p: Option<&str>| -> Result<f64> {
            p.ok_or_else(|| Error::InvalidConfig(format!("'{name}' needs a parameter")))?
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad parameter in '{s}'")))
        };
        match name {
            "tree" => Ok(SyntheticKind::Tree),
            "chain" => Ok(SyntheticKind::Chain),
            "erdos-renyi" | "er" => Ok(SyntheticKind::ErdosRenyi { p: number(param)? }),
            "review" => Ok(SyntheticKind::Review {
                per_entity: number(param)?,
            }),
            _ => Err(Error::InvalidConfig(format!("unknown graph kind '{name}'"))),
        }
    }
}

/// Generates an edge list; identical for identical arguments.
pub fn generate_synthetic(kind: SyntheticKind, n: usize, seed: u64) -> Result<Vec<Edge>> {
    if n == 0 {
        return Err(Error::InvalidConfig("graph size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |i: usize| NodeId(i as u64);
    let edges: Vec<Edge> = match kind {
        SyntheticKind::Chain => (1..n).map(|i| (id(i - 1), id(i))).collect(),
        SyntheticKind::Tree => (1..n)
            .map(|i| normalize_edge(id(rng.gen_range(0..i)), id(i)))
            .collect(),
        SyntheticKind::ErdosRenyi { p } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "edge probability {p} must lie in (0, 1)"
                )));
            }
            largest_component(erdos_renyi(n, p, &mut rng))
        }
        SyntheticKind::Review { per_entity } => {
            if !(per_entity >= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "reviews per entity must be at least 1, got {per_entity}"
                )));
            }
            let entities = ((n as f64 / per_entity).ceil() as usize).max(1);
            (0..n)
                .flat_map(|r| {
                    let reviewer = n + rng.gen_range(0..entities);
                    let product = n + entities + rng.gen_range(0..entities);
                    [(id(r), id(reviewer)), (id(r), id(product))]
                })
                .collect()
        }
    };
    let mut edges = edges;
    edges.sort_unstable();
    Ok(edges)
}

/// `G(n, p)` by geometric skipping over the lower triangle, `O(n + m)`.
fn erdos_renyi<R: Rng>(n: usize, p: f64, rng: &mut R) -> Vec<Edge> {
    let log_q = (1.0 - p).ln();
    let mut edges = Vec::new();
    let (mut v, mut w): (usize, i64) = (1, -1);
    while v < n {
        let r: f64 = rng.gen();
        w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
        while v < n && w >= v as i64 {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((NodeId(w as u64), NodeId(v as u64)));
        }
    }
    edges
}

fn largest_component(edges: Vec<Edge>) -> Vec<Edge> {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in &edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen = BTreeSet::new();
    let mut best: BTreeSet<NodeId> = BTreeSet::new();
    for &start in adj.keys() {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = BTreeSet::from([start]);
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(u) = stack.pop() {
            for &v in &adj[&u] {
                if seen.insert(v) {
                    comp.insert(v);
                    stack.push(v);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    edges
        .into_iter()
        .filter(|(a, _)| best.contains(a))
        .collect()
}

/// Uniformly random 1-based classes for a `ratio` fraction of `nodes`.
pub fn random_labels(
    nodes: &[NodeId],
    classes: usize,
    ratio: f64,
    seed: u64,
) -> BTreeMap<NodeId, usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    nodes
        .iter()
        .filter_map(|&n| {
            let labeled = rng.gen::<f64>() < ratio;
            let class = rng.gen_range(1..=classes);
            labeled.then_some((n, class))
        })
        .collect()
}
