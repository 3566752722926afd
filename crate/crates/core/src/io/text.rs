//! Tab-separated loaders for edges, labels and explicit priors.
//!
//! Every loader skips blank lines and lines starting with `#`, and reports the
//! first malformed line with its 1-based line number. Nothing is returned on
//! error.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::distribution::LabelDistribution;
use crate::error::{Error, Result};
use crate::mrf::{normalize_edge, Edge, NodeId};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

fn parse_error(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

fn node(source: &str, line: usize, field: &str) -> Result<NodeId> {
    field.parse::<u64>().map(NodeId).map_err(|_| {
        parse_error(
            source,
            line,
            format!("'{field}' is not a non-negative integer node id"),
        )
    })
}

/// Parses `u<TAB>v` lines into a sorted, deduplicated undirected edge list.
/// `source` names the input in diagnostics.
pub fn parse_edges(text: &str, source: &str) -> Result<Vec<Edge>> {
    let mut edges = BTreeSet::new();
    for (line, fields) in records(text) {
        if fields.len() != 2 {
            return Err(parse_error(
                source,
                line,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let u = node(source, line, fields[0])?;
        let v = node(source, line, fields[1])?;
        if u == v {
            return Err(parse_error(source, line, format!("self-loop on node {u}")));
        }
        edges.insert(normalize_edge(u, v));
    }
    Ok(edges.into_iter().collect())
}

pub fn load_edges(path: &Path) -> Result<Vec<Edge>> {
    parse_edges(&read(path)?, &path.display().to_string())
}

/// Parses `node<TAB>class` lines. Classes are 1-based in the file and stay
/// 1-based in the returned map; range checks happen when the model is built.
pub fn parse_labels(text: &str, source: &str) -> Result<BTreeMap<NodeId, usize>> {
    let mut labels = BTreeMap::new();
    for (line, fields) in records(text) {
        if fields.len() != 2 {
            return Err(parse_error(
                source,
                line,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let id = node(source, line, fields[0])?;
        let class = fields[1].parse::<usize>().map_err(|_| {
            parse_error(
                source,
                line,
                format!("'{}' is not a class number", fields[1]),
            )
        })?;
        if let Some(prev) = labels.insert(id, class) {
            if prev != class {
                return Err(parse_error(
                    source,
                    line,
                    format!("node {id} labeled both {prev} and {class}"),
                ));
            }
        }
    }
    Ok(labels)
}

pub fn load_labels(path: &Path) -> Result<BTreeMap<NodeId, usize>> {
    parse_labels(&read(path)?, &path.display().to_string())
}

/// Parses `node<TAB>p_1<TAB>...<TAB>p_c` lines of explicit priors.
pub fn parse_priors(text: &str, source: &str) -> Result<BTreeMap<NodeId, LabelDistribution>> {
    let mut priors = BTreeMap::new();
    for (line, fields) in records(text) {
        if fields.len() < 3 {
            return Err(parse_error(
                source,
                line,
                "expected a node id and at least 2 probabilities",
            ));
        }
        let id = node(source, line, fields[0])?;
        let probs = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_error(source, line, format!("'{f}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        let dist =
            LabelDistribution::new(probs).map_err(|e| parse_error(source, line, e.to_string()))?;
        if priors.insert(id, dist).is_some() {
            return Err(parse_error(
                source,
                line,
                format!("duplicate prior for node {id}"),
            ));
        }
    }
    Ok(priors)
}

pub fn load_priors(path: &Path) -> Result<BTreeMap<NodeId, LabelDistribution>> {
    parse_priors(&read(path)?, &path.display().to_string())
}

/// Parses one node id per line.
pub fn parse_node_list(text: &str, source: &str) -> Result<Vec<NodeId>> {
    records(text)
        .map(|(line, fields)| {
            if fields.len() != 1 {
                return Err(parse_error(
                    source,
                    line,
                    format!("expected 1 field, found {}", fields.len()),
                ));
            }
            node(source, line, fields[0])
        })
        .collect()
}

pub fn load_node_list(path: &Path) -> Result<Vec<NodeId>> {
    parse_node_list(&read(path)?, &path.display().to_string())
}
