//! Versioned JSON documents for explanations and beliefs.
//!
//! Field order in every document is fixed by the struct declarations below, so
//! serializing the same value always yields the same bytes. The schema is
//! described in `docs/formats.md`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bp::BpResult;
use crate::distribution::{sym_kl, LabelDistribution};
use crate::error::{Error, Result};
use crate::mrf::{Edge, Mrf, NodeId};
use crate::search::{
    beam_search, combine, evaluate_detailed, EvaluationDetail, ExplanationSubgraph, MethodTag,
    SearchConfig, Subgraph,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePrior {
    pub node: NodeId,
    pub prior: LabelDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedMessage {
    pub from: NodeId,
    pub to: NodeId,
    pub message: LabelDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub format_version: u32,
    pub target: NodeId,
    pub method: MethodTag,
    /// Symmetric KL divergence between `full_belief` and `subgraph_belief`.
    pub objective: f64,
    pub size: usize,
    pub is_tree: bool,
    /// Insertion order; the target comes first.
    pub nodes: Vec<NodeId>,
    /// `edges[i]` attached `nodes[i + 1]`.
    pub edges: Vec<Edge>,
    pub closed_endpoints: Vec<NodeId>,
    pub full_belief: LabelDistribution,
    pub subgraph_belief: LabelDistribution,
    /// Priors of the subgraph nodes, ascending by node.
    pub priors: Vec<NodePrior>,
    /// Converged subgraph messages, ascending by `(from, to)`.
    pub messages: Vec<DirectedMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SearchConfig>,
}

impl ExplanationDocument {
    /// Assembles the document from an evaluation and the full-model belief of
    /// its target.
    pub fn new(
        detail: &EvaluationDetail,
        full_belief: &LabelDistribution,
        config: Option<&SearchConfig>,
    ) -> Self {
        let e = &detail.explanation;
        let model = &detail.model;
        let priors = model
            .node_ids()
            .iter()
            .enumerate()
            .map(|(i, &node)| NodePrior {
                node,
                prior: model.prior(i).clone(),
            })
            .collect();
        let messages = detail
            .bp
            .messages
            .iter(model)
            .map(|(from, to, m)| DirectedMessage {
                from,
                to,
                message: LabelDistribution::from_weights(m.to_vec())
                    .expect("converged messages are normalized"),
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            target: e.target(),
            method: e.method,
            objective: e.objective,
            size: e.size(),
            is_tree: e.subgraph.is_tree(),
            nodes: e.subgraph.nodes.clone(),
            edges: e.subgraph.edges.clone(),
            closed_endpoints: e.subgraph.closed_endpoints.clone(),
            full_belief: full_belief.clone(),
            subgraph_belief: e.belief_on_subgraph.clone(),
            priors,
            messages,
            config: config.copied(),
        }
    }

    /// The explanation the document was made from.
    pub fn explanation(&self) -> ExplanationSubgraph {
        ExplanationSubgraph {
            subgraph: Subgraph {
                target: self.target,
                nodes: self.nodes.clone(),
                edges: self.edges.clone(),
                closed_endpoints: self.closed_endpoints.clone(),
            },
            belief_on_subgraph: self.subgraph_belief.clone(),
            objective: self.objective,
            method: self.method,
        }
    }

    /// Checks the recorded objective against the recorded beliefs.
    pub fn check_objective(&self, tolerance: f64) -> Result<()> {
        let d = sym_kl(&self.full_belief, &self.subgraph_belief)?;
        if (d - self.objective).abs() > tolerance {
            return Err(Error::Document(format!(
                "objective {} differs from recomputed {d}",
                self.objective
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeBelief {
    pub node: NodeId,
    pub belief: LabelDistribution,
}

/// Full-model BP output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefsDocument {
    pub format_version: u32,
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
    pub beliefs: Vec<NodeBelief>,
}

impl BeliefsDocument {
    pub fn new(mrf: &Mrf, result: &BpResult) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            nodes: mrf.node_count(),
            edges: mrf.edge_count(),
            classes: mrf.class_count(),
            converged: result.converged,
            iterations: result.iterations,
            max_residual: result.max_residual,
            beliefs: result
                .beliefs
                .iter()
                .map(|(node, b)| NodeBelief {
                    node,
                    belief: b.clone(),
                })
                .collect(),
        }
    }
}

/// Documents produced by one explanation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainOutput {
    /// Beam candidates, best first.
    pub candidates: Vec<ExplanationDocument>,
    pub comb: Option<ExplanationDocument>,
    pub bp_invocations: usize,
}

/// Runs the search for `target` and builds one document per beam candidate,
/// plus one for their union when `with_comb` is set. Building a document
/// re-runs BP on the candidate to recover its messages; those runs are not
/// counted in `bp_invocations`.
pub fn explain_documents(
    mrf: &Mrf,
    full: &BpResult,
    target: NodeId,
    config: &SearchConfig,
    with_comb: bool,
) -> Result<ExplainOutput> {
    let outcome = beam_search(mrf, full, target, config)?;
    let full_belief = full.belief(target)?;
    let document = |e: &ExplanationSubgraph| -> Result<ExplanationDocument> {
        let detail = evaluate_detailed(mrf, full_belief, &e.subgraph, &config.bp, e.method)?;
        Ok(ExplanationDocument::new(&detail, full_belief, Some(config)))
    };
    let candidates = outcome
        .beam
        .candidates
        .iter()
        .map(document)
        .collect::<Result<Vec<_>>>()?;
    let comb = if with_comb {
        Some(document(&combine(
            &outcome.beam,
            mrf,
            full_belief,
            &config.bp,
        )?)?)
    } else {
        None
    };
    Ok(ExplainOutput {
        candidates,
        comb,
        bp_invocations: outcome.bp_invocations + usize::from(with_comb),
    })
}

/// Pretty-printed JSON followed by a newline.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u32>,
}

/// Parses a document, rejecting unknown or missing format versions.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    match probe.format_version {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(Error::Document(format!("unsupported format_version {v}"))),
        None => return Err(Error::Document("missing format_version".into())),
    }
    serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::{run_bp, BpConfig};
    use crate::fixtures::counterexample;
    use crate::search::evaluate_detailed;

    fn n(i: u64) -> NodeId {
        NodeId(i)
    }

    fn document(sub: &Subgraph) -> ExplanationDocument {
        let mrf = counterexample();
        let full = run_bp(&mrf, &BpConfig::default()).unwrap();
        let b = full.belief(n(0)).unwrap().clone();
        let detail =
            evaluate_detailed(&mrf, &b, sub, &BpConfig::default(), MethodTag::Geg).unwrap();
        ExplanationDocument::new(&detail, &b, Some(&SearchConfig::default()))
    }

    #[test]
    fn round_trip() {
        let sub = Subgraph::singleton(n(0)).extended(n(2), (n(0), n(2)));
        let doc = document(&sub);
        let text = to_json(&doc);
        let back: ExplanationDocument = from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.explanation().subgraph, sub);
        assert_eq!(to_json(&back), text);
        doc.check_objective(1e-9).unwrap();
        assert!((doc.objective - 0.2836).abs() < 1e-3);
        assert_eq!(doc.messages.len(), 2);
        assert_eq!((doc.messages[0].from, doc.messages[0].to), (n(0), n(2)));
        assert_eq!(doc.priors.len(), 2);
    }

    #[test]
    fn singleton_has_empty_sections() {
        let doc = document(&Subgraph::singleton(n(0)));
        assert!(doc.edges.is_empty());
        assert!(doc.messages.is_empty());
        assert_eq!(doc.subgraph_belief.probs(), &[0.5, 0.5]);
        let text = to_json(&doc);
        assert!(text.contains("\"edges\": []"));
        assert!(text.contains("\"messages\": []"));
    }

    #[test]
    fn key_order_is_fixed() {
        let text = to_json(&document(&Subgraph::singleton(n(0))));
        let keys = [
            "format_version",
            "target",
            "method",
            "objective",
            "nodes",
            "priors",
            "messages",
            "config",
        ];
        let positions: Vec<usize> = keys
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn version_checked() {
        let text = to_json(&document(&Subgraph::singleton(n(0))));
        let bumped = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(
            from_json::<ExplanationDocument>(&bumped),
            Err(Error::Document(_))
        ));
        assert!(from_json::<ExplanationDocument>("{\"target\": 0}").is_err());
        assert!(from_json::<ExplanationDocument>("not json").is_err());
    }

    #[test]
    fn documents_match_the_beam() {
        let mrf = counterexample();
        let full = run_bp(&mrf, &BpConfig::default()).unwrap();
        let config = SearchConfig {
            capacity: 2,
            beam_width: 2,
            ..SearchConfig::default()
        };
        let out = explain_documents(&mrf, &full, n(0), &config, true).unwrap();
        let beam = beam_search(&mrf, &full, n(0), &config).unwrap().beam;
        assert_eq!(out.candidates.len(), 2);
        for (doc, cand) in out.candidates.iter().zip(&beam.candidates) {
            assert_eq!(&doc.explanation(), cand);
            doc.check_objective(1e-9).unwrap();
        }
        let comb = out.comb.unwrap();
        assert_eq!(comb.method, MethodTag::Comb);
        assert_eq!(comb.size, 3);
        assert!(comb.objective < 1e-9);
        assert_eq!(out.bp_invocations, 2 + 2 + 1);
    }

    #[test]
    fn beliefs_document_lists_all_nodes() {
        let mrf = counterexample();
        let r = run_bp(&mrf, &BpConfig::default()).unwrap();
        let doc = BeliefsDocument::new(&mrf, &r);
        assert_eq!(doc.beliefs.len(), 3);
        assert!((doc.beliefs[0].belief.probs()[0] - 0.31818).abs() < 1e-4);
        let back: BeliefsDocument = from_json(&to_json(&doc)).unwrap();
        assert_eq!(back, doc);
    }
}
