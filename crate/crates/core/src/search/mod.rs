//! Beam search for small tree-shaped explanations of a target's belief.
//!
//! The search starts from the target alone and, over `capacity - 1` growth
//! steps, attaches one frontier node through exactly one edge per step, so
//! every candidate stays a tree. How extensions are ranked depends on the
//! method:
//!
//! * GE-G runs BP on every candidate extension and ranks by the symmetric KL
//!   divergence between the target's full-model and subgraph beliefs.
//! * GE-L never re-runs BP while growing; it back-traces the full model's
//!   converged messages, scoring how well an incoming message explains the
//!   belief (at the target) or the message an end-point already emits.
//! * Random-G / Random-L attach uniformly sampled admissible frontier nodes,
//!   under the structural constraints of GE-G or of a GE-L variant.
//!
//! Whatever the method, each surviving candidate gets a final BP run that
//! fills in its subgraph belief and objective.

mod geg;
mod gel;
mod prune;
mod random;
mod subgraph;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bp::{run_bp, BpConfig, BpResult};
use crate::distribution::{sym_kl, LabelDistribution};
use crate::error::{Error, Result};
use crate::mrf::{normalize_edge, Edge, Mrf, NodeId};

pub use geg::extend_geg;
pub use gel::{extend_gel, GelExtensions};
pub use prune::prune_frontier;
pub use random::{random_extend, RandomStructure};
pub use subgraph::{ExplanationSubgraph, Subgraph};

use subgraph::sort_ranked;

/// Search strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GE-G")]
    Geg,
    #[serde(rename = "GE-L")]
    Gel,
    #[serde(rename = "Random-G")]
    RandomG,
    #[serde(rename = "Random-L")]
    RandomL,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Geg, Method::Gel, Method::RandomG, Method::RandomL];

    pub fn name(self) -> &'static str {
        match self {
            Method::Geg => "GE-G",
            Method::Gel => "GE-L",
            Method::RandomG => "Random-G",
            Method::RandomL => "Random-L",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ge-g" | "geg" => Ok(Method::Geg),
            "ge-l" | "gel" => Ok(Method::Gel),
            "random-g" | "randomg" => Ok(Method::RandomG),
            "random-l" | "randoml" => Ok(Method::RandomL),
            _ => Err(Error::InvalidConfig(format!("unknown method '{s}'"))),
        }
    }
}

/// Provenance label carried by every explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodTag {
    #[serde(rename = "GE-G")]
    Geg,
    #[serde(rename = "GE-L")]
    Gel,
    #[serde(rename = "Random-G")]
    RandomG,
    #[serde(rename = "Random-L")]
    RandomL,
    Comb,
    /// User-edited subgraph evaluated as-is.
    #[serde(rename = "what-if")]
    WhatIf,
}

impl From<Method> for MethodTag {
    fn from(m: Method) -> Self {
        match m {
            Method::Geg => MethodTag::Geg,
            Method::Gel => MethodTag::Gel,
            Method::RandomG => MethodTag::RandomG,
            Method::RandomL => MethodTag::RandomL,
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodTag::Geg => f.write_str("GE-G"),
            MethodTag::Gel => f.write_str("GE-L"),
            MethodTag::RandomG => f.write_str("Random-G"),
            MethodTag::RandomL => f.write_str("Random-L"),
            MethodTag::Comb => f.write_str("Comb"),
            MethodTag::WhatIf => f.write_str("what-if"),
        }
    }
}

/// Structural constraint on which end-points GE-L (and Random-L) may extend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GelVariant {
    /// Any open end-point.
    #[default]
    Unconstrained,
    /// Only the most recently added node, producing chains.
    Chain,
    /// Only the target, producing stars of direct neighbors.
    DirectNeighbor,
}

impl GelVariant {
    pub fn name(self) -> &'static str {
        match self {
            GelVariant::Unconstrained => "unconstrained",
            GelVariant::Chain => "chain",
            GelVariant::DirectNeighbor => "direct-neighbor",
        }
    }

    /// Nodes of `sub` that may receive a new neighbor, before closure.
    pub(crate) fn extendable(self, sub: &Subgraph) -> Vec<NodeId> {
        match self {
            GelVariant::Unconstrained => sub.nodes.clone(),
            GelVariant::Chain => vec![sub.last_added()],
            GelVariant::DirectNeighbor => vec![sub.target],
        }
    }
}

impl fmt::Display for GelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unconstrained" => Ok(GelVariant::Unconstrained),
            "chain" => Ok(GelVariant::Chain),
            "direct-neighbor" | "star" => Ok(GelVariant::DirectNeighbor),
            _ => Err(Error::InvalidConfig(format!("unknown GE-L variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Maximum number of nodes in an explanation (`C`).
    pub capacity: usize,
    /// Beam width (`k`).
    pub beam_width: usize,
    pub method: Method,
    pub gel_variant: GelVariant,
    /// Fraction of newly scored frontier nodes abandoned for the rest of a
    /// target's search (GE-G only).
    pub pruning_rate: f64,
    pub seed: u64,
    pub bp: BpConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            capacity: 5,
            beam_width: 1,
            method: Method::Geg,
            gel_variant: GelVariant::Unconstrained,
            pruning_rate: 0.0,
            seed: 0,
            bp: BpConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("capacity must be at least 1".into()));
        }
        if self.beam_width == 0 {
            return Err(Error::InvalidConfig("beam width must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.pruning_rate) {
            return Err(Error::InvalidConfig(format!(
                "pruning rate must lie in [0, 1), got {}",
                self.pruning_rate
            )));
        }
        self.bp.validate()
    }
}

/// Final candidates, ascending by objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub candidates: Vec<ExplanationSubgraph>,
}

impl Beam {
    pub fn best(&self) -> Option<&ExplanationSubgraph> {
        self.candidates.first()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub beam: Beam,
    /// BP runs on candidate subgraphs, including the final re-evaluation.
    pub bp_invocations: usize,
    /// Beam contents after each growth step; `steps[0]` is the initial beam.
    pub steps: Vec<Vec<Subgraph>>,
}

/// Every `(node, attaching edge)` pair with the node outside `sub` and the
/// edge joining it to a node inside. Sorted by node, then edge.
pub fn frontier(mrf: &Mrf, sub: &Subgraph) -> Result<Vec<(NodeId, Edge)>> {
    let inside: BTreeSet<NodeId> = sub.nodes.iter().copied().collect();
    let mut pairs = Vec::new();
    for &w in &inside {
        let wi = mrf.require(w)?;
        for &yi in mrf.neighbors(wi) {
            let y = mrf.id(yi);
            if !inside.contains(&y) {
                pairs.push((y, normalize_edge(y, w)));
            }
        }
    }
    pairs.sort_unstable();
    Ok(pairs)
}

/// BP settings for a subgraph: exact tree schedule when acyclic, the given
/// loopy settings otherwise.
fn settings_for(sub: &Subgraph, bp: &BpConfig) -> BpConfig {
    if sub.is_tree() {
        bp.for_tree(sub.len())
    } else {
        *bp
    }
}

/// Subgraph model and converged BP state behind an evaluated explanation.
#[derive(Debug, Clone)]
pub struct EvaluationDetail {
    pub explanation: ExplanationSubgraph,
    pub model: Mrf,
    pub bp: BpResult,
}

/// Runs BP on the subgraph and scores the target's belief against `full_belief`.
pub fn evaluate_detailed(
    mrf: &Mrf,
    full_belief: &LabelDistribution,
    sub: &Subgraph,
    bp: &BpConfig,
    method: MethodTag,
) -> Result<EvaluationDetail> {
    sub.validate_against(mrf)?;
    let model = mrf.induced_subgraph(&sub.nodes, &sub.edges)?;
    let result = run_bp(&model, &settings_for(sub, bp))?;
    let belief = result.belief(sub.target)?.clone();
    let objective = sym_kl(full_belief, &belief)?;
    Ok(EvaluationDetail {
        explanation: ExplanationSubgraph {
            subgraph: sub.clone(),
            belief_on_subgraph: belief,
            objective,
            method,
        },
        model,
        bp: result,
    })
}

/// Runs BP on the subgraph and fills in the target belief and objective.
pub fn evaluate_candidate(
    mrf: &Mrf,
    full_belief: &LabelDistribution,
    sub: &Subgraph,
    bp: &BpConfig,
    method: MethodTag,
) -> Result<ExplanationSubgraph> {
    evaluate_detailed(mrf, full_belief, sub, bp, method).map(|d| d.explanation)
}

/// A partially grown candidate and the score it is ranked by in the beam.
#[derive(Debug, Clone)]
struct Branch {
    sub: Subgraph,
    score: f64,
}

fn retain_top(mut pool: Vec<Branch>, k: usize) -> Vec<Branch> {
    sort_ranked(&mut pool, |b| b.score, |b| &b.sub);
    let mut seen = BTreeSet::new();
    pool.retain(|b| seen.insert(b.sub.structure_key()));
    pool.truncate(k);
    pool
}

/// Per-target seed so results do not depend on scheduling.
fn target_rng(seed: u64, target: NodeId) -> ChaCha8Rng {
    let mixed = seed ^ target.0.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Grows explanations for `target` and evaluates the final beam.
pub fn beam_search(
    mrf: &Mrf,
    full: &BpResult,
    target: NodeId,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    config.validate()?;
    mrf.require(target)?;
    let full_belief = full.belief(target)?;
    let k = config.beam_width;
    let mut rng = target_rng(config.seed, target);
    let mut pruned: BTreeSet<NodeId> = BTreeSet::new();
    let mut scored: BTreeSet<NodeId> = BTreeSet::new();
    let mut bp_invocations = 0;

    let mut beam = vec![Branch {
        sub: Subgraph::singleton(target),
        score: f64::INFINITY,
    }];
    let mut steps = vec![vec![beam[0].sub.clone()]];

    for _ in 2..=config.capacity {
        let mut pool = Vec::new();
        let mut first_scores: Vec<(NodeId, f64)> = Vec::new();
        for branch in &beam {
            let extensions: Vec<Branch> = match config.method {
                Method::Geg => {
                    let all =
                        geg::evaluate_frontier(mrf, full_belief, &branch.sub, &pruned, &config.bp)?;
                    bp_invocations += all.len();
                    if config.pruning_rate > 0.0 {
                        for e in &all {
                            let added = e.subgraph.last_added();
                            if !scored.contains(&added) {
                                first_scores.push((added, e.objective));
                            }
                        }
                    }
                    all.into_iter()
                        .take(k)
                        .map(|e| Branch {
                            score: e.objective,
                            sub: e.subgraph,
                        })
                        .collect()
                }
                Method::Gel => {
                    let step = extend_gel(mrf, full, &branch.sub, k, config.gel_variant)?;
                    if step.extensions.is_empty() {
                        let mut stopped = branch.clone();
                        stopped.sub.closed_endpoints = step.closed;
                        pool.push(stopped);
                        continue;
                    }
                    step.extensions
                        .into_iter()
                        .map(|(sub, score)| Branch { sub, score })
                        .collect()
                }
                Method::RandomG | Method::RandomL => {
                    let structure = match config.method {
                        Method::RandomG => RandomStructure::Global,
                        _ => RandomStructure::Local(config.gel_variant),
                    };
                    random::sample_extensions(mrf, &branch.sub, k, structure, &mut rng)?
                        .into_iter()
                        .map(|sub| Branch { sub, score: 0.0 })
                        .collect()
                }
            };
            if extensions.is_empty() {
                pool.push(branch.clone());
            } else {
                pool.extend(extensions);
            }
        }

        beam = match config.method {
            // Random branches keep sampling order; only duplicates are dropped.
            Method::RandomG | Method::RandomL => {
                let mut seen = BTreeSet::new();
                pool.retain(|b| seen.insert(b.sub.structure_key()));
                pool.truncate(k);
                pool
            }
            _ => retain_top(pool, k),
        };

        if !first_scores.is_empty() {
            // A node scored by several branches keeps its best score.
            first_scores.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            first_scores.dedup_by_key(|s| s.0);
            let retained = prune_frontier(&first_scores, config.pruning_rate);
            for &(node, _) in &first_scores {
                scored.insert(node);
                if !retained.contains(&node) {
                    pruned.insert(node);
                }
            }
        }
        steps.push(beam.iter().map(|b| b.sub.clone()).collect());
    }

    let tag = MethodTag::from(config.method);
    let mut candidates = beam
        .iter()
        .map(|b| evaluate_candidate(mrf, full_belief, &b.sub, &config.bp, tag))
        .collect::<Result<Vec<_>>>()?;
    bp_invocations += candidates.len();
    sort_ranked(&mut candidates, |c| c.objective, |c| &c.subgraph);

    Ok(SearchOutcome {
        beam: Beam { candidates },
        bp_invocations,
        steps,
    })
}

/// Union of all beam candidates evaluated as one explanation. The union may
/// contain cycles, in which case loopy BP with `bp` is used.
pub fn combine(
    beam: &Beam,
    mrf: &Mrf,
    full_belief: &LabelDistribution,
    bp: &BpConfig,
) -> Result<ExplanationSubgraph> {
    let first = beam
        .candidates
        .first()
        .ok_or_else(|| Error::InvalidSubgraph("cannot combine an empty beam".into()))?;
    let mut union = Subgraph::singleton(first.target());
    let mut edges = BTreeSet::new();
    for cand in &beam.candidates {
        if cand.target() != union.target {
            return Err(Error::InvalidSubgraph(
                "beam candidates explain different targets".into(),
            ));
        }
        for &n in &cand.subgraph.nodes {
            if !union.contains(n) {
                union.nodes.push(n);
            }
        }
        for &e in &cand.subgraph.edges {
            if edges.insert(normalize_edge(e.0, e.1)) {
                union.edges.push(normalize_edge(e.0, e.1));
            }
        }
        for &c in &cand.subgraph.closed_endpoints {
            union.close(c);
        }
    }
    evaluate_candidate(mrf, full_belief, &union, bp, MethodTag::Comb)
}

#[cfg(test)]
mod tests;
