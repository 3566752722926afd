use std::collections::BTreeSet;

use crate::bp::BpConfig;
use crate::distribution::LabelDistribution;
use crate::error::Result;
use crate::mrf::{Mrf, NodeId};

use super::subgraph::sort_ranked;
use super::{evaluate_candidate, frontier, ExplanationSubgraph, MethodTag, Subgraph};

/// Evaluates every frontier extension of `sub` whose new node is not pruned,
/// ranked ascending by objective with the subgraph tie-break.
pub(super) fn evaluate_frontier(
    mrf: &Mrf,
    full_belief: &LabelDistribution,
    sub: &Subgraph,
    pruned: &BTreeSet<NodeId>,
    bp: &BpConfig,
) -> Result<Vec<ExplanationSubgraph>> {
    let mut evaluated = frontier(mrf, sub)?
        .into_iter()
        .filter(|(node, _)| !pruned.contains(node))
        .map(|(node, edge)| {
            evaluate_candidate(
                mrf,
                full_belief,
                &sub.extended(node, edge),
                bp,
                MethodTag::Geg,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    sort_ranked(&mut evaluated, |e| e.objective, |e| &e.subgraph);
    Ok(evaluated)
}

/// The `k` best single-node extensions of `sub` by full BP re-evaluation.
/// An empty result means the branch cannot grow.
pub fn extend_geg(
    mrf: &Mrf,
    full_belief: &LabelDistribution,
    sub: &Subgraph,
    k: usize,
    pruned: &BTreeSet<NodeId>,
    bp: &BpConfig,
) -> Result<Vec<ExplanationSubgraph>> {
    let mut all = evaluate_frontier(mrf, full_belief, sub, pruned, bp)?;
    all.truncate(k);
    Ok(all)
}
