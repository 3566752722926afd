use std::collections::BTreeSet;

use crate::bp::BpResult;
use crate::distribution::sym_kl_slices;
use crate::error::{Error, Result};
use crate::mrf::{normalize_edge, Mrf, NodeId};

use super::subgraph::sort_ranked;
use super::{GelVariant, Subgraph};

/// Result of one GE-L growth step for a single branch.
#[derive(Debug, Clone, PartialEq)]
pub struct GelExtensions {
    /// Up to `k` extended subgraphs with their back-tracing scores, ascending.
    pub extensions: Vec<(Subgraph, f64)>,
    /// Closed end-points after this step, including any closed just now.
    pub closed: Vec<NodeId>,
}

/// One step of local message back-tracing on the full model's converged
/// messages.
///
/// Each open end-point `U` explains a quantity already in the subgraph: the
/// target's belief when `U` is the target, otherwise the message `U` sends to
/// the node it was attached through. Every incoming message `m_{Z->U}` from a
/// node `Z` outside the subgraph is scored against that quantity with the
/// symmetric KL divergence; away from the target, `U`'s own prior competes
/// too. When the prior scores best (ties included) `U` is closed. Otherwise each
/// message option becomes a candidate extension attaching `Z` through
/// `(Z, U)`. The `k` best candidates over all end-points are returned.
pub fn extend_gel(
    mrf: &Mrf,
    full: &BpResult,
    sub: &Subgraph,
    k: usize,
    variant: GelVariant,
) -> Result<GelExtensions> {
    let target = sub.target;
    let mut base = sub.clone();
    let mut options: Vec<(NodeId, NodeId, f64)> = Vec::new();

    for u in variant.extendable(sub) {
        if sub.is_closed(u) {
            continue;
        }
        let explained: &[f64] = if u == target {
            full.belief(target)?.probs()
        } else {
            let parent = sub
                .parent_of(u)
                .ok_or_else(|| Error::InvalidSubgraph(format!("node {u} has no attaching edge")))?;
            full.messages
                .get(mrf, u, parent)
                .ok_or(Error::NotAnEdge(u, parent))?
        };

        let ui = mrf.require(u)?;
        let mut incoming = Vec::new();
        for &zi in mrf.neighbors(ui) {
            let z = mrf.id(zi);
            if sub.contains(z) {
                continue;
            }
            let msg = full.messages.get(mrf, z, u).ok_or(Error::NotAnEdge(z, u))?;
            incoming.push((z, sym_kl_slices(msg, explained)?));
        }

        if u != target {
            let prior_score = sym_kl_slices(mrf.prior(ui).probs(), explained)?;
            let best = incoming.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
            if prior_score <= best {
                base.close(u);
                continue;
            }
        }
        options.extend(incoming.into_iter().map(|(z, s)| (z, u, s)));
    }

    let mut extensions: Vec<(Subgraph, f64)> = options
        .into_iter()
        .map(|(z, u, score)| (base.extended(z, normalize_edge(z, u)), score))
        .collect();
    sort_ranked(&mut extensions, |e| e.1, |e| &e.0);
    let mut seen = BTreeSet::new();
    extensions.retain(|(s, _)| seen.insert(s.structure_key()));
    extensions.truncate(k);
    Ok(GelExtensions {
        extensions,
        closed: base.closed_endpoints,
    })
}
