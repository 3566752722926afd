use std::collections::BTreeSet;

use crate::mrf::NodeId;

/// Keeps the `ceil((1 - rate) * n)` best-scoring nodes (lowest objective,
/// ties by id) out of `n` scored candidates.
pub fn prune_frontier(scored: &[(NodeId, f64)], rate: f64) -> BTreeSet<NodeId> {
    let mut ranked: Vec<(NodeId, f64)> = scored.to_vec();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    // The epsilon absorbs round-off such as (1 - 0.7) * 10 = 3.0000000000000004.
    let keep = (((1.0 - rate) * ranked.len() as f64) - 1e-9)
        .ceil()
        .max(0.0) as usize;
    ranked.into_iter().take(keep).map(|(n, _)| n).collect()
}
