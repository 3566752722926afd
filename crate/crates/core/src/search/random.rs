use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::mrf::{Edge, Mrf, NodeId};

use super::{frontier, GelVariant, Subgraph};

/// Which structural constraints a random baseline imitates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomStructure {
    /// Any frontier node, attached anywhere (as GE-G).
    Global,
    /// Only at the end-points a GE-L variant may extend.
    Local(GelVariant),
}

fn admissible(
    mrf: &Mrf,
    sub: &Subgraph,
    structure: RandomStructure,
) -> Result<Vec<(NodeId, Edge)>> {
    let pairs = frontier(mrf, sub)?;
    Ok(match structure {
        RandomStructure::Global => pairs,
        RandomStructure::Local(variant) => {
            let allowed = variant.extendable(sub);
            pairs
                .into_iter()
                .filter(|(y, (a, b))| {
                    let attach = if a == y { b } else { a };
                    allowed.contains(attach)
                })
                .collect()
        }
    })
}

/// Attaches one uniformly chosen admissible frontier node, or returns `None`
/// when nothing is admissible.
pub fn random_extend<R: Rng + ?Sized>(
    mrf: &Mrf,
    sub: &Subgraph,
    rng: &mut R,
    structure: RandomStructure,
) -> Result<Option<Subgraph>> {
    let pairs = admissible(mrf, sub, structure)?;
    Ok(pairs.choose(rng).map(|&(y, e)| sub.extended(y, e)))
}

/// Up to `k` distinct random extensions, in sampling order.
pub(super) fn sample_extensions<R: Rng + ?Sized>(
    mrf: &Mrf,
    sub: &Subgraph,
    k: usize,
    structure: RandomStructure,
    rng: &mut R,
) -> Result<Vec<Subgraph>> {
    let pairs = admissible(mrf, sub, structure)?;
    Ok(pairs
        .choose_multiple(rng, k)
        .map(|&(y, e)| sub.extended(y, e))
        .collect())
}
