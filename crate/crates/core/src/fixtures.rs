//! Small hand-checkable models.

use crate::distribution::{CompatibilityMatrix, LabelDistribution};
use crate::mrf::{Mrf, NodeId};

/// Three-node star on which the faithfulness objective is neither monotone
/// nor submodular.
///
/// Node 0 (`X`) has prior `[0.5, 0.5]` and is joined to node 1 (`Y`, prior
/// `[0.8, 0.2]`) and node 2 (`Z`, prior `[0.1, 0.9]`). Both edges carry the
/// homophily potential with 0.99 on the diagonal.
pub fn counterexample() -> Mrf {
    let potential = CompatibilityMatrix::homophily(2, 0.99).expect("valid potential");
    let mut b = Mrf::builder(2);
    for (id, prior) in [(0, [0.5, 0.5]), (1, [0.8, 0.2]), (2, [0.1, 0.9])] {
        b.add_node(
            NodeId(id),
            LabelDistribution::new(prior.to_vec()).expect("valid prior"),
        )
        .expect("distinct nodes");
    }
    b.add_edge(NodeId(0), NodeId(1), potential.clone())
        .expect("valid edge");
    b.add_edge(NodeId(0), NodeId(2), potential)
        .expect("valid edge");
    b.build().expect("valid model")
}
