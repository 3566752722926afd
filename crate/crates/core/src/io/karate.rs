//! Zachary's karate club network (34 members, 78 ties), zero-indexed.

use std::collections::BTreeMap;

use crate::mrf::{Edge, NodeId};

const ADJACENCY: &[(u64, &[u64])] = &[
    (0, &[1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 17, 19, 21, 31]),
    (1, &[2, 3, 7, 13, 17, 19, 21, 30]),
    (2, &[3, 7, 8, 9, 13, 27, 28, 32]),
    (3, &[7, 12, 13]),
    (4, &[6, 10]),
    (5, &[6, 10, 16]),
    (6, &[16]),
    (8, &[30, 32, 33]),
    (9, &[33]),
    (13, &[33]),
    (14, &[32, 33]),
    (15, &[32, 33]),
    (18, &[32, 33]),
    (19, &[33]),
    (20, &[32, 33]),
    (22, &[32, 33]),
    (23, &[25, 27, 29, 32, 33]),
    (24, &[25, 27, 31]),
    (25, &[31]),
    (26, &[29, 33]),
    (27, &[33]),
    (28, &[31, 33]),
    (29, &[32, 33]),
    (30, &[32, 33]),
    (31, &[32, 33]),
    (32, &[33]),
];

/// Members who sided with the instructor (node 0) after the split; the rest
/// followed the administrator (node 33).
const INSTRUCTOR_FACTION: &[u64] = &[0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 16, 17, 19, 21];

pub const INSTRUCTOR: NodeId = NodeId(0);
pub const ADMINISTRATOR: NodeId = NodeId(33);

pub fn karate_edges() -> Vec<Edge> {
    ADJACENCY
        .iter()
        .flat_map(|&(u, vs)| vs.iter().map(move |&v| (NodeId(u), NodeId(v))))
        .collect()
}

/// Faction of every member: class 1 for the instructor's side, 2 otherwise.
pub fn karate_factions() -> BTreeMap<NodeId, usize> {
    (0..34)
        .map(|i| {
            (
                NodeId(i),
                if INSTRUCTOR_FACTION.contains(&i) {
                    1
                } else {
                    2
                },
            )
        })
        .collect()
}

/// The network with only the two faction heads labeled.
pub fn karate_club() -> (Vec<Edge>, BTreeMap<NodeId, usize>) {
    let labels = BTreeMap::from([(INSTRUCTOR, 1), (ADMINISTRATOR, 2)]);
    (karate_edges(), labels)
}
