use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::distribution::CompatibilityMatrix;
use crate::fixtures::counterexample;

const X: NodeId = NodeId(0);
const Y: NodeId = NodeId(1);
const Z: NodeId = NodeId(2);
const W: NodeId = NodeId(3);

fn full(mrf: &Mrf) -> BpResult {
    run_bp(mrf, &BpConfig::default()).unwrap()
}

fn config(method: Method, capacity: usize, k: usize) -> SearchConfig {
    SearchConfig {
        capacity,
        beam_width: k,
        method,
        ..SearchConfig::default()
    }
}

/// Four-node cycle X - Z - Y - W - X.
fn square() -> Mrf {
    let mut b = Mrf::builder(2);
    for (id, p) in [(X, 0.5), (Y, 0.7), (Z, 0.2), (W, 0.6)] {
        b.add_node(id, LabelDistribution::new(vec![p, 1.0 - p]).unwrap())
            .unwrap();
    }
    let pot = CompatibilityMatrix::homophily(2, 0.8).unwrap();
    for (u, v) in [(X, Z), (Z, Y), (Y, W), (W, X)] {
        b.add_edge(u, v, pot.clone()).unwrap();
    }
    b.build().unwrap()
}

fn objective(mrf: &Mrf, sub: &Subgraph) -> f64 {
    let f = full(mrf);
    evaluate_candidate(
        mrf,
        f.belief(sub.target).unwrap(),
        sub,
        &BpConfig::default(),
        MethodTag::Geg,
    )
    .unwrap()
    .objective
}

#[test]
fn frontier_of_counterexample_target() {
    let m = counterexample();
    let f = frontier(&m, &Subgraph::singleton(X)).unwrap();
    assert_eq!(f, vec![(Y, (X, Y)), (Z, (X, Z))]);
    let whole = Subgraph::singleton(X)
        .extended(Y, (X, Y))
        .extended(Z, (X, Z));
    assert!(frontier(&m, &whole).unwrap().is_empty());
}

#[test]
fn frontier_lists_each_attaching_edge() {
    let m = square();
    let sub = Subgraph::singleton(X)
        .extended(Z, (X, Z))
        .extended(W, (X, W));
    let f = frontier(&m, &sub).unwrap();
    assert_eq!(
        f,
        vec![(Y, (Y, Z)), (Y, (Y, W))]
            .into_iter()
            .map(|(n, (a, b))| (n, normalize_edge(a, b)))
            .collect::<Vec<_>>()
    );
}

#[test]
fn counterexample_objectives() {
    let m = counterexample();
    let single = Subgraph::singleton(X);
    let with_z = single.extended(Z, (X, Z));
    let with_y = single.extended(Y, (X, Y));
    let whole = with_z.extended(Y, (X, Y));
    let d0 = objective(&m, &single);
    let dz = objective(&m, &with_z);
    let dy = objective(&m, &with_y);
    let dfull = objective(&m, &whole);
    assert!((d0 - 0.1386).abs() < 1e-3, "{d0}");
    assert!((dz - 0.2836).abs() < 1e-3, "{dz}");
    assert!((dy - 1.0046).abs() < 1e-3, "{dy}");
    assert!(dfull.abs() < 1e-9, "{dfull}");
    // adding Y to {X} makes things worse
    assert!(dy > d0);
    // gain of Y is larger on the superset {X, Z}
    assert!((-dy) - (-d0) < (-dfull) - (-dz));
}

#[test]
fn subgraph_belief_on_pair() {
    let m = counterexample();
    let f = full(&m);
    let e = evaluate_candidate(
        &m,
        f.belief(X).unwrap(),
        &Subgraph::singleton(X).extended(Z, (X, Z)),
        &BpConfig::default(),
        MethodTag::Geg,
    )
    .unwrap();
    assert!((e.belief_on_subgraph[0] - 0.108).abs() < 1e-12);
}

#[test]
fn geg_extension_order() {
    let m = counterexample();
    let f = full(&m);
    let bx = f.belief(X).unwrap();
    let none = BTreeSet::new();
    let one = extend_geg(
        &m,
        bx,
        &Subgraph::singleton(X),
        1,
        &none,
        &BpConfig::default(),
    )
    .unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].subgraph.sorted_nodes(), vec![X, Z]);
    let two = extend_geg(
        &m,
        bx,
        &Subgraph::singleton(X),
        2,
        &none,
        &BpConfig::default(),
    )
    .unwrap();
    assert_eq!(two[0].subgraph.sorted_nodes(), vec![X, Z]);
    assert_eq!(two[1].subgraph.sorted_nodes(), vec![X, Y]);
    let whole = Subgraph::singleton(X)
        .extended(Y, (X, Y))
        .extended(Z, (X, Z));
    assert!(extend_geg(&m, bx, &whole, 2, &none, &BpConfig::default())
        .unwrap()
        .is_empty());
    let pruned = BTreeSet::from([Z]);
    let without_z = extend_geg(
        &m,
        bx,
        &Subgraph::singleton(X),
        2,
        &pruned,
        &BpConfig::default(),
    )
    .unwrap();
    assert_eq!(without_z.len(), 1);
    assert_eq!(without_z[0].subgraph.sorted_nodes(), vec![X, Y]);
}

#[test]
fn gel_picks_closest_incoming_message() {
    let m = counterexample();
    let f = full(&m);
    let step = extend_gel(
        &m,
        &f,
        &Subgraph::singleton(X),
        2,
        GelVariant::Unconstrained,
    )
    .unwrap();
    assert_eq!(step.extensions.len(), 2);
    let (best, score) = &step.extensions[0];
    assert_eq!(best.sorted_nodes(), vec![X, Z]);
    assert!((score - 0.2836).abs() < 1e-3);
    assert!((step.extensions[1].1 - 1.0046).abs() < 1e-3);
    assert!(step.closed.is_empty());
}

#[test]
fn gel_closes_endpoint_whose_prior_explains_its_message() {
    // X - U - V with U and V uniform: m_{U->X} is uniform and equals phi_U, and
    // the only competing message m_{V->U} is uniform too; the prior wins ties.
    let (u, v) = (NodeId(1), NodeId(2));
    let mut b = Mrf::builder(2);
    b.add_node(X, LabelDistribution::new(vec![0.9, 0.1]).unwrap())
        .unwrap();
    b.add_node(u, LabelDistribution::uniform(2)).unwrap();
    b.add_node(v, LabelDistribution::uniform(2)).unwrap();
    let pot = CompatibilityMatrix::homophily(2, 0.9).unwrap();
    b.add_edge(X, u, pot.clone()).unwrap();
    b.add_edge(u, v, pot).unwrap();
    let m = b.build().unwrap();
    let f = full(&m);
    let sub = Subgraph::singleton(X).extended(u, (X, u));
    let step = extend_gel(&m, &f, &sub, 3, GelVariant::Unconstrained).unwrap();
    assert!(step.extensions.is_empty());
    assert_eq!(step.closed, vec![u]);

    // A closed end-point stays closed through the whole search.
    let out = beam_search(
        &m,
        &f,
        X,
        &SearchConfig {
            method: Method::Gel,
            capacity: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let best = out.beam.best().unwrap();
    assert_eq!(best.subgraph.sorted_nodes(), vec![X, u]);
    assert_eq!(best.subgraph.closed_endpoints, vec![u]);
}

#[test]
fn gel_chain_only_extends_newest_node() {
    // path 0 - 1 - 2 - 3 with target 1: after adding 0, only 0 may grow.
    let mut b = Mrf::builder(2);
    for (i, p) in [0.8, 0.5, 0.3, 0.9].into_iter().enumerate() {
        b.add_node(
            NodeId(i as u64),
            LabelDistribution::new(vec![p, 1.0 - p]).unwrap(),
        )
        .unwrap();
    }
    let pot = CompatibilityMatrix::homophily(2, 0.9).unwrap();
    for i in 0..3 {
        b.add_edge(NodeId(i), NodeId(i + 1), pot.clone()).unwrap();
    }
    let m = b.build().unwrap();
    let f = full(&m);
    let sub = Subgraph::singleton(NodeId(1)).extended(NodeId(0), (NodeId(0), NodeId(1)));
    let chain = extend_gel(&m, &f, &sub, 5, GelVariant::Chain).unwrap();
    // node 0 is a leaf: only its prior is left, so it closes.
    assert!(chain.extensions.is_empty());
    assert_eq!(chain.closed, vec![NodeId(0)]);
    let open = extend_gel(&m, &f, &sub, 5, GelVariant::Unconstrained).unwrap();
    assert_eq!(open.extensions.len(), 1);
    assert!(open.extensions[0].0.contains(NodeId(2)));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grown = random_extend(
        &m,
        &sub,
        &mut rng,
        RandomStructure::Local(GelVariant::Chain),
    )
    .unwrap();
    assert!(grown.is_none());
    let star = random_extend(
        &m,
        &sub,
        &mut rng,
        RandomStructure::Local(GelVariant::DirectNeighbor),
    )
    .unwrap()
    .unwrap();
    assert_eq!(star.last_added(), NodeId(2));
}

#[test]
fn random_extend_picks_both_neighbors_over_seeds() {
    let m = counterexample();
    let mut seen = BTreeSet::new();
    for seed in 0..64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_extend(
            &m,
            &Subgraph::singleton(X),
            &mut rng,
            RandomStructure::Global,
        )
        .unwrap()
        .unwrap();
        seen.insert(s.last_added());
    }
    assert_eq!(seen, BTreeSet::from([Y, Z]));
    let whole = Subgraph::singleton(X)
        .extended(Y, (X, Y))
        .extended(Z, (X, Z));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(random_extend(&m, &whole, &mut rng, RandomStructure::Global)
        .unwrap()
        .is_none());
}

#[test]
fn greedy_search_recovers_full_counterexample() {
    let m = counterexample();
    let f = full(&m);
    let out = beam_search(&m, &f, X, &config(Method::Geg, 3, 1)).unwrap();
    let best = out.beam.best().unwrap();
    assert_eq!(best.subgraph.nodes, vec![X, Z, Y]);
    assert!(best.objective.abs() < 1e-9);
    assert_eq!(out.bp_invocations, 4);
    assert_eq!(out.steps.len(), 3);
}

#[test]
fn capacity_one_is_target_alone() {
    let m = counterexample();
    let f = full(&m);
    for method in Method::ALL {
        let out = beam_search(&m, &f, X, &config(method, 1, 3)).unwrap();
        assert_eq!(out.beam.len(), 1);
        let only = out.beam.best().unwrap();
        assert_eq!(only.subgraph.nodes, vec![X]);
        assert_eq!(only.belief_on_subgraph.probs(), &[0.5, 0.5]);
        let expected = sym_kl(f.belief(X).unwrap(), &LabelDistribution::uniform(2)).unwrap();
        assert_eq!(only.objective, expected);
        assert_eq!(out.bp_invocations, 1);
    }
}

#[test]
fn unknown_target_is_rejected() {
    let m = counterexample();
    let f = full(&m);
    assert_eq!(
        beam_search(&m, &f, NodeId(9), &SearchConfig::default()).unwrap_err(),
        Error::UnknownNode(NodeId(9))
    );
    let bad = SearchConfig {
        pruning_rate: 1.0,
        ..Default::default()
    };
    assert!(beam_search(&m, &f, X, &bad).is_err());
}

#[test]
fn beam_is_sorted_and_distinct() {
    let m = square();
    let f = full(&m);
    let out = beam_search(&m, &f, X, &config(Method::Geg, 3, 3)).unwrap();
    assert_eq!(out.beam.len(), 3);
    let keys: BTreeSet<_> = out
        .beam
        .candidates
        .iter()
        .map(|c| c.subgraph.structure_key())
        .collect();
    assert_eq!(keys.len(), 3);
    for w in out.beam.candidates.windows(2) {
        assert!(w[0].objective <= w[1].objective);
    }
    for c in &out.beam.candidates {
        assert!(c.subgraph.is_tree());
    }
}

#[test]
fn combine_single_candidate_is_identity() {
    let m = counterexample();
    let f = full(&m);
    let out = beam_search(&m, &f, X, &config(Method::Geg, 2, 1)).unwrap();
    let comb = combine(&out.beam, &m, f.belief(X).unwrap(), &BpConfig::default()).unwrap();
    let best = out.beam.best().unwrap();
    assert_eq!(comb.subgraph, best.subgraph);
    assert_eq!(comb.belief_on_subgraph, best.belief_on_subgraph);
    assert_eq!(comb.objective, best.objective);
    assert_eq!(comb.method, MethodTag::Comb);
}

#[test]
fn combine_unions_share_target() {
    let m = counterexample();
    let f = full(&m);
    let out = beam_search(&m, &f, X, &config(Method::Geg, 2, 2)).unwrap();
    assert_eq!(out.beam.len(), 2);
    let comb = combine(&out.beam, &m, f.belief(X).unwrap(), &BpConfig::default()).unwrap();
    assert_eq!(comb.size(), 2 + 2 - 1);
    assert!(comb.objective.abs() < 1e-9);

    // Union over a cycle keeps connectivity but not acyclicity.
    let sq = square();
    let fs = full(&sq);
    let out = beam_search(&sq, &fs, X, &config(Method::Geg, 4, 3)).unwrap();
    let comb = combine(&out.beam, &sq, fs.belief(X).unwrap(), &BpConfig::default()).unwrap();
    assert!(comb.subgraph.is_connected());
    assert!(comb.size() <= 3 * 4);
    assert!(combine(
        &Beam { candidates: vec![] },
        &sq,
        fs.belief(X).unwrap(),
        &BpConfig::default()
    )
    .is_err());
}

#[test]
fn searches_are_deterministic() {
    let m = square();
    let f = full(&m);
    for method in Method::ALL {
        let cfg = SearchConfig {
            seed: 11,
            ..config(method, 4, 2)
        };
        let a = beam_search(&m, &f, Y, &cfg).unwrap();
        let b = beam_search(&m, &f, Y, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn zero_pruning_matches_unpruned_path() {
    let m = square();
    let f = full(&m);
    let a = beam_search(&m, &f, X, &config(Method::Geg, 4, 2)).unwrap();
    let b = beam_search(
        &m,
        &f,
        X,
        &SearchConfig {
            pruning_rate: 0.0,
            ..config(Method::Geg, 4, 2)
        },
    )
    .unwrap();
    assert_eq!(a, b);
    let p = beam_search(
        &m,
        &f,
        X,
        &SearchConfig {
            pruning_rate: 0.5,
            ..config(Method::Geg, 4, 1)
        },
    )
    .unwrap();
    let u = beam_search(&m, &f, X, &config(Method::Geg, 4, 1)).unwrap();
    assert!(p.bp_invocations <= u.bp_invocations);
}
