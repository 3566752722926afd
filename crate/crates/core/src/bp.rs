//! Sum-product belief propagation with a synchronous flooding schedule.
//!
//! Messages start uniform and every directed edge is updated from the previous
//! round's messages, in the global sorted order of directed edges. A run stops
//! when the largest entry-wise change of any message drops below the
//! tolerance, or when the iteration budget is spent. Every message and belief
//! is normalized to unit mass; a product that vanishes entirely is reported as
//! a degenerate model rather than silently renormalized.

use serde::{Deserialize, Serialize};

use crate::distribution::LabelDistribution;
use crate::error::{Error, Result};
use crate::mrf::{Mrf, NodeId};

/// Products are rescaled when their largest entry falls below this value.
const RESCALE_BELOW: f64 = 1e-150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Synchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    pub max_iters: usize,
    /// Stop once the L-infinity change over all message entries is below this.
    pub tolerance: f64,
    /// Weight of the previous message in each update, in `[0, 1)`.
    pub damping: f64,
    pub schedule: Schedule,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tolerance: 1e-6,
            damping: 0.0,
            schedule: Schedule::Synchronous,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        Ok(())
    }

    /// Settings for an acyclic model with `nodes` variables: undamped, with the
    /// iteration budget equal to the node count. Flooding reaches a bitwise
    /// fixed point within `diameter + 1 <= nodes` rounds, so the tolerance is
    /// tightened until only that fixed point stops the run early.
    pub fn for_tree(&self, nodes: usize) -> BpConfig {
        BpConfig {
            max_iters: nodes.max(1),
            tolerance: self.tolerance.min(1e-14),
            damping: 0.0,
            schedule: Schedule::Synchronous,
        }
    }
}

/// Messages for every directed edge of one model, in the model's slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageTable {
    classes: usize,
    values: Vec<f64>,
}

impl MessageTable {
    /// All messages set to the uniform distribution.
    pub fn uniform(mrf: &Mrf) -> Self {
        let c = mrf.class_count();
        Self {
            classes: c,
            values: vec![1.0 / c as f64; mrf.slot_count() * c],
        }
    }

    #[inline]
    pub(crate) fn slot(&self, slot: usize) -> &[f64] {
        &self.values[slot * self.classes..(slot + 1) * self.classes]
    }

    /// Message `from -> to`, if `(from, to)` is an edge of `mrf`.
    pub fn get<'a>(&'a self, mrf: &Mrf, from: NodeId, to: NodeId) -> Option<&'a [f64]> {
        let i = mrf.index_of(from)?;
        let j = mrf.index_of(to)?;
        mrf.slot(i, j).map(|s| self.slot(s))
    }

    pub fn distribution(&self, mrf: &Mrf, from: NodeId, to: NodeId) -> Result<LabelDistribution> {
        let m = self.get(mrf, from, to).ok_or(Error::NotAnEdge(from, to))?;
        Ok(LabelDistribution::from_weights(m.to_vec()).expect("stored messages are normalized"))
    }

    /// Overwrites the message `from -> to`.
    pub fn set(
        &mut self,
        mrf: &Mrf,
        from: NodeId,
        to: NodeId,
        msg: &LabelDistribution,
    ) -> Result<()> {
        let i = mrf.require(from)?;
        let j = mrf.require(to)?;
        let s = mrf.slot(i, j).ok_or(Error::NotAnEdge(from, to))?;
        if msg.classes() != self.classes {
            return Err(Error::ClassCountMismatch {
                expected: self.classes,
                found: msg.classes(),
            });
        }
        self.values[s * self.classes..(s + 1) * self.classes].copy_from_slice(msg.probs());
        Ok(())
    }

    /// All `(from, to, message)` triples in sorted directed-edge order.
    pub fn iter<'a>(
        &'a self,
        mrf: &'a Mrf,
    ) -> impl Iterator<Item = (NodeId, NodeId, &'a [f64])> + 'a {
        (0..mrf.node_count()).flat_map(move |i| {
            mrf.slots_of(i)
                .map(move |s| (mrf.id(i), mrf.id(mrf.slot_target(s)), self.slot(s)))
        })
    }
}

/// Beliefs of every node, keyed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTable {
    ids: Vec<NodeId>,
    beliefs: Vec<LabelDistribution>,
}

impl BeliefTable {
    pub fn get(&self, id: NodeId) -> Option<&LabelDistribution> {
        self.ids.binary_search(&id).ok().map(|i| &self.beliefs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &LabelDistribution)> {
        self.ids.iter().copied().zip(&self.beliefs)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpResult {
    pub messages: MessageTable,
    pub beliefs: BeliefTable,
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
}

impl BpResult {
    pub fn belief(&self, id: NodeId) -> Result<&LabelDistribution> {
        self.beliefs.get(id).ok_or(Error::UnknownNode(id))
    }
}

#[inline]
fn rescale(values: &mut [f64]) {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 && max < RESCALE_BELOW {
        for v in values.iter_mut() {
            *v /= max;
        }
    }
}

/// Writes the normalized update for directed slot `slot` (`i -> j`) into `out`.
/// Returns `false` when the unnormalized message is all zero.
fn message_into(
    mrf: &Mrf,
    messages: &MessageTable,
    from: usize,
    slot: usize,
    out: &mut [f64],
    scratch: &mut [f64],
) -> bool {
    let c = mrf.class_count();
    scratch.copy_from_slice(mrf.prior(from).probs());
    for s in mrf.slots_of(from) {
        if s == slot {
            continue;
        }
        let incoming = messages.slot(mrf.reverse_slot(s));
        for (p, m) in scratch.iter_mut().zip(incoming) {
            *p *= m;
        }
        rescale(scratch);
    }
    let mut total = 0.0;
    for (x_to, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (x_from, p) in scratch.iter().enumerate().take(c) {
            acc += mrf.slot_potential(from, slot, x_from, x_to) * p;
        }
        *o = acc;
        total += acc;
    }
    if !(total > 0.0) || !total.is_finite() {
        return false;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    true
}

/// Sum-product update for the message `from -> to` given the current messages.
pub fn compute_message(
    mrf: &Mrf,
    messages: &MessageTable,
    from: NodeId,
    to: NodeId,
) -> Result<LabelDistribution> {
    let i = mrf.require(from)?;
    let j = mrf.require(to)?;
    let slot = mrf.slot(i, j).ok_or(Error::NotAnEdge(from, to))?;
    let c = mrf.class_count();
    let mut out = vec![0.0; c];
    let mut scratch = vec![0.0; c];
    if !message_into(mrf, messages, i, slot, &mut out, &mut scratch) {
        return Err(Error::DegenerateMessage { from, to });
    }
    Ok(LabelDistribution::from_weights(out).expect("message is normalized"))
}

fn belief_at(mrf: &Mrf, messages: &MessageTable, node: usize) -> Result<LabelDistribution> {
    let mut acc = mrf.prior(node).probs().to_vec();
    for s in mrf.slots_of(node) {
        let incoming = messages.slot(mrf.reverse_slot(s));
        for (p, m) in acc.iter_mut().zip(incoming) {
            *p *= m;
        }
        rescale(&mut acc);
    }
    LabelDistribution::from_weights(acc).ok_or(Error::DegenerateBelief(mrf.id(node)))
}

/// Prior of `node` times all of its incoming messages, normalized.
pub fn belief(mrf: &Mrf, messages: &MessageTable, node: NodeId) -> Result<LabelDistribution> {
    belief_at(mrf, messages, mrf.require(node)?)
}

/// Runs belief propagation to convergence or until `config.max_iters` rounds.
///
/// Hitting the iteration cap is not an error; it shows up as
/// `converged == false` in the result.
pub fn run_bp(mrf: &Mrf, config: &BpConfig) -> Result<BpResult> {
    config.validate()?;
    let c = mrf.class_count();
    let mut current = MessageTable::uniform(mrf);
    let mut next = current.clone();
    let mut scratch = vec![0.0; c];
    let mut converged = mrf.slot_count() == 0;
    let mut iterations = 0;
    let mut max_residual = 0.0;

    while !converged && iterations < config.max_iters {
        iterations += 1;
        let mut residual: f64 = 0.0;
        for from in 0..mrf.node_count() {
            for slot in mrf.slots_of(from) {
                let out = &mut next.values[slot * c..(slot + 1) * c];
                if !message_into(mrf, &current, from, slot, out, &mut scratch) {
                    return Err(Error::DegenerateMessage {
                        from: mrf.id(from),
                        to: mrf.id(mrf.slot_target(slot)),
                    });
                }
                let old = current.slot(slot);
                if config.damping > 0.0 {
                    for (o, prev) in out.iter_mut().zip(old) {
                        *o = (1.0 - config.damping) * *o + config.damping * prev;
                    }
                }
                for (o, prev) in out.iter().zip(old) {
                    residual = residual.max((o - prev).abs());
                }
            }
        }
        std::mem::swap(&mut current, &mut next);
        max_residual = residual;
        converged = residual < config.tolerance;
    }

    let beliefs = (0..mrf.node_count())
        .map(|i| belief_at(mrf, &current, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(BpResult {
        messages: current,
        beliefs: BeliefTable {
            ids: mrf.node_ids().to_vec(),
            beliefs,
        },
        converged,
        iterations,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::CompatibilityMatrix;
    use crate::fixtures::counterexample;

    const X: NodeId = NodeId(0);
    const Y: NodeId = NodeId(1);
    const Z: NodeId = NodeId(2);

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn leaf_messages_match_hand_values() {
        let m = counterexample();
        let msgs = MessageTable::uniform(&m);
        let y = compute_message(&m, &msgs, Y, X).unwrap();
        assert_close(y.probs(), &[0.794, 0.206], 1e-12);
        let z = compute_message(&m, &msgs, Z, X).unwrap();
        assert_close(z.probs(), &[0.108, 0.892], 1e-12);
    }

    #[test]
    fn uniform_leaf_sends_uniform() {
        let mut b = Mrf::builder(3);
        b.add_node(NodeId(0), LabelDistribution::uniform(3))
            .unwrap();
        b.add_node(NodeId(1), LabelDistribution::uniform(3))
            .unwrap();
        b.add_edge(
            NodeId(0),
            NodeId(1),
            CompatibilityMatrix::homophily(3, 0.8).unwrap(),
        )
        .unwrap();
        let m = b.build().unwrap();
        let msg = compute_message(&m, &MessageTable::uniform(&m), NodeId(1), NodeId(0)).unwrap();
        assert_close(msg.probs(), &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn non_edge_is_rejected() {
        let m = counterexample();
        let err = compute_message(&m, &MessageTable::uniform(&m), Y, Z).unwrap_err();
        assert_eq!(err, Error::NotAnEdge(Y, Z));
    }

    #[test]
    fn degenerate_products_are_errors() {
        // Y has a hard prior on class 0 and receives hard evidence for class 1.
        let mut b = Mrf::builder(2);
        b.add_node(NodeId(0), LabelDistribution::uniform(2))
            .unwrap();
        b.add_node(NodeId(1), LabelDistribution::new(vec![1.0, 0.0]).unwrap())
            .unwrap();
        b.add_node(NodeId(2), LabelDistribution::uniform(2))
            .unwrap();
        let pot = CompatibilityMatrix::homophily(2, 0.9).unwrap();
        b.add_edge(NodeId(0), NodeId(1), pot.clone()).unwrap();
        b.add_edge(NodeId(1), NodeId(2), pot).unwrap();
        let m = b.build().unwrap();
        let mut msgs = MessageTable::uniform(&m);
        let hard = LabelDistribution::new(vec![0.0, 1.0]).unwrap();
        msgs.set(&m, NodeId(2), NodeId(1), &hard).unwrap();
        assert_eq!(
            compute_message(&m, &msgs, NodeId(1), NodeId(0)).unwrap_err(),
            Error::DegenerateMessage {
                from: NodeId(1),
                to: NodeId(0)
            }
        );
        assert_eq!(
            belief(&m, &msgs, NodeId(1)).unwrap_err(),
            Error::DegenerateBelief(NodeId(1))
        );
    }

    #[test]
    fn counterexample_full_belief() {
        let m = counterexample();
        let r = run_bp(&m, &BpConfig::default()).unwrap();
        assert!(r.converged);
        let bx = r.belief(X).unwrap();
        assert_close(bx.probs(), &[0.31818, 0.68182], 1e-4);
        // exact: .5*.794*.108 / (.5*.794*.108 + .5*.206*.892)
        let a = 0.794 * 0.108;
        let b = 0.206 * 0.892;
        assert_close(bx.probs(), &[a / (a + b), b / (a + b)], 1e-12);
    }

    #[test]
    fn belief_from_incoming_messages() {
        let m = counterexample();
        let mut msgs = MessageTable::uniform(&m);
        msgs.set(
            &m,
            Y,
            X,
            &LabelDistribution::new(vec![0.794, 0.206]).unwrap(),
        )
        .unwrap();
        msgs.set(
            &m,
            Z,
            X,
            &LabelDistribution::new(vec![0.108, 0.892]).unwrap(),
        )
        .unwrap();
        let bx = belief(&m, &msgs, X).unwrap();
        assert_close(bx.probs(), &[0.31818, 0.68182], 1e-4);
        assert_eq!(
            belief(&m, &MessageTable::uniform(&m), X).unwrap().probs(),
            &[0.5, 0.5]
        );
    }

    #[test]
    fn isolated_node_keeps_prior() {
        let mut b = Mrf::builder(2);
        let prior = LabelDistribution::new(vec![0.3, 0.7]).unwrap();
        b.add_node(NodeId(4), prior.clone()).unwrap();
        let m = b.build().unwrap();
        let r = run_bp(&m, &BpConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.belief(NodeId(4)).unwrap(), &prior);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let m = counterexample();
        let cfg = BpConfig {
            max_iters: 1,
            ..BpConfig::default()
        };
        let r = run_bp(&m, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.max_residual > 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(BpConfig {
            max_iters: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BpConfig {
            tolerance: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BpConfig {
            damping: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BpConfig::default().validate().is_ok());
    }

    #[test]
    fn damping_reaches_same_fixed_point_on_tree() {
        let m = counterexample();
        let plain = run_bp(&m, &BpConfig::default()).unwrap();
        let damped = run_bp(
            &m,
            &BpConfig {
                damping: 0.5,
                tolerance: 1e-12,
                max_iters: 500,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(damped.converged);
        assert_close(
            damped.belief(X).unwrap().probs(),
            plain.belief(X).unwrap().probs(),
            1e-9,
        );
    }
}
