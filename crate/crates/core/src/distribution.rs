//! Class distributions, pairwise compatibility matrices and the divergences
//! used to compare beliefs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Lower clamp applied to probabilities before any logarithm or division.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// A probability vector over `c >= 2` classes.
///
/// Priors, messages and beliefs all share this representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    /// Validates `probs` as-is: at least two classes, non-negative finite
    /// entries, unit mass within [`NORMALIZATION_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Scales non-negative weights to unit mass. Returns `None` when every
    /// weight is zero (or the input is otherwise not normalizable).
    pub fn from_weights(mut weights: Vec<f64>) -> Option<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() || weights.len() < 2 {
            return None;
        }
        for w in &mut weights {
            *w /= total;
        }
        Some(Self(weights))
    }

    pub fn uniform(classes: usize) -> Self {
        assert!(classes >= 2, "a distribution needs at least two classes");
        Self(vec![1.0 / classes as f64; classes])
    }

    /// Prior for a labeled node: `confidence` on `class` (0-based), the rest
    /// spread evenly over the other classes.
    pub fn peaked(classes: usize, class: usize, confidence: f64) -> Result<Self> {
        if classes < 2 || class >= classes {
            return Err(Error::InvalidDistribution(format!(
                "class {class} out of range for {classes} classes"
            )));
        }
        let rest = (1.0 - confidence) / (classes - 1) as f64;
        let mut probs = vec![rest; classes];
        probs[class] = confidence;
        Self::new(probs)
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for LabelDistribution {
    type Output = f64;

    fn index(&self, class: usize) -> &f64 {
        &self.0[class]
    }
}

/// A `c x c` table of strictly positive pairwise compatibilities.
///
/// Stored row-major. For an edge `(u, v)` with `u < v`, entry `(a, b)` scores
/// `u = a, v = b`; the reverse orientation reads the transpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityMatrix {
    classes: usize,
    entries: Vec<f64>,
}

impl CompatibilityMatrix {
    pub fn new(classes: usize, entries: Vec<f64>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidPotential(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if entries.len() != classes * classes {
            return Err(Error::InvalidPotential(format!(
                "expected {} entries, got {}",
                classes * classes,
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|e| !e.is_finite() || **e <= 0.0) {
            return Err(Error::InvalidPotential(format!(
                "entry {e} is not strictly positive"
            )));
        }
        Ok(Self { classes, entries })
    }

    /// `strength` on the diagonal and `(1 - strength) / (c - 1)` elsewhere.
    pub fn homophily(classes: usize, strength: f64) -> Result<Self> {
        if !(strength > 0.0 && strength < 1.0) {
            return Err(Error::InvalidPotential(format!(
                "homophily strength {strength} must lie in (0, 1)"
            )));
        }
        if classes < 2 {
            return Err(Error::InvalidPotential(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        let off = (1.0 - strength) / (classes - 1) as f64;
        let entries = (0..classes * classes)
            .map(|i| {
                if i / classes == i % classes {
                    strength
                } else {
                    off
                }
            })
            .collect();
        Self::new(classes, entries)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Entry for `(row, col)` in the stored orientation.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.classes + col]
    }

    pub fn transposed(&self) -> Self {
        let c = self.classes;
        let entries = (0..c * c).map(|i| self.get(i % c, i / c)).collect();
        Self {
            classes: c,
            entries,
        }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

#[inline]
fn clamp(p: f64) -> f64 {
    p.clamp(PROBABILITY_FLOOR, 1.0)
}

/// `KL(p || q)` in nats, with both arguments clamped to `[1e-12, 1]`.
pub fn kl(p: &LabelDistribution, q: &LabelDistribution) -> Result<f64> {
    kl_slices(p.probs(), q.probs())
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let value: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let (a, b) = (clamp(a), clamp(b));
            a * (a / b).ln()
        })
        .sum();
    // Clamping can leave tiny negative round-off for near-identical inputs.
    Ok(value.max(0.0))
}

/// Symmetric divergence `KL(p || q) + KL(q || p)`; the faithfulness measure.
pub fn sym_kl(p: &LabelDistribution, q: &LabelDistribution) -> Result<f64> {
    sym_kl_slices(p.probs(), q.probs())
}

pub(crate) fn sym_kl_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(kl_slices(p, q)? + kl_slices(q, p)?)
}
