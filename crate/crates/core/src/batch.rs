//! Explaining many targets on a worker pool.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{run_bp, BpResult};
use crate::error::{Error, Result};
use crate::io::FORMAT_VERSION;
use crate::mrf::{Mrf, NodeId};
use crate::search::{beam_search, combine, MethodTag, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub workers: usize,
    /// Also evaluate the union of each target's beam.
    pub combine: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            combine: false,
        }
    }
}

/// Outcome for one target. Failed targets carry `error` and no metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: NodeId,
    pub method: MethodTag,
    pub objective: Option<f64>,
    pub size: Option<usize>,
    pub bp_invocations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_size: Option<usize>,
    /// Seconds spent on this target's search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub targets: usize,
    pub failed: usize,
    /// Means over targets that succeeded; `None` when none did.
    pub mean_objective: Option<f64>,
    pub mean_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_mean_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_mean_size: Option<f64>,
    pub bp_invocations: usize,
    pub workers: usize,
    pub pruning_rate: f64,
    /// Seconds from dispatch of the first search to completion of the last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_wall_time: Option<f64>,
    /// Seconds spent on the shared full-model BP run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_bp_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub config: SearchConfig,
    pub full_bp_converged: bool,
    pub per_target: Vec<TargetReport>,
    pub aggregate: Aggregate,
}

impl RunReport {
    /// Same report with all wall-clock fields removed, so that it is a pure
    /// function of its inputs.
    pub fn without_timings(mut self) -> Self {
        for row in &mut self.per_target {
            row.wall_time = None;
        }
        self.aggregate.total_wall_time = None;
        self.aggregate.full_bp_time = None;
        self
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn explain_one(
    mrf: &Mrf,
    full: &BpResult,
    target: NodeId,
    config: &SearchConfig,
    with_comb: bool,
) -> TargetReport {
    let start = Instant::now();
    let mut row = TargetReport {
        target,
        method: config.method.into(),
        objective: None,
        size: None,
        bp_invocations: 0,
        comb_objective: None,
        comb_size: None,
        wall_time: None,
        error: None,
    };
    let outcome = beam_search(mrf, full, target, config).and_then(|outcome| {
        let comb = if with_comb {
            let b = full.belief(target)?;
            Some(combine(&outcome.beam, mrf, b, &config.bp)?)
        } else {
            None
        };
        Ok((outcome, comb))
    });
    match outcome {
        Ok((outcome, comb)) => {
            let best = outcome
                .beam
                .best()
                .expect("a search always yields a candidate");
            row.objective = Some(best.objective);
            row.size = Some(best.size());
            row.bp_invocations = outcome.bp_invocations + usize::from(comb.is_some());
            if let Some(c) = comb {
                row.comb_objective = Some(c.objective);
                row.comb_size = Some(c.size());
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row.wall_time = Some(start.elapsed().as_secs_f64());
    row
}

/// Explains every target with `workers` threads.
///
/// Full-model BP runs once and is shared. Rows come back in the order of
/// `targets` and do not depend on `workers`. A target that cannot be explained
/// gets an error row; the other targets are unaffected.
pub fn explain_targets(
    mrf: &Mrf,
    targets: &[NodeId],
    config: &SearchConfig,
    workers: usize,
) -> Result<RunReport> {
    run_batch(
        mrf,
        targets,
        config,
        &BatchOptions {
            workers,
            combine: false,
        },
    )
}

pub fn run_batch(
    mrf: &Mrf,
    targets: &[NodeId],
    config: &SearchConfig,
    options: &BatchOptions,
) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let full = run_bp(mrf, &config.bp)?;
    let full_bp_time = start.elapsed().as_secs_f64();
    run_batch_with(mrf, &full, full_bp_time, targets, config, options)
}

/// Like [`run_batch`] with a precomputed full-model BP result.
pub fn run_batch_with(
    mrf: &Mrf,
    full: &BpResult,
    full_bp_time: f64,
    targets: &[NodeId],
    config: &SearchConfig,
    options: &BatchOptions,
) -> Result<RunReport> {
    config.validate()?;
    if options.workers == 0 {
        return Err(Error::InvalidConfig("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let per_target: Vec<TargetReport> = pool.install(|| {
        targets
            .par_iter()
            .map(|&t| explain_one(mrf, full, t, config, options.combine))
            .collect()
    });
    let total_wall_time = start.elapsed().as_secs_f64();

    let ok = || per_target.iter().filter(|r| r.error.is_none());
    let aggregate = Aggregate {
        targets: per_target.len(),
        failed: per_target.len() - ok().count(),
        mean_objective: mean(ok().filter_map(|r| r.objective)),
        mean_size: mean(ok().filter_map(|r| r.size.map(|s| s as f64))),
        comb_mean_objective: mean(ok().filter_map(|r| r.comb_objective)),
        comb_mean_size: mean(ok().filter_map(|r| r.comb_size.map(|s| s as f64))),
        bp_invocations: per_target.iter().map(|r| r.bp_invocations).sum(),
        workers: options.workers,
        pruning_rate: config.pruning_rate,
        total_wall_time: Some(total_wall_time),
        full_bp_time: Some(full_bp_time),
    };
    Ok(RunReport {
        format_version: FORMAT_VERSION,
        config: *config,
        full_bp_converged: full.converged,
        per_target,
        aggregate,
    })
}

/// Subgraph BP runs across all targets, excluding the shared full-model run.
pub fn count_bp_invocations(report: &RunReport) -> usize {
    report.per_target.iter().map(|r| r.bp_invocations).sum()
}

/// A seeded sample of `ratio` of `candidates` (at least one when `ratio > 0`),
/// returned in ascending order.
pub fn sample_targets(candidates: &[NodeId], ratio: f64, seed: u64) -> Result<Vec<NodeId>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target ratio must lie in (0, 1], got {ratio}"
        )));
    }
    let mut pool = candidates.to_vec();
    pool.sort_unstable();
    pool.dedup();
    if ratio < 1.0 {
        let keep = ((ratio * pool.len() as f64).round() as usize)
            .max(1)
            .min(pool.len());
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        pool.truncate(keep);
        pool.sort_unstable();
    }
    Ok(pool)
}
