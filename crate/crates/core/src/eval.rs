//! Side-by-side comparison of search methods over many targets and seeds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::batch::{run_batch_with, BatchOptions, RunReport};
use crate::bp::{run_bp, BpConfig};
use crate::error::{Error, Result};
use crate::io::FORMAT_VERSION;
use crate::mrf::{Mrf, NodeId};
use crate::search::{GelVariant, Method, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvalMethod {
    #[serde(rename = "GE-G(k=1)")]
    GegK1,
    #[serde(rename = "GE-G(k=3)")]
    GegK3,
    #[serde(rename = "GE-L")]
    Gel,
    #[serde(rename = "Random-G")]
    RandomG,
    #[serde(rename = "Random-L")]
    RandomL,
    /// Union of the GE-G(k=3) beam.
    #[serde(rename = "Comb")]
    Comb,
}

impl EvalMethod {
    pub const ALL: [EvalMethod; 6] = [
        EvalMethod::GegK1,
        EvalMethod::GegK3,
        EvalMethod::Gel,
        EvalMethod::RandomG,
        EvalMethod::RandomL,
        EvalMethod::Comb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvalMethod::GegK1 => "GE-G(k=1)",
            EvalMethod::GegK3 => "GE-G(k=3)",
            EvalMethod::Gel => "GE-L",
            EvalMethod::RandomG => "Random-G",
            EvalMethod::RandomL => "Random-L",
            EvalMethod::Comb => "Comb",
        }
    }

    fn uses_seed(self) -> bool {
        matches!(self, EvalMethod::RandomG | EvalMethod::RandomL)
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "geg" | "gegk1" | "geg1" => Ok(EvalMethod::GegK1),
            "gegk3" | "geg3" => Ok(EvalMethod::GegK3),
            "gel" => Ok(EvalMethod::Gel),
            "randomg" => Ok(EvalMethod::RandomG),
            "randoml" => Ok(EvalMethod::RandomL),
            "comb" => Ok(EvalMethod::Comb),
            _ => Err(Error::InvalidConfig(format!(
                "unknown evaluation method '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub methods: Vec<EvalMethod>,
    pub capacity: usize,
    pub seeds: Vec<u64>,
    /// Variant used by GE-L and imitated by Random-L.
    pub gel_variant: GelVariant,
    pub bp: BpConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            methods: EvalMethod::ALL.to_vec(),
            capacity: 5,
            seeds: (0..10).collect(),
            gel_variant: GelVariant::Unconstrained,
            bp: BpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: EvalMethod,
    /// Mean over seeds of the per-seed mean over targets.
    pub mean_objective: f64,
    pub mean_size: f64,
    pub per_seed_objective: Vec<f64>,
    /// Target explanations that failed, summed over seeds.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub config: EvalConfig,
    pub targets: usize,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn row(&self, method: EvalMethod) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

fn search_config(method: EvalMethod, config: &EvalConfig, seed: u64) -> SearchConfig {
    let (m, k) = match method {
        EvalMethod::GegK1 => (Method::Geg, 1),
        EvalMethod::GegK3 | EvalMethod::Comb => (Method::Geg, 3),
        EvalMethod::Gel => (Method::Gel, 1),
        EvalMethod::RandomG => (Method::RandomG, 1),
        EvalMethod::RandomL => (Method::RandomL, 1),
    };
    SearchConfig {
        capacity: config.capacity,
        beam_width: k,
        method: m,
        gel_variant: config.gel_variant,
        pruning_rate: 0.0,
        seed,
        bp: config.bp,
    }
}

fn seed_means(report: &RunReport, comb: bool) -> (Option<f64>, Option<f64>, usize) {
    let a = &report.aggregate;
    if comb {
        (a.comb_mean_objective, a.comb_mean_size, a.failed)
    } else {
        (a.mean_objective, a.mean_size, a.failed)
    }
}

/// Runs every requested method on every target. Methods without randomness
/// are searched once and their result reused for every seed.
pub fn evaluate_methods(
    mrf: &Mrf,
    targets: &[NodeId],
    config: &EvalConfig,
    workers: usize,
) -> Result<EvalReport> {
    if config.seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one method is required".into(),
        ));
    }
    config.bp.validate()?;
    let full = run_bp(mrf, &config.bp)?;
    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let seeds: &[u64] = if method.uses_seed() {
            &config.seeds
        } else {
            &config.seeds[..1]
        };
        let mut objectives = Vec::new();
        let mut sizes = Vec::new();
        let mut failures = 0;
        for &seed in seeds {
            let options = BatchOptions {
                workers,
                combine: method == EvalMethod::Comb,
            };
            let sc = search_config(method, config, seed);
            let report = run_batch_with(mrf, &full, 0.0, targets, &sc, &options)?;
            let (obj, size, failed) = seed_means(&report, method == EvalMethod::Comb);
            failures += failed;
            objectives.extend(obj);
            sizes.extend(size);
        }
        if !method.uses_seed() {
            let per = config.seeds.len();
            objectives = objectives
                .iter()
                .flat_map(|&o| std::iter::repeat_n(o, per))
                .collect();
            failures *= per;
        }
        let avg = |v: &[f64]| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        rows.push(EvalRow {
            method,
            mean_objective: avg(&objectives),
            mean_size: avg(&sizes),
            per_seed_objective: objectives,
            failures,
        });
    }
    Ok(EvalReport {
        format_version: FORMAT_VERSION,
        config: config.clone(),
        targets: targets.len(),
        rows,
    })
}

/// `value` with four significant digits.
pub fn format_significant(value: f64) -> String {
    if !value.is_finite() {
        return "nan".into();
    }
    if value == 0.0 {
        return "0.000".into();
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    let rounded = format!("{value:.decimals$}");
    // Rounding can carry into a new digit, e.g. 9.9996 -> 10.000.
    let reparsed: f64 = rounded.parse().unwrap_or(value);
    if reparsed != 0.0 && reparsed.abs().log10().floor() as i32 > magnitude {
        let decimals = (2 - magnitude).max(0) as usize;
        return format!("{value:.decimals$}");
    }
    rounded
}

/// One table cell: mean objective and mean size, e.g. `0.1386[4.2]`.
pub fn format_cell(mean_objective: f64, mean_size: f64) -> String {
    format!("{}[{mean_size:.1}]", format_significant(mean_objective))
}

/// Plain-text table, one method per line.
pub fn format_table(report: &EvalReport) -> String {
    let width = report
        .rows
        .iter()
        .map(|r| r.method.name().len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = format!("{:<width$}  mean[size]\n", "method");
    for row in &report.rows {
        out.push_str(&format!(
            "{:<width$}  {}\n",
            row.method.name(),
            format_cell(row.mean_objective, row.mean_size)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::counterexample;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0012), "0.001200");
        assert_eq!(format_significant(1.42349), "1.423");
        assert_eq!(format_significant(0.13862), "0.1386");
        assert_eq!(format_significant(12.3456), "12.35");
        assert_eq!(format_significant(9.99996), "10.00");
        assert_eq!(format_significant(12345.6), "12346");
        assert_eq!(format_significant(0.0), "0.000");
        assert_eq!(format_cell(1.356, 5.6), "1.356[5.6]");
        assert_eq!(format_cell(0.0012, 5.0), "0.001200[5.0]");
    }

    #[test]
    fn method_names_parse() {
        for m in EvalMethod::ALL {
            assert_eq!(m.name().parse::<EvalMethod>().unwrap(), m);
        }
        assert_eq!("comb".parse::<EvalMethod>().unwrap(), EvalMethod::Comb);
        assert!("lime".parse::<EvalMethod>().is_err());
    }

    #[test]
    fn counterexample_table() {
        let mrf = counterexample();
        let config = EvalConfig {
            capacity: 3,
            seeds: vec![0, 1],
            ..EvalConfig::default()
        };
        let report = evaluate_methods(&mrf, &[NodeId(0)], &config, 1).unwrap();
        assert_eq!(report.rows.len(), 6);
        let geg = report.row(EvalMethod::GegK1).unwrap();
        assert!(geg.mean_objective < 1e-9);
        assert_eq!(geg.mean_size, 3.0);
        assert_eq!(geg.per_seed_objective.len(), 2);
        let table = format_table(&report);
        assert!(table.lines().nth(1).unwrap().starts_with("GE-G(k=1)"));
        assert_eq!(table.lines().count(), 7);
    }

    #[test]
    fn rejects_empty_configuration() {
        let mrf = counterexample();
        let no_seeds = EvalConfig {
            seeds: vec![],
            ..EvalConfig::default()
        };
        assert!(evaluate_methods(&mrf, &[NodeId(0)], &no_seeds, 1).is_err());
    }
}
