//! Utility measurement: empirical error, the high-probability error bound,
//! and the unprojected noisy-table baseline.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgauss::{self, NoiseScale};
use crate::mechanism::{self, NoiseMode, PrivacyParams};
use crate::model::{contingency, ContingencyTable, Dataset};
use crate::rng::SeedKey;
use crate::{Error, Result};

/// Largest universe the dense baseline will materialize.
pub const DENSE_LIMIT: u128 = 1_000_000;

/// Maximum absolute difference between the level-`k` prefix counts of two
/// tables, over the union of their supports.
pub fn max_abs_error(
    true_table: &ContingencyTable,
    dp_table: &ContingencyTable,
    k: usize,
) -> Result<u64> {
    if true_table.schema() != dp_table.schema() {
        return Err(Error::SchemaMismatch);
    }
    let a = true_table.prefix_counts(k)?;
    let b = dp_table.prefix_counts(k)?;
    let support: BTreeSet<_> = a.keys().chain(b.keys()).collect();
    Ok(support
        .into_iter()
        .map(|p| {
            let x = a.get(p).copied().unwrap_or(0);
            let y = b.get(p).copied().unwrap_or(0);
            x.abs_diff(y)
        })
        .max()
        .unwrap_or(0))
}

/// High-probability bound on the level-`k` maximum absolute error:
///
/// `sum_{l=1..k} sqrt((8 d / rho) ln(k * prod_{i<=l} |X_i| / beta))`.
///
/// Terms whose logarithm is negative contribute zero.
pub fn utility_bound(
    k: usize,
    d: usize,
    rho: f64,
    beta: f64,
    domain_sizes: &[usize],
) -> Result<f64> {
    if k == 0 || k > d {
        return Err(Error::LevelOutOfRange { k, depth: d });
    }
    if domain_sizes.len() < k {
        return Err(Error::InvalidParameter(format!(
            "need at least {k} domain sizes, got {}",
            domain_sizes.len()
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(
            "rho must be positive and finite".into(),
        ));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter("beta must lie in (0, 1)".into()));
    }
    if domain_sizes[..k].contains(&0) {
        return Err(Error::InvalidParameter(
            "domain sizes must be positive".into(),
        ));
    }
    let scale = 8.0 * d as f64 / rho;
    let mut log_arg = (k as f64).ln() - beta.ln();
    let mut total = 0.0;
    for &size in &domain_sizes[..k] {
        // Summing logs keeps the product of domain sizes from overflowing.
        log_arg += (size as f64).ln();
        total += (scale * log_arg.max(0.0)).sqrt();
    }
    Ok(total)
}

/// Dense integer table over the full universe, in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseTable {
    domain_sizes: Vec<usize>,
    cells: Vec<i64>,
}

impl DenseTable {
    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn cell(&self, tuple: &[u32]) -> i64 {
        self.cells[self.offset(tuple)]
    }

    pub fn has_negative(&self) -> bool {
        self.cells.iter().any(|&c| c < 0)
    }

    /// Dense level-`k` marginal, indexed row-major over the first `k`
    /// attributes. Each entry sums `|X| / prod_{i<=k} |X_i|` cells.
    pub fn marginal(&self, k: usize) -> Result<Vec<i64>> {
        let depth = self.domain_sizes.len();
        if k > depth {
            return Err(Error::LevelOutOfRange { k, depth });
        }
        let block: usize = self.domain_sizes[k..].iter().product();
        Ok(self.cells.chunks(block).map(|c| c.iter().sum()).collect())
    }

    fn offset(&self, tuple: &[u32]) -> usize {
        tuple
            .iter()
            .zip(&self.domain_sizes)
            .fold(0, |acc, (&v, &s)| acc * s + v as usize)
    }
}

/// Adds discrete Gaussian noise with `sigma^2 = 1 / rho` to every cell of the
/// full table, zeros included. No projection or consistency step is applied,
/// so cells may be negative.
pub fn baseline_noisy_table(
    table: &ContingencyTable,
    rho: &Ratio<BigUint>,
    seed: SeedKey,
    noise: NoiseMode,
) -> Result<DenseTable> {
    let schema = table.schema();
    let size = schema.universe_size().unwrap_or(u128::MAX);
    if size > DENSE_LIMIT {
        return Err(Error::UniverseTooLarge {
            size,
            limit: DENSE_LIMIT,
        });
    }
    let mut dense = DenseTable {
        domain_sizes: schema.domain_sizes(),
        cells: vec![0; size as usize],
    };
    for (tuple, &count) in table.counts() {
        let at = dense.offset(tuple);
        dense.cells[at] = count as i64;
    }
    if noise == NoiseMode::DiscreteGaussian {
        let scale = NoiseScale::new(num_traits::Inv::inv(rho.clone()))?;
        let mut rng = seed.derive(b"baseline").stream();
        for cell in &mut dense.cells {
            *cell += dgauss::sample(&scale, &mut rng)?;
        }
    }
    Ok(dense)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelError {
    pub level: usize,
    pub max_abs_error: u64,
    pub bound: f64,
    pub nodes_true: usize,
    pub nodes_dp: usize,
}

/// Per-level comparison of a private table with the true one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rho: String,
    pub beta: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
    pub levels: Vec<LevelError>,
}

/// Compares `dp_table` with `true_table` at every level. The bound at level 0
/// is zero since the root is released exactly.
pub fn error_report(
    true_table: &ContingencyTable,
    dp_table: &ContingencyTable,
    params: &PrivacyParams,
    beta: f64,
    seed: u64,
) -> Result<ErrorReport> {
    let depth = true_table.schema().depth();
    let sizes = true_table.schema().domain_sizes();
    let rho = rho_f64(params);
    let levels = (0..=depth)
        .map(|k| {
            Ok(LevelError {
                level: k,
                max_abs_error: max_abs_error(true_table, dp_table, k)?,
                bound: level_bound(k, depth, rho, beta, &sizes)?,
                nodes_true: true_table.prefix_counts(k)?.len(),
                nodes_dp: dp_table.prefix_counts(k)?.len(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ErrorReport {
        rho: params.to_string(),
        beta,
        seed,
        runtime_ms: None,
        levels,
    })
}

fn level_bound(k: usize, depth: usize, rho: f64, beta: f64, sizes: &[usize]) -> Result<f64> {
    if k == 0 {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter("beta must lie in (0, 1)".into()));
        }
        Ok(0.0)
    } else {
        utility_bound(k, depth, rho, beta, sizes)
    }
}

fn rho_f64(params: &PrivacyParams) -> f64 {
    params.rho().to_f64().unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    /// Worst error over all trials.
    pub max_abs_error: u64,
    pub mean_abs_error: f64,
    pub bound: f64,
    pub pass_rate: f64,
    pub nodes_true: usize,
    /// Largest private node count over all trials.
    pub nodes_dp: usize,
}

/// Outcome of repeating the mechanism and checking the error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rho: String,
    pub beta: f64,
    pub seed: u64,
    pub trials: usize,
    /// Fraction of trials in which every level met its bound.
    pub joint_pass_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
    pub levels: Vec<LevelSummary>,
}

/// Runs the mechanism `trials` times with seeds derived from `seed` and
/// records how often each level's maximum error stays within its bound.
pub fn bound_experiment(
    dataset: &Dataset,
    params: &PrivacyParams,
    beta: f64,
    trials: usize,
    seed: u64,
    noise: NoiseMode,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let truth = contingency(dataset);
    let depth = dataset.schema().depth();
    let sizes = dataset.schema().domain_sizes();
    let rho = rho_f64(params);
    let bounds: Vec<f64> = (0..=depth)
        .map(|k| level_bound(k, depth, rho, beta, &sizes))
        .collect::<Result<_>>()?;
    let master = SeedKey::from_u64(seed);

    let outcomes: Vec<Vec<(u64, usize)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let tree = mechanism::run(dataset, params, master.for_trial(t), noise)?;
            let dp = tree.to_table()?;
            (0..=depth)
                .map(|k| Ok((max_abs_error(&truth, &dp, k)?, dp.prefix_counts(k)?.len())))
                .collect()
        })
        .collect::<Result<_>>()?;

    let joint = outcomes
        .iter()
        .filter(|o| o.iter().zip(&bounds).all(|((e, _), b)| *e as f64 <= *b))
        .count();
    let levels = (0..=depth)
        .map(|k| {
            let errors = outcomes.iter().map(|o| o[k].0);
            let passed = errors.clone().filter(|&e| e as f64 <= bounds[k]).count();
            Ok(LevelSummary {
                level: k,
                max_abs_error: errors.clone().max().unwrap_or(0),
                mean_abs_error: errors.map(|e| e as f64).sum::<f64>() / trials as f64,
                bound: bounds[k],
                pass_rate: passed as f64 / trials as f64,
                nodes_true: truth.prefix_counts(k)?.len(),
                nodes_dp: outcomes.iter().map(|o| o[k].1).max().unwrap_or(0),
            })
        })
        .collect::<Result<_>>()?;

    Ok(ExperimentReport {
        rho: params.to_string(),
        beta,
        seed,
        trials,
        joint_pass_rate: joint as f64 / trials as f64,
        runtime_ms: None,
        levels,
    })
}
