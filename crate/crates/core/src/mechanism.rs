//! TopDown construction of the private hierarchical tree.
//!
//! Level 0 is the record count `n`, released exactly (neighbouring datasets
//! differ by substitution, so `n` is public). For each level `k = 1..=d`,
//! every retained node `u` at level `k - 1` gets independent discrete Gaussian
//! noise on the dense vector of its `|X_k|` child counts, including children
//! with a true count of zero. The noisy vector is projected onto the
//! non-negative integers summing to `u`'s private count, and children that
//! come out as zero are pruned together with their whole subtree.
//!
//! Each level receives budget `rho / d`. A prefix query has l2 sensitivity
//! `sqrt(2)` under substitution, so the per-level variance is
//! `sigma^2 = 2 / (2 rho / d) = d / rho`.

use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::dgauss::{self, NoiseScale};
use crate::intopt;
use crate::model::{contingency, ContingencyTable, Dataset, LevelMap, Schema, Tuple};
use crate::rng::SeedKey;
use crate::{Error, Result};

/// Parses a positive rational from `p/q`, an integer, or a decimal such as
/// `0.125`. Scientific notation is not accepted.
pub fn parse_rational(text: &str) -> Result<Ratio<BigUint>> {
    let text = text.trim();
    let invalid = || Error::InvalidParameter(format!("`{text}` is not a rational number"));
    let value = if let Some((num, den)) = text.split_once('/') {
        let num = parse_digits(num.trim()).ok_or_else(invalid)?;
        let den = parse_digits(den.trim()).ok_or_else(invalid)?;
        if den.is_zero() {
            return Err(Error::InvalidParameter(format!(
                "`{text}` has a zero denominator"
            )));
        }
        Ratio::new(num, den)
    } else if let Some((whole, frac)) = text.split_once('.') {
        if whole.is_empty() && frac.is_empty() {
            return Err(invalid());
        }
        let whole = if whole.is_empty() {
            BigUint::zero()
        } else {
            parse_digits(whole).ok_or_else(invalid)?
        };
        let frac_value = if frac.is_empty() {
            BigUint::zero()
        } else {
            parse_digits(frac).ok_or_else(invalid)?
        };
        let scale = BigUint::from(10u32).pow(frac.len() as u32);
        Ratio::new(whole * &scale + frac_value, scale)
    } else {
        Ratio::from_integer(parse_digits(text).ok_or_else(invalid)?)
    };
    Ok(value)
}

fn parse_digits(s: &str) -> Option<BigUint> {
    // Bound the length so hostile input cannot request enormous numbers.
    if s.is_empty() || s.len() > 64 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigUint::parse_bytes(s.as_bytes(), 10)
}

/// Total zCDP budget and tree depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyParams {
    rho: Ratio<BigUint>,
    depth: usize,
}

impl PrivacyParams {
    pub fn new(rho: Ratio<BigUint>, depth: usize) -> Result<Self> {
        if rho.is_zero() {
            return Err(Error::InvalidParameter("rho must be positive".into()));
        }
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        Ok(Self { rho, depth })
    }

    pub fn parse(rho: &str, depth: usize) -> Result<Self> {
        Self::new(parse_rational(rho)?, depth)
    }

    pub fn rho(&self) -> &Ratio<BigUint> {
        &self.rho
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Per-level variance `d / rho`.
    pub fn sigma_sq(&self) -> Ratio<BigUint> {
        Ratio::from_integer(BigUint::from(self.depth)) / &self.rho
    }
}

impl fmt::Display for PrivacyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_ratio(&self.rho, f)
    }
}

pub(crate) fn fmt_ratio(r: &Ratio<BigUint>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Noise scale applied at every level of the tree.
pub fn per_level_sigma(params: &PrivacyParams) -> Result<NoiseScale> {
    NoiseScale::new(params.sigma_sq())
}

/// Whether to draw noise. [`NoiseMode::Zero`] provides no privacy and
/// exists for exact end-to-end testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    DiscreteGaussian,
    Zero,
}

/// Private non-negative hierarchical tree. `levels[k]` maps each retained
/// length-`k` prefix to its private count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateTree {
    schema: Schema,
    levels: Vec<LevelMap>,
    params: PrivacyParams,
    seed: SeedKey,
}

impl PrivateTree {
    /// Assembles a tree from explicit levels; only prefix lengths are
    /// checked. Use [`PrivateTree::validate`] for the structural invariants.
    pub fn from_levels(
        schema: Schema,
        levels: Vec<LevelMap>,
        params: PrivacyParams,
        seed: SeedKey,
    ) -> Result<Self> {
        if levels.len() > schema.depth() + 1 {
            return Err(Error::InvalidParameter(
                "more levels than attributes".into(),
            ));
        }
        for (k, level) in levels.iter().enumerate() {
            if level.keys().any(|p| p.len() != k) {
                return Err(Error::InvalidParameter(format!(
                    "level {k} has a prefix of wrong length"
                )));
            }
        }
        Ok(Self {
            schema,
            levels,
            params,
            seed,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn levels(&self) -> &[LevelMap] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> Option<&LevelMap> {
        self.levels.get(k)
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn seed(&self) -> SeedKey {
        self.seed
    }

    /// Count released at the root, `n`.
    pub fn root(&self) -> u64 {
        self.levels
            .first()
            .and_then(|l| l.get(&Vec::new()).copied())
            .unwrap_or(0)
    }

    /// Checks that every stored count is positive and that each level sums by
    /// prefix to the level above.
    pub fn validate(&self) -> Result<()> {
        let broken = |msg: String| Err(Error::InvalidParameter(msg));
        for (k, level) in self.levels.iter().enumerate() {
            if level.values().any(|&c| c == 0) {
                return broken(format!("level {k} stores a zero count"));
            }
            if k == 0 {
                continue;
            }
            let mut rolled = LevelMap::new();
            for (prefix, &count) in level {
                *rolled.entry(prefix[..k - 1].to_vec()).or_insert(0) += count;
            }
            if rolled != self.levels[k - 1] {
                return broken(format!("level {k} does not aggregate to level {}", k - 1));
            }
        }
        Ok(())
    }

    /// Leaf level as a contingency table.
    pub fn to_table(&self) -> Result<ContingencyTable> {
        let expected = self.schema.depth() + 1;
        if self.levels.len() != expected {
            return Err(Error::IncompleteTree {
                levels: self.levels.len(),
                expected,
            });
        }
        ContingencyTable::from_counts(self.schema.clone(), self.levels[expected - 1].clone())
    }
}

/// Builds the private tree for `dataset`.
///
/// Work within a level runs on the current rayon pool. Each node draws from
/// its own stream keyed by `(seed, level, prefix)`, so the output does not
/// depend on the number of workers.
pub fn run(
    dataset: &Dataset,
    params: &PrivacyParams,
    seed: SeedKey,
    noise: NoiseMode,
) -> Result<PrivateTree> {
    let schema = dataset.schema();
    let depth = schema.depth();
    if params.depth() != depth {
        return Err(Error::InvalidParameter(format!(
            "budget was split over {} levels but the schema has {depth} attributes",
            params.depth()
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let scale = match noise {
        NoiseMode::DiscreteGaussian => Some(per_level_sigma(params)?),
        NoiseMode::Zero => None,
    };
    let table = contingency(dataset);
    let sizes = schema.domain_sizes();

    let mut levels = Vec::with_capacity(depth + 1);
    levels.push(LevelMap::from([(Vec::new(), table.total())]));
    for k in 1..=depth {
        let truth = table.prefix_counts(k)?;
        let parents: Vec<(&Tuple, u64)> = levels[k - 1].iter().map(|(p, &c)| (p, c)).collect();
        let width = sizes[k - 1];
        let children: Vec<Vec<(Tuple, u64)>> = parents
            .par_iter()
            .map(|&(prefix, budget)| {
                expand_node(prefix, budget, k, width, &truth, scale.as_ref(), seed)
            })
            .collect::<Result<_>>()?;
        levels.push(children.into_iter().flatten().collect());
    }

    Ok(PrivateTree {
        schema: schema.clone(),
        levels,
        params: params.clone(),
        seed,
    })
}

fn expand_node(
    prefix: &Tuple,
    budget: u64,
    k: usize,
    width: usize,
    truth: &LevelMap,
    scale: Option<&NoiseScale>,
    seed: SeedKey,
) -> Result<Vec<(Tuple, u64)>> {
    let mut child = prefix.clone();
    child.push(0);
    let mut noisy: Vec<i64> = (0..width as u32)
        .map(|j| {
            child[k - 1] = j;
            truth.get(&child).map_or(0, |&c| c as i64)
        })
        .collect();
    if let Some(scale) = scale {
        let mut rng = seed.for_node(k - 1, prefix).stream();
        let noise = dgauss::sample_vector(scale, width, &mut rng)?;
        for (v, z) in noisy.iter_mut().zip(noise) {
            *v = v.saturating_add(z);
        }
    }
    let projected = intopt::solve(&noisy, budget)?;
    Ok(projected
        .y
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(j, c)| {
            let mut p = prefix.clone();
            p.push(j as u32);
            (p, c)
        })
        .collect())
}
