//! Integer Chebyshev projection.
//!
//! Given an integer vector `x` (possibly negative) and a target `c >= 0`, find
//! `y` in the non-negative integers with `sum(y) = c` minimizing `max |x_i - y_i|`.
//! Such a `y` always exists. Optimal points are not unique; [`solve`] returns a
//! deterministic one.

use num_integer::Integer;

use crate::{Error, Result};

/// Largest instance [`brute_force`] accepts.
pub const ORACLE_MAX_DIM: usize = 6;
pub const ORACLE_MAX_TARGET: u64 = 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionSolution {
    pub y: Vec<u64>,
    /// `max_i |x_i - y_i|`.
    pub objective: u64,
}

/// Integer lower bound on the optimal objective:
/// `max(ceil(|c - sum x| / m), max(0, -min x))`.
pub fn lower_bound(x: &[i64], c: u64) -> Result<u64> {
    check_dim(x)?;
    let m = x.len() as i128;
    let gap = (c as i128 - sum(x)).unsigned_abs() as i128;
    let spread = Integer::div_ceil(&gap, &m);
    let negative = -(*x.iter().min().expect("non-empty") as i128);
    Ok(spread.max(negative).max(0) as u64)
}

/// Projects `x` onto `{y >= 0, sum(y) = c}` in Chebyshev distance.
///
/// Starts from the offset `z_i = max(ceil(delta / m), -x_i)` with
/// `delta = c - sum(x)`, whose norm meets the lower bound and whose sum
/// overshoots `delta` by a surplus `R >= 0`. The surplus is then removed by
/// walking indices in ascending `(x_i, i)` order: a first pass lowers each
/// `z_i` as far as `max(-x_i, -A)` without growing the norm `A`, and any
/// remainder is taken one unit at a time in round-robin passes from entries
/// still above `-x_i`.
pub fn solve(x: &[i64], c: u64) -> Result<ProjectionSolution> {
    check_dim(x)?;
    let m = x.len() as i128;
    let delta = c as i128 - sum(x);
    let base = Integer::div_ceil(&delta, &m);
    let mut z: Vec<i128> = x.iter().map(|&xi| base.max(-(xi as i128))).collect();
    let norm = z.iter().map(|v| v.abs()).max().unwrap_or(0);
    let mut surplus = z.iter().sum::<i128>() - delta;
    debug_assert!(surplus >= 0);

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by_key(|&i| (x[i], i));

    for &i in &order {
        if surplus == 0 {
            break;
        }
        let floor = (-(x[i] as i128)).max(-norm);
        let cut = surplus.min(z[i] - floor);
        z[i] -= cut;
        surplus -= cut;
    }

    while surplus > 0 {
        let eligible: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| z[i] > -(x[i] as i128))
            .collect();
        debug_assert!(!eligible.is_empty(), "c >= 0 keeps the problem feasible");
        // Collapse full passes that cannot exhaust anyone's slack.
        let width = eligible.len() as i128;
        let slack = eligible
            .iter()
            .map(|&i| z[i] + x[i] as i128)
            .min()
            .unwrap_or(0);
        let passes = slack.min(surplus / width);
        if passes > 0 {
            for &i in &eligible {
                z[i] -= passes;
            }
            surplus -= passes * width;
            continue;
        }
        for &i in &eligible {
            if surplus == 0 {
                break;
            }
            z[i] -= 1;
            surplus -= 1;
        }
    }

    let y: Vec<u64> = x
        .iter()
        .zip(&z)
        .map(|(&xi, &zi)| (xi as i128 + zi) as u64)
        .collect();
    let objective = z.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as u64;
    Ok(ProjectionSolution { y, objective })
}

/// Optimal objective by scanning `alpha = 0, 1, ...` for the first feasible
/// value. `alpha` is feasible iff every interval
/// `[max(0, x_i - alpha), x_i + alpha]` is non-empty and
/// `sum max(0, x_i - alpha) <= c <= sum (x_i + alpha)`.
pub fn brute_force(x: &[i64], c: u64) -> Result<u64> {
    check_dim(x)?;
    if x.len() > ORACLE_MAX_DIM || c > ORACLE_MAX_TARGET {
        return Err(Error::InvalidParameter(format!(
            "oracle limited to dim <= {ORACLE_MAX_DIM} and c <= {ORACLE_MAX_TARGET}"
        )));
    }
    let c = c as i128;
    let mut alpha: i128 = 0;
    loop {
        let nonempty = x.iter().all(|&v| v as i128 + alpha >= 0);
        let low: i128 = x.iter().map(|&v| (v as i128 - alpha).max(0)).sum();
        let high: i128 = x.iter().map(|&v| v as i128 + alpha).sum();
        if nonempty && low <= c && c <= high {
            return Ok(alpha as u64);
        }
        alpha += 1;
    }
}

fn check_dim(x: &[i64]) -> Result<()> {
    if x.is_empty() {
        Err(Error::InvalidParameter(
            "projection needs at least one coordinate".into(),
        ))
    } else {
        Ok(())
    }
}

fn sum(x: &[i64]) -> i128 {
    x.iter().map(|&v| v as i128).sum()
}
