//! Exact sampling from the discrete Gaussian `N_Z(0, sigma^2)`.
//!
//! Follows the rejection construction of Canonne, Kamath and Steinke: a
//! discrete Laplace proposal with integer scale `t = floor(sigma) + 1`, accepted
//! with probability `exp(-(|y| - sigma^2/t)^2 / (2 sigma^2))`. Every Bernoulli
//! draw is made against an exact rational, so no floating point is involved in
//! producing a sample.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::{Error, Result};

/// Cap on proposal rejections before the sampler reports a broken RNG.
pub const MAX_REJECTIONS: u64 = 1_000_000;

/// Variance parameter `sigma^2` of the discrete Gaussian, an exact positive
/// rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseScale {
    sigma_sq: Ratio<BigUint>,
    // floor(sigma) + 1, the discrete Laplace scale of the proposal.
    laplace_scale: u64,
}

impl NoiseScale {
    pub fn new(sigma_sq: Ratio<BigUint>) -> Result<Self> {
        if sigma_sq.is_zero() {
            return Err(Error::InvalidParameter("sigma^2 must be positive".into()));
        }
        let floor_sigma = sigma_sq.to_integer().sqrt();
        let laplace_scale = (floor_sigma + 1u32)
            .to_u64()
            .filter(|t| *t < u64::MAX / 64)
            .ok_or_else(|| Error::InvalidParameter("sigma^2 is too large".into()))?;
        Ok(Self {
            sigma_sq,
            laplace_scale,
        })
    }

    pub fn from_integer(sigma_sq: u64) -> Result<Self> {
        Self::new(Ratio::from_integer(BigUint::from(sigma_sq)))
    }

    pub fn sigma_sq(&self) -> &Ratio<BigUint> {
        &self.sigma_sq
    }

    pub fn sigma_sq_f64(&self) -> f64 {
        self.sigma_sq.to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Draws one sample from `N_Z(0, sigma^2)`.
pub fn sample<R: Rng + ?Sized>(scale: &NoiseScale, rng: &mut R) -> Result<i64> {
    let t = scale.laplace_scale;
    let p = scale.sigma_sq.numer();
    let q = scale.sigma_sq.denom();
    // gamma(y) = (|y| q t - p)^2 / (2 p q t^2)
    let t_big = BigUint::from(t);
    let qt = q * &t_big;
    let gamma_den: BigUint = p * &qt * &t_big * 2u32;

    let mut budget = MAX_REJECTIONS;
    loop {
        let y = sample_discrete_laplace(t, rng, &mut budget)?;
        let abs_qt = BigUint::from(y.unsigned_abs()) * &qt;
        let diff = if abs_qt >= *p { abs_qt - p } else { p - abs_qt };
        let gamma_num = &diff * &diff;
        if bernoulli_exp(&gamma_num, &gamma_den, rng) {
            return Ok(y);
        }
        spend(&mut budget)?;
    }
}

/// Draws `m` independent samples.
pub fn sample_vector<R: Rng + ?Sized>(
    scale: &NoiseScale,
    m: usize,
    rng: &mut R,
) -> Result<Vec<i64>> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "noise dimension must be at least 1".into(),
        ));
    }
    (0..m).map(|_| sample(scale, rng)).collect()
}

/// Tail bound `Pr[Z >= t] <= exp(-t^2 / (2 sigma^2))`.
pub fn tail_bound(t: u64, scale: &NoiseScale) -> f64 {
    let t = t as f64;
    (-(t * t) / (2.0 * scale.sigma_sq_f64())).exp()
}

fn spend(budget: &mut u64) -> Result<()> {
    *budget = budget.saturating_sub(1);
    if *budget == 0 {
        Err(Error::SamplerExhausted(MAX_REJECTIONS))
    } else {
        Ok(())
    }
}

/// Discrete Laplace with integer scale `t`: `Pr[Y = y] ∝ exp(-|y| / t)`.
fn sample_discrete_laplace<R: Rng + ?Sized>(t: u64, rng: &mut R, budget: &mut u64) -> Result<i64> {
    loop {
        let negative = rng.gen::<bool>();
        let magnitude = sample_geometric(t, rng, budget)?;
        if negative && magnitude == 0 {
            spend(budget)?;
            continue;
        }
        let y = i64::try_from(magnitude).map_err(|_| Error::SamplerExhausted(MAX_REJECTIONS))?;
        return Ok(if negative { -y } else { y });
    }
}

/// Geometric with success probability `1 - exp(-1/t)`, supported on `{0, 1, ...}`.
fn sample_geometric<R: Rng + ?Sized>(t: u64, rng: &mut R, budget: &mut u64) -> Result<u128> {
    let u = loop {
        let u = rng.gen_range(0..t);
        if bernoulli_exp_small(u, t, rng) {
            break u;
        }
        spend(budget)?;
    };
    let mut v: u128 = 0;
    while bernoulli_exp_small(1, 1, rng) {
        v += 1;
    }
    Ok(u as u128 + t as u128 * v)
}

/// `Bernoulli(num / den)` for `num <= den`.
fn bernoulli<R: Rng + ?Sized>(num: &BigUint, den: &BigUint, rng: &mut R) -> bool {
    match (num.to_u64(), den.to_u64()) {
        (Some(n), Some(d)) => rng.gen_range(0..d) < n,
        _ => rng.gen_biguint_below(den) < *num,
    }
}

/// `Bernoulli(exp(-num / den))`.
fn bernoulli_exp<R: Rng + ?Sized>(num: &BigUint, den: &BigUint, rng: &mut R) -> bool {
    if num <= den {
        return bernoulli_exp_unit(num, den, rng);
    }
    let (whole, rem) = num.div_rem(den);
    let mut k = BigUint::zero();
    while k < whole {
        if !bernoulli_exp_small(1, 1, rng) {
            return false;
        }
        k += 1u32;
    }
    bernoulli_exp_unit(&rem, den, rng)
}

/// `Bernoulli(exp(-gamma))` for `gamma = num / den` in `[0, 1]`.
fn bernoulli_exp_unit<R: Rng + ?Sized>(num: &BigUint, den: &BigUint, rng: &mut R) -> bool {
    let mut k = BigUint::one();
    loop {
        // Bernoulli(gamma / k) without reducing the fraction.
        if bernoulli(num, &(den * &k), rng) {
            k += 1u32;
        } else {
            return k.is_odd();
        }
    }
}

/// `Bernoulli(exp(-num / den))` with machine-word operands and `num <= den`.
fn bernoulli_exp_small<R: Rng + ?Sized>(num: u64, den: u64, rng: &mut R) -> bool {
    let mut k: u64 = 1;
    loop {
        let scaled = den as u128 * k as u128;
        let hit = if scaled <= u64::MAX as u128 {
            rng.gen_range(0..scaled as u64) < num
        } else {
            rng.gen_range(0..scaled) < num as u128
        };
        if hit {
            k += 1;
        } else {
            return k % 2 == 1;
        }
    }
}
