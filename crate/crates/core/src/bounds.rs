//! Closed-form constants of the bandit estimator and the expected mistake
//! bound built from them.
//!
//! With `P(n, r) = n! / (n - r)!`:
//!
//! * `tau1 = m P(k-2, m-1)`, `tau2 = (m-1)/(k-m)`
//! * `lambda1 = 2 / tau1`
//! * `lambda2 = m k^m P(k,m) / (gamma^m tau1^2) - 2 m tau2 / tau1 - 2 / tau1
//!    + k (tau2^2 + 1/(k m) + 2 tau2 / k)`
//! * mistake bound `R + sqrt(lambda1 D R / 2)
//!    + 3 max(lambda1 D / 2, sqrt((lambda2 + 1) D T / 2)) + gamma T`

use log::warn;

use crate::error::{Error, Result};
use crate::losses::avg_hinge;
use crate::model::{Example, WeightMatrix};

/// Largest admissible `k^m P(k, m)`.
pub const MAGNITUDE_LIMIT: u128 = 1_000_000_000_000_000;

/// Clip range for the closed-form exploration rate.
pub const GAMMA_FLOOR: f64 = 1e-6;
pub const GAMMA_CEIL: f64 = 1.0 - 1e-6;

/// Number of ordered `r`-tuples of distinct items out of `n`. Zero when
/// `r > n`; panics on `u128` overflow.
pub fn perm(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    ((n - r + 1)..=n).fold(1u128, |acc, v| {
        acc.checked_mul(u128::from(v)).expect("permutation count overflows u128")
    })
}

pub(crate) fn check_subset(k: usize, m: usize) -> Result<()> {
    if m == 0 || m >= k {
        return Err(Error::InvalidParameter(format!(
            "subset size m = {m} must satisfy 1 <= m < k = {k}"
        )));
    }
    Ok(())
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "exploration rate gamma = {gamma} must lie in the open interval (0, 1)"
        )));
    }
    Ok(())
}

/// `tau1 = m P(k-2, m-1)`.
pub fn tau1(k: usize, m: usize) -> Result<f64> {
    check_subset(k, m)?;
    Ok((m as u128 * perm(k as u64 - 2, m as u64 - 1)) as f64)
}

/// `tau2 = (m-1)/(k-m)`.
pub fn tau2(k: usize, m: usize) -> Result<f64> {
    check_subset(k, m)?;
    Ok((m - 1) as f64 / (k - m) as f64)
}

/// `k^m P(k, m)` as an integer, guarded by [`MAGNITUDE_LIMIT`].
fn exploration_magnitude(k: usize, m: usize) -> Result<u128> {
    let too_large = || {
        Error::InvalidParameter(format!(
            "k^m P(k,m) for k = {k}, m = {m} exceeds {MAGNITUDE_LIMIT}"
        ))
    };
    let pow = (k as u128).checked_pow(m as u32).ok_or_else(too_large)?;
    let v = pow
        .checked_mul(perm(k as u64, m as u64))
        .ok_or_else(too_large)?;
    if v > MAGNITUDE_LIMIT {
        return Err(too_large());
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    pub k: usize,
    pub m: usize,
    pub gamma: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

pub fn constants(k: usize, m: usize, gamma: f64) -> Result<BoundConstants> {
    check_subset(k, m)?;
    check_gamma(gamma)?;
    let t1 = tau1(k, m)?;
    let t2 = tau2(k, m)?;
    let mag = exploration_magnitude(k, m)? as f64;
    let (kf, mf) = (k as f64, m as f64);
    let lambda2 = mf * mag / (gamma.powi(m as i32) * t1 * t1) - 2.0 * mf * t2 / t1 - 2.0 / t1
        + kf * (t2 * t2 + 1.0 / (kf * mf) + 2.0 * t2 / kf);
    Ok(BoundConstants {
        k,
        m,
        gamma,
        tau1: t1,
        tau2: t2,
        lambda1: 2.0 / t1,
        lambda2,
    })
}

/// Inputs of the expected mistake bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MistakeBoundInputs {
    /// Cumulative averaged hinge loss of the comparator, `R_T`.
    pub comparator_loss: f64,
    /// Comparator complexity `D = 2 ||W*||_F^2`.
    pub complexity: f64,
    /// Horizon `T`.
    pub horizon: u64,
}

impl MistakeBoundInputs {
    pub fn for_comparator(w_star: &WeightMatrix, comparator_loss: f64, horizon: u64) -> Self {
        MistakeBoundInputs {
            comparator_loss,
            complexity: 2.0 * w_star.frobenius_sq(),
            horizon,
        }
    }
}

/// Expected-mistake bound for the bandit learner run with `c.gamma`.
pub fn mistake_bound(inputs: &MistakeBoundInputs, c: &BoundConstants) -> Result<f64> {
    let MistakeBoundInputs {
        comparator_loss: r,
        complexity: d,
        horizon,
    } = *inputs;
    if !(r >= 0.0 && d >= 0.0) || !r.is_finite() || !d.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "comparator loss ({r}) and complexity ({d}) must be finite and nonnegative"
        )));
    }
    let t = horizon as f64;
    let middle = (c.lambda1 * d / 2.0).max(((c.lambda2 + 1.0) * d * t / 2.0).sqrt());
    Ok(r + (c.lambda1 * d * r / 2.0).sqrt() + 3.0 * middle + c.gamma * t)
}

/// Exploration rate minimising the separable-case bound,
/// `(9 m^3 k^m P(k,m) D / (8 tau1^2 T))^(1/(m+2))`, clipped into
/// `[GAMMA_FLOOR, GAMMA_CEIL]`.
pub fn optimal_gamma(k: usize, m: usize, complexity: f64, horizon: u64) -> Result<f64> {
    check_subset(k, m)?;
    if !(complexity > 0.0) || !complexity.is_finite() || horizon == 0 {
        return Err(Error::InvalidArgument(format!(
            "optimal gamma needs positive complexity and horizon (got D = {complexity}, T = {horizon})"
        )));
    }
    let t1 = tau1(k, m)?;
    let mag = exploration_magnitude(k, m)? as f64;
    let mf = m as f64;
    let c2 = 9.0 * mf.powi(3) * mag * complexity / (8.0 * t1 * t1);
    let gamma = (c2 / horizon as f64).powf(1.0 / (mf + 2.0));
    if !(GAMMA_FLOOR..=GAMMA_CEIL).contains(&gamma) {
        let clipped = gamma.clamp(GAMMA_FLOOR, GAMMA_CEIL);
        warn!("closed-form gamma {gamma} outside (0, 1); clipped to {clipped}");
        return Ok(clipped);
    }
    Ok(gamma)
}

/// Upper bound on `E_Z ||U~||_F^2` for one round:
/// `||x||^2 (lambda2 + lambda1 1{y not in Yhat})`.
pub fn expected_update_norm_bound(
    k: usize,
    m: usize,
    gamma: f64,
    x_norm_sq: f64,
    set_mistake: bool,
) -> Result<f64> {
    if !(x_norm_sq >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "squared norm must be nonnegative, got {x_norm_sq}"
        )));
    }
    let c = constants(k, m, gamma)?;
    let mistake = if set_mistake { c.lambda1 } else { 0.0 };
    Ok(x_norm_sq * c.lambda2 + x_norm_sq * mistake)
}

/// Outcome of checking a comparator against a stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    /// Every example has `(W* x)_y - (W* x)_i >= 1` for all `i != y`.
    pub separable: bool,
    /// Smallest observed multiclass margin.
    pub min_margin: f64,
    /// `R_T`, the cumulative averaged hinge loss of the comparator at
    /// subset size `m`.
    pub comparator_loss: f64,
}

/// Checks the unit-margin separability condition and accumulates the
/// comparator's averaged hinge loss.
///
/// Because the greedy set of `W*` contains the true label, the loss is
/// only zero on separable data when every margin is at least
/// `m / (m - 1)`; for `m = 1` each round contributes exactly 1.
pub fn separability_certificate(
    w_star: &WeightMatrix,
    examples: &[Example],
    m: usize,
) -> Result<Certificate> {
    check_subset(w_star.num_classes(), m)?;
    let mut min_margin = f64::INFINITY;
    let mut loss = 0.0;
    for ex in examples {
        let s = w_star.score(&ex.features)?;
        let y = ex.label.index();
        let sy = s.as_slice()[y];
        for (i, &si) in s.as_slice().iter().enumerate() {
            if i != y {
                min_margin = min_margin.min(sy - si);
            }
        }
        loss += avg_hinge(w_star, &ex.features, ex.label, m)?.value();
    }
    Ok(Certificate {
        separable: !examples.is_empty() && min_margin >= 1.0,
        min_margin,
        comparator_loss: loss,
    })
}
