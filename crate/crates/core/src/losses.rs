//! Partial 0-1 loss and the averaged hinge surrogate.

use crate::error::{Error, Result};
use crate::model::{Label, LabelSet, UpdateMatrix, WeightMatrix};

/// A nonnegative loss value.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LossValue(f64);

impl LossValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `1{y not in set}`.
pub fn partial_zero_one(y: Label, predicted: &LabelSet) -> u8 {
    u8::from(!predicted.contains(y))
}

/// `[1 - (Wx)_y + mean_{i in Yhat} (Wx)_i]_+` where `Yhat` is the greedy
/// top-m set of `W` at `x`.
pub fn avg_hinge(w: &WeightMatrix, x: &[f64], y: Label, m: usize) -> Result<LossValue> {
    let (value, _) = hinge_parts(w, x, y, m)?;
    Ok(LossValue(value.max(0.0)))
}

/// Returns the unclipped hinge argument and the greedy set.
fn hinge_parts(w: &WeightMatrix, x: &[f64], y: Label, m: usize) -> Result<(f64, LabelSet)> {
    check_label(y, w.num_classes())?;
    let scores = w.score(x)?;
    let greedy = scores.top_m(m)?;
    let mean = greedy.iter().map(|l| scores.get(l)).sum::<f64>() / m as f64;
    Ok((1.0 - scores.get(y) + mean, greedy))
}

fn check_label(y: Label, k: usize) -> Result<()> {
    if y.index() >= k {
        return Err(Error::InvalidArgument(format!("label {y} out of range 1..={k}")));
    }
    Ok(())
}

/// `L_avg - (1{y not in Yhat} - <W, U>)`. Nonnegative whenever `U` is the
/// full-information subset update for `(W, x, y)`.
pub fn loss_lower_bound_gap(
    w: &WeightMatrix,
    update: &UpdateMatrix,
    x: &[f64],
    y: Label,
    m: usize,
) -> Result<f64> {
    let (raw, greedy) = hinge_parts(w, x, y, m)?;
    let inner = w.inner(update)?;
    let indicator = f64::from(partial_zero_one(y, &greedy));
    Ok(raw.max(0.0) - (indicator - inner))
}
