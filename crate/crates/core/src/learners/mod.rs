//! Online learners.
//!
//! Every learner starts from `W = 0` and applies exactly one update per
//! example, right after that round's feedback.
//!
//! * [`McSlp`]: full-information subset learner,
//!   `U[r][j] = x_j (1{r = y} - 1{r in Yhat}/m)`.
//! * [`McDbf`]: diluted-bandit learner. Samples a superarm from the
//!   exploration distribution, observes only `1{y in Y~}` and applies an
//!   unbiased estimate of the subset update.
//! * [`Perceptron`]: classic multiclass perceptron.
//! * [`Banditron`]: single-label bandit learner. Coincides with `McDbf`
//!   at `m = 1` and is implemented separately as a cross-check.

mod banditron;
mod mcdbf;
mod mcslp;
mod perceptron;
mod run;

pub use banditron::Banditron;
pub use mcdbf::{bandit_update, BanditStep, EstimatorConstants, McDbf};
pub use mcslp::{subset_update, McSlp};
pub use perceptron::Perceptron;
pub use run::{run_online, run_online_with, Checkpoint, RunMetrics};

pub use crate::model::UpdateMatrix;

use log::warn;

use crate::bounds::{check_gamma, check_subset};
use crate::error::Result;
use crate::model::{Label, LabelSet, WeightMatrix};

/// `(k / gamma)^m` above which importance weights lose precision.
pub const IMPORTANCE_WEIGHT_WARN: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerConfig {
    pub k: usize,
    pub d: usize,
    pub m: usize,
    /// Exploration rate; read by bandit learners only.
    pub gamma: f64,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn validate_full_information(&self) -> Result<()> {
        check_subset(self.k, self.m)?;
        if self.d == 0 {
            return Err(crate::Error::InvalidParameter("feature dimension must be >= 1".into()));
        }
        Ok(())
    }

    pub fn validate_bandit(&self) -> Result<()> {
        self.validate_full_information()?;
        check_gamma(self.gamma)?;
        let worst = (self.k as f64 / self.gamma).powi(self.m as i32);
        if worst > IMPORTANCE_WEIGHT_WARN {
            warn!(
                "(k/gamma)^m = {worst:e} for k = {}, m = {}, gamma = {}: importance weights may lose precision",
                self.k, self.m, self.gamma
            );
        }
        Ok(())
    }
}

/// Weights and round counter.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub weights: WeightMatrix,
    pub round: u64,
}

impl LearnerState {
    pub fn new(k: usize, d: usize) -> Self {
        LearnerState {
            weights: WeightMatrix::zeros(k, d),
            round: 0,
        }
    }

    /// Applies the update and advances the round counter.
    fn commit(&mut self, update: &UpdateMatrix) -> Result<()> {
        self.weights.apply(update)?;
        self.round += 1;
        Ok(())
    }
}

/// Answers only whether the true label lies in a submitted set.
pub trait FeedbackOracle {
    fn contains(&mut self, set: &LabelSet) -> Result<bool>;
}

/// Oracle backed by a known label, used by the environment side.
#[derive(Clone, Copy, Debug)]
pub struct LabelOracle(pub Label);

impl FeedbackOracle for LabelOracle {
    fn contains(&mut self, set: &LabelSet) -> Result<bool> {
        Ok(set.contains(self.0))
    }
}

/// Per-round log entry. Labels are 1-based when displayed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub round: u64,
    /// Top-1 prediction `argmax_j (W x)_j`.
    pub prediction: Label,
    /// Greedy set `Yhat`.
    pub greedy: LabelSet,
    /// Sampled superarm, bandit learners only.
    pub sampled: Option<LabelSet>,
    /// Observed bit `1{y in Y~}`, bandit learners only.
    pub feedback: Option<bool>,
    pub top1_mistake: bool,
    /// `1{y not in Yhat}`.
    pub set_mistake: bool,
}

impl TrialRecord {
    /// Scores a round against the true label.
    pub fn new(
        round: u64,
        prediction: Label,
        greedy: LabelSet,
        sampled: Option<LabelSet>,
        feedback: Option<bool>,
        label: Label,
    ) -> Self {
        TrialRecord {
            round,
            top1_mistake: prediction != label,
            set_mistake: !greedy.contains(label),
            prediction,
            greedy,
            sampled,
            feedback,
        }
    }
}

/// An online learner driven one labelled example at a time. Bandit
/// learners see the label only through a [`LabelOracle`].
pub trait Learner {
    fn name(&self) -> &'static str;

    fn state(&self) -> &LearnerState;

    fn weights(&self) -> &WeightMatrix {
        &self.state().weights
    }

    fn observe(&mut self, x: &[f64], label: Label) -> Result<(UpdateMatrix, TrialRecord)>;
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn state(&self) -> &LearnerState {
        (**self).state()
    }

    fn observe(&mut self, x: &[f64], label: Label) -> Result<(UpdateMatrix, TrialRecord)> {
        (**self).observe(x, label)
    }
}

#[cfg(test)]
mod tests;
