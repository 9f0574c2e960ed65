use super::{Learner, LearnerConfig, LearnerState, TrialRecord};
use crate::error::{Error, Result};
use crate::model::{Label, UpdateMatrix};

/// Multiclass perceptron: on a top-1 mistake, add `x` to the true row and
/// subtract it from the predicted row.
#[derive(Clone, Debug)]
pub struct Perceptron {
    state: LearnerState,
}

impl Perceptron {
    pub fn new(config: &LearnerConfig) -> Result<Self> {
        LearnerConfig { m: 1, ..*config }.validate_full_information()?;
        Ok(Perceptron {
            state: LearnerState::new(config.k, config.d),
        })
    }

    pub fn update(&mut self, x: &[f64], y: Label) -> Result<(UpdateMatrix, TrialRecord)> {
        let scores = self.state.weights.score(x)?;
        let k = scores.len();
        if y.index() >= k {
            return Err(Error::InvalidArgument(format!("label {y} out of range 1..={k}")));
        }
        let predicted = scores.argmax();
        let mut coeffs = vec![0.0; k];
        if predicted != y {
            coeffs[y.index()] = 1.0;
            coeffs[predicted.index()] = -1.0;
        }
        let update = UpdateMatrix::outer(coeffs, x);
        self.state.commit(&update)?;
        let greedy = scores.top_m(1)?;
        let record = TrialRecord::new(self.state.round, predicted, greedy, None, None, y);
        Ok((update, record))
    }
}

impl Learner for Perceptron {
    fn name(&self) -> &'static str {
        "perceptron"
    }

    fn state(&self) -> &LearnerState {
        &self.state
    }

    fn observe(&mut self, x: &[f64], label: Label) -> Result<(UpdateMatrix, TrialRecord)> {
        self.update(x, label)
    }
}
