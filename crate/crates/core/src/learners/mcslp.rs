use super::{Learner, LearnerConfig, LearnerState, TrialRecord};
use crate::error::{Error, Result};
use crate::model::{Label, LabelSet, UpdateMatrix, WeightMatrix};

/// Full-information subset update `U[r][j] = x_j (1{r = y} - 1{r in Yhat}/m)`
/// together with the greedy set it was computed from.
pub fn subset_update(
    w: &WeightMatrix,
    x: &[f64],
    y: Label,
    m: usize,
) -> Result<(UpdateMatrix, LabelSet)> {
    if y.index() >= w.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "label {y} out of range 1..={}",
            w.num_classes()
        )));
    }
    let greedy = w.score(x)?.top_m(m)?;
    Ok((subset_update_for(x, y, &greedy), greedy))
}

fn subset_update_for(x: &[f64], y: Label, greedy: &LabelSet) -> UpdateMatrix {
    let inv_m = 1.0 / greedy.len() as f64;
    let mask = greedy.mask();
    let coeffs = mask
        .iter()
        .enumerate()
        .map(|(r, &in_greedy)| {
            let hit = if r == y.index() { 1.0 } else { 0.0 };
            let spread = if in_greedy { inv_m } else { 0.0 };
            hit - spread
        })
        .collect();
    UpdateMatrix::outer(coeffs, x)
}

/// Multiclass subset-label prediction with full information.
#[derive(Clone, Debug)]
pub struct McSlp {
    state: LearnerState,
    m: usize,
}

impl McSlp {
    pub fn new(config: &LearnerConfig) -> Result<Self> {
        config.validate_full_information()?;
        Ok(McSlp {
            state: LearnerState::new(config.k, config.d),
            m: config.m,
        })
    }

    pub fn subset_size(&self) -> usize {
        self.m
    }

    /// One round with the true label revealed.
    pub fn update(&mut self, x: &[f64], y: Label) -> Result<(UpdateMatrix, TrialRecord)> {
        let scores = self.state.weights.score(x)?;
        if y.index() >= scores.len() {
            return Err(Error::InvalidArgument(format!("label {y} out of range")));
        }
        let greedy = scores.top_m(self.m)?;
        let prediction = scores.argmax();
        let update = subset_update_for(x, y, &greedy);
        self.state.commit(&update)?;
        let record = TrialRecord::new(self.state.round, prediction, greedy, None, None, y);
        Ok((update, record))
    }
}

impl Learner for McSlp {
    fn name(&self) -> &'static str {
        "mc-slp"
    }

    fn state(&self) -> &LearnerState {
        &self.state
    }

    fn observe(&mut self, x: &[f64], label: Label) -> Result<(UpdateMatrix, TrialRecord)> {
        self.update(x, label)
    }
}
