use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FeedbackOracle, LabelOracle, Learner, LearnerConfig, LearnerState, TrialRecord};
use crate::error::{Error, Result};
use crate::model::{Label, LabelSet, UpdateMatrix};

/// Banditron: explore uniformly with probability `gamma`, otherwise play
/// the top-1 label, and update with
/// `x_j (1{y = y~} 1{r = y~} / P(y~) - 1{r = yhat})`.
#[derive(Clone, Debug)]
pub struct Banditron {
    state: LearnerState,
    gamma: f64,
    rng: ChaCha8Rng,
}

impl Banditron {
    pub fn new(config: &LearnerConfig) -> Result<Self> {
        LearnerConfig { m: 1, ..*config }.validate_bandit()?;
        Ok(Banditron {
            state: LearnerState::new(config.k, config.d),
            gamma: config.gamma,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    fn draw(&self, probs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (r, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(r);
            }
        }
        probs
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::Internal("empty label distribution".into()))
    }

    pub fn step(
        &mut self,
        x: &[f64],
        oracle: &mut dyn FeedbackOracle,
    ) -> Result<(UpdateMatrix, Label, usize, bool)> {
        let scores = self.state.weights.score(x)?;
        let k = scores.len();
        let predicted = scores.argmax().index();
        let explore = self.gamma / k as f64;
        let probs: Vec<f64> = (0..k)
            .map(|r| {
                let exploit = if r == predicted { 1.0 - self.gamma } else { 0.0 };
                exploit + explore
            })
            .collect();

        let mut rng = self.rng.clone();
        let played = self.draw(&probs, &mut rng)?;
        let hit = oracle.contains(&LabelSet::from_indices_unchecked([played], k))?;

        let coeffs = (0..k)
            .map(|r| {
                let reward = if hit && r == played { 1.0 / probs[played] } else { 0.0 };
                let greedy = if r == predicted { 1.0 } else { 0.0 };
                reward - greedy
            })
            .collect();
        let update = UpdateMatrix::outer(coeffs, x);
        self.state.commit(&update)?;
        self.rng = rng;
        Ok((update, Label::from_index(predicted), played, hit))
    }
}

impl Learner for Banditron {
    fn name(&self) -> &'static str {
        "banditron"
    }

    fn state(&self) -> &LearnerState {
        &self.state
    }

    fn observe(&mut self, x: &[f64], label: Label) -> Result<(UpdateMatrix, TrialRecord)> {
        let k = self.state.weights.num_classes();
        let (update, predicted, played, hit) = self.step(x, &mut LabelOracle(label))?;
        let record = TrialRecord::new(
            self.state.round,
            predicted,
            LabelSet::from_indices_unchecked([predicted.index()], k),
            Some(LabelSet::from_indices_unchecked([played], k)),
            Some(hit),
            label,
        );
        Ok((update, record))
    }
}
