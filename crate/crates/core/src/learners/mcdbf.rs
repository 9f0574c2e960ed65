use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FeedbackOracle, LabelOracle, Learner, LearnerConfig, LearnerState, TrialRecord};
use crate::bounds::{tau1, tau2};
use crate::error::Result;
use crate::model::{Label, LabelSet, UpdateMatrix};
use crate::sampling::{arm_distribution, sample_superarm, superarm_prob};

/// Normalisers of the bandit estimator. They depend on `(k, m)` only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConstants {
    pub m: usize,
    pub tau1: f64,
    pub tau2: f64,
}

impl EstimatorConstants {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        Ok(EstimatorConstants {
            m,
            tau1: tau1(k, m)?,
            tau2: tau2(k, m)?,
        })
    }
}

/// Bandit estimate of the subset update:
/// `U~[r][j] = x_j (f 1{r in Y~} / (Z(Y~) tau1) - tau2 - 1{r in Yhat}/m)`
/// where `f` is the observed feedback bit.
pub fn bandit_update(
    x: &[f64],
    greedy: &LabelSet,
    sampled: &LabelSet,
    feedback: bool,
    superarm_prob: f64,
    consts: &EstimatorConstants,
) -> UpdateMatrix {
    let m = consts.m as f64;
    let in_greedy = greedy.mask();
    let in_sampled = sampled.mask();
    let coeffs = in_greedy
        .iter()
        .zip(&in_sampled)
        .map(|(&g, &s)| {
            let weighted = if feedback && s {
                1.0 / (superarm_prob * consts.tau1)
            } else {
                0.0
            };
            let spread = if g { 1.0 / m } else { 0.0 };
            weighted - consts.tau2 - spread
        })
        .collect();
    UpdateMatrix::outer(coeffs, x)
}

/// What the bandit learner saw and did in one round. Contains no label.
#[derive(Clone, Debug, PartialEq)]
pub struct BanditStep {
    pub update: UpdateMatrix,
    pub prediction: Label,
    pub greedy: LabelSet,
    pub sampled: LabelSet,
    pub superarm_prob: f64,
    pub feedback: bool,
}

/// Multiclass learner under diluted bandit feedback.
#[derive(Clone, Debug)]
pub struct McDbf {
    state: LearnerState,
    gamma: f64,
    consts: EstimatorConstants,
    rng: ChaCha8Rng,
}

impl McDbf {
    pub fn new(config: &LearnerConfig) -> Result<Self> {
        config.validate_bandit()?;
        Ok(McDbf {
            state: LearnerState::new(config.k, config.d),
            gamma: config.gamma,
            consts: EstimatorConstants::new(config.k, config.m)?,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn constants(&self) -> &EstimatorConstants {
        &self.consts
    }

    /// One round. The oracle is asked once, for the sampled superarm. On
    /// any error the learner (weights, round counter and random stream) is
    /// left untouched.
    pub fn step(&mut self, x: &[f64], oracle: &mut dyn FeedbackOracle) -> Result<BanditStep> {
        let k = self.state.weights.num_classes();
        let scores = self.state.weights.score(x)?;
        let greedy = scores.top_m(self.consts.m)?;
        let prediction = scores.argmax();
        let dist = arm_distribution(&greedy, k, self.gamma)?;

        let mut rng = self.rng.clone();
        let sampled = sample_superarm(&dist, self.consts.m, &mut rng)?;
        let z = superarm_prob(&dist, &sampled)?;
        let feedback = oracle.contains(&sampled)?;

        let update = bandit_update(x, &greedy, &sampled, feedback, z, &self.consts);
        self.state.commit(&update)?;
        self.rng = rng;
        Ok(BanditStep {
            update,
            prediction,
            greedy,
            sampled,
            superarm_prob: z,
            feedback,
        })
    }
}

impl Learner for McDbf {
    fn name(&self) -> &'static str {
        "mc-dbf"
    }

    fn state(&self) -> &LearnerState {
        &self.state
    }

    fn observe(&mut self, x: &[f64], label: Label) -> Result<(UpdateMatrix, TrialRecord)> {
        let step = self.step(x, &mut LabelOracle(label))?;
        let record = TrialRecord::new(
            self.state.round,
            step.prediction,
            step.greedy,
            Some(step.sampled),
            Some(step.feedback),
            label,
        );
        Ok((step.update, record))
    }
}
