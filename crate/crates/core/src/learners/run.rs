use std::time::{Duration, Instant};

use super::{Learner, TrialRecord};
use crate::error::Result;
use crate::model::{Example, UpdateMatrix};

/// Cumulative counts after `round` rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub round: u64,
    pub top1_mistakes: u64,
    pub set_mistakes: u64,
}

impl Checkpoint {
    /// Cumulative top-1 error rate, `top1_mistakes / round`.
    pub fn error_rate(&self) -> f64 {
        if self.round == 0 {
            0.0
        } else {
            self.top1_mistakes as f64 / self.round as f64
        }
    }
}

/// Outcome of one online run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    pub requested_rounds: u64,
    pub rounds: u64,
    /// The stream ran out before `requested_rounds`.
    pub truncated: bool,
    pub top1_mistakes: u64,
    /// `M = sum_t 1{y_t not in Yhat_t}`.
    pub set_mistakes: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub wall_clock: Duration,
}

impl RunMetrics {
    pub fn final_error_rate(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            self.top1_mistakes as f64 / self.rounds as f64
        }
    }
}

/// Runs `rounds` rounds, checkpointing every `log_every` rounds and at the
/// last processed round. `log_every = 0` keeps only the final checkpoint.
pub fn run_online<'a, L, I>(learner: &mut L, stream: I, rounds: u64, log_every: u64) -> Result<RunMetrics>
where
    L: Learner + ?Sized,
    I: IntoIterator<Item = &'a Example>,
{
    run_online_with(learner, stream, rounds, log_every, |_, _| {})
}

/// [`run_online`] with a hook called after every round.
pub fn run_online_with<'a, L, I, F>(
    learner: &mut L,
    stream: I,
    rounds: u64,
    log_every: u64,
    mut on_trial: F,
) -> Result<RunMetrics>
where
    L: Learner + ?Sized,
    I: IntoIterator<Item = &'a Example>,
    F: FnMut(&TrialRecord, &UpdateMatrix),
{
    let start = Instant::now();
    let mut checkpoints = Vec::new();
    let (mut top1, mut set, mut t) = (0u64, 0u64, 0u64);
    let mut examples = stream.into_iter();
    while t < rounds {
        let Some(example) = examples.next() else {
            break;
        };
        let (update, record) = learner.observe(&example.features, example.label)?;
        t += 1;
        top1 += u64::from(record.top1_mistake);
        set += u64::from(record.set_mistake);
        on_trial(&record, &update);
        if log_every > 0 && t % log_every == 0 {
            checkpoints.push(Checkpoint {
                round: t,
                top1_mistakes: top1,
                set_mistakes: set,
            });
        }
    }
    if t > 0 && checkpoints.last().is_none_or(|c| c.round != t) {
        checkpoints.push(Checkpoint {
            round: t,
            top1_mistakes: top1,
            set_mistakes: set,
        });
    }
    Ok(RunMetrics {
        seed: 0,
        requested_rounds: rounds,
        rounds: t,
        truncated: t < rounds,
        top1_mistakes: top1,
        set_mistakes: set,
        checkpoints,
        wall_clock: start.elapsed(),
    })
}
