//! Online multiclass classification with diluted bandit feedback.
//!
//! Each round the learner sees `x`, predicts an ordered set of `m` labels
//! and is told only whether the true label is in that set. [`McDbf`]
//! learns from that single bit with an importance-weighted, unbiased
//! estimate of the full-information update used by [`McSlp`].
//!
//! The crate also carries the sampling distributions, the closed-form
//! mistake bound, a separable data generator, a CSV feature loader and an
//! experiment harness.
//!
//! ```
//! use mcdbf_core::data::{generate_separable, SynthConfig};
//! use mcdbf_core::{run_online, LearnerConfig, McDbf};
//!
//! let data = generate_separable(&SynthConfig::synsep(2_000, 0))?;
//! let mut learner = McDbf::new(&LearnerConfig { k: 9, d: 400, m: 2, gamma: 0.2, seed: 1 })?;
//! let metrics = run_online(&mut learner, &data.examples, 2_000, 500)?;
//! assert_eq!(metrics.checkpoints.len(), 4);
//! # Ok::<(), mcdbf_core::Error>(())
//! ```

pub mod bounds;
pub mod data;
pub mod error;
pub mod harness;
pub mod learners;
pub mod losses;
pub mod model;
pub mod sampling;

pub use error::{Error, Result};
pub use learners::{
    run_online, Banditron, Learner, LearnerConfig, McDbf, McSlp, Perceptron, RunMetrics,
    TrialRecord, UpdateMatrix,
};
pub use model::{predict_top1, predict_top_m, score, Example, Label, LabelSet, ScoreVector, WeightMatrix};
