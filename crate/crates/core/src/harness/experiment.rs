use log::{info, warn};
use rayon::prelude::*;

use super::spec::{Algorithm, DataSource, ExperimentSpec, GammaChoice};
use crate::bounds::{self, check_subset, MistakeBoundInputs};
use crate::data::{self, generate_separable};
use crate::error::{Error, Result};
use crate::learners::{run_online, Banditron, Learner, LearnerConfig, McDbf, McSlp, Perceptron, RunMetrics};
use crate::model::{Example, WeightMatrix};

/// A loaded stream with its comparator, when one is known.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub k: usize,
    pub d: usize,
    pub examples: Vec<Example>,
    pub w_star: Option<WeightMatrix>,
}

impl PreparedData {
    pub fn load(source: &DataSource) -> Result<Self> {
        match source {
            DataSource::Synthetic(cfg) => {
                let synth = generate_separable(cfg)?;
                Ok(PreparedData {
                    k: cfg.k,
                    d: cfg.d,
                    examples: synth.examples,
                    w_star: Some(synth.w_star),
                })
            }
            DataSource::File { path, shuffle_seed } => {
                let file = data::load_features(path)?;
                let mut examples = file.examples;
                if let Some(seed) = shuffle_seed {
                    data::shuffle(&mut examples, *seed);
                }
                Ok(PreparedData {
                    k: file.k,
                    d: file.d,
                    examples,
                    w_star: None,
                })
            }
        }
    }
}

/// Execution options that do not affect results.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads across seeds; 1 runs sequentially.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { jobs: 1 }
    }
}

/// Mean and standard deviation across seeds at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub round: u64,
    pub mean_error: f64,
    /// Sample standard deviation; zero for a single seed.
    pub std_error: f64,
    pub mean_set_mistakes: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub label: String,
    pub spec: ExperimentSpec,
    /// Exploration rate after resolving `auto`.
    pub gamma: Option<f64>,
    pub m: usize,
    /// One entry per seed, in seed-list order.
    pub runs: Vec<RunMetrics>,
    pub curve: Vec<CurvePoint>,
    /// Mistake-bound value for bandit runs with a known comparator.
    pub bound: Option<f64>,
}

impl ExperimentResult {
    pub fn rounds(&self) -> u64 {
        self.runs.first().map_or(0, |r| r.rounds)
    }

    pub fn mean_final_error(&self) -> f64 {
        mean(self.runs.iter().map(RunMetrics::final_error_rate))
    }

    pub fn mean_set_mistakes(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.set_mistakes as f64))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mu = mean(values.iter().copied());
    let ss: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Learner seed for position `index` of a seed list. Stable across
/// platforms and releases.
pub fn derive_seed(base: u64, index: usize, algorithm: Algorithm) -> u64 {
    let salt = splitmix64(fnv1a(algorithm.family()) ^ index as u64);
    splitmix64(base ^ salt)
}

/// Data-dependent validation and parameter resolution.
fn resolve(spec: &ExperimentSpec, data: &PreparedData) -> Result<(usize, Option<f64>)> {
    spec.validate()?;
    let m = spec.subset_size();
    check_subset(data.k, m).map_err(|e| Error::Config(format!("{}: {e}", spec.algorithm)))?;
    if spec.rounds > data.examples.len() as u64 {
        warn!(
            "{}: {} rounds requested but the stream has {} examples; runs will stop early",
            spec.algorithm,
            spec.rounds,
            data.examples.len()
        );
    }
    let gamma = match (spec.algorithm.is_bandit(), spec.gamma) {
        (false, _) | (true, None) => None,
        (true, Some(GammaChoice::Fixed(g))) => Some(g),
        (true, Some(GammaChoice::Keyword(_))) => {
            let w_star = data.w_star.as_ref().ok_or_else(|| {
                Error::Config(format!("{}: gamma = auto needs a known comparator", spec.algorithm))
            })?;
            let horizon = spec.rounds.min(data.examples.len() as u64).max(1);
            let g = bounds::optimal_gamma(data.k, m, 2.0 * w_star.frobenius_sq(), horizon)?;
            info!("{}: auto gamma resolved to {g}", spec.algorithm);
            Some(g)
        }
    };
    Ok((m, gamma))
}

fn build_learner(algorithm: Algorithm, config: &LearnerConfig) -> Result<Box<dyn Learner + Send>> {
    Ok(match algorithm {
        Algorithm::McDbf => Box::new(McDbf::new(config)?),
        Algorithm::McSlp => Box::new(McSlp::new(config)?),
        Algorithm::Perceptron => Box::new(Perceptron::new(config)?),
        Algorithm::Banditron => Box::new(Banditron::new(config)?),
    })
}

fn aggregate(runs: &[RunMetrics]) -> Result<Vec<CurvePoint>> {
    let Some(first) = runs.first() else {
        return Ok(Vec::new());
    };
    let mut curve = Vec::with_capacity(first.checkpoints.len());
    for (i, cp) in first.checkpoints.iter().enumerate() {
        let mut errors = Vec::with_capacity(runs.len());
        let mut mistakes = Vec::with_capacity(runs.len());
        for run in runs {
            let other = run
                .checkpoints
                .get(i)
                .filter(|c| c.round == cp.round)
                .ok_or_else(|| Error::Internal("runs disagree on checkpoint rounds".into()))?;
            errors.push(other.error_rate());
            mistakes.push(other.set_mistakes as f64);
        }
        curve.push(CurvePoint {
            round: cp.round,
            mean_error: mean(errors.iter().copied()),
            std_error: sample_std(&errors),
            mean_set_mistakes: mean(mistakes.into_iter()),
        });
    }
    Ok(curve)
}

/// Runs `spec` on already loaded data.
pub fn run_prepared(spec: &ExperimentSpec, data: &PreparedData, options: RunOptions) -> Result<ExperimentResult> {
    let (m, gamma) = resolve(spec, data)?;
    let configs: Vec<LearnerConfig> = spec
        .seeds
        .iter()
        .enumerate()
        .map(|(i, &base)| LearnerConfig {
            k: data.k,
            d: data.d,
            m,
            gamma: gamma.unwrap_or(0.5),
            seed: derive_seed(base, i, spec.algorithm),
        })
        .collect();
    let learners = configs
        .iter()
        .map(|c| build_learner(spec.algorithm, c))
        .collect::<Result<Vec<_>>>()?;

    let run_one = |(mut learner, config): (Box<dyn Learner + Send>, &LearnerConfig)| {
        let mut metrics = run_online(&mut learner, &data.examples, spec.rounds, spec.log_every)?;
        metrics.seed = config.seed;
        Ok::<_, Error>(metrics)
    };
    let jobs = learners.into_iter().zip(&configs);
    let runs = if options.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        let jobs: Vec<_> = jobs.collect();
        pool.install(|| jobs.into_par_iter().map(run_one).collect::<Result<Vec<_>>>())?
    } else {
        jobs.map(run_one).collect::<Result<Vec<_>>>()?
    };

    let curve = aggregate(&runs)?;
    let rounds = runs.first().map_or(0, |r| r.rounds);
    let bound = match (gamma, &data.w_star) {
        (Some(g), Some(w_star)) if rounds > 0 => {
            let stream = &data.examples[..rounds as usize];
            let cert = bounds::separability_certificate(w_star, stream, m)?;
            let inputs = MistakeBoundInputs::for_comparator(w_star, cert.comparator_loss, rounds);
            Some(bounds::mistake_bound(&inputs, &bounds::constants(data.k, m, g)?)?)
        }
        _ => None,
    };
    Ok(ExperimentResult {
        label: spec.label.clone().unwrap_or_else(|| spec.default_label()),
        spec: spec.clone(),
        gamma,
        m,
        runs,
        curve,
        bound,
    })
}

/// Loads the spec's data and runs every seed.
pub fn run_experiment(spec: &ExperimentSpec, options: RunOptions) -> Result<ExperimentResult> {
    spec.validate()?;
    let data = PreparedData::load(&spec.data)?;
    run_prepared(spec, &data, options)
}

/// One row of a gamma sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub mean_final_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Grid value with the lowest mean final error; the first on ties.
    pub best_gamma: f64,
    pub results: Vec<ExperimentResult>,
}

/// Specs for each grid point, labelled by gamma.
pub fn sweep_specs(spec: &ExperimentSpec, grid: &[f64]) -> Result<Vec<ExperimentSpec>> {
    if grid.is_empty() {
        return Err(Error::Config("gamma grid is empty".into()));
    }
    if !spec.algorithm.is_bandit() {
        return Err(Error::Config(format!("{} has no exploration rate to sweep", spec.algorithm)));
    }
    grid.iter()
        .map(|&g| {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Config(format!("grid value {g} outside (0, 1)")));
            }
            let mut s = spec.clone().with_gamma(GammaChoice::Fixed(g));
            s.label = Some(s.default_label());
            Ok(s)
        })
        .collect()
}

/// Runs `spec` once per grid value on shared data.
pub fn gamma_sweep(spec: &ExperimentSpec, grid: &[f64], options: RunOptions) -> Result<SweepResult> {
    let specs = sweep_specs(spec, grid)?;
    for s in &specs {
        s.validate()?;
    }
    let data = PreparedData::load(&spec.data)?;
    let results = specs
        .iter()
        .map(|s| run_prepared(s, &data, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_sweep(results))
}

pub(crate) fn summarize_sweep(results: Vec<ExperimentResult>) -> SweepResult {
    let rows: Vec<SweepRow> = results
        .iter()
        .map(|r| SweepRow {
            gamma: r.gamma.unwrap_or(f64::NAN),
            mean_final_error: r.mean_final_error(),
        })
        .collect();
    let best_gamma = rows
        .iter()
        .fold(None::<&SweepRow>, |best, row| match best {
            Some(b) if b.mean_final_error <= row.mean_final_error => Some(b),
            _ => Some(row),
        })
        .map_or(f64::NAN, |r| r.gamma);
    SweepResult { rows, best_gamma, results }
}

/// Runs several specs over one shared data source, horizon and
/// checkpoint spacing. Duplicate labels get a `#n` suffix.
pub fn compare(specs: &[ExperimentSpec], options: RunOptions) -> Result<Vec<ExperimentResult>> {
    let Some(first) = specs.first() else {
        return Err(Error::Config("nothing to compare".into()));
    };
    for s in specs {
        s.validate()?;
        if s.data != first.data {
            return Err(Error::Config("compared experiments must share one data source".into()));
        }
        if s.rounds != first.rounds || s.log_every != first.log_every {
            return Err(Error::Config(
                "compared experiments must share the number of rounds and checkpoint spacing".into(),
            ));
        }
    }
    let data = PreparedData::load(&first.data)?;
    let mut results = specs
        .iter()
        .map(|s| run_prepared(s, &data, options))
        .collect::<Result<Vec<_>>>()?;
    dedup_labels(&mut results);
    Ok(results)
}

pub(crate) fn dedup_labels(results: &mut [ExperimentResult]) {
    let mut seen: Vec<String> = Vec::new();
    for r in results.iter_mut() {
        let base = r.label.clone();
        let mut n = 1;
        while seen.contains(&r.label) {
            n += 1;
            r.label = format!("{base}#{n}");
        }
        seen.push(r.label.clone());
    }
}
