//! Example streams: a seeded linearly separable generator and a CSV
//! feature-file format.
//!
//! Feature files are plain decimal ASCII. The first line is `k,d`; every
//! following line is `label,f1,...,fd` with a 1-based label. Features are
//! divided by `max(1, ||x||)` on load.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Example, Label, WeightMatrix};

/// Draw attempts allowed per generated example.
pub const REJECTION_BUDGET: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub k: usize,
    pub d: usize,
    /// Margin of the returned comparator, `(W* x)_y - (W* x)_i >= margin`.
    pub margin: f64,
    /// Geometric gap between the top two projections onto the unit class
    /// directions; examples closer to a decision boundary are rejected.
    #[serde(default = "SynthConfig::default_gap")]
    pub gap: f64,
    pub seed: u64,
    pub rounds: u64,
    /// Fraction of labels replaced by a uniformly drawn wrong label.
    #[serde(default)]
    pub noise_rate: f64,
}

impl SynthConfig {
    fn default_gap() -> f64 {
        0.1
    }

    /// 9 classes in 400 dimensions, unit margin.
    pub fn synsep(rounds: u64, seed: u64) -> Self {
        SynthConfig {
            k: 9,
            d: 400,
            margin: 1.0,
            gap: Self::default_gap(),
            seed,
            rounds,
            noise_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("need k >= 2 classes, got {}", self.k)));
        }
        if self.d < self.k {
            return Err(Error::InvalidParameter(format!(
                "generator needs d >= k (got d = {}, k = {})",
                self.d, self.k
            )));
        }
        if !(self.margin >= 1.0) || !self.margin.is_finite() {
            return Err(Error::InvalidParameter(format!("margin must be >= 1, got {}", self.margin)));
        }
        if !(self.gap > 0.0 && self.gap < 1.0) {
            return Err(Error::InvalidParameter(format!("gap must lie in (0, 1), got {}", self.gap)));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::InvalidParameter(format!(
                "noise rate must lie in [0, 1), got {}",
                self.noise_rate
            )));
        }
        Ok(())
    }
}

/// A generated stream with the comparator that separates it.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub examples: Vec<Example>,
    pub w_star: WeightMatrix,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// `k` orthonormal directions in `R^d` by Gram-Schmidt on Gaussian draws.
fn orthonormal_rows(rng: &mut ChaCha8Rng, k: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    while rows.len() < k {
        let mut v = unit_gaussian(rng, d);
        for q in &rows {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            rows.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    rows
}

/// Unit-norm examples labelled by the nearest of `k` orthonormal class
/// directions, kept only when the best direction beats the runner-up by
/// `gap`. The returned `W*` is those directions scaled by
/// `margin / gap`.
pub fn generate_separable(config: &SynthConfig) -> Result<SyntheticData> {
    config.validate()?;
    let SynthConfig { k, d, .. } = *config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let directions = orthonormal_rows(&mut rng, k, d);
    let mut examples = Vec::with_capacity(config.rounds as usize);
    for _ in 0..config.rounds {
        let mut accepted = None;
        for _ in 0..REJECTION_BUDGET {
            let x = unit_gaussian(&mut rng, d);
            let proj: Vec<f64> = directions
                .iter()
                .map(|q| q.iter().zip(&x).map(|(a, b)| a * b).sum())
                .collect();
            let (best, runner_up) = top_two(&proj);
            if proj[best] - proj[runner_up] >= config.gap {
                accepted = Some((x, best));
                break;
            }
        }
        let (x, mut y) = accepted.ok_or(Error::RejectionBudget {
            budget: REJECTION_BUDGET,
        })?;
        if config.noise_rate > 0.0 && rng.gen::<f64>() < config.noise_rate {
            let shift = rng.gen_range(1..k);
            y = (y + shift) % k;
        }
        examples.push(Example::new(x, Label::from_index(y), k)?);
    }
    let scale = config.margin / config.gap;
    let w_star = WeightMatrix::from_fn(k, d, |r, j| directions[r][j] * scale);
    Ok(SyntheticData { examples, w_star })
}

fn top_two(values: &[f64]) -> (usize, usize) {
    let (mut best, mut second) = if values[1] > values[0] { (1, 0) } else { (0, 1) };
    for (i, &v) in values.iter().enumerate().skip(2) {
        if v > values[best] {
            second = best;
            best = i;
        } else if v > values[second] {
            second = i;
        }
    }
    (best, second)
}

/// Contents of a feature file.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureFile {
    pub path: PathBuf,
    pub k: usize,
    pub d: usize,
    pub examples: Vec<Example>,
}

impl FeatureFile {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a feature file and normalises every vector to `||x|| <= 1`.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records = reader.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| parse_err(path, 1, e.to_string()))?,
        None => return Err(parse_err(path, 1, "missing `k,d` header")),
    };
    let line_of = |rec: &csv::StringRecord| rec.position().map_or(0, |p| p.line());
    if header.len() != 2 {
        return Err(parse_err(path, line_of(&header), "header must be `k,d`"));
    }
    let parse_usize = |field: &str, what: &str, line: u64| {
        field
            .parse::<usize>()
            .map_err(|_| parse_err(path, line, format!("invalid {what} `{field}`")))
    };
    let k = parse_usize(&header[0], "class count", line_of(&header))?;
    let d = parse_usize(&header[1], "dimension", line_of(&header))?;
    if k < 2 || d == 0 {
        return Err(parse_err(path, line_of(&header), "need k >= 2 and d >= 1"));
    }

    let mut examples = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = line_of(&rec);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != d + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", d + 1, rec.len()),
            ));
        }
        let number = parse_usize(&rec[0], "label", line)?;
        if number == 0 || number > k {
            return Err(parse_err(path, line, format!("label {number} out of range 1..={k}")));
        }
        let features = rec
            .iter()
            .skip(1)
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(path, line, format!("invalid feature `{f}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut example = Example::new(features, Label::from_index(number - 1), k)?;
        example.normalize();
        examples.push(example);
    }
    Ok(FeatureFile {
        path: path.to_path_buf(),
        k,
        d,
        examples,
    })
}

/// Writes examples in the feature-file format.
pub fn write_features(path: impl AsRef<Path>, k: usize, d: usize, examples: &[Example]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{k},{d}").map_err(io)?;
    for ex in examples {
        if ex.features.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: ex.features.len(),
            });
        }
        write!(out, "{}", ex.label.number()).map_err(io)?;
        for v in &ex.features {
            write!(out, ",{v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Seeded in-place shuffle.
pub fn shuffle(examples: &mut [Example], seed: u64) {
    examples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
}
