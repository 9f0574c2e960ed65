use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SynthConfig;
use crate::error::{Error, Result};

/// Checkpoint spacing used when none is given.
pub const DEFAULT_LOG_EVERY: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    McDbf,
    McSlp,
    Perceptron,
    Banditron,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::McDbf,
        Algorithm::McSlp,
        Algorithm::Perceptron,
        Algorithm::Banditron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::McDbf => "mc-dbf",
            Algorithm::McSlp => "mc-slp",
            Algorithm::Perceptron => "perceptron",
            Algorithm::Banditron => "banditron",
        }
    }

    /// Name that keys seed derivation. Banditron shares the mc-dbf family
    /// so both draw identical random streams for the same seed list.
    pub fn family(self) -> &'static str {
        match self {
            Algorithm::Banditron => Algorithm::McDbf.name(),
            other => other.name(),
        }
    }

    pub fn is_bandit(self) -> bool {
        matches!(self, Algorithm::McDbf | Algorithm::Banditron)
    }

    /// Whether `m` is a free parameter.
    pub fn takes_subset_size(self) -> bool {
        matches!(self, Algorithm::McDbf | Algorithm::McSlp)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm `{s}` (expected one of mc-dbf, mc-slp, perceptron, banditron)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaKeyword {
    Auto,
}

/// A fixed exploration rate or `"auto"`, the closed-form separable-case
/// optimum computed from the generator's comparator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaChoice {
    Fixed(f64),
    Keyword(GammaKeyword),
}

impl GammaChoice {
    pub const AUTO: GammaChoice = GammaChoice::Keyword(GammaKeyword::Auto);
}

impl FromStr for GammaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaChoice::AUTO);
        }
        s.parse::<f64>()
            .map(GammaChoice::Fixed)
            .map_err(|_| Error::Config(format!("gamma must be a number or `auto`, got `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic(SynthConfig),
    File {
        path: PathBuf,
        /// Shuffle the file's rows with this seed before running.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shuffle_seed: Option<u64>,
    },
}

/// One algorithm configuration run over a list of seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Column prefix in reports; defaults to a name built from the
    /// algorithm and its parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub algorithm: Algorithm,
    pub rounds: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaChoice>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    pub data: DataSource,
}

fn default_log_every() -> u64 {
    DEFAULT_LOG_EVERY
}

impl ExperimentSpec {
    pub fn new(algorithm: Algorithm, data: DataSource, rounds: u64) -> Self {
        ExperimentSpec {
            label: None,
            algorithm,
            rounds,
            m: None,
            gamma: None,
            seeds: vec![0],
            log_every: DEFAULT_LOG_EVERY,
            data,
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_gamma(mut self, gamma: GammaChoice) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_seeds(mut self, seeds: impl Into<Vec<u64>>) -> Self {
        self.seeds = seeds.into();
        self
    }

    pub fn with_log_every(mut self, log_every: u64) -> Self {
        self.log_every = log_every;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Subset size actually used: the given `m` for subset algorithms,
    /// 1 otherwise.
    pub fn subset_size(&self) -> usize {
        if self.algorithm.takes_subset_size() {
            self.m.unwrap_or(0)
        } else {
            1
        }
    }

    /// Structural checks that need no data.
    pub fn validate(&self) -> Result<()> {
        let algo = self.algorithm;
        if self.seeds.is_empty() {
            return Err(Error::Config(format!("{algo}: seed list is empty")));
        }
        match (algo.takes_subset_size(), self.m) {
            (true, None) => return Err(Error::Config(format!("{algo} requires m"))),
            (true, Some(0)) => return Err(Error::Config(format!("{algo}: m must be >= 1"))),
            (false, Some(m)) if m != 1 => {
                return Err(Error::Config(format!("{algo} predicts a single label; got m = {m}")))
            }
            _ => {}
        }
        match (algo.is_bandit(), self.gamma) {
            (true, None) => return Err(Error::Config(format!("{algo} requires gamma"))),
            (true, Some(GammaChoice::Fixed(g))) if !(g > 0.0 && g < 1.0) => {
                return Err(Error::Config(format!("{algo}: gamma must lie in (0, 1), got {g}")))
            }
            _ => {}
        }
        if let DataSource::Synthetic(cfg) = &self.data {
            cfg.validate()?;
            if self.rounds > cfg.rounds {
                return Err(Error::Config(format!(
                    "{algo}: {} rounds requested but the synthetic stream has {}",
                    self.rounds, cfg.rounds
                )));
            }
        } else if self.gamma == Some(GammaChoice::AUTO) && algo.is_bandit() {
            return Err(Error::Config(format!(
                "{algo}: gamma = auto needs a known comparator; use synthetic data or a fixed gamma"
            )));
        }
        if let Some(label) = &self.label {
            if label.is_empty() || label.contains([',', '"', '\n']) {
                return Err(Error::Config(format!("label `{label}` must be nonempty without commas or quotes")));
            }
        }
        Ok(())
    }

    pub(crate) fn default_label(&self) -> String {
        let mut s = self.algorithm.name().to_string();
        if self.algorithm.takes_subset_size() {
            s.push_str(&format!("-m{}", self.subset_size()));
        }
        if self.algorithm.is_bandit() {
            match self.gamma {
                Some(GammaChoice::Fixed(g)) => s.push_str(&format!("-g{g}")),
                Some(GammaChoice::Keyword(GammaKeyword::Auto)) => s.push_str("-gauto"),
                None => {}
            }
        }
        s
    }
}

/// Parses `N` (seeds `0..N`) or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("seeds must be a count or a comma-separated list, got `{text}`"));
    if text.contains(',') {
        text.split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| bad()))
            .collect()
    } else {
        let n = text.trim().parse::<u64>().map_err(|_| bad())?;
        if n == 0 {
            return Err(Error::Config("seed count must be >= 1".into()));
        }
        Ok((0..n).collect())
    }
}
