use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{self, compare, run_prepared, sweep_specs, ExperimentResult, PreparedData, RunOptions};
use super::spec::ExperimentSpec;
use crate::error::{Error, Result};

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Version string recorded in manifests.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Run,
    SweepGamma,
    Compare,
}

/// Everything needed to reproduce a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    pub command: Command,
    /// Add log-scale columns to `curves.csv`.
    #[serde(default)]
    pub log_log: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
    pub experiments: Vec<ExperimentSpec>,
}

impl Manifest {
    pub fn new(command: Command, experiments: Vec<ExperimentSpec>) -> Self {
        Manifest {
            version: CODE_VERSION.to_string(),
            command,
            log_log: false,
            gamma_grid: None,
            experiments,
        }
    }

    pub fn sweep(spec: ExperimentSpec, grid: Vec<f64>) -> Self {
        Manifest {
            gamma_grid: Some(grid),
            ..Manifest::new(Command::SweepGamma, vec![spec])
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if manifest.version != CODE_VERSION {
            log::warn!(
                "manifest written by version {} replayed with {CODE_VERSION}",
                manifest.version
            );
        }
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.experiments.len();
        let cmd = self.command.name();
        if (self.command == Command::SweepGamma) != self.gamma_grid.is_some() {
            return Err(Error::Config("gamma_grid is required for sweep-gamma and only valid there".into()));
        }
        if n == 0 || (self.command != Command::Compare && n != 1) {
            return Err(Error::Config(format!("{cmd} cannot take {n} experiments")));
        }
        match &self.gamma_grid {
            Some(grid) => sweep_specs(&self.experiments[0], grid)?
                .iter()
                .try_for_each(ExperimentSpec::validate),
            None => self.experiments.iter().try_for_each(ExperimentSpec::validate),
        }
    }

    /// Runs the manifest's experiments.
    pub fn execute(&self, options: RunOptions) -> Result<Report> {
        self.validate()?;
        let (results, best_gamma) = match self.command {
            Command::Run => {
                let spec = &self.experiments[0];
                let data = PreparedData::load(&spec.data)?;
                (vec![run_prepared(spec, &data, options)?], None)
            }
            Command::Compare => (compare(&self.experiments, options)?, None),
            Command::SweepGamma => {
                let grid = self.gamma_grid.as_deref().unwrap_or_default();
                let specs = sweep_specs(&self.experiments[0], grid)?;
                let data = PreparedData::load(&self.experiments[0].data)?;
                let results = specs
                    .iter()
                    .map(|s| run_prepared(s, &data, options))
                    .collect::<Result<Vec<_>>>()?;
                let sweep = experiment::summarize_sweep(results);
                (sweep.results, Some(sweep.best_gamma))
            }
        };
        Ok(Report {
            manifest: self.clone(),
            results,
            best_gamma,
        })
    }
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::SweepGamma => "sweep-gamma",
            Command::Compare => "compare",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub manifest: Manifest,
    pub results: Vec<ExperimentResult>,
    /// Set for gamma sweeps.
    pub best_gamma: Option<f64>,
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

impl Report {
    /// `curves.csv` contents: `t`, then `mean_error,std_error` per
    /// experiment, columns prefixed with the experiment label. Rows are
    /// the union of all checkpoint rounds; missing cells stay empty.
    pub fn curves_csv(&self) -> Result<String> {
        let log_log = self.manifest.log_log;
        let mut header = vec!["t".to_string()];
        if log_log {
            header.push("log_t".into());
        }
        for r in &self.results {
            header.push(format!("{}.mean_error", r.label));
            header.push(format!("{}.std_error", r.label));
            if log_log {
                header.push(format!("{}.log_set_mistakes", r.label));
            }
        }
        let rounds: BTreeSet<u64> = self
            .results
            .iter()
            .flat_map(|r| r.curve.iter().map(|p| p.round))
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).map_err(csv_err)?;
        for t in rounds {
            let mut row = vec![t.to_string()];
            if log_log {
                row.push((t as f64).ln().to_string());
            }
            for r in &self.results {
                let point = r.curve.iter().find(|p| p.round == t);
                row.push(opt(point.map(|p| p.mean_error)));
                row.push(opt(point.map(|p| p.std_error)));
                if log_log {
                    let mistakes = point.map(|p| p.mean_set_mistakes).filter(|&m| m > 0.0);
                    row.push(opt(mistakes.map(f64::ln)));
                }
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        into_string(w)
    }

    /// `summary.csv` contents, one row per experiment.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["algo", "gamma", "m", "T", "final_error", "set_mistakes", "bound"])
            .map_err(csv_err)?;
        for r in &self.results {
            if r.runs.is_empty() || r.rounds() == 0 {
                continue;
            }
            w.write_record([
                r.label.clone(),
                opt(r.gamma),
                r.m.to_string(),
                r.rounds().to_string(),
                r.mean_final_error().to_string(),
                r.mean_set_mistakes().to_string(),
                opt(r.bound),
            ])
            .map_err(csv_err)?;
        }
        into_string(w)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv encoding: {e}"))
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Internal(format!("csv flush: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Paths of the files written by [`emit_report`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportFiles {
    pub curves: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `curves.csv`, `summary.csv` and `manifest.toml` into `dir`,
/// creating it if needed.
pub fn emit_report(report: &Report, dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles {
        curves: dir.join(CURVES_FILE),
        summary: dir.join(SUMMARY_FILE),
        manifest: dir.join(MANIFEST_FILE),
    };
    let mut manifest = report.manifest.clone();
    manifest.version = CODE_VERSION.to_string();
    for (path, contents) in [
        (&files.curves, report.curves_csv()?),
        (&files.summary, report.summary_csv()?),
        (&files.manifest, manifest.to_toml()?),
    ] {
        fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    }
    Ok(files)
}
