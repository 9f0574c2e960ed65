use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use mcdbf_core::data::{generate_separable, write_features, SynthConfig};
use mcdbf_core::harness::{
    emit_report, parse_seeds, Algorithm, Command, DataSource, ExperimentSpec, GammaChoice, Manifest, RunOptions,
    DEFAULT_LOG_EVERY,
};

/// Online multiclass learning with diluted bandit feedback.
#[derive(Debug, Parser)]
#[command(name = "mcdbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write a synthetic separable stream as a feature file.
    GenData(GenDataArgs),
    /// Run one algorithm over several seeds.
    Run(RunArgs),
    /// Run one bandit algorithm for each value of a gamma grid.
    SweepGamma(SweepArgs),
    /// Run several algorithms on the same stream.
    Compare(CompareArgs),
    /// Re-run the experiment described by a manifest file.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of classes.
    #[arg(long, default_value_t = 9)]
    k: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 400)]
    d: usize,
    /// Comparator margin.
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    /// Minimum geometric gap between the best and second-best class.
    #[arg(long, default_value_t = 0.1)]
    gap: f64,
    /// Label noise rate.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Seed of the data generator.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl SynthArgs {
    fn config(&self, rounds: u64) -> SynthConfig {
        SynthConfig {
            k: self.k,
            d: self.d,
            margin: self.margin,
            gap: self.gap,
            seed: self.data_seed,
            rounds,
            noise_rate: self.noise,
        }
    }
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[command(flatten)]
    synth: SynthArgs,
    /// Number of examples.
    #[arg(long = "T", visible_alias = "rounds")]
    rounds: u64,
    /// Output feature file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Number of rounds.
    #[arg(long = "T", visible_alias = "rounds")]
    rounds: u64,
    /// Seed count `N` (seeds 0..N) or a comma-separated seed list.
    #[arg(long, default_value = "10")]
    seeds: String,
    /// Feature file; a synthetic stream is generated when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Shuffle the feature file with this seed.
    #[arg(long, requires = "data")]
    shuffle_seed: Option<u64>,
    #[command(flatten)]
    synth: SynthArgs,
    /// Checkpoint spacing in rounds; 0 keeps only the final round.
    #[arg(long, default_value_t = DEFAULT_LOG_EVERY)]
    log_every: u64,
    /// Output directory for curves.csv, summary.csv and manifest.toml.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads across seeds.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Add log-scale columns to curves.csv.
    #[arg(long)]
    log_log: bool,
}

impl CommonArgs {
    fn data_source(&self) -> DataSource {
        match &self.data {
            Some(path) => DataSource::File {
                path: path.clone(),
                shuffle_seed: self.shuffle_seed,
            },
            None => DataSource::Synthetic(self.synth.config(self.rounds)),
        }
    }

    fn spec(&self, algorithm: Algorithm, m: Option<usize>, gamma: Option<GammaChoice>) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            label: None,
            algorithm,
            rounds: self.rounds,
            m: if algorithm.takes_subset_size() { m } else { None },
            gamma: if algorithm.is_bandit() { gamma } else { None },
            seeds: parse_seeds(&self.seeds)?,
            log_every: self.log_every,
            data: self.data_source(),
        })
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// mc-dbf, mc-slp, perceptron or banditron.
    #[arg(long)]
    algo: Algorithm,
    /// Size of the predicted label set.
    #[arg(long)]
    m: Option<usize>,
    /// Exploration rate in (0, 1) or `auto`.
    #[arg(long)]
    gamma: Option<GammaChoice>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "mc-dbf")]
    algo: Algorithm,
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated gamma values.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Repeatable: `NAME[:m=M][:gamma=G][:label=L]`.
    #[arg(long = "algo", required = true)]
    algos: Vec<String>,
    /// Default m for entries that do not set one.
    #[arg(long)]
    m: Option<usize>,
    /// Default gamma for entries that do not set one.
    #[arg(long)]
    gamma: Option<GammaChoice>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Manifest file, e.g. the manifest.toml of an earlier report.
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn parse_entry(entry: &str, common: &CommonArgs, m: Option<usize>, gamma: Option<GammaChoice>) -> Result<ExperimentSpec> {
    let mut parts = entry.split(':');
    let algorithm: Algorithm = parts.next().unwrap_or_default().parse()?;
    let (mut m, mut gamma, mut label) = (m, gamma, None);
    for part in parts {
        let Some((key, value)) = part.split_once('=') else {
            bail!("malformed option `{part}` in `{entry}`; expected key=value");
        };
        match key {
            "m" => m = Some(value.parse().with_context(|| format!("invalid m in `{entry}`"))?),
            "gamma" => gamma = Some(value.parse()?),
            "label" => label = Some(value.to_string()),
            _ => bail!("unknown option `{key}` in `{entry}`"),
        }
    }
    let mut spec = common.spec(algorithm, m, gamma)?;
    spec.label = label;
    Ok(spec)
}

fn execute(mut manifest: Manifest, log_log: Option<bool>, out: &Path, jobs: usize) -> Result<()> {
    if jobs == 0 {
        bail!("--jobs must be >= 1");
    }
    if let Some(flag) = log_log {
        manifest.log_log = flag;
    }
    let report = manifest.execute(RunOptions { jobs })?;
    let files = emit_report(&report, out)?;
    for r in &report.results {
        println!(
            "{}: final error {:.4}, set mistakes {:.1}{}",
            r.label,
            r.mean_final_error(),
            r.mean_set_mistakes(),
            r.bound.map(|b| format!(", bound {b:.1}")).unwrap_or_default()
        );
    }
    if let Some(g) = report.best_gamma {
        println!("best gamma: {g}");
    }
    info!("wrote {}", files.curves.display());
    println!("report written to {}", out.display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::GenData(args) => {
            let config = args.synth.config(args.rounds);
            let data = generate_separable(&config)?;
            write_features(&args.out, config.k, config.d, &data.examples)?;
            println!("wrote {} examples to {}", data.examples.len(), args.out.display());
        }
        Cmd::Run(args) => {
            let spec = args.common.spec(args.algo, args.m, args.gamma)?;
            let manifest = Manifest::new(Command::Run, vec![spec]);
            execute(manifest, Some(args.common.log_log), &args.common.out, args.common.jobs)?;
        }
        Cmd::SweepGamma(args) => {
            let spec = args.common.spec(args.algo, args.m, None)?;
            let manifest = Manifest::sweep(spec, args.grid);
            execute(manifest, Some(args.common.log_log), &args.common.out, args.common.jobs)?;
        }
        Cmd::Compare(args) => {
            let specs = args
                .algos
                .iter()
                .map(|a| parse_entry(a, &args.common, args.m, args.gamma))
                .collect::<Result<Vec<_>>>()?;
            let manifest = Manifest::new(Command::Compare, specs);
            execute(manifest, Some(args.common.log_log), &args.common.out, args.common.jobs)?;
        }
        Cmd::Replay(args) => {
            let manifest = Manifest::load(&args.manifest)?;
            execute(manifest, None, &args.out, args.jobs)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
