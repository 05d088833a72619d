use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mvpot::attribution::{FitMethod, World};
use mvpot::config::{PipelineConfig, WeightsMode};
use mvpot::data::{fig6_preset, two_block_preset, SyntheticSpec, RESULTS_JSON};
use mvpot::experiments::Experiment;
use mvpot::pipeline::{cmd_attribute, cmd_cluster, cmd_fit, cmd_reproduce, cmd_simulate, exit_code, exit_code_for};
use mvpot::{Error, Result};

#[derive(Parser)]
#[command(name = "mvpot", version, about = "Multivariate peaks-over-thresholds event attribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster sites, then estimate PN per cluster with bootstrap intervals.
    Attribute {
        #[arg(long)]
        input: PathBuf,
        /// Output directory for results.json, results.csv and curves/.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Recompute a reference table or figure and compare against its targets.
    Reproduce {
        #[arg(value_parser = parse_experiment)]
        experiment: Experiment,
        #[arg(long)]
        seed: u64,
        /// Also write the tables as CSV into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic two-world input CSV.
    Simulate {
        #[arg(long, value_enum, conflicts_with = "spec", required_unless_present = "spec")]
        preset: Option<Preset>,
        /// JSON file holding a full synthetic specification.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Blocks per world (overrides the specification).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tail-dependence distance matrix and PAM clustering of the counterfactual world.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        /// Write the clustering as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Per-site marginal fits of one world.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        world: u8,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Fig6,
    TwoBlock,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Equal,
    Optimal,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitArg {
    MarginAverage,
    Projected,
}

/// Flags mirroring the configuration fields; they override `--config`.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    season: Option<Vec<u32>>,
    #[arg(long)]
    block_days: Option<u32>,
    #[arg(long)]
    threshold_quantile: Option<f64>,
    #[arg(long)]
    chi_quantile: Option<f64>,
    #[arg(long = "K", alias = "k")]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    return_periods_years: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    weights_mode: Option<WeightsArg>,
    #[arg(long = "bootstrap-B", alias = "bootstrap-b")]
    bootstrap_b: Option<usize>,
    #[arg(long)]
    bootstrap_block_len: Option<usize>,
    #[arg(long, value_enum)]
    fit_method: Option<FitArg>,
    #[arg(long)]
    curve_points: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_json_file(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(x) = self.seed {
            c.seed = Some(x);
        }
        if let Some(x) = &self.season {
            c.season = x.clone();
        }
        if let Some(x) = self.block_days {
            c.block_days = x;
        }
        if let Some(x) = self.threshold_quantile {
            c.threshold_quantile = x;
        }
        if let Some(x) = self.chi_quantile {
            c.chi_quantile = x;
        }
        if let Some(x) = self.k {
            c.k = x;
        }
        if let Some(x) = &self.return_periods_years {
            c.return_periods_years = x.clone();
        }
        if let Some(x) = self.weights_mode {
            c.weights_mode = match x {
                WeightsArg::Equal => WeightsMode::Equal,
                WeightsArg::Optimal => WeightsMode::Optimal,
                WeightsArg::Both => WeightsMode::Both,
            };
        }
        if let Some(x) = self.bootstrap_b {
            c.bootstrap_b = x;
        }
        if let Some(x) = self.bootstrap_block_len {
            c.bootstrap_block_len = x;
        }
        if let Some(x) = self.fit_method {
            c.fit_method = match x {
                FitArg::MarginAverage => FitMethod::MarginAverage,
                FitArg::Projected => FitMethod::Projected,
            };
        }
        if let Some(x) = self.curve_points {
            c.curve_points = x;
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_experiment(s: &str) -> std::result::Result<Experiment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    match out {
        Some(p) => std::fs::write(p, json)?,
        None => emit(&json)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Attribute { input, out, config } => {
            let config = config.resolve()?;
            let (bundle, _) = cmd_attribute(&input, &config, Some(&out))?;
            let mut table = String::from("cluster\tstatus\tsites\tT\tlevel\tpn_equal [95% CI]\tpn_optimal [95% CI]\n");
            for c in &bundle.clusters {
                if c.return_periods.is_empty() {
                    table += &format!(
                        "{}\t{}\t{}\t-\t-\t-\t-\n",
                        c.cluster_id,
                        c.status.as_str(),
                        c.member_site_ids.len()
                    );
                }
                for rp in &c.return_periods {
                    let cell = |pn: &Option<mvpot::data::PnSummary>| match pn {
                        Some(p) => format!("{} [{}, {}]", fmt_opt(p.estimate), fmt_opt(p.ci_lo), fmt_opt(p.ci_hi)),
                        None => "-".into(),
                    };
                    table += &format!(
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                        c.cluster_id,
                        c.status.as_str(),
                        c.member_site_ids.len(),
                        rp.years,
                        fmt_opt(rp.level),
                        cell(&rp.equal),
                        cell(&rp.optimal)
                    );
                }
            }
            emit(&table)?;
            eprintln!("wrote {}", out.join(RESULTS_JSON).display());
        }
        Command::Reproduce { experiment, seed, out } => {
            let report = cmd_reproduce(experiment, seed)?;
            emit(&report.to_string())?;
            if let Some(dir) = out {
                for p in report.write_csvs(&dir)? {
                    eprintln!("wrote {}", p.display());
                }
            }
        }
        Command::Simulate {
            preset,
            spec,
            n,
            seed,
            out,
        } => {
            let mut spec: SyntheticSpec = match (preset, spec) {
                (Some(Preset::Fig6), _) => fig6_preset(n.unwrap_or(1000))?,
                (Some(Preset::TwoBlock), _) => two_block_preset(n.unwrap_or(1000))?,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::Input {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
                (None, None) => unreachable!("clap requires a preset or a spec"),
            };
            if let Some(n) = n {
                spec.n_counterfactual = n;
                spec.n_factual = n;
            }
            cmd_simulate(&spec, seed, &out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Cluster { input, out, config } => {
            let config = config.resolve()?;
            let result = cmd_cluster(&input, &config)?;
            write_json(&result, out.as_deref())?;
        }
        Command::Fit { input, world, config } => {
            let config = config.resolve()?;
            let world = World::from_code(world).expect("clap restricts the range");
            write_json(&cmd_fit(&input, &config, world)?, None)?;
        }
    }
    Ok(exit_code::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
