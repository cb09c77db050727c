use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use pqc_core::descriptors::DescriptorConfig;
use pqc_core::{DatasetId, Loss, OptimizerKind};
use pqc_tool::commands::{self, format_verification, CorrelateSource, DescriptorJob};
use pqc_tool::config::{IdList, SweepConfig};

#[derive(Parser)]
#[command(name = "pqc", version, about = "Descriptors, training sweeps and correlation analysis for 4-qubit circuit templates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the nine datasets as CSV files.
    Datasets {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out/datasets")]
        out: PathBuf,
    },
    /// Compute expressibility and entangling capability.
    Descriptors {
        #[arg(long, default_value = "1-19")]
        templates: IdList,
        #[arg(long, default_value = "1,2")]
        layers: IdList,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        pairs: usize,
        #[arg(long, default_value_t = 75)]
        bins: usize,
        #[arg(long, default_value_t = 1000)]
        ent_samples: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Hyperparameter sweep (every template but 10, both optimizers and losses).
    Sweep(SweepArgs),
    /// Final runs with Adam and L2 on all templates, three repeats.
    Validate(SweepArgs),
    /// Correlate descriptors with validation accuracy.
    Correlate {
        #[arg(long, conflicts_with = "fixtures_dir", requires = "descriptors")]
        runs: Option<PathBuf>,
        #[arg(long)]
        descriptors: Option<PathBuf>,
        /// Use the reference fixture tables instead of fresh results.
        #[arg(long)]
        fixtures_dir: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "2a")]
        exclude: Vec<DatasetId>,
        /// Training setting whose runs are correlated.
        #[arg(long, default_value = "adam")]
        optimizer: OptimizerKind,
        #[arg(long, default_value = "l2")]
        loss: Loss,
        #[arg(long, default_value = "out/report")]
        out: PathBuf,
    },
    /// Recompute the reference tables from the fixtures and compare.
    VerifyFixtures {
        #[arg(long, default_value = "fixtures")]
        fixtures_dir: PathBuf,
        /// Also write the checks as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show template gate programs.
    Catalog {
        #[arg(long)]
        template: Option<u32>,
        #[arg(long, default_value_t = 1)]
        layers: u32,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    templates: Option<IdList>,
    #[arg(long)]
    layers: Option<IdList>,
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<DatasetId>>,
    #[arg(long, value_delimiter = ',')]
    optimizer: Option<Vec<OptimizerKind>>,
    #[arg(long, value_delimiter = ',')]
    loss: Option<Vec<Loss>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    repeats: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

impl SweepArgs {
    fn resolve(self, base: SweepConfig) -> Result<(SweepConfig, usize)> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::from_toml_file(path)?,
            None => base,
        };
        if let Some(IdList(v)) = self.templates {
            cfg.templates = v;
        }
        if let Some(IdList(v)) = self.layers {
            cfg.layers = v;
        }
        if let Some(v) = self.datasets {
            cfg.datasets = v;
        }
        if let Some(v) = self.optimizer {
            cfg.optimizers = v;
        }
        if let Some(v) = self.loss {
            cfg.losses = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if self.lr.is_some() {
            cfg.learning_rate = self.lr;
        }
        if let Some(v) = self.batch {
            cfg.batch_size = v;
        }
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.out {
            cfg.output_dir = v;
        }
        Ok((cfg, self.jobs))
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Datasets { seed, out } => {
            let paths = commands::cmd_datasets(seed, &out)?;
            println!("wrote {} datasets to {}", paths.len(), out.display());
        }
        Command::Descriptors { templates, layers, seed, pairs, bins, ent_samples, out, jobs } => {
            let config = DescriptorConfig {
                n_fidelity_pairs: pairs,
                n_histogram_bins: bins,
                n_ent_samples: ent_samples,
                seed,
                fixed_features: None,
            };
            let job = DescriptorJob { templates: templates.0, layers: layers.0, config, out_dir: out.clone() };
            let results = commands::cmd_descriptors(&job, jobs)?;
            println!("template layers     expr  expr'    ent");
            for r in &results {
                println!("{:>8} {:>6} {:>8.4} {:>6.3} {:>6.3}", r.template_id, r.layers, r.expr, r.expr_prime, r.ent);
            }
            println!("wrote {}", out.join(commands::DESCRIPTORS_FILE).display());
        }
        Command::Sweep(args) => {
            let (cfg, jobs) = args.resolve(SweepConfig::test_sweep())?;
            let o = commands::cmd_sweep(&cfg, jobs)?;
            println!("trained {}, skipped {}, {} rows in {}", o.trained, o.skipped, o.total_rows, o.runs_path.display());
        }
        Command::Validate(args) => {
            let (cfg, jobs) = args.resolve(SweepConfig::validation())?;
            let o = commands::cmd_sweep(&cfg, jobs)?;
            println!("trained {}, skipped {}, {} rows in {}", o.trained, o.skipped, o.total_rows, o.runs_path.display());
        }
        Command::Correlate { runs, descriptors, fixtures_dir, exclude, optimizer, loss, out } => {
            let source = match (runs, descriptors, fixtures_dir) {
                (Some(runs), Some(descriptors), None) => CorrelateSource::Files { runs, descriptors, optimizer, loss },
                (None, _, Some(dir)) => CorrelateSource::Fixtures(dir),
                _ => anyhow::bail!("give either --runs and --descriptors, or --fixtures-dir"),
            };
            let report = commands::cmd_correlate(&source, &exclude, &out)?;
            for run in &report.correlation.runs {
                println!("run {}", run.run);
                for d in &run.datasets {
                    let mark = if d.excluded { " (excluded)" } else { "" };
                    println!("  {}  n={:>2}  r(expr')={:+.3}  r(ent)={:+.3}{mark}", d.dataset, d.n_points, d.r_expr_prime, d.r_ent);
                }
                let (e, n) = (&run.expr_prime, &run.ent);
                println!("  expr': mean {:.3} std {:.3} | excluded mean {:.3} std {:.3}", e.mean, e.std, e.mean_excluded, e.std_excluded);
                println!("  ent:   mean {:.3} std {:.3} | excluded mean {:.3} std {:.3}", n.mean, n.std, n.mean_excluded, n.std_excluded);
            }
            println!("wrote {}", out.join(commands::REPORT_FILE).display());
        }
        Command::VerifyFixtures { fixtures_dir, out } => {
            let report = commands::cmd_verify_fixtures(&fixtures_dir)?;
            print!("{}", format_verification(&report));
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            return Ok(report.passed());
        }
        Command::Catalog { template, layers } => print!("{}", commands::cmd_catalog(template, layers)?),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
