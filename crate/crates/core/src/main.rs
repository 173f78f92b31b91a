use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ugst::data::{generate_sbm, save_dataset, SbmParams};
use ugst::em::{AugmentTargets, ParamReuse, UgstConfig};
use ugst::gnn::TrainConfig;
use ugst::harness::{
    emit_report, read_results_json, run_experiment, write_results_json, DatasetSource,
    ExperimentConfig, ReportFormat,
};
use ugst::{Error, MethodId};

#[derive(Parser)]
#[command(
    name = "ugst",
    version,
    about = "Uncertainty-aware graph self-training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-partition dataset directory.
    GenSbm {
        #[command(flatten)]
        sbm: SbmArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a multi-seed experiment and write results.json.
    Run(Box<RunArgs>),
    /// Render results.json files as markdown or csv.
    Report {
        /// One or more results files; each becomes a column.
        #[arg(long = "in", required = true, num_args = 1.., value_delimiter = ',')]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SbmArgs {
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    #[arg(long, default_value_t = 100)]
    block_size: usize,
    #[arg(long, default_value_t = 0.10)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Seed of the generated graph and features.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SbmArgs {
    fn params(&self) -> SbmParams {
        SbmParams {
            num_blocks: self.blocks,
            nodes_per_block: self.block_size,
            p_in: self.p_in,
            p_out: self.p_out,
            feature_dim: self.feature_dim,
            signal_strength: self.signal,
            noise_std: self.noise,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory in the portable format.
    #[arg(long, conflicts_with = "sbm")]
    dataset: Option<PathBuf>,
    /// Generate a planted-partition dataset instead of loading one.
    #[arg(long)]
    sbm: bool,
    #[command(flatten)]
    sbm_args: SbmArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "base,st,slst,entmin,ugst"
    )]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.7,0.8,0.9")]
    gamma_grid: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    em_steps: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 0.05)]
    labeled_frac: f64,
    #[arg(long, default_value_t = 0.15)]
    val_frac: f64,
    #[arg(long, default_value_t = 0.30)]
    test_frac: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 50)]
    m_step_epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 5e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 0.5)]
    entmin_weight: f64,
    /// Weight of the unlabeled soft term in the M-step.
    #[arg(long, default_value_t = 1.0)]
    unlabeled_weight: f64,
    /// Start every phase after base training from the initial weights.
    #[arg(long)]
    reinit: bool,
    /// Train pseudo-labeled nodes against their posterior rows.
    #[arg(long)]
    soft_augment: bool,
    /// Always run every round regardless of validation accuracy.
    #[arg(long)]
    no_early_stop: bool,
    #[arg(long, default_value = "results.json")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let source = match (&self.dataset, self.sbm) {
            (Some(path), false) => DatasetSource::Directory { path: path.clone() },
            (None, true) => DatasetSource::Sbm {
                params: self.sbm_args.params(),
                seed: self.sbm_args.seed,
            },
            _ => {
                return Err(Error::Structural(
                    "exactly one of --dataset DIR or --sbm is required".into(),
                ))
            }
        };
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse::<MethodId>())
            .collect::<Result<Vec<_>, _>>()?;
        let ugst = UgstConfig {
            gamma: self.gamma_grid.first().copied().unwrap_or(0.9),
            em_steps: self.em_steps,
            m_step_epochs: self.m_step_epochs,
            inner_train: TrainConfig {
                learning_rate: self.lr,
                epochs: self.epochs,
                dropout_rate: self.dropout,
                hidden_dim: self.hidden,
                weight_decay: self.weight_decay,
                seed: 0,
            },
            param_reuse: if self.reinit {
                ParamReuse::Reinitialize
            } else {
                ParamReuse::FineTune
            },
            augment_targets: if self.soft_augment {
                AugmentTargets::Soft
            } else {
                AugmentTargets::Hard
            },
            unlabeled_weight: self.unlabeled_weight,
            early_stopping: !self.no_early_stop,
        };
        Ok(ExperimentConfig {
            source,
            methods,
            gamma_grid: self.gamma_grid.clone(),
            seeds: self.seeds.clone(),
            labeled_fraction: self.labeled_frac,
            val_fraction: self.val_frac,
            test_fraction: self.test_frac,
            ugst,
            entropy_weight: self.entmin_weight,
        })
    }
}

fn workers_from_env() -> Result<usize, Error> {
    match std::env::var("UGST_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| {
                Error::Structural(format!(
                    "UGST_WORKERS must be a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(1),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenSbm { sbm, out } => {
            let dataset = generate_sbm(&sbm.params(), sbm.seed)?;
            save_dataset(&dataset, &out)?;
            log::info!(
                "wrote {} nodes, {} edges to {}",
                dataset.num_nodes(),
                dataset.graph().num_edges(),
                out.display()
            );
        }
        Command::Run(args) => {
            let config = args.config()?;
            let workers = workers_from_env()?;
            let table = run_experiment(&config, workers)?;
            for row in &table.rows {
                log::info!(
                    "{:<6} mean {:.4} std {:.4} gamma {:?}",
                    row.method,
                    row.mean,
                    row.std,
                    row.selected_gamma
                );
            }
            write_results_json(&table, &args.out)?;
        }
        Command::Report {
            inputs,
            format,
            out,
        } => {
            let format: ReportFormat = format.parse()?;
            let tables = inputs
                .iter()
                .map(read_results_json)
                .collect::<Result<Vec<_>, _>>()?;
            emit_report(&tables, format, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
