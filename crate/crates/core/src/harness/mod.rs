//! Multi-seed experiments: threshold selection on validation accuracy,
//! aggregation into mean and sample standard deviation, and reports.

mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{emit_report, read_results_json, render_csv, render_markdown, ReportFormat};

use crate::baselines::{run_method, MethodConfig};
use crate::data::{generate_sbm, load_dataset, sample_split, Dataset, SbmParams, Split};
use crate::em::UgstConfig;
use crate::error::{Error, Result};
use crate::outcome::{MethodId, RunResult};

pub const DEFAULT_GAMMA_GRID: [f64; 4] = [0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Two validation means closer than this are a tie.
pub const GAMMA_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DatasetSource {
    Directory { path: PathBuf },
    Sbm { params: SbmParams, seed: u64 },
}

impl DatasetSource {
    pub fn resolve(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Directory { path } => load_dataset(path),
            DatasetSource::Sbm { params, seed } => generate_sbm(params, *seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    pub methods: Vec<MethodId>,
    pub gamma_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub labeled_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    /// Shared settings. `gamma` is replaced by each grid value and
    /// `inner_train.seed` by each run seed.
    pub ugst: UgstConfig,
    pub entropy_weight: f64,
}

impl ExperimentConfig {
    pub fn new(source: DatasetSource) -> Self {
        ExperimentConfig {
            source,
            methods: MethodId::ALL.to_vec(),
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            labeled_fraction: 0.05,
            val_fraction: 0.15,
            test_fraction: 0.30,
            ugst: UgstConfig::default(),
            entropy_weight: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::structural("no methods selected"));
        }
        if self.seeds.is_empty() {
            return Err(Error::structural("no seeds given"));
        }
        if self.methods.iter().any(|m| m.uses_gamma()) && self.gamma_grid.is_empty() {
            return Err(Error::structural("gamma grid is empty"));
        }
        if let Some(g) = self.gamma_grid.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
            return Err(Error::structural(format!("gamma {g} outside (0, 1]")));
        }
        self.ugst.inner_train.validate()
    }

    /// Methods in first-seen order, without repeats.
    fn unique_methods(&self) -> Vec<MethodId> {
        let mut out: Vec<MethodId> = Vec::new();
        for &m in &self.methods {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }
}

/// A run that returned an error. Kept in the report instead of aborting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub method: MethodId,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub category: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaScore {
    pub gamma: f64,
    pub mean_validation_accuracy: f64,
    pub runs: usize,
}

/// Aggregate row of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: MethodId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_scores: Vec<GammaScore>,
    pub seeds: Vec<u64>,
    pub test_accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation, `0` for a single run.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub dataset: String,
    pub num_nodes: usize,
    pub num_classes: usize,
    pub config: ExperimentConfig,
    pub rows: Vec<MethodRow>,
    /// Every successful run, in (method, gamma, seed) order.
    pub runs: Vec<RunResult>,
    pub failures: Vec<FailedRun>,
}

impl ResultsTable {
    pub fn row(&self, method: MethodId) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `n - 1` denominator; `0` when fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Threshold with the highest mean validation accuracy; ties go to the
/// smallest threshold.
pub fn select_gamma(scores: &[GammaScore]) -> Result<f64> {
    let mut best: Option<&GammaScore> = None;
    for s in scores {
        best = match best {
            None => Some(s),
            Some(b) => {
                let diff = s.mean_validation_accuracy - b.mean_validation_accuracy;
                if diff > GAMMA_TIE_TOLERANCE
                    || (diff.abs() <= GAMMA_TIE_TOLERANCE && s.gamma < b.gamma)
                {
                    Some(s)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.map(|s| s.gamma)
        .ok_or_else(|| Error::structural("no threshold was evaluated"))
}

#[derive(Debug, Clone, Copy)]
struct Job {
    method: MethodId,
    gamma: Option<f64>,
    seed_index: usize,
}

fn build_jobs(config: &ExperimentConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    for method in config.unique_methods() {
        let gammas: Vec<Option<f64>> = if method.uses_gamma() {
            config.gamma_grid.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for gamma in gammas {
            for seed_index in 0..config.seeds.len() {
                jobs.push(Job {
                    method,
                    gamma,
                    seed_index,
                });
            }
        }
    }
    jobs
}

fn execute(
    job: Job,
    dataset: &Dataset,
    splits: &[Split],
    config: &ExperimentConfig,
) -> Result<RunResult> {
    let seed = config.seeds[job.seed_index];
    let mut ugst = config.ugst.clone();
    ugst.inner_train.seed = seed;
    let method_config = MethodConfig {
        ugst,
        entropy_weight: config.entropy_weight,
    };
    let outcome = run_method(
        job.method,
        dataset,
        &splits[job.seed_index],
        &method_config,
        job.gamma,
    )?;
    Ok(outcome.result)
}

fn aggregate(method: MethodId, runs: &[&RunResult]) -> Result<Option<MethodRow>> {
    let (selected_gamma, gamma_scores, chosen): (Option<f64>, Vec<GammaScore>, Vec<&RunResult>) =
        if method.uses_gamma() {
            let mut grid: Vec<f64> = Vec::new();
            for r in runs {
                let g = r.gamma.expect("gamma methods record gamma");
                if !grid.contains(&g) {
                    grid.push(g);
                }
            }
            let mut scores = Vec::new();
            for &g in &grid {
                let vals: Vec<f64> = runs
                    .iter()
                    .filter(|r| r.gamma == Some(g))
                    .map(|r| r.validation_accuracy.unwrap_or(0.0))
                    .collect();
                scores.push(GammaScore {
                    gamma: g,
                    mean_validation_accuracy: mean(&vals),
                    runs: vals.len(),
                });
            }
            if scores.is_empty() {
                return Ok(None);
            }
            let g = select_gamma(&scores)?;
            let chosen = runs
                .iter()
                .copied()
                .filter(|r| r.gamma == Some(g))
                .collect();
            (Some(g), scores, chosen)
        } else {
            (None, Vec::new(), runs.to_vec())
        };
    if chosen.is_empty() {
        return Ok(None);
    }
    let test_accuracies: Vec<f64> = chosen.iter().map(|r| r.test_accuracy).collect();
    Ok(Some(MethodRow {
        method,
        selected_gamma,
        gamma_scores,
        seeds: chosen.iter().map(|r| r.seed).collect(),
        mean: mean(&test_accuracies),
        std: sample_std(&test_accuracies),
        test_accuracies,
    }))
}

/// Runs every (method, gamma, seed) combination on up to `workers` threads
/// and aggregates. The table is assembled in job order, so the output does
/// not depend on `workers`.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ResultsTable> {
    config.validate()?;
    let dataset = config.source.resolve()?;
    let splits: Vec<Split> = config
        .seeds
        .iter()
        .map(|&s| {
            sample_split(
                &dataset,
                config.labeled_fraction,
                config.val_fraction,
                config.test_fraction,
                s,
            )
        })
        .collect::<Result<_>>()?;

    let jobs = build_jobs(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::structural(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<RunResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|&job| execute(job, &dataset, &splits, config))
            .collect()
    });

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => runs.push(r),
            Err(e) => {
                let seed = config.seeds[job.seed_index];
                log::warn!(
                    "run {} seed {seed} gamma {:?} failed and is excluded: {e}",
                    job.method,
                    job.gamma
                );
                failures.push(FailedRun {
                    method: job.method,
                    seed,
                    gamma: job.gamma,
                    category: e.category().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }

    let mut rows = Vec::new();
    for method in config.unique_methods() {
        let mine: Vec<&RunResult> = runs.iter().filter(|r| r.method == method).collect();
        if let Some(row) = aggregate(method, &mine)? {
            rows.push(row);
        } else {
            log::warn!("method {method} has no successful runs");
        }
    }

    Ok(ResultsTable {
        dataset: dataset.name().to_string(),
        num_nodes: dataset.num_nodes(),
        num_classes: dataset.num_classes(),
        config: config.clone(),
        rows,
        runs,
        failures,
    })
}

/// Writes the lossless JSON record.
pub fn write_results_json(table: &ResultsTable, path: impl AsRef<Path>) -> Result<()> {
    emit_report(std::slice::from_ref(table), ReportFormat::Json, path)
}
