use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backward::backward;
use super::forward::{forward, GcnInput, Mode};
use super::loss::{accuracy, LossTerm, Objective};
use super::optim::{adam_step, AdamState};
use super::params::{init_params, ModelParams};
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::graph::normalize_adjacency;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub hidden_dim: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 200,
            dropout_rate: 0.5,
            hidden_dim: 64,
            weight_decay: 5e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::structural(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::structural(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::structural(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.hidden_dim == 0 {
            return Err(Error::structural("hidden dimension must be positive"));
        }
        Ok(())
    }
}

/// Everything one training run needs: the propagation input built from the
/// dataset, the split, the config, and the dropout stream. The dropout
/// stream is shared by every phase of the run, so a run is a pure function
/// of `(dataset, split, config)`.
pub struct Session<'a> {
    dataset: &'a Dataset,
    split: &'a Split,
    config: TrainConfig,
    input: GcnInput,
    dropout_rng: ChaCha8Rng,
}

impl<'a> Session<'a> {
    pub fn new(dataset: &'a Dataset, split: &'a Split, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if split.num_nodes() != dataset.num_nodes() {
            return Err(Error::structural(format!(
                "split covers {} nodes, dataset has {}",
                split.num_nodes(),
                dataset.num_nodes()
            )));
        }
        let input = GcnInput::new(
            normalize_adjacency(dataset.graph()),
            dataset.features().to_owned(),
        )?;
        let dropout_rng = seed::stream(config.seed, seed::DROPOUT, 0);
        Ok(Session {
            dataset,
            split,
            config,
            input,
            dropout_rng,
        })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn split(&self) -> &'a Split {
        self.split
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn input(&self) -> &GcnInput {
        &self.input
    }

    pub fn init_params(&self) -> Result<ModelParams> {
        init_params(
            self.dataset.feature_dim(),
            self.config.hidden_dim,
            self.dataset.num_classes(),
            self.config.seed,
        )
    }

    /// Empty objective carrying the configured weight decay.
    pub fn objective(&self) -> Objective<'static> {
        Objective::new(self.config.weight_decay)
    }

    /// One full-batch optimizer step in train mode. Returns the objective
    /// value of the forward pass the step was computed from.
    pub fn step(
        &mut self,
        params: &mut ModelParams,
        objective: &Objective<'_>,
        adam: &mut AdamState,
    ) -> Result<f64> {
        let mode = Mode::Train {
            dropout: self.config.dropout_rate,
        };
        let trace = forward(params, &self.input, mode, &mut self.dropout_rng)?;
        let loss = objective.value(trace.probs.view(), params)?;
        if !loss.is_finite() {
            return Err(Error::numeric("non-finite training loss"));
        }
        let grads = backward(&trace, &self.input, objective, params)?;
        adam_step(params, &grads, adam, self.config.learning_rate)?;
        Ok(loss)
    }

    /// `epochs` steps from a fresh optimizer state. Returns per-step losses.
    pub fn fit(
        &mut self,
        params: &mut ModelParams,
        objective: &Objective<'_>,
        epochs: usize,
    ) -> Result<Vec<f64>> {
        let mut adam = AdamState::new(params);
        (0..epochs)
            .map(|_| self.step(params, objective, &mut adam))
            .collect()
    }

    /// Cross-entropy on the labeled set for `config.epochs` steps.
    pub fn fit_supervised(&mut self, params: &mut ModelParams) -> Result<Vec<f64>> {
        let labels = self.dataset.labels();
        let mask = self.split.labeled();
        let objective = self.objective().with(1.0, LossTerm::Hard { labels, mask });
        self.fit(params, &objective, self.config.epochs)
    }

    /// Eval-mode class probabilities for every node.
    pub fn predict(&self, params: &ModelParams) -> Result<Array2<f64>> {
        // Eval mode draws nothing from the generator.
        let mut unused = seed::stream(0, seed::DROPOUT, 0);
        Ok(forward(params, &self.input, Mode::Eval, &mut unused)?.probs)
    }

    pub fn evaluate(&self, params: &ModelParams, objective: &Objective<'_>) -> Result<f64> {
        let probs = self.predict(params)?;
        objective.value(probs.view(), params)
    }

    pub fn accuracy(&self, params: &ModelParams, mask: &[usize]) -> Result<f64> {
        accuracy(self.predict(params)?.view(), self.dataset.labels(), mask)
    }
}

fn warn_missing_classes(dataset: &Dataset, split: &Split) {
    let mut seen = vec![false; dataset.num_classes()];
    for &v in split.labeled() {
        seen[dataset.labels()[v]] = true;
    }
    let missing: Vec<usize> = (0..seen.len()).filter(|&k| !seen[k]).collect();
    if !missing.is_empty() {
        log::warn!("labeled set has no node of classes {missing:?}");
    }
}

/// Base training: cross-entropy on the labeled nodes from a fresh init.
pub fn train_supervised(
    dataset: &Dataset,
    split: &Split,
    config: &TrainConfig,
) -> Result<ModelParams> {
    if split.labeled().is_empty() {
        return Err(Error::structural("labeled set is empty"));
    }
    warn_missing_classes(dataset, split);
    let mut session = Session::new(dataset, split, config.clone())?;
    let mut params = session.init_params()?;
    session.fit_supervised(&mut params)?;
    Ok(params)
}
