//! EM soft-label refinement with confidence-gated pseudo-labelling.
//!
//! One round is: read out `Q(z_v) = p_θ(y | v)` on the unlabeled pool
//! (E-step), fine-tune θ on the labeled cross-entropy plus the
//! `Q`-weighted expected log-likelihood of the pool (M-step), accept the
//! pool nodes whose `max_k Q` exceeds `gamma`, and retrain on the labeled
//! set augmented with those pseudo-labels. The accepted set is rebuilt from
//! scratch every round.

mod posterior;

use serde::{Deserialize, Serialize};

pub use posterior::{
    assign_pseudo_labels, PosteriorTable, PseudoLabel, PseudoLabelSet, ROW_SUM_TOLERANCE,
};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::gnn::{forward, GcnInput, LossTerm, Mode, ModelParams, Session, TrainConfig};
use crate::outcome::{IterationStats, MethodId, RunOutcome, RunResult};

/// Where each training phase after the base training starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamReuse {
    /// Continue from the current parameters.
    #[default]
    FineTune,
    /// Start from the run's initial Glorot draw.
    Reinitialize,
}

/// Targets used for pseudo-labeled nodes in the retraining phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmentTargets {
    /// Argmax class, trained with cross-entropy.
    #[default]
    Hard,
    /// The node's posterior row.
    Soft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UgstConfig {
    pub gamma: f64,
    /// Number of EM rounds.
    pub em_steps: usize,
    pub m_step_epochs: usize,
    /// Base training and per-round retraining settings.
    pub inner_train: TrainConfig,
    pub param_reuse: ParamReuse,
    pub augment_targets: AugmentTargets,
    /// Weight of the unlabeled term relative to the labeled one.
    pub unlabeled_weight: f64,
    /// Stop and restore the best parameters once a round fails to improve
    /// validation accuracy. Ignored when the split has no validation nodes.
    pub early_stopping: bool,
}

impl Default for UgstConfig {
    fn default() -> Self {
        UgstConfig {
            gamma: 0.9,
            em_steps: 3,
            m_step_epochs: 50,
            inner_train: TrainConfig::default(),
            param_reuse: ParamReuse::FineTune,
            augment_targets: AugmentTargets::Hard,
            unlabeled_weight: 1.0,
            early_stopping: true,
        }
    }
}

impl UgstConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::structural(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.unlabeled_weight >= 0.0 && self.unlabeled_weight.is_finite()) {
            return Err(Error::structural("unlabeled weight must be non-negative"));
        }
        self.inner_train.validate()
    }
}

/// Eval-mode class probabilities of `unlabeled`, as a posterior table.
pub fn e_step(
    params: &ModelParams,
    input: &GcnInput,
    unlabeled: &[usize],
) -> Result<PosteriorTable> {
    if unlabeled.is_empty() {
        return Err(Error::structural(
            "E-step needs at least one unlabeled node",
        ));
    }
    // Eval mode never touches the generator.
    let mut unused = crate::seed::stream(0, crate::seed::DROPOUT, 0);
    let trace = forward(params, input, Mode::Eval, &mut unused)?;
    PosteriorTable::from_probabilities(trace.probs.view(), unlabeled)
}

/// Fine-tunes `params` for `m_step_epochs` on
/// `nll(V_L) + unlabeled_weight * soft(V_U; Q)` plus weight decay.
/// Returns the per-step train-mode objective values.
pub fn m_step(
    session: &mut Session<'_>,
    params: &mut ModelParams,
    posterior: &PosteriorTable,
    config: &UgstConfig,
) -> Result<Vec<f64>> {
    let split = session.split();
    if posterior.nodes() != split.unlabeled() {
        return Err(Error::structural(
            "posterior does not cover exactly the unlabeled pool",
        ));
    }
    if config.param_reuse == ParamReuse::Reinitialize {
        *params = session.init_params()?;
    }
    let labels = session.dataset().labels();
    let objective = session
        .objective()
        .with(
            1.0,
            LossTerm::Hard {
                labels,
                mask: split.labeled(),
            },
        )
        .with(
            config.unlabeled_weight,
            LossTerm::Soft {
                posterior,
                mask: posterior.nodes(),
            },
        );
    session.fit(params, &objective, config.m_step_epochs)
}

/// Trains on the labeled set plus accepted pseudo-labels for
/// `inner_train.epochs` steps. Returns per-step losses and the number of
/// hard-labeled training nodes.
pub(crate) fn retrain_augmented(
    session: &mut Session<'_>,
    params: &mut ModelParams,
    pseudo: &PseudoLabelSet,
    posterior: &PosteriorTable,
    config: &UgstConfig,
) -> Result<(Vec<f64>, usize)> {
    if config.param_reuse == ParamReuse::Reinitialize {
        *params = session.init_params()?;
    }
    let dataset = session.dataset();
    let split = session.split();
    let epochs = session.config().epochs;
    match config.augment_targets {
        AugmentTargets::Hard => {
            let mut labels = dataset.labels().to_vec();
            let mut mask = split.labeled().to_vec();
            for e in pseudo.entries() {
                labels[e.node] = e.class;
                mask.push(e.node);
            }
            mask.sort_unstable();
            let objective = session.objective().with(
                1.0,
                LossTerm::Hard {
                    labels: &labels,
                    mask: &mask,
                },
            );
            let losses = session.fit(params, &objective, epochs)?;
            Ok((losses, mask.len()))
        }
        AugmentTargets::Soft => {
            let nodes = pseudo.nodes();
            let labeled = LossTerm::Hard {
                labels: dataset.labels(),
                mask: split.labeled(),
            };
            let mut objective = session.objective().with(1.0, labeled);
            if !nodes.is_empty() {
                objective = objective.with(
                    config.unlabeled_weight,
                    LossTerm::Soft {
                        posterior,
                        mask: &nodes,
                    },
                );
            }
            let losses = session.fit(params, &objective, epochs)?;
            Ok((losses, split.labeled().len()))
        }
    }
}

/// Base training followed by up to `rounds` calls of `round`, with
/// validation-driven early stopping.
pub(crate) fn run_rounds<F>(
    session: &mut Session<'_>,
    method: MethodId,
    gamma: Option<f64>,
    rounds: usize,
    early_stopping: bool,
    mut round: F,
) -> Result<RunOutcome>
where
    F: FnMut(&mut Session<'_>, &mut ModelParams, usize) -> Result<IterationStats>,
{
    let split = session.split();
    if split.test().is_empty() {
        return Err(Error::structural("test set is empty"));
    }
    let mut params = session.init_params()?;
    let base_loss = session.fit_supervised(&mut params)?.last().copied();

    let validation = split.validation();
    let track = early_stopping && !validation.is_empty() && rounds > 0;
    let mut best = if track {
        Some((session.accuracy(&params, validation)?, params.clone()))
    } else {
        None
    };

    let mut iterations = Vec::with_capacity(rounds);
    let mut stopped_early = false;
    for t in 1..=rounds {
        let mut stats = round(session, &mut params, t)?;
        if !validation.is_empty() {
            stats.validation_accuracy = Some(session.accuracy(&params, validation)?);
        }
        iterations.push(stats);
        if let Some((best_acc, best_params)) = &mut best {
            let acc = iterations[t - 1].validation_accuracy.expect("set above");
            if acc > *best_acc {
                *best_acc = acc;
                *best_params = params.clone();
            } else {
                params = best_params.clone();
                stopped_early = true;
                break;
            }
        }
    }

    let result = RunResult {
        method,
        seed: session.config().seed,
        gamma,
        test_accuracy: session.accuracy(&params, split.test())?,
        validation_accuracy: if validation.is_empty() {
            None
        } else {
            Some(session.accuracy(&params, validation)?)
        },
        base_loss,
        iterations,
        stopped_early,
    };
    Ok(RunOutcome { result, params })
}

/// Full UGST run: base training, then `em_steps` rounds of E-step, M-step,
/// gating at `gamma`, and retraining on the augmented labeled set.
pub fn run_ugst(dataset: &Dataset, split: &Split, config: &UgstConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut session = Session::new(dataset, split, config.inner_train.clone())?;
    run_rounds(
        &mut session,
        MethodId::Ugst,
        Some(config.gamma),
        config.em_steps,
        config.early_stopping,
        |session, params, t| {
            let unlabeled = session.split().unlabeled();
            let posterior = e_step(params, session.input(), unlabeled)?;
            let m_losses = m_step(session, params, &posterior, config)?;
            let pseudo = assign_pseudo_labels(&posterior, config.gamma);
            let (losses, augmented_size) =
                retrain_augmented(session, params, &pseudo, &posterior, config)?;
            log::debug!(
                "ugst seed {} round {t}: {} pseudo-labels",
                session.config().seed,
                pseudo.len()
            );
            Ok(IterationStats {
                iteration: t,
                pseudo_label_count: pseudo.len(),
                pseudo_label_precision: pseudo.precision(session.dataset().labels()),
                augmented_size,
                m_step_loss: m_losses.last().copied(),
                retrain_loss: losses.last().copied(),
                validation_accuracy: None,
            })
        },
    )
}
