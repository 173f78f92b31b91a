//! Comparison methods. All of them share the GCN, the session and the round
//! driver with UGST, so they differ only in what each round trains on.

use crate::data::{Dataset, Split};
use crate::em::{self, assign_pseudo_labels, e_step, UgstConfig};
use crate::error::{Error, Result};
use crate::gnn::{LossTerm, Session, TrainConfig};
use crate::outcome::{IterationStats, RunOutcome, RunResult};

pub use crate::outcome::MethodId;

/// Supervised training on the labeled set only.
pub fn run_base(dataset: &Dataset, split: &Split, config: &TrainConfig) -> Result<RunOutcome> {
    let mut session = Session::new(dataset, split, config.clone())?;
    em::run_rounds(&mut session, MethodId::Base, None, 0, false, |_, _, _| {
        unreachable!("zero rounds")
    })
}

/// Hard self-training: each round accepts the unlabeled nodes whose
/// predicted confidence exceeds `gamma` and retrains on them. The accepted
/// set is rebuilt every round. No M-step.
pub fn run_st(dataset: &Dataset, split: &Split, config: &UgstConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut session = Session::new(dataset, split, config.inner_train.clone())?;
    em::run_rounds(
        &mut session,
        MethodId::St,
        Some(config.gamma),
        config.em_steps,
        config.early_stopping,
        |session, params, t| {
            let predictions = e_step(params, session.input(), session.split().unlabeled())?;
            let pseudo = assign_pseudo_labels(&predictions, config.gamma);
            let (losses, augmented_size) =
                em::retrain_augmented(session, params, &pseudo, &predictions, config)?;
            Ok(IterationStats {
                iteration: t,
                pseudo_label_count: pseudo.len(),
                pseudo_label_precision: pseudo.precision(session.dataset().labels()),
                augmented_size,
                m_step_loss: None,
                retrain_loss: losses.last().copied(),
                validation_accuracy: None,
            })
        },
    )
}

/// Soft-label self-training: each round retrains on the labeled
/// cross-entropy plus the soft loss against the current predictions on
/// every unlabeled node, with no confidence gate.
pub fn run_slst(dataset: &Dataset, split: &Split, config: &UgstConfig) -> Result<RunOutcome> {
    config.inner_train.validate()?;
    let mut session = Session::new(dataset, split, config.inner_train.clone())?;
    em::run_rounds(
        &mut session,
        MethodId::Slst,
        None,
        config.em_steps,
        config.early_stopping,
        |session, params, t| {
            let split = session.split();
            let posterior = e_step(params, session.input(), split.unlabeled())?;
            if config.param_reuse == em::ParamReuse::Reinitialize {
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
                        posterior: &posterior,
                        mask: posterior.nodes(),
                    },
                );
            let epochs = session.config().epochs;
            let losses = session.fit(params, &objective, epochs)?;
            Ok(IterationStats {
                iteration: t,
                pseudo_label_count: posterior.len(),
                pseudo_label_precision: None,
                augmented_size: split.labeled().len(),
                m_step_loss: None,
                retrain_loss: losses.last().copied(),
                validation_accuracy: None,
            })
        },
    )
}

/// One training phase on `nll(V_L) + weight * entropy(V_U)`.
pub fn run_entmin(
    dataset: &Dataset,
    split: &Split,
    config: &TrainConfig,
    entropy_weight: f64,
) -> Result<RunOutcome> {
    if !(entropy_weight >= 0.0 && entropy_weight.is_finite()) {
        return Err(Error::structural(format!(
            "entropy weight must be non-negative, got {entropy_weight}"
        )));
    }
    if split.test().is_empty() {
        return Err(Error::structural("test set is empty"));
    }
    let mut session = Session::new(dataset, split, config.clone())?;
    let mut params = session.init_params()?;
    let objective = session
        .objective()
        .with(
            1.0,
            LossTerm::Hard {
                labels: dataset.labels(),
                mask: split.labeled(),
            },
        )
        .with(
            entropy_weight,
            LossTerm::Entropy {
                mask: split.unlabeled(),
            },
        );
    let losses = session.fit(&mut params, &objective, config.epochs)?;
    let result = RunResult {
        method: MethodId::Entmin,
        seed: config.seed,
        gamma: None,
        test_accuracy: session.accuracy(&params, split.test())?,
        validation_accuracy: if split.validation().is_empty() {
            None
        } else {
            Some(session.accuracy(&params, split.validation())?)
        },
        base_loss: losses.last().copied(),
        iterations: Vec::new(),
        stopped_early: false,
    };
    Ok(RunOutcome { result, params })
}

/// Settings for every method, so a single call site can dispatch on
/// [`MethodId`].
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub ugst: UgstConfig,
    pub entropy_weight: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            ugst: UgstConfig::default(),
            entropy_weight: 0.5,
        }
    }
}

/// Runs `method`; `gamma` overrides the configured threshold for the
/// methods that use one.
pub fn run_method(
    method: MethodId,
    dataset: &Dataset,
    split: &Split,
    config: &MethodConfig,
    gamma: Option<f64>,
) -> Result<RunOutcome> {
    let mut ugst = config.ugst.clone();
    if let Some(g) = gamma {
        ugst.gamma = g;
    }
    match method {
        MethodId::Base => run_base(dataset, split, &ugst.inner_train),
        MethodId::St => run_st(dataset, split, &ugst),
        MethodId::Slst => run_slst(dataset, split, &ugst),
        MethodId::Entmin => run_entmin(dataset, split, &ugst.inner_train, config.entropy_weight),
        MethodId::Ugst => em::run_ugst(dataset, split, &ugst),
    }
}
