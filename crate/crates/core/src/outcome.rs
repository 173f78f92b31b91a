//! Method identifiers and the per-run record shared by every method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gnn::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Base,
    St,
    Slst,
    Entmin,
    Ugst,
}

impl MethodId {
    pub const ALL: [MethodId; 5] = [
        MethodId::Base,
        MethodId::St,
        MethodId::Slst,
        MethodId::Entmin,
        MethodId::Ugst,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Base => "base",
            MethodId::St => "st",
            MethodId::Slst => "slst",
            MethodId::Entmin => "entmin",
            MethodId::Ugst => "ugst",
        }
    }

    /// Row label used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            MethodId::Base => "Base GNN",
            MethodId::St => "ST",
            MethodId::Slst => "SLST",
            MethodId::Entmin => "EntMin",
            MethodId::Ugst => "UGST",
        }
    }

    /// Whether the method is tuned over the confidence-threshold grid.
    pub fn uses_gamma(self) -> bool {
        matches!(self, MethodId::St | MethodId::Ugst)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Structural(format!("unknown method {s:?}")))
    }
}

/// Diagnostics of one self-training round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    /// 1-based round index.
    pub iteration: usize,
    pub pseudo_label_count: usize,
    /// Fraction of pseudo-labels matching the held ground truth; `None`
    /// when nothing was accepted. Never fed back into training.
    pub pseudo_label_precision: Option<f64>,
    /// Number of hard-labeled training nodes in the retraining phase.
    pub augmented_size: usize,
    /// Last train-mode objective value of the M-step, when there is one.
    pub m_step_loss: Option<f64>,
    /// Last train-mode objective value of the retraining phase.
    pub retrain_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: MethodId,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub test_accuracy: f64,
    pub validation_accuracy: Option<f64>,
    /// Last train-mode objective value of the initial training phase.
    pub base_loss: Option<f64>,
    pub iterations: Vec<IterationStats>,
    /// Set when validation accuracy stopped improving and the best earlier
    /// parameters were restored.
    pub stopped_early: bool,
}

/// A finished run together with its final parameters.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: RunResult,
    pub params: ModelParams,
}
