use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::graph::CsrMatrix;

/// Propagation operator and node features, with `Â X` cached since it does
/// not depend on the parameters.
#[derive(Debug, Clone)]
pub struct GcnInput {
    adj: CsrMatrix,
    features: Array2<f64>,
    propagated: Array2<f64>,
}

impl GcnInput {
    pub fn new(adj: CsrMatrix, features: Array2<f64>) -> Result<Self> {
        if adj.num_rows() != adj.num_cols() {
            return Err(Error::structural(format!(
                "adjacency must be square, got {}x{}",
                adj.num_rows(),
                adj.num_cols()
            )));
        }
        if adj.num_rows() != features.nrows() {
            return Err(Error::structural(format!(
                "adjacency has {} rows but features have {}",
                adj.num_rows(),
                features.nrows()
            )));
        }
        let features = features.as_standard_layout().into_owned();
        let propagated = adj.spmm(features.view())?;
        Ok(GcnInput {
            adj,
            features,
            propagated,
        })
    }

    pub fn adj(&self) -> &CsrMatrix {
        &self.adj
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    /// `Â X`
    pub fn propagated(&self) -> ArrayView2<'_, f64> {
        self.propagated.view()
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Inverted dropout on the hidden activations at the given rate.
    Train {
        dropout: f64,
    },
    Eval,
}

/// Intermediates of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `Â X W1 + b1`
    pub pre_activation: Array2<f64>,
    /// `ReLU(pre_activation)`, before dropout.
    pub hidden: Array2<f64>,
    /// Entries are `0` or `1 / (1 - rate)`. `None` in eval mode or at rate 0.
    pub dropout_mask: Option<Array2<f64>>,
    /// `Â H W2 + b2` where `H` is the dropped-out hidden layer.
    pub logits: Array2<f64>,
    pub probs: Array2<f64>,
}

impl ForwardTrace {
    /// Hidden activations after dropout.
    pub fn dropped_hidden(&self) -> Array2<f64> {
        match &self.dropout_mask {
            Some(mask) => &self.hidden * mask,
            None => self.hidden.clone(),
        }
    }
}

/// `softmax(Â · dropout(ReLU(Â X W1 + b1)) · W2 + b2)`
pub fn forward<R: Rng + ?Sized>(
    params: &ModelParams,
    input: &GcnInput,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardTrace> {
    if params.feature_dim() != input.feature_dim() {
        return Err(Error::structural(format!(
            "params expect {} features, input has {}",
            params.feature_dim(),
            input.feature_dim()
        )));
    }

    let pre_activation = input.propagated().dot(&params.w1) + &params.b1;
    let hidden = pre_activation.mapv(|x| x.max(0.0));

    let dropout_mask = match mode {
        Mode::Train { dropout } if dropout > 0.0 => {
            if !(0.0..1.0).contains(&dropout) {
                return Err(Error::structural(format!(
                    "dropout rate {dropout} outside [0, 1)"
                )));
            }
            let keep = 1.0 / (1.0 - dropout);
            Some(Array2::from_shape_simple_fn(hidden.dim(), || {
                if rng.random::<f64>() < dropout {
                    0.0
                } else {
                    keep
                }
            }))
        }
        _ => None,
    };

    let transformed = match &dropout_mask {
        Some(mask) => (&hidden * mask).dot(&params.w2),
        None => hidden.dot(&params.w2),
    };
    let logits = input.adj().spmm(transformed.view())? + &params.b2;
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("non-finite logits in forward pass"));
    }
    let probs = softmax_rows(logits.view());

    Ok(ForwardTrace {
        pre_activation,
        hidden,
        dropout_mask,
        logits,
        probs,
    })
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}
