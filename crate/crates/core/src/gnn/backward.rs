use ndarray::Axis;

use super::forward::{ForwardTrace, GcnInput};
use super::loss::Objective;
use super::params::ModelParams;
use crate::error::{Error, Result};

/// Exact gradient of `objective` (data terms plus weight decay) with respect
/// to every parameter, given the trace of the forward pass that produced the
/// probabilities. `Â` is symmetric, so it also serves as its own transpose.
pub fn backward(
    trace: &ForwardTrace,
    input: &GcnInput,
    objective: &Objective<'_>,
    params: &ModelParams,
) -> Result<ModelParams> {
    let n = input.num_nodes();
    let (h, c) = params.w2.dim();
    if trace.probs.dim() != (n, c)
        || trace.hidden.dim() != (n, h)
        || trace.pre_activation.dim() != (n, h)
        || params.feature_dim() != input.feature_dim()
        || trace
            .dropout_mask
            .as_ref()
            .is_some_and(|m| m.dim() != (n, h))
    {
        return Err(Error::structural(
            "forward trace does not match the given params and input",
        ));
    }

    let grad_logits = objective.logit_gradient(trace.probs.view())?;
    let propagated_grad = input.adj().spmm(grad_logits.view())?;

    let dropped = trace.dropped_hidden();
    let mut w2 = dropped.t().dot(&propagated_grad);
    let b2 = grad_logits.sum_axis(Axis(0));

    let mut grad_hidden = propagated_grad.dot(&params.w2.t());
    if let Some(mask) = &trace.dropout_mask {
        grad_hidden *= mask;
    }
    ndarray::Zip::from(&mut grad_hidden)
        .and(&trace.pre_activation)
        .for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        });

    let mut w1 = input.propagated().t().dot(&grad_hidden);
    let b1 = grad_hidden.sum_axis(Axis(0));

    let wd = objective.weight_decay();
    if wd != 0.0 {
        w1.scaled_add(wd, &params.w1);
        w2.scaled_add(wd, &params.w2);
    }

    let grads = ModelParams { w1, b1, w2, b2 };
    if !grads.is_finite() {
        return Err(Error::numeric("non-finite gradient"));
    }
    Ok(grads)
}
