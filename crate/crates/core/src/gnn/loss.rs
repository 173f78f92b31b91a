//! Hard cross-entropy, expected log-likelihood under soft targets, and
//! prediction entropy, each averaged over a node mask. Probabilities are
//! clamped below at [`LOG_CLAMP`] before taking logs, and the gradients
//! below are the exact gradients of the clamped losses.

use ndarray::{Array2, ArrayView1, ArrayView2};

use super::params::ModelParams;
use crate::em::PosteriorTable;
use crate::error::{Error, Result};

pub const LOG_CLAMP: f64 = 1e-12;

fn clamped_ln(p: f64) -> f64 {
    p.max(LOG_CLAMP).ln()
}

fn check_mask(mask: &[usize], num_nodes: usize, what: &str) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::structural(format!("{what}: empty node mask")));
    }
    if let Some(&v) = mask.iter().find(|&&v| v >= num_nodes) {
        return Err(Error::structural(format!(
            "{what}: node {v} outside [0, {num_nodes})"
        )));
    }
    Ok(())
}

fn check_labels(labels: &[usize], mask: &[usize], probs: ArrayView2<'_, f64>) -> Result<()> {
    check_mask(mask, probs.nrows(), "hard loss")?;
    let c = probs.ncols();
    for &v in mask {
        match labels.get(v) {
            Some(&y) if y < c => {}
            Some(&y) => {
                return Err(Error::structural(format!(
                    "label {y} of node {v} outside [0, {c})"
                )))
            }
            None => {
                return Err(Error::structural(format!("node {v} has no label")));
            }
        }
    }
    Ok(())
}

fn check_posterior(
    posterior: &PosteriorTable,
    mask: &[usize],
    probs: ArrayView2<'_, f64>,
) -> Result<()> {
    check_mask(mask, probs.nrows(), "soft loss")?;
    if posterior.num_classes() != probs.ncols() {
        return Err(Error::structural(format!(
            "posterior has {} classes, model has {}",
            posterior.num_classes(),
            probs.ncols()
        )));
    }
    if let Some(&v) = mask.iter().find(|&&v| posterior.position(v).is_none()) {
        return Err(Error::structural(format!(
            "soft loss: node {v} has no posterior row"
        )));
    }
    Ok(())
}

/// Lowest index wins ties.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (k, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = k;
        }
    }
    best
}

/// `-(1/|mask|) Σ log p(y_v | v)`
pub fn nll_loss(probs: ArrayView2<'_, f64>, labels: &[usize], mask: &[usize]) -> Result<f64> {
    check_labels(labels, mask, probs)?;
    let total: f64 = mask
        .iter()
        .map(|&v| -clamped_ln(probs[[v, labels[v]]]))
        .sum();
    Ok(total / mask.len() as f64)
}

/// `-(1/|mask|) Σ_v Σ_k Q(z_v = k) log p(k | v)`
pub fn soft_loss(
    probs: ArrayView2<'_, f64>,
    posterior: &PosteriorTable,
    mask: &[usize],
) -> Result<f64> {
    check_posterior(posterior, mask, probs)?;
    let mut total = 0.0;
    for &v in mask {
        let q = posterior.row_of(v).expect("checked");
        for (k, &qk) in q.iter().enumerate() {
            total -= qk * clamped_ln(probs[[v, k]]);
        }
    }
    Ok(total / mask.len() as f64)
}

/// `-(1/|mask|) Σ_v Σ_k p(k|v) log p(k|v)`
pub fn entropy_loss(probs: ArrayView2<'_, f64>, mask: &[usize]) -> Result<f64> {
    check_mask(mask, probs.nrows(), "entropy loss")?;
    let total: f64 = mask
        .iter()
        .map(|&v| -probs.row(v).iter().map(|&p| p * clamped_ln(p)).sum::<f64>())
        .sum();
    Ok(total / mask.len() as f64)
}

/// Fraction of masked nodes whose argmax matches the label.
pub fn accuracy(probs: ArrayView2<'_, f64>, labels: &[usize], mask: &[usize]) -> Result<f64> {
    check_mask(mask, probs.nrows(), "accuracy")?;
    if labels.len() < probs.nrows() {
        return Err(Error::structural("label vector shorter than node count"));
    }
    let correct = mask
        .iter()
        .filter(|&&v| argmax(probs.row(v)) == labels[v])
        .count();
    Ok(correct as f64 / mask.len() as f64)
}

/// One mask-averaged loss.
#[derive(Debug, Clone, Copy)]
pub enum LossTerm<'a> {
    /// Cross-entropy against `labels[v]` for every `v` in `mask`.
    Hard {
        labels: &'a [usize],
        mask: &'a [usize],
    },
    /// Cross-entropy against the posterior row of every `v` in `mask`.
    Soft {
        posterior: &'a PosteriorTable,
        mask: &'a [usize],
    },
    Entropy {
        mask: &'a [usize],
    },
}

impl LossTerm<'_> {
    pub fn value(&self, probs: ArrayView2<'_, f64>) -> Result<f64> {
        match *self {
            LossTerm::Hard { labels, mask } => nll_loss(probs, labels, mask),
            LossTerm::Soft { posterior, mask } => soft_loss(probs, posterior, mask),
            LossTerm::Entropy { mask } => entropy_loss(probs, mask),
        }
    }

    /// Adds `weight * dL/dlogits` into `grad`.
    fn accumulate_logit_gradient(
        &self,
        probs: ArrayView2<'_, f64>,
        weight: f64,
        grad: &mut Array2<f64>,
    ) -> Result<()> {
        match *self {
            LossTerm::Hard { labels, mask } => {
                check_labels(labels, mask, probs)?;
                let scale = weight / mask.len() as f64;
                for &v in mask {
                    let y = labels[v];
                    if probs[[v, y]] < LOG_CLAMP {
                        continue;
                    }
                    let p = probs.row(v);
                    let mut g = grad.row_mut(v);
                    for j in 0..p.len() {
                        let own = if j == y { 1.0 } else { 0.0 };
                        g[j] += scale * (p[j] - own);
                    }
                }
            }
            LossTerm::Soft { posterior, mask } => {
                check_posterior(posterior, mask, probs)?;
                let scale = weight / mask.len() as f64;
                for &v in mask {
                    let q = posterior.row_of(v).expect("checked");
                    let p = probs.row(v);
                    // Only unclamped classes contribute: dL/dz_j = p_j S - Q_j [p_j unclamped].
                    let active: f64 = q
                        .iter()
                        .zip(p.iter())
                        .filter(|(_, &pk)| pk >= LOG_CLAMP)
                        .map(|(&qk, _)| qk)
                        .sum();
                    let mut g = grad.row_mut(v);
                    for j in 0..p.len() {
                        let own = if p[j] >= LOG_CLAMP { q[j] } else { 0.0 };
                        g[j] += scale * (p[j] * active - own);
                    }
                }
            }
            LossTerm::Entropy { mask } => {
                check_mask(mask, probs.nrows(), "entropy loss")?;
                let scale = weight / mask.len() as f64;
                for &v in mask {
                    let p = probs.row(v);
                    // d(p ln max(p, eps))/dp
                    let dk: Vec<f64> = p
                        .iter()
                        .map(|&pk| clamped_ln(pk) + if pk >= LOG_CLAMP { 1.0 } else { 0.0 })
                        .collect();
                    let mean: f64 = p.iter().zip(&dk).map(|(&pk, &d)| pk * d).sum();
                    let mut g = grad.row_mut(v);
                    for j in 0..p.len() {
                        g[j] -= scale * p[j] * (dk[j] - mean);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Weighted sum of loss terms plus `weight_decay / 2 * (|W1|² + |W2|²)`.
#[derive(Debug, Clone, Default)]
pub struct Objective<'a> {
    terms: Vec<(f64, LossTerm<'a>)>,
    weight_decay: f64,
}

impl<'a> Objective<'a> {
    pub fn new(weight_decay: f64) -> Self {
        Objective {
            terms: Vec::new(),
            weight_decay,
        }
    }

    /// Adds a term. Zero-weight terms are dropped so they cannot perturb
    /// the arithmetic of the remaining ones.
    pub fn with(mut self, weight: f64, term: LossTerm<'a>) -> Self {
        if weight != 0.0 {
            self.terms.push((weight, term));
        }
        self
    }

    pub fn terms(&self) -> &[(f64, LossTerm<'a>)] {
        &self.terms
    }

    pub fn weight_decay(&self) -> f64 {
        self.weight_decay
    }

    /// Weighted data loss without the regularizer.
    pub fn data_loss(&self, probs: ArrayView2<'_, f64>) -> Result<f64> {
        self.terms
            .iter()
            .map(|(w, t)| t.value(probs).map(|v| w * v))
            .sum()
    }

    pub fn regularizer(&self, params: &ModelParams) -> f64 {
        if self.weight_decay == 0.0 {
            return 0.0;
        }
        let sq: f64 = params
            .w1
            .iter()
            .chain(params.w2.iter())
            .map(|x| x * x)
            .sum();
        0.5 * self.weight_decay * sq
    }

    pub fn value(&self, probs: ArrayView2<'_, f64>, params: &ModelParams) -> Result<f64> {
        Ok(self.data_loss(probs)? + self.regularizer(params))
    }

    /// Gradient of the data loss with respect to the logits.
    pub fn logit_gradient(&self, probs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut grad = Array2::zeros(probs.dim());
        for (w, term) in &self.terms {
            term.accumulate_logit_gradient(probs, *w, &mut grad)?;
        }
        Ok(grad)
    }
}
