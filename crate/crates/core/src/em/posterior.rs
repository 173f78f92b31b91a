use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::gnn::argmax;

/// Per-node class distributions `Q(z_v)` over a subset of the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    nodes: Vec<usize>,
    rows: Array2<f64>,
    index: HashMap<usize, usize>,
}

pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

impl PosteriorTable {
    pub fn try_new(nodes: Vec<usize>, rows: Array2<f64>) -> Result<Self> {
        if nodes.len() != rows.nrows() {
            return Err(Error::structural(format!(
                "{} node ids for {} posterior rows",
                nodes.len(),
                rows.nrows()
            )));
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            if index.insert(v, i).is_some() {
                return Err(Error::structural(format!(
                    "node {v} appears twice in posterior"
                )));
            }
        }
        for (i, row) in rows.rows().into_iter().enumerate() {
            if row.iter().any(|&q| !(q >= 0.0 && q.is_finite())) {
                return Err(Error::structural(format!(
                    "posterior row of node {} has a negative or non-finite entry",
                    nodes[i]
                )));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::structural(format!(
                    "posterior row of node {} sums to {sum}",
                    nodes[i]
                )));
            }
        }
        Ok(PosteriorTable {
            nodes,
            rows: rows.as_standard_layout().into_owned(),
            index,
        })
    }

    /// Rows of `probs` for the given nodes.
    pub fn from_probabilities(probs: ArrayView2<'_, f64>, nodes: &[usize]) -> Result<Self> {
        if let Some(&v) = nodes.iter().find(|&&v| v >= probs.nrows()) {
            return Err(Error::structural(format!(
                "node {v} has no probability row"
            )));
        }
        let rows = probs.select(ndarray::Axis(0), nodes);
        PosteriorTable::try_new(nodes.to_vec(), rows)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.rows.ncols()
    }

    pub fn position(&self, node: usize) -> Option<usize> {
        self.index.get(&node).copied()
    }

    pub fn row_of(&self, node: usize) -> Option<ArrayView1<'_, f64>> {
        self.position(node).map(|i| self.rows.row(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoLabel {
    pub node: usize,
    pub class: usize,
    /// `max_k Q(z_v = k)`
    pub confidence: f64,
}

/// Nodes whose posterior confidence strictly exceeded `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelSet {
    gamma: f64,
    entries: Vec<PseudoLabel>,
}

impl PseudoLabelSet {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn entries(&self) -> &[PseudoLabel] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nodes(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.node).collect()
    }

    /// Fraction of entries whose class matches `truth`; `None` if empty.
    pub fn precision(&self, truth: &[usize]) -> Option<f64> {
        if self.entries.is_empty() {
            return None;
        }
        let hits = self
            .entries
            .iter()
            .filter(|e| truth[e.node] == e.class)
            .count();
        Some(hits as f64 / self.entries.len() as f64)
    }
}

/// `ŷ_v = argmax_k Q(z_v = k)` if `max_k Q(z_v = k) > gamma`, else skipped.
/// Entries keep the posterior's node order.
pub fn assign_pseudo_labels(posterior: &PosteriorTable, gamma: f64) -> PseudoLabelSet {
    let entries = posterior
        .nodes()
        .iter()
        .zip(posterior.rows().rows())
        .filter_map(|(&node, row)| {
            let class = argmax(row);
            let confidence = row[class];
            (confidence > gamma).then_some(PseudoLabel {
                node,
                class,
                confidence,
            })
        })
        .collect();
    PseudoLabelSet { gamma, entries }
}
