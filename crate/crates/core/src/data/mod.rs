//! Datasets, the portable on-disk format, a planted-partition generator and
//! split sampling.

mod io;
mod sbm;
mod split;

use ndarray::{Array2, ArrayView2};

pub use io::{load_dataset, save_dataset, DatasetMeta};
pub use sbm::{generate_sbm, SbmParams};
pub use split::{sample_split, Split};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Node features, labels and graph of a node-classification task.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    graph: Graph,
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        graph: Graph,
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.nrows() != n {
            return Err(Error::structural(format!(
                "{} feature rows for {n} nodes",
                features.nrows()
            )));
        }
        if labels.len() != n {
            return Err(Error::structural(format!(
                "{} labels for {n} nodes",
                labels.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::structural("feature dimension must be positive"));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::structural("features contain non-finite values"));
        }
        let mut counts = vec![0usize; num_classes];
        for (v, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::structural(format!(
                    "node {v} has label {y} outside [0, {num_classes})"
                )));
            }
            counts[y] += 1;
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::structural(format!("class {k} has no nodes")));
        }
        Ok(Dataset {
            name: name.into(),
            graph,
            features: features.as_standard_layout().into_owned(),
            labels,
            num_classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Node ids grouped by class, ascending within each class.
    pub fn nodes_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (v, &y) in self.labels.iter().enumerate() {
            out[y].push(v);
        }
        out
    }
}
