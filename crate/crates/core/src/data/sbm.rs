use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed;

/// Planted-partition graph with block-informative Gaussian features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub num_blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub signal_strength: f64,
    pub noise_std: f64,
}

impl Default for SbmParams {
    fn default() -> Self {
        SbmParams {
            num_blocks: 3,
            nodes_per_block: 100,
            p_in: 0.10,
            p_out: 0.01,
            feature_dim: 16,
            signal_strength: 1.0,
            noise_std: 1.0,
        }
    }
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_blocks == 0 || self.nodes_per_block == 0 || self.feature_dim == 0 {
            return Err(Error::structural(
                "blocks, block size and feature dimension must be positive",
            ));
        }
        if !(0.0 <= self.p_out && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return Err(Error::structural(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if !(self.noise_std >= 0.0
            && self.noise_std.is_finite()
            && self.signal_strength.is_finite())
        {
            return Err(Error::structural("noise must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_blocks * self.nodes_per_block
    }
}

/// Node `v` belongs to block `v / nodes_per_block`. Each pair `u < v` is
/// drawn once. Block `b`'s mean feature vector is `signal_strength` on
/// coordinate `b mod feature_dim` and zero elsewhere.
pub fn generate_sbm(params: &SbmParams, seed: u64) -> Result<Dataset> {
    params.validate()?;
    let n = params.num_nodes();
    let block = |v: usize| v / params.nodes_per_block;

    let mut edge_rng = seed::stream(seed, seed::SBM_EDGES, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block(u) == block(v) {
                params.p_in
            } else {
                params.p_out
            };
            if p > 0.0 && edge_rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }

    let mut feature_rng = seed::stream(seed, seed::SBM_FEATURES, 0);
    let noise = Normal::new(0.0, params.noise_std).expect("validated");
    let mut features =
        Array2::from_shape_simple_fn((n, params.feature_dim), || noise.sample(&mut feature_rng));
    for v in 0..n {
        features[[v, block(v) % params.feature_dim]] += params.signal_strength;
    }

    let labels = (0..n).map(block).collect();
    Dataset::new(
        "sbm",
        Graph::new(n, edges)?,
        features,
        labels,
        params.num_blocks,
    )
}
