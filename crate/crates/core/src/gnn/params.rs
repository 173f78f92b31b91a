use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::Uniform;

use crate::error::{Error, Result};
use crate::seed;

/// Weights of the two GCN layers. Also used as the gradient type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `d x h`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `h x C`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl ModelParams {
    pub fn zeros(d: usize, h: usize, c: usize) -> Self {
        ModelParams {
            w1: Array2::zeros((d, h)),
            b1: Array1::zeros(h),
            w2: Array2::zeros((h, c)),
            b2: Array1::zeros(c),
        }
    }

    pub fn zeros_like(other: &ModelParams) -> Self {
        let (d, h) = other.w1.dim();
        ModelParams::zeros(d, h, other.num_classes())
    }

    pub fn feature_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.ncols()
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.w1.dim() == other.w1.dim()
            && self.b1.len() == other.b1.len()
            && self.w2.dim() == other.w2.dim()
            && self.b2.len() == other.b2.len()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Flat views in the fixed order `w1, b1, w2, b2`.
    pub fn tensors(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Glorot-uniform weights, zero biases. The draw comes from the `init`
/// stream of `seed`, first `w1` row-major then `w2`.
pub fn init_params(d: usize, h: usize, c: usize, seed: u64) -> Result<ModelParams> {
    if d == 0 || h == 0 || c == 0 {
        return Err(Error::structural(format!(
            "model dimensions must be positive, got d={d} h={h} C={c}"
        )));
    }
    let mut rng = seed::stream(seed, seed::INIT, 0);
    let mut params = ModelParams::zeros(d, h, c);
    for w in [&mut params.w1, &mut params.w2] {
        let (fan_in, fan_out) = w.dim();
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        w.iter_mut().for_each(|x| *x = rng.sample(dist));
    }
    Ok(params)
}
