//! Shared fixtures for the integration and acceptance targets.

#![allow(dead_code)]

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ugst::data::{generate_sbm, sample_split, Dataset, SbmParams, Split};
use ugst::em::PosteriorTable;
use ugst::gnn::{backward, forward, GcnInput, LossTerm, Mode, ModelParams, Objective};
use ugst::graph::{normalize_adjacency, Graph};

pub const FD_STEP: f64 = 1e-5;
/// Below this magnitude the relative error is measured against the floor.
pub const FD_FLOOR: f64 = 1e-6;
/// Pre-activations closer than this to zero would let a finite-difference
/// probe cross the ReLU kink.
pub const KINK_MARGIN: f64 = 1e-3;

pub fn sbm_case(seed: u64) -> (Dataset, Split) {
    let ds = generate_sbm(&SbmParams::default(), seed).unwrap();
    let split = sample_split(&ds, 0.05, 0.15, 0.3, seed).unwrap();
    (ds, split)
}

/// A tiny random GCN problem with every loss ingredient.
pub struct Instance {
    pub input: GcnInput,
    pub params: ModelParams,
    pub labels: Vec<usize>,
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub posterior: PosteriorTable,
    pub weight_decay: f64,
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let k = rng.random_range(1..=n);
    let mut pick = nodes[..k].to_vec();
    pick.sort_unstable();
    pick
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || {
        scale * rng.sample::<f64, _>(StandardNormal)
    })
}

impl Instance {
    /// Draws instances until one has no pre-activation within
    /// [`KINK_MARGIN`] of zero.
    pub fn random(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let n = rng.random_range(1..=6);
            let d = rng.random_range(1..=4);
            let h = rng.random_range(1..=4);
            let c = rng.random_range(2..=4);
            let mut pairs = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(0.5) {
                        pairs.push((u, v));
                    }
                }
            }
            let graph = Graph::new(n, pairs).unwrap();
            let input = GcnInput::new(
                normalize_adjacency(&graph),
                normal_matrix(&mut rng, n, d, 1.0),
            )
            .unwrap();
            let params = ModelParams {
                w1: normal_matrix(&mut rng, d, h, 0.8),
                b1: normal_matrix(&mut rng, 1, h, 0.3)
                    .into_shape_with_order(h)
                    .unwrap(),
                w2: normal_matrix(&mut rng, h, c, 0.8),
                b2: normal_matrix(&mut rng, 1, c, 0.3)
                    .into_shape_with_order(c)
                    .unwrap(),
            };
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
            let labeled = random_subset(&mut rng, n);
            let unlabeled = random_subset(&mut rng, n);
            let mut rows =
                Array2::from_shape_simple_fn((unlabeled.len(), c), || rng.random_range(0.05..1.0));
            for mut row in rows.rows_mut() {
                let s = row.sum();
                row /= s;
            }
            let posterior = PosteriorTable::try_new(unlabeled.clone(), rows).unwrap();
            let weight_decay = [0.0, 5e-4, 0.1][rng.random_range(0..3)];
            let instance = Instance {
                input,
                params,
                labels,
                labeled,
                unlabeled,
                posterior,
                weight_decay,
            };
            if instance.clear_of_kinks() {
                return instance;
            }
        }
    }

    fn clear_of_kinks(&self) -> bool {
        let trace = self.eval(&self.params);
        trace.iter().all(|x| x.abs() > KINK_MARGIN)
    }

    fn eval(&self, params: &ModelParams) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        forward(params, &self.input, Mode::Eval, &mut rng)
            .unwrap()
            .pre_activation
    }

    pub fn hard(&self) -> LossTerm<'_> {
        LossTerm::Hard {
            labels: &self.labels,
            mask: &self.labeled,
        }
    }

    pub fn soft(&self) -> LossTerm<'_> {
        LossTerm::Soft {
            posterior: &self.posterior,
            mask: &self.unlabeled,
        }
    }

    pub fn entropy(&self) -> LossTerm<'_> {
        LossTerm::Entropy {
            mask: &self.unlabeled,
        }
    }

    /// Hard, soft, entropy, and a weighted combination of all three.
    pub fn objectives(&self, weights: [f64; 3]) -> Vec<(&'static str, Objective<'_>)> {
        let wd = self.weight_decay;
        vec![
            ("nll", Objective::new(wd).with(1.0, self.hard())),
            ("soft", Objective::new(wd).with(1.0, self.soft())),
            ("entropy", Objective::new(wd).with(1.0, self.entropy())),
            (
                "combined",
                Objective::new(wd)
                    .with(weights[0], self.hard())
                    .with(weights[1], self.soft())
                    .with(weights[2], self.entropy()),
            ),
        ]
    }

    pub fn value(&self, params: &ModelParams, objective: &Objective<'_>) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = forward(params, &self.input, Mode::Eval, &mut rng).unwrap();
        objective.value(trace.probs.view(), params).unwrap()
    }

    pub fn analytic(&self, objective: &Objective<'_>) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = forward(&self.params, &self.input, Mode::Eval, &mut rng).unwrap();
        backward(&trace, &self.input, objective, &self.params).unwrap()
    }

    /// Central differences of `objective` for every parameter entry.
    pub fn numeric(&self, objective: &Objective<'_>) -> ModelParams {
        let mut grads = ModelParams::zeros_like(&self.params);
        let mut probe = self.params.clone();
        for t in 0..4 {
            for i in 0..self.params.tensors()[t].len() {
                let x = self.params.tensors()[t][i];
                probe.tensors_mut()[t][i] = x + FD_STEP;
                let up = self.value(&probe, objective);
                probe.tensors_mut()[t][i] = x - FD_STEP;
                let down = self.value(&probe, objective);
                probe.tensors_mut()[t][i] = x;
                grads.tensors_mut()[t][i] = (up - down) / (2.0 * FD_STEP);
            }
        }
        grads
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

/// Largest entrywise relative error between two gradients.
pub fn max_relative_error(a: &ModelParams, b: &ModelParams) -> f64 {
    a.tensors()
        .iter()
        .zip(b.tensors())
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(&p, &q)| relative_error(p, q)))
        .fold(0.0, f64::max)
}

pub struct GradientReport {
    pub instances: usize,
    pub checks: usize,
    pub entries: usize,
    pub worst: f64,
    pub worst_case: String,
}

/// Analytic against central-difference gradients on `instances` random
/// problems, four objectives each.
pub fn gradient_sweep(instances: usize) -> GradientReport {
    let mut report = GradientReport {
        instances,
        checks: 0,
        entries: 0,
        worst: 0.0,
        worst_case: String::new(),
    };
    for seed in 0..instances as u64 {
        let inst = Instance::random(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let weights = [
            rng.random_range(0.1..2.0),
            rng.random_range(0.1..2.0),
            rng.random_range(0.1..2.0),
        ];
        for (name, objective) in inst.objectives(weights) {
            let err = max_relative_error(&inst.analytic(&objective), &inst.numeric(&objective));
            report.checks += 1;
            report.entries += inst.params.num_params();
            if err > report.worst {
                report.worst = err;
                report.worst_case = format!("instance {seed}, {name}");
            }
        }
    }
    report
}
