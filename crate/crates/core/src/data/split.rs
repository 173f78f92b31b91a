use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed;

/// Partition of the nodes into labeled, validation, test and the remaining
/// unlabeled training pool. All four lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    num_nodes: usize,
    labeled: Vec<usize>,
    validation: Vec<usize>,
    test: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl Split {
    /// The unlabeled pool is the complement of the three given sets.
    pub fn new(
        num_nodes: usize,
        mut labeled: Vec<usize>,
        mut validation: Vec<usize>,
        mut test: Vec<usize>,
    ) -> Result<Self> {
        if labeled.is_empty() {
            return Err(Error::structural("labeled set must be non-empty"));
        }
        let mut owner = vec![None; num_nodes];
        for (name, set) in [
            ("labeled", &mut labeled),
            ("validation", &mut validation),
            ("test", &mut test),
        ] {
            set.sort_unstable();
            for &v in set.iter() {
                let slot = owner.get_mut(v).ok_or_else(|| {
                    Error::structural(format!("{name} node {v} outside [0, {num_nodes})"))
                })?;
                if let Some(other) = slot.replace(name) {
                    return Err(Error::structural(format!(
                        "node {v} is in both the {other} and {name} sets"
                    )));
                }
            }
        }
        let unlabeled = (0..num_nodes).filter(|&v| owner[v].is_none()).collect();
        Ok(Split {
            num_nodes,
            labeled,
            validation,
            test,
            unlabeled,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn validation(&self) -> &[usize] {
        &self.validation
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }

    /// Nodes in none of the other three sets.
    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }
}

/// Per-class labeled quotas summing to `total`: proportional targets rounded
/// by largest remainder (ties to the lower class), then every empty class
/// takes one slot from the currently largest quota.
fn stratified_quotas(class_sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let targets: Vec<f64> = class_sizes
        .iter()
        .map(|&c| total as f64 * c as f64 / n as f64)
        .collect();
    let mut quotas: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = targets[a] - targets[a].floor();
        let rb = targets[b] - targets[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        quotas[k] += 1;
    }
    while let Some(empty) = quotas.iter().position(|&q| q == 0) {
        let donor = (0..quotas.len())
            .max_by(|&a, &b| quotas[a].cmp(&quotas[b]).then(b.cmp(&a)))
            .expect("at least one class");
        quotas[donor] -= 1;
        quotas[empty] += 1;
    }
    quotas
}

/// Stratified labeled sample plus uniformly drawn validation and test sets.
/// Set sizes are `round(fraction * num_nodes)`.
pub fn sample_split(
    dataset: &Dataset,
    labeled_fraction: f64,
    val_fraction: f64,
    test_fraction: f64,
    seed: u64,
) -> Result<Split> {
    for (name, f) in [
        ("labeled", labeled_fraction),
        ("validation", val_fraction),
        ("test", test_fraction),
    ] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::structural(format!(
                "{name} fraction must be in (0, 1), got {f}"
            )));
        }
    }
    if labeled_fraction + val_fraction + test_fraction >= 1.0 {
        return Err(Error::structural("split fractions must sum to less than 1"));
    }

    let n = dataset.num_nodes();
    let c = dataset.num_classes();
    let count = |f: f64| (f * n as f64).round() as usize;
    let (num_labeled, num_val, num_test) = (
        count(labeled_fraction),
        count(val_fraction),
        count(test_fraction),
    );
    if num_labeled < c {
        return Err(Error::structural(format!(
            "labeled fraction {labeled_fraction} gives {num_labeled} nodes, too few to cover {c} classes"
        )));
    }
    if num_labeled + num_val + num_test > n {
        return Err(Error::structural("split sizes exceed the node count"));
    }

    let mut rng = seed::stream(seed, seed::SPLIT, 0);
    let by_class = dataset.nodes_by_class();
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let quotas = stratified_quotas(&sizes, num_labeled);

    let mut labeled = Vec::with_capacity(num_labeled);
    let mut rest = Vec::with_capacity(n - num_labeled);
    for (mut nodes, quota) in by_class.into_iter().zip(quotas) {
        nodes.shuffle(&mut rng);
        rest.extend_from_slice(&nodes[quota..]);
        nodes.truncate(quota);
        labeled.extend(nodes);
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let validation = rest[..num_val].to_vec();
    let test = rest[num_val..num_val + num_test].to_vec();
    Split::new(n, labeled, validation, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use ndarray::Array2;

    fn dataset(labels: Vec<usize>, c: usize) -> Dataset {
        let n = labels.len();
        Dataset::new("t", Graph::empty(n), Array2::zeros((n, 1)), labels, c).unwrap()
    }

    #[test]
    fn sizes_on_twenty_nodes() {
        let ds = dataset((0..20).map(|v| v % 2).collect(), 2);
        let s = sample_split(&ds, 0.5, 0.25, 0.2, 0).unwrap();
        assert_eq!(s.labeled().len(), 10);
        assert_eq!(s.validation().len(), 5);
        assert_eq!(s.test().len(), 4);
        assert_eq!(s.unlabeled().len(), 1);
    }

    #[test]
    fn cora_sized_split_covers_classes() {
        // Cora's class sizes.
        let sizes = [351, 217, 418, 818, 426, 298, 180];
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect();
        assert_eq!(labels.len(), 2708);
        let ds = dataset(labels, 7);
        let s = sample_split(&ds, 0.05, 0.15, 0.3, 3).unwrap();
        assert_eq!(s.labeled().len(), 135);
        let mut seen = [false; 7];
        for &v in s.labeled() {
            seen[ds.labels()[v]] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn same_seed_same_masks() {
        let ds = dataset((0..50).map(|v| v % 3).collect(), 3);
        let a = sample_split(&ds, 0.1, 0.2, 0.3, 8).unwrap();
        assert_eq!(a, sample_split(&ds, 0.1, 0.2, 0.3, 8).unwrap());
        assert_ne!(a, sample_split(&ds, 0.1, 0.2, 0.3, 9).unwrap());
    }

    #[test]
    fn too_small_fraction_errors() {
        let ds = dataset((0..20).map(|v| v % 5).collect(), 5);
        let err = sample_split(&ds, 0.1, 0.2, 0.2, 0).unwrap_err();
        assert!(err.to_string().contains("too few"));
    }

    #[test]
    fn quotas_give_every_class_a_node() {
        assert_eq!(stratified_quotas(&[97, 1, 2], 3), vec![1, 1, 1]);
        assert_eq!(stratified_quotas(&[10, 10], 5), vec![3, 2]);
        let q = stratified_quotas(&[50, 30, 20], 10);
        assert_eq!(q, vec![5, 3, 2]);
    }

    #[test]
    fn split_new_validates() {
        assert!(Split::new(4, vec![], vec![1], vec![2]).is_err());
        assert!(Split::new(4, vec![0], vec![0], vec![2]).is_err());
        assert!(Split::new(4, vec![0], vec![5], vec![2]).is_err());
        let s = Split::new(4, vec![3, 0], vec![1], vec![]).unwrap();
        assert_eq!(s.labeled(), &[0, 3]);
        assert_eq!(s.unlabeled(), &[2]);
    }
}
