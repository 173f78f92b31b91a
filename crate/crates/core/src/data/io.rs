//! Portable dataset directory:
//!
//! ```text
//! meta.json     {"name": str, "num_nodes": int, "num_classes": int, "feature_dim": int}
//! edges.tsv     "u<TAB>v" per line, 0-based, either orientation, duplicates allowed
//! features.csv  num_nodes lines of feature_dim comma-separated reals
//! labels.csv    num_nodes lines, one class id each
//! ```
//!
//! UTF-8, LF line endings, no headers.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const META_FILE: &str = "meta.json";
pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
}

fn read(dir: &Path, file: &str) -> Result<String> {
    let path = dir.join(file);
    match fs::read_to_string(&path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path)),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

fn malformed(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Malformed {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_labels(text: &str, meta: &DatasetMeta) -> Result<Vec<usize>> {
    let mut labels = Vec::with_capacity(meta.num_nodes);
    for (line, raw) in lines(text) {
        let class: usize = raw.trim().parse().map_err(|_| {
            malformed(
                LABELS_FILE,
                line,
                format!("expected a class id, got {raw:?}"),
            )
        })?;
        if class >= meta.num_classes {
            return Err(Error::LabelOutOfRange {
                file: LABELS_FILE.to_string(),
                line,
                class,
                num_classes: meta.num_classes,
            });
        }
        labels.push(class);
    }
    if labels.len() != meta.num_nodes {
        return Err(Error::CountMismatch {
            what: "labels.csv lines".into(),
            expected: meta.num_nodes,
            found: labels.len(),
        });
    }
    Ok(labels)
}

fn parse_features(text: &str, meta: &DatasetMeta) -> Result<Array2<f64>> {
    let mut values = Vec::with_capacity(meta.num_nodes * meta.feature_dim);
    let mut rows = 0;
    for (line, raw) in lines(text) {
        let before = values.len();
        for field in raw.split(',') {
            let x: f64 = field.trim().parse().map_err(|_| {
                malformed(
                    FEATURES_FILE,
                    line,
                    format!("expected a real, got {field:?}"),
                )
            })?;
            if !x.is_finite() {
                return Err(malformed(FEATURES_FILE, line, "non-finite feature value"));
            }
            values.push(x);
        }
        let width = values.len() - before;
        if width != meta.feature_dim {
            return Err(malformed(
                FEATURES_FILE,
                line,
                format!("{width} values, expected {}", meta.feature_dim),
            ));
        }
        rows += 1;
    }
    if rows != meta.num_nodes {
        return Err(Error::CountMismatch {
            what: "features.csv lines".into(),
            expected: meta.num_nodes,
            found: rows,
        });
    }
    Ok(Array2::from_shape_vec((rows, meta.feature_dim), values).expect("sized above"))
}

fn parse_edges(text: &str, num_nodes: usize) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (line, raw) in lines(text) {
        let mut fields = raw.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed(EDGES_FILE, line, "expected \"u<TAB>v\""));
        };
        let endpoint = |s: &str| -> Result<usize> {
            let node: usize = s
                .trim()
                .parse()
                .map_err(|_| malformed(EDGES_FILE, line, format!("bad node id {s:?}")))?;
            if node >= num_nodes {
                return Err(Error::EdgeOutOfRange {
                    file: EDGES_FILE.to_string(),
                    line,
                    node,
                    num_nodes,
                });
            }
            Ok(node)
        };
        let u = endpoint(a)?;
        let v = endpoint(b)?;
        edges.push((u, v));
    }
    Ok(edges)
}

/// Reads and validates a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let meta: DatasetMeta = serde_json::from_str(&read(dir, META_FILE)?)
        .map_err(|e| malformed(META_FILE, e.line(), e.to_string()))?;
    let labels = parse_labels(&read(dir, LABELS_FILE)?, &meta)?;
    let features = parse_features(&read(dir, FEATURES_FILE)?, &meta)?;
    let edges = parse_edges(&read(dir, EDGES_FILE)?, meta.num_nodes)?;
    let graph = Graph::new(meta.num_nodes, edges)?;
    Dataset::new(meta.name, graph, features, labels, meta.num_classes)
}

/// Writes `dataset` in the portable format. Edges are written once each in
/// canonical `u < v` order; features use the shortest round-trip decimal form.
pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |file: &str, body: String| -> Result<()> {
        let path = dir.join(file);
        fs::write(&path, body).map_err(|e| Error::io(path, e))
    };

    let meta = DatasetMeta {
        name: dataset.name().to_string(),
        num_nodes: dataset.num_nodes(),
        num_classes: dataset.num_classes(),
        feature_dim: dataset.feature_dim(),
    };
    write(META_FILE, serde_json::to_string_pretty(&meta)? + "\n")?;

    let mut edges = String::new();
    for (u, v) in dataset.graph().edges() {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    write(EDGES_FILE, edges)?;

    let mut features = String::new();
    for row in dataset.features().rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        features.push_str(&cells.join(","));
        features.push('\n');
    }
    write(FEATURES_FILE, features)?;

    let mut labels = String::new();
    for y in dataset.labels() {
        labels.push_str(&format!("{y}\n"));
    }
    write(LABELS_FILE, labels)
}
