//! Undirected graphs, CSR storage and the renormalized propagation operator
//! `D^{-1/2} (A + I) D^{-1/2}` used by the GCN layers.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Simple undirected graph. Edges are stored once as `(u, v)` with `u < v`,
/// sorted and deduplicated. Self-loops are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from arbitrary node pairs. Orientation is ignored,
    /// duplicates collapse and self-loops are dropped.
    pub fn new<I>(num_nodes: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (u, v) in pairs {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::structural(format!(
                        "edge ({u}, {v}) has endpoint {node} outside [0, {num_nodes})"
                    )));
                }
            }
            if u != v {
                edges.push((u.min(v), u.max(v)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Graph { num_nodes, edges })
    }

    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            num_nodes,
            edges: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list, `u < v`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }
}

/// Compressed sparse row matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    num_rows: usize,
    num_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates and wraps raw CSR arrays.
    pub fn try_new(
        num_rows: usize,
        num_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != num_rows + 1 {
            return Err(Error::structural(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                num_rows + 1
            )));
        }
        if row_ptr[0] != 0 {
            return Err(Error::structural("row_ptr[0] must be 0"));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::structural("row_ptr must be non-decreasing"));
        }
        let nnz = row_ptr[num_rows];
        if col_idx.len() != nnz || values.len() != nnz {
            return Err(Error::structural(format!(
                "row_ptr ends at {nnz} but col_idx has {} and values has {} entries",
                col_idx.len(),
                values.len()
            )));
        }
        for row in 0..num_rows {
            let cols = &col_idx[row_ptr[row]..row_ptr[row + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::structural(format!(
                    "columns of row {row} are not strictly increasing"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= num_cols {
                    return Err(Error::structural(format!(
                        "column {c} in row {row} is outside [0, {num_cols})"
                    )));
                }
            }
        }
        Ok(CsrMatrix {
            num_rows,
            num_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            num_rows: n,
            num_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Keeps the nonzero entries of a dense matrix.
    pub fn from_dense(dense: ArrayView2<'_, f64>) -> Self {
        let (rows, cols) = dense.dim();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..rows {
            for j in 0..cols {
                let x = dense[[i, j]];
                if x != 0.0 {
                    col_idx.push(j);
                    values.push(x);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            num_rows: rows,
            num_cols: cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(col, value)` over the stored entries of `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Stored value at `(row, col)`, or `None` if the entry is structurally absent.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[span.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| self.values[span.start + k])
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.num_rows, self.num_cols));
        for i in 0..self.num_rows {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// Sparse-dense product `self * dense`.
    pub fn spmm(&self, dense: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (inner, k) = dense.dim();
        if inner != self.num_cols {
            return Err(Error::structural(format!(
                "spmm dimension mismatch: {}x{} times {inner}x{k}",
                self.num_rows, self.num_cols
            )));
        }
        let mut out = Array2::zeros((self.num_rows, k));
        for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
            for (j, a) in self.row(i) {
                out_row.scaled_add(a, &dense.row(j));
            }
        }
        Ok(out)
    }
}

/// Symmetric binary adjacency with no diagonal.
pub fn build_csr(graph: &Graph) -> CsrMatrix {
    let n = graph.num_nodes();
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in graph.edges() {
        neighbours[u].push(v);
        neighbours[v].push(u);
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(2 * graph.num_edges());
    row_ptr.push(0);
    for mut row in neighbours {
        row.sort_unstable();
        col_idx.extend(row);
        row_ptr.push(col_idx.len());
    }
    let values = vec![1.0; col_idx.len()];
    CsrMatrix {
        num_rows: n,
        num_cols: n,
        row_ptr,
        col_idx,
        values,
    }
}

/// `D^{-1/2} (A + I) D^{-1/2}` with `d_i = degree_i + 1`.
pub fn normalize_adjacency(graph: &Graph) -> CsrMatrix {
    let n = graph.num_nodes();
    let d: Vec<f64> = graph
        .degrees()
        .into_iter()
        .map(|k| (k + 1) as f64)
        .collect();
    let weight = |i: usize, j: usize| 1.0 / (d[i] * d[j]).sqrt();
    let adj = build_csr(graph);

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(adj.nnz() + n);
    let mut values = Vec::with_capacity(adj.nnz() + n);
    row_ptr.push(0);
    for i in 0..n {
        let mut diagonal_done = false;
        for (j, _) in adj.row(i) {
            if !diagonal_done && j > i {
                col_idx.push(i);
                values.push(weight(i, i));
                diagonal_done = true;
            }
            col_idx.push(j);
            values.push(weight(i, j));
        }
        if !diagonal_done {
            col_idx.push(i);
            values.push(weight(i, i));
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix {
        num_rows: n,
        num_cols: n,
        row_ptr,
        col_idx,
        values,
    }
}
