//! Envelope (skyline) Cholesky factorization of sparse SPD matrices.
//!
//! Rows are reordered by reverse Cuthill-McKee first; on lattice graphs
//! this keeps the envelope close to the bandwidth of a front sweeping the
//! domain, and fill never leaves the envelope.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Symmetric sparse matrix in row-major adjacency form. Each row lists
/// `(column, value)` for its off-diagonal entries; `diag` holds the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparse {
    pub diag: Vec<f64>,
    pub off: Vec<Vec<(usize, f64)>>,
}

impl SymmetricSparse {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                self.diag[i] * x[i] + self.off[i].iter().map(|&(j, a)| a * x[j]).sum::<f64>()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            for &(j, a) in &self.off[i] {
                m[i][j] = a;
            }
        }
        m
    }
}

/// Reverse Cuthill-McKee order: `order[k]` is the original index placed at
/// position `k`. Components are started from a minimum-degree vertex.
pub fn reverse_cuthill_mckee(adj: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (adj[i].len(), i));
    let mut queue = VecDeque::new();
    let mut nbrs = Vec::new();
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().map(|&(j, _)| j).filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (adj[j].len(), j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `P A P^T = L L^T`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    /// `perm[original] = position`.
    perm: Vec<usize>,
    order: Vec<usize>,
    /// First stored column of each (permuted) row.
    first: Vec<usize>,
    /// Offset of each row's first stored entry in `values`.
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SymmetricSparse) -> Result<Self> {
        let n = a.n();
        let order = reverse_cuthill_mckee(&a.off);
        let mut perm = vec![0; n];
        for (k, &i) in order.iter().enumerate() {
            perm[i] = k;
        }
        let mut first = vec![0; n];
        for (k, &i) in order.iter().enumerate() {
            first[k] = a.off[i]
                .iter()
                .map(|&(j, _)| perm[j])
                .filter(|&c| c < k)
                .min()
                .unwrap_or(k);
        }
        let mut start = vec![0; n + 1];
        for k in 0..n {
            start[k + 1] = start[k] + (k - first[k] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for (k, &i) in order.iter().enumerate() {
            values[start[k] + (k - first[k])] = a.diag[i];
            for &(j, v) in &a.off[i] {
                let c = perm[j];
                if c < k {
                    values[start[k] + (c - first[k])] = v;
                }
            }
        }
        for k in 0..n {
            let fk = first[k];
            for c in fk..=k {
                let fc = first[c];
                let lo = fk.max(fc);
                let mut s = values[start[k] + (c - fk)];
                let row_k = &values[start[k] + (lo - fk)..start[k] + (c - fk)];
                let row_c = &values[start[c] + (lo - fc)..start[c] + (c - fc)];
                s -= row_k.iter().zip(row_c).map(|(x, y)| x * y).sum::<f64>();
                if c < k {
                    values[start[k] + (c - fk)] = s / values[start[c] + (c - fc)];
                } else {
                    let scale = a.diag[order[k]].abs().max(f64::MIN_POSITIVE);
                    if !(s > 1e-12 * scale) {
                        return Err(Error::Singular(format!(
                            "pivot {s:e} at row {} of {n}",
                            order[k]
                        )));
                    }
                    values[start[k] + (k - fk)] = s.sqrt();
                }
            }
        }
        Ok(Self {
            perm,
            order,
            first,
            start,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries, a proxy for factorization memory and work.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.order.iter().map(|&i| b[i]).collect();
        // L y = P b
        for k in 0..n {
            let fk = self.first[k];
            let row = &self.values[self.start[k]..self.start[k + 1]];
            let s: f64 = row[..k - fk].iter().zip(&y[fk..k]).map(|(l, x)| l * x).sum();
            y[k] = (y[k] - s) / row[k - fk];
        }
        // L^T x = y, column sweep
        for k in (0..n).rev() {
            let fk = self.first[k];
            let row = &self.values[self.start[k]..self.start[k + 1]];
            y[k] /= row[k - fk];
            let xk = y[k];
            for (l, yc) in row[..k - fk].iter().zip(&mut y[fk..k]) {
                *yc -= l * xk;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &i) in self.order.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}
