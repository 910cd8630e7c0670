//! Coordinate-to-compressed-column assembly with a reusable pattern.
//!
//! Duplicates are summed in triplet order, so the compressed values are
//! bit-reproducible whenever the triplet sequence is.

use nalgebra::DMatrix;

/// Coordinate list of matrix entries; duplicates are allowed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Triplets {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Triplets {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            rows: Vec::with_capacity(n),
            cols: Vec::with_capacity(n),
            vals: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        self.rows.push(r);
        self.cols.push(c);
        self.vals.push(v);
    }

    /// Adds the dense block `block[(i, j)]` at `(dofs[i], dofs[j])`.
    pub fn push_block<F: Fn(usize, usize) -> f64>(&mut self, dofs: &[usize], block: F) {
        for (j, &c) in dofs.iter().enumerate() {
            for (i, &r) in dofs.iter().enumerate() {
                self.push(r, c, block(i, j));
            }
        }
    }

    pub fn extend(&mut self, other: Triplets) {
        self.rows.extend(other.rows);
        self.cols.extend(other.cols);
        self.vals.extend(other.vals);
    }
}

/// Sparsity pattern plus the slot each triplet lands in.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    slots: Vec<usize>,
}

impl Pattern {
    /// # Panics
    /// If a coordinate lies outside `n x n`.
    pub fn new(n: usize, t: &Triplets) -> Self {
        let mut order: Vec<usize> = (0..t.len()).collect();
        for k in 0..t.len() {
            assert!(t.rows[k] < n && t.cols[k] < n, "entry ({}, {}) outside {n}x{n}", t.rows[k], t.cols[k]);
        }
        order.sort_by_key(|&k| (t.cols[k], t.rows[k]));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        let mut slots = vec![0usize; t.len()];
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let key = (t.cols[k], t.rows[k]);
            if last != Some(key) {
                row_idx.push(key.1);
                col_ptr[key.0 + 1] += 1;
                last = Some(key);
            }
            slots[k] = row_idx.len() - 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self {
            n,
            col_ptr,
            row_idx,
            slots,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Whether `t` has the coordinate sequence this pattern was built from.
    pub fn matches(&self, t: &Triplets) -> bool {
        t.len() == self.slots.len()
            && (0..t.len()).all(|k| {
                let s = self.slots[k];
                self.row_idx[s] == t.rows[k] && self.col_ptr[t.cols[k]] <= s && s < self.col_ptr[t.cols[k] + 1]
            })
    }

    /// Sums the triplet values into the pattern. `t` must have the
    /// coordinates the pattern was built from.
    pub fn assemble(&self, t: &Triplets) -> CscMatrix {
        debug_assert_eq!(t.len(), self.slots.len());
        let mut values = vec![0.0; self.nnz()];
        for (k, &s) in self.slots.iter().enumerate() {
            values[s] += t.vals[k];
        }
        CscMatrix {
            n: self.n,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
        }
    }
}

/// Square matrix in compressed sparse column form with sorted row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn from_triplets(n: usize, t: &Triplets) -> Self {
        Pattern::new(n, t).assemble(t)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let rows = &self.row_idx[self.col_ptr[c]..self.col_ptr[c + 1]];
        match rows.binary_search(&r) {
            Ok(k) => self.values[self.col_ptr[c] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T| / max |A|`, zero for the zero matrix.
    pub fn symmetry_error(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                d[(self.row_idx[k], c)] += self.values[k];
            }
        }
        d
    }
}
