use crate::error::{Error, Result};

/// Row-compressed sparse matrix of node attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

/// Borrowed view of one attribute row.
#[derive(Clone, Copy, Debug)]
pub struct SparseRow<'a> {
    pub dim: usize,
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        let values = self.values;
        self.indices
            .iter()
            .zip(values)
            .map(|(&k, &v)| (k as usize, v))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (k, v) in self.iter() {
            out[k] += v;
        }
        out
    }
}

impl SparseRows {
    pub fn empty(nrows: usize, ncols: usize) -> Self {
        SparseRows {
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from `(row, col, value)` triplets in any order. Duplicate
    /// coordinates are summed; explicit zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows {
                return Err(Error::validation(format!("attribute row {r} out of range (num_nodes = {nrows})")));
            }
            if c >= ncols {
                return Err(Error::validation(format!("attribute column {c} out of range (D = {ncols})")));
            }
            check_value(r, c, v)?;
            if v != 0.0 {
                sorted.push((r, c, v));
            }
        }
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices: Vec<u32> = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            indptr[r + 1] += 1;
            indices.push(c as u32);
            values.push(v);
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Ok(SparseRows { ncols, indptr, indices, values })
    }

    pub fn from_dense(rows: &[Vec<f64>], ncols: usize) -> Result<Self> {
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::validation(format!(
                    "attribute row {r} has {} columns, expected {ncols}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                } else {
                    check_value(r, c, v)?;
                }
            }
        }
        Self::from_triplets(rows.len(), ncols, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        SparseRow {
            dim: self.ncols,
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseRows {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let row = self.row(r);
            indices.extend_from_slice(row.indices);
            values.extend_from_slice(row.values);
            indptr.push(indices.len());
        }
        SparseRows { ncols: self.ncols, indptr, indices, values }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.nrows()).map(|i| self.row(i).to_dense()).collect()
    }
}

fn check_value(r: usize, c: usize, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::validation(format!(
            "attribute ({r}, {c}) = {v}: values must be finite and nonnegative"
        )));
    }
    Ok(())
}
