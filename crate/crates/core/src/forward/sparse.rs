//! Compressed sparse row storage.

use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col) pairs; duplicates collapse. Values start at zero.
    pub fn from_pattern(n_rows: usize, n_cols: usize, mut pairs: Vec<(usize, usize)>) -> CsrMatrix {
        pairs.sort_unstable();
        pairs.dedup();
        let mut row_ptr = vec![0; n_rows + 1];
        for &(r, _) in &pairs {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col_idx = pairs.iter().map(|&(_, c)| c).collect::<Vec<_>>();
        let values = vec![0.0; col_idx.len()];
        CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    /// Position of `(r, c)` in `values`.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        row.binary_search(&c).ok().map(|k| self.row_ptr[r] + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *yr = self.values[span.clone()].iter().zip(&self.col_idx[span]).map(|(v, &c)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sub-matrix on the given row and column index sets. `col_map[c]` is the
    /// new column of old column `c`, or `usize::MAX` when dropped.
    pub fn submatrix(&self, rows: &[usize], col_map: &[usize], n_cols: usize) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &r in rows {
            let mut entries: Vec<(usize, f64)> = (self.row_ptr[r]..self.row_ptr[r + 1])
                .filter_map(|k| {
                    let c = col_map[self.col_idx[k]];
                    (c != usize::MAX).then_some((c, self.values[k]))
                })
                .collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (c, v) in entries {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n_rows: rows.len(), n_cols, row_ptr, col_idx, values }
    }

    /// Max over stored entries of `|A_ij - A_ji|` (missing transposed entries count as zero).
    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m = m.max((self.values[k] - self.get(self.col_idx[k], r)).abs());
            }
        }
        m
    }

    /// Text dump in coordinate format: a `rows cols nnz` header, then one
    /// 1-based `row col value` triplet per line.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                writeln!(w, "{} {} {:.16e}", r + 1, self.col_idx[k] + 1, self.values[k])?;
            }
        }
        Ok(())
    }
}
