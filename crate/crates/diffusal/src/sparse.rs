//! Compressed sparse row matrices sized for diffusion operators: a few
//! million nonzeros, f64 values, dense right-hand sides.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-column sparse vectors; `columns[j]` holds `(row, value)`
    /// pairs. Rows within a column may arrive in any order and are sorted.
    /// Zero values are kept so callers control truncation explicitly.
    pub fn from_columns(n_rows: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n_cols = columns.len();
        let mut row_counts = vec![0usize; n_rows];
        for col in &columns {
            for &(r, _) in col {
                if r >= n_rows {
                    return Err(Error::InvalidInput(format!(
                        "row index {r} out of bounds for {n_rows} rows"
                    )));
                }
                row_counts[r] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0usize);
        for r in 0..n_rows {
            row_ptr.push(row_ptr[r] + row_counts[r]);
        }
        let nnz = row_ptr[n_rows];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0f64; nnz];
        let mut cursor = row_ptr.clone();
        for (j, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                let slot = cursor[r];
                col_idx[slot] = j;
                values[slot] = v;
                cursor[r] += 1;
            }
        }
        // Columns were scanned in ascending j, so each row is already sorted.
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds from (row, col, value) triplets; duplicate coordinates are an error.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidInput(format!(
                    "entry ({r}, {c}) out of bounds for {n_rows}x{n_cols}"
                )));
            }
            entries.push((r, c, v));
        }
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::InvalidInput(format!(
                    "duplicate entry at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col_idx = entries.iter().map(|e| e.1).collect();
        let values = entries.iter().map(|e| e.2).collect();
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Entry lookup by binary search; O(log nnz(row)).
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Entrywise sum; patterns are merged.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::InvalidInput(format!(
                "shape mismatch in sparse add: {}x{} vs {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        row_ptr.push(0usize);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(col_idx.capacity());
        for r in 0..self.n_rows {
            let (ac, av) = self.row(r);
            let (bc, bv) = other.row(r);
            let (mut i, mut j) = (0usize, 0usize);
            while i < ac.len() || j < bc.len() {
                let next = match (ac.get(i), bc.get(j)) {
                    (Some(&a), Some(&b)) if a == b => {
                        let e = (a, av[i] + bv[j]);
                        i += 1;
                        j += 1;
                        e
                    }
                    (Some(&a), Some(&b)) if a < b => {
                        let e = (a, av[i]);
                        i += 1;
                        e
                    }
                    (Some(_), Some(&b)) => {
                        let e = (b, bv[j]);
                        j += 1;
                        e
                    }
                    (Some(&a), None) => {
                        let e = (a, av[i]);
                        i += 1;
                        e
                    }
                    (None, Some(&b)) => {
                        let e = (b, bv[j]);
                        j += 1;
                        e
                    }
                    (None, None) => unreachable!(),
                };
                col_idx.push(next.0);
                values.push(next.1);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Sparse-dense product `self * x`.
    pub fn matmul_dense(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.n_cols {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {}x{} * {}x{}",
                self.n_rows,
                self.n_cols,
                x.nrows(),
                x.ncols()
            )));
        }
        let d = x.ncols();
        let mut out = Array2::<f64>::zeros((self.n_rows, d));
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut row_out = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let src = x.row(c);
                for k in 0..d {
                    row_out[k] += v * src[k];
                }
            }
        }
        Ok(out)
    }

    /// Sparse-sparse product `self * other` (classic row-merge Gustavson).
    pub fn matmul_sparse(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {}x{} * {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        row_ptr.push(0usize);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0f64; other.n_cols];
        let mut mark = vec![false; other.n_cols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&mid, &v) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(mid);
                for (&c, &ov) in ocols.iter().zip(ovals) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += v * ov;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                col_idx.push(c);
                values.push(acc[c]);
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            n_rows: self.n_rows,
            n_cols: other.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.row(r).1.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0f64; self.n_cols];
        for (&c, &v) in self.col_idx.iter().zip(&self.values) {
            sums[c] += v;
        }
        sums
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::<f64>::zeros((self.n_rows, self.n_cols));
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[[r, c]] = v;
            }
        }
        out
    }

    /// Writes `header` (a single JSON line) followed by one `row,col,value`
    /// triplet per line. Values use the shortest representation that parses
    /// back to the identical f64, so a reload is exact.
    pub fn write_file(&self, path: &Path, header: &serde_json::Value) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            writeln!(w, "#csr v1 {} {} {}", self.n_rows, self.n_cols, self.nnz())?;
            writeln!(w, "#{header}")?;
            for r in 0..self.n_rows {
                let (cols, vals) = self.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    writeln!(w, "{r},{c},{v:e}")?;
                }
            }
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }

    /// Reads a file written by [`write_file`](Self::write_file); returns the
    /// matrix and its header line.
    pub fn read_file(path: &Path) -> Result<(CsrMatrix, serde_json::Value)> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let magic = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 1, "empty cache file")),
        };
        let dims: Vec<&str> = magic
            .strip_prefix("#csr v1 ")
            .ok_or_else(|| Error::parse(path, 1, "not a csr cache file"))?
            .split(' ')
            .collect();
        if dims.len() != 3 {
            return Err(Error::parse(path, 1, "malformed dimension header"));
        }
        let parse_dim = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::parse(path, 1, format!("bad dimension {s:?}")))
        };
        let n_rows = parse_dim(dims[0])?;
        let n_cols = parse_dim(dims[1])?;
        let nnz = parse_dim(dims[2])?;
        let header_line = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 2, "missing header line")),
        };
        let header: serde_json::Value = header_line
            .strip_prefix('#')
            .ok_or_else(|| Error::parse(path, 2, "missing header line"))
            .and_then(|s| {
                serde_json::from_str(s).map_err(|e| Error::parse(path, 2, format!("bad header: {e}")))
            })?;
        let mut triplets = Vec::with_capacity(nnz);
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let mut parts = line.split(',');
            let mut field = |name: &str| {
                parts
                    .next()
                    .ok_or_else(|| Error::parse(path, lineno, format!("missing {name}")))
            };
            let r: usize = field("row")?
                .parse()
                .map_err(|_| Error::parse(path, lineno, "bad row index"))?;
            let c: usize = field("col")?
                .parse()
                .map_err(|_| Error::parse(path, lineno, "bad col index"))?;
            let v: f64 = field("value")?
                .parse()
                .map_err(|_| Error::parse(path, lineno, "bad value"))?;
            triplets.push((r, c, v));
        }
        if triplets.len() != nnz {
            return Err(Error::parse(
                path,
                1,
                format!("expected {nnz} entries, found {}", triplets.len()),
            ));
        }
        let matrix = CsrMatrix::from_triplets(n_rows, n_cols, &triplets)?;
        Ok((matrix, header))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (2, 0, 4.0)])
            .unwrap()
    }

    #[test]
    fn triplets_round_trip_through_dense() {
        let m = sample();
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(2, 2), 0.0);
        let d = m.to_dense();
        assert_eq!(d, array![[1.0, 0.0, 2.0], [0.0, 3.0, 0.0], [4.0, 0.0, 0.0]]);
    }

    #[test]
    fn duplicate_triplets_rejected() {
        let res = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0)]);
        assert!(res.is_err());
    }

    #[test]
    fn from_columns_matches_triplets() {
        let by_col = CsrMatrix::from_columns(
            3,
            vec![vec![(0, 1.0), (2, 4.0)], vec![(1, 3.0)], vec![(0, 2.0)]],
        )
        .unwrap();
        assert_eq!(by_col, sample());
    }

    #[test]
    fn add_merges_patterns() {
        let a = sample();
        let b = CsrMatrix::from_triplets(3, 3, &[(0, 1, 5.0), (1, 1, 1.0)]).unwrap();
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.get(0, 1), 5.0);
        assert_eq!(sum.get(1, 1), 4.0);
        assert_eq!(sum.get(0, 0), 1.0);
        assert_eq!(sum.nnz(), 5);
    }

    #[test]
    fn dense_product_matches_manual() {
        let m = sample();
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let y = m.matmul_dense(x.view()).unwrap();
        assert_eq!(y, array![[3.0, 2.0], [0.0, 3.0], [4.0, 0.0]]);
    }

    #[test]
    fn sparse_product_matches_dense_product() {
        let a = sample();
        let b = CsrMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, 3.0)]).unwrap();
        let prod = a.matmul_sparse(&b).unwrap();
        let expect = a.to_dense().dot(&b.to_dense());
        assert_eq!(prod.to_dense(), expect);
    }

    #[test]
    fn row_and_col_sums() {
        let m = sample();
        assert_eq!(m.row_sums(), vec![3.0, 3.0, 4.0]);
        assert_eq!(m.col_sums(), vec![5.0, 3.0, 2.0]);
    }

    #[test]
    fn file_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csr");
        // Values chosen to exercise non-terminating binary fractions.
        let m = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 0.1), (0, 1, 1.0 / 3.0), (1, 1, 2.0f64.sqrt() * 1e-9)],
        )
        .unwrap();
        let header = serde_json::json!({"alpha": 0.05});
        m.write_file(&path, &header).unwrap();
        let (back, h) = CsrMatrix::read_file(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(h, header);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let a = sample();
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(a.add(&b).is_err());
        assert!(a.matmul_sparse(&b).is_err());
        let x = Array2::<f64>::zeros((2, 2));
        assert!(a.matmul_dense(x.view()).is_err());
    }
}
