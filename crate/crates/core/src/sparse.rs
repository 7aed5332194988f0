//! Compressed sparse row matrices, an envelope Cholesky factorization and a
//! dense LU fallback used as a test oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Csr> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidInput(format!("entry ({i}, {j}) outside {nrows}x{ncols}")));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[fill[i]] = j;
            vals[fill[i]] = v;
            fill[i] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            row.sort_by_key(|e| e.0);
            for &(j, v) in &row {
                if indices.len() > indptr[i] && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Csr { nrows, ncols, indptr, indices, values })
    }

    pub fn identity(n: usize) -> Csr {
        Csr { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Csr {
        Csr { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], values: vec![] }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |p| (self.indices[p], self.values[p]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(p) => self.values[self.indptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: x.len() });
        }
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, got: y.len() });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[p] * x[self.indices[p]];
            }
            *yi = s;
        }
        Ok(())
    }

    /// Quadratic form xᵀAx.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.nrows).map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    /// Bilinear form xᵀAy.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    pub fn transpose(&self) -> Csr {
        let trips: Vec<_> = (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v))).collect();
        Csr::from_triplets(self.ncols, self.nrows, &trips).expect("transpose indices are in range")
    }

    pub fn scaled(&self, s: f64) -> Csr {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Sum of scaled matrices with identical shape.
    pub fn linear_combination(terms: &[(f64, &Csr)]) -> Result<Csr> {
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let mut trips = Vec::new();
        for (s, m) in terms {
            if m.nrows != nrows || m.ncols != ncols {
                return Err(Error::DimensionMismatch { expected: nrows, got: m.nrows });
            }
            trips.extend((0..m.nrows).flat_map(|i| m.row(i).map(move |(j, v)| (i, j, s * v))));
        }
        Csr::from_triplets(nrows, ncols, &trips)
    }

    /// Assembles a block matrix; `blocks[r][c]` holds an optional scaled block.
    pub fn block(blocks: &[Vec<Option<(f64, &Csr)>>], block_size: usize) -> Result<Csr> {
        let nb = blocks.len();
        let mut trips = Vec::new();
        for (r, row) in blocks.iter().enumerate() {
            for (c, entry) in row.iter().enumerate() {
                if let Some((s, m)) = entry {
                    if m.nrows != block_size || m.ncols != block_size {
                        return Err(Error::DimensionMismatch { expected: block_size, got: m.nrows });
                    }
                    for i in 0..m.nrows {
                        for (j, v) in m.row(i) {
                            trips.push((r * block_size + i, c * block_size + j, s * v));
                        }
                    }
                }
            }
        }
        Csr::from_triplets(nb * block_size, nb * block_size, &trips)
    }

    /// Restricts rows and columns to the index set `keep` (in the given order).
    pub fn restrict(&self, keep: &[usize]) -> Csr {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut trips = Vec::new();
        for (new_i, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    trips.push((new_i, map[j], v));
                }
            }
        }
        Csr::from_triplets(keep.len(), keep.len(), &trips).expect("restricted indices are in range")
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        (0..self.nrows).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol * scale))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }
}

/// Cholesky factor stored row-wise inside the lower envelope (skyline) of the matrix.
///
/// Fill-in is confined to the envelope, so lexicographic numbering of a uniform
/// mesh gives a banded factor of half-bandwidth about n.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &Csr) -> Result<EnvelopeCholesky> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch { expected: a.nrows, got: a.ncols });
        }
        let n = a.nrows;
        let mut first = vec![0usize; n];
        for i in 0..n {
            first[i] = a.row(i).map(|(j, _)| j).filter(|&j| j <= i).min().unwrap_or(i);
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    values[start[i] + j - first[i]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = values[start[i] + j - fi];
                let ri = &values[start[i] + lo - fi..start[i] + j - fi];
                let rj = &values[start[j] + lo - fj..start[j] + j - fj];
                s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                if j < i {
                    values[start[i] + j - fi] = s / values[start[j + 1] - 1];
                } else {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    values[start[i + 1] - 1] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { n, first, start, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1] - 1];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(l, v)| l * v).sum();
            x[i] = (x[i] - s) / self.values[self.start[i + 1] - 1];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            x[i] /= self.values[self.start[i + 1] - 1];
            let xi = x[i];
            let row = &self.values[self.start[i]..self.start[i + 1] - 1];
            for (l, v) in row.iter().zip(&mut x[fi..i]) {
                *v -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.len() });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Dense LU solve used as an independent oracle for small systems.
pub fn dense_solve(a: &Csr, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows != a.ncols || b.len() != a.nrows {
        return Err(Error::DimensionMismatch { expected: a.nrows, got: b.len() });
    }
    if a.nrows > 4000 {
        return Err(Error::Budget(format!("dense solve limited to 4000 unknowns, got {}", a.nrows)));
    }
    let d = a.to_dense();
    let rhs = DVector::from_column_slice(b);
    let x = d.clone().lu().solve(&rhs).ok_or(Error::Singular)?;
    let res = (&d * &x - &rhs).norm();
    let bn = rhs.norm();
    if bn > 0.0 && res > 1e-10 * bn {
        return Err(Error::Singular);
    }
    Ok(x.iter().copied().collect())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
