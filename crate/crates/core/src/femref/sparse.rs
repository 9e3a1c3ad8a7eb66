use std::io::{self, Write};

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate entries. The result does not depend on triplet order
    /// beyond the order in which duplicates are added.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::Dimension {
                expected: n,
                got: i.max(j) + 1,
            });
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// Largest `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Zeroes the rows and columns flagged in `boundary`, leaving `diag` on
    /// their diagonal.
    pub(crate) fn pin(&mut self, boundary: &[bool], diag: f64) {
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if boundary[i] || boundary[j] {
                    self.values[k] = if i == j { diag } else { 0.0 };
                }
            }
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Coordinate text format: a `rows cols nnz` header, then one
    /// `row col value` line per stored entry (zero-based).
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Square band matrix with equal lower and upper half-bandwidth, factorized
/// in place without pivoting.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    b: usize,
    data: Vec<f64>,
}

impl BandLu {
    /// `a + c·b` restricted to the band of the wider operand.
    pub fn combine(a: &SparseMatrix, b: &SparseMatrix, c: f64) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Dimension {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        let (n, bw) = (a.dim(), a.bandwidth().max(b.bandwidth()));
        let mut band = Self {
            n,
            b: bw,
            data: vec![0.0; n * (2 * bw + 1)],
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                *band.at(i, j) += v;
            }
            for (j, v) in b.row(i) {
                *band.at(i, j) += c * v;
            }
        }
        Ok(band)
    }

    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * (2 * self.b + 1) + j + self.b - i]
    }

    /// Doolittle factorization; fails on a pivot below `1e-13` of the
    /// largest entry.
    pub fn factorize(mut self) -> std::result::Result<Self, String> {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(scale.is_finite() && scale > 0.0) {
            return Err(format!("matrix has largest entry {scale}"));
        }
        let w = 2 * self.b + 1;
        for k in 0..self.n {
            let pivot = self.data[k * w + self.b];
            if !(pivot.abs() > 1e-13 * scale) {
                return Err(format!("pivot {pivot:e} in row {k}"));
            }
            let end = (k + self.b + 1).min(self.n);
            for i in k + 1..end {
                let ik = i * w + k + self.b - i;
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..end {
                    let kj = self.data[k * w + j + self.b - k];
                    self.data[i * w + j + self.b - i] -= l * kj;
                }
            }
        }
        Ok(self)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = 2 * self.b + 1;
        for i in 0..self.n {
            let start = i.saturating_sub(self.b);
            let mut s = x[i];
            for j in start..i {
                s -= self.data[i * w + j + self.b - i] * x[j];
            }
            x[i] = s;
        }
        for i in (0..self.n).rev() {
            let end = (i + self.b + 1).min(self.n);
            let mut s = x[i];
            for j in i + 1..end {
                s -= self.data[i * w + j + self.b - i] * x[j];
            }
            x[i] = s / self.data[i * w + self.b];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m =
            SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 1, 2.0), (0, 1, 0.5)]).unwrap();
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.nnz(), 2);
        assert!(SparseMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn band_solve_matches_dense() {
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + i as f64 * 0.1));
            for d in 1..=3 {
                if i + d < n {
                    t.push((i, i + d, -0.3 / d as f64));
                    t.push((i + d, i, -0.2 / d as f64));
                }
            }
        }
        let a = SparseMatrix::from_triplets(n, t).unwrap();
        let zero = SparseMatrix::from_triplets(n, Vec::new()).unwrap();
        let lu = BandLu::combine(&a, &zero, 1.0)
            .unwrap()
            .factorize()
            .unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = rhs.clone();
        lu.solve_in_place(&mut x);
        let mut back = vec![0.0; n];
        a.mul_vec(&x, &mut back);
        for (u, v) in back.iter().zip(&rhs) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let zero = SparseMatrix::from_triplets(2, Vec::new()).unwrap();
        assert!(BandLu::combine(&a, &zero, 1.0)
            .unwrap()
            .factorize()
            .is_err());
    }
}
