//! Small sparse and banded kernels for the assembled Wentzell systems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-compressed sparse operator, stored as per-row `(column, value)` lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil<T> {
    pub n_cols: usize,
    pub rows: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> Stencil<T> {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self { n_cols, rows: vec![Vec::new(); n_rows] }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` to entry `(i, j)`, merging duplicates.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let row = &mut self.rows[i];
        match row.iter_mut().find(|(k, _)| *k == j) {
            Some(e) => e.1 += v,
            None => row.push((j, v)),
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.n_cols);
        self.rows
            .iter()
            .map(|row| row.iter().fold(T::zero(), |acc, &(j, v)| acc + v * x[j]))
            .collect()
    }

    pub fn apply_row(&self, i: usize, x: &[T]) -> T {
        self.rows[i].iter().fold(T::zero(), |acc, &(j, v)| acc + v * x[j])
    }
}

/// Symmetric banded matrix with half-bandwidth `p`.
///
/// Entry `(i, j)` with `i - p <= j <= i` lives at `data[i * (p + 1) + (i - j)]`.
#[derive(Clone, Debug)]
pub struct SymBand<T> {
    n: usize,
    p: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymBand<T> {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, data: vec![T::zero(); n * (p + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.p
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.p).then(|| i * (self.p + 1) + (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |k| self.data[k])
    }

    /// Adds `v` to the symmetric pair `(i, j)`, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band {}", self.p));
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.p);
            let row = &self.data[i * (self.p + 1)..(i + 1) * (self.p + 1)];
            y[i] += row[0] * x[i];
            for j in lo..i {
                let a = row[i - j];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }

    /// Band Cholesky factorization `A = L L^T`.
    pub fn cholesky(&self) -> Result<BandCholesky<T>> {
        let (n, p) = (self.n, self.p);
        let w = p + 1;
        let mut l = vec![T::zero(); n * w];
        for i in 0..n {
            let lo = i.saturating_sub(p);
            for j in lo..=i {
                let mut sum = self.data[i * w + (i - j)];
                for k in lo.max(j.saturating_sub(p))..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(sum > T::zero()) || !sum.is_finite() {
                        return Err(Error::Solve(format!(
                            "matrix not positive definite at pivot {i} (value {sum})"
                        )));
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandCholesky { n, p, l })
    }
}

#[derive(Clone, Debug)]
pub struct BandCholesky<T> {
    n: usize,
    p: usize,
    l: Vec<T>,
}

impl<T: Scalar> BandCholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let (n, p, w) = (self.n, self.p, self.p + 1);
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(p)..i {
                s -= self.l[i * w + (i - k)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + p + 1).min(n) {
                s -= self.l[k * w + (k - i)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        let n = 6;
        let mut a = SymBand::<f64>::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let b = a.matvec(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = SymBand::<f64>::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(0, 1, 2.0);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn stencil_merges_duplicates() {
        let mut s = Stencil::<f64>::new(1, 2);
        s.add(0, 1, 1.0);
        s.add(0, 1, 2.0);
        assert_eq!(s.rows[0], vec![(1, 3.0)]);
        assert_eq!(s.apply(&[5.0, 2.0]), vec![6.0]);
    }
}
