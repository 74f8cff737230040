//! Dense symmetric linear algebra for small channel counts.

use crate::num::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Sample covariance (mean removed, divided by `samples`) of channel rows.
    pub fn covariance(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let len = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(n);
        if len == 0 {
            return m;
        }
        let count = T::from_len(len);
        let centered: Vec<Vec<T>> = rows
            .iter()
            .map(|r| {
                let mu = r.iter().copied().sum::<T>() / count;
                r.iter().map(|&v| v - mu).collect()
            })
            .collect();
        for i in 0..n {
            for j in i..n {
                let c = centered[i].iter().zip(&centered[j]).map(|(&a, &b)| a * b).sum::<T>() / count;
                m[(i, j)] = c;
                m[(j, i)] = c;
            }
        }
        m
    }

    pub fn add_scaled(&self, other: &Self, k: T) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + k * b).collect();
        Self { n: self.n, data }
    }

    pub fn scale(&self, k: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&a| a * k).collect() }
    }

    /// Lower Cholesky factor, or `None` unless strictly positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return None;
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Some(l)
    }

    /// Solve `L x = b` for lower-triangular `self`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        for i in 0..self.n {
            let mut s = b[i];
            for k in 0..i {
                s = s - self[(i, k)] * x[k];
            }
            x[i] = s / self[(i, i)];
        }
        x
    }

    /// Solve `L^T x = b` for lower-triangular `self`.
    pub fn solve_lower_transpose(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..self.n {
                s = s - self[(k, i)] * x[k];
            }
            x[i] = s / self[(i, i)];
        }
        x
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues in descending order with unit eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> (Vec<T>, Self) {
        let n = self.n;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let off: T = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|ij| a[ij] * a[ij]).sum();
            let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
            if off <= eps * eps * diag || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let mut vectors = Self::zeros(n);
        for (col, &i) in order.iter().enumerate() {
            for r in 0..n {
                vectors[(r, col)] = v[(r, i)];
            }
        }
        (values, vectors)
    }
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize, seed: u64) -> SquareMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..200).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        SquareMatrix::covariance(&rows)
    }

    #[test]
    fn eigen_reconstructs() {
        let m = random_spd(5, 1);
        let (vals, vecs) = m.symmetric_eigen();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        for (j, &lambda) in vals.iter().enumerate() {
            let v = vecs.column(j);
            let mv = m.mul_vec(&v);
            for i in 0..5 {
                assert!((mv[i] - lambda * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_solves() {
        let m = random_spd(4, 2);
        let l = m.cholesky().unwrap();
        let b = [1.0, -2.0, 0.5, 3.0];
        let y = l.solve_lower(&b);
        let x = l.solve_lower_transpose(&y);
        let back = m.mul_vec(&x);
        for i in 0..4 {
            assert!((back[i] - b[i]).abs() < 1e-10);
        }
        assert!(SquareMatrix::<f64>::zeros(3).cholesky().is_none());
    }
}
