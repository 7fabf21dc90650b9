//! Thin wrapper around the sparse LU factorization used by every solver.

use faer::prelude::SpSolver;
use faer::sparse::SparseColMat;
use faer::Mat;

use crate::Error;

/// A square sparse matrix assembled from `(row, col, value)` triplets;
/// duplicate entries are summed.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    /// Matrix–vector product, used to measure residuals independently of the factorization.
    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(i, j, a) in &self.entries {
            out[i] += a * v[j];
        }
        out
    }

    pub fn transpose(&self) -> Triplets {
        Triplets { n: self.n, entries: self.entries.iter().map(|&(i, j, a)| (j, i, a)).collect() }
    }

    pub fn factorize(&self) -> Result<SparseLu, Error> {
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::LinearSolver(format!("{e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::LinearSolver(format!("{e:?}")))?;
        Ok(SparseLu { n: self.n, lu })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, Error> {
        self.factorize()?.solve(rhs)
    }
}

/// A sparse LU factorization that can be reused for several right-hand sides.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, Error> {
        assert_eq!(rhs.len(), self.n);
        let mut b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| b.read(i, 0)).collect();
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::LinearSolver("singular matrix (non-finite solution)".into()))
        }
    }
}

/// Estimate of the smallest singular value of a square sparse matrix by
/// inverse power iteration on `AᵀA`, using LU factors of `A` and `Aᵀ`.
pub fn smallest_singular_value(a: &Triplets) -> Result<f64, Error> {
    let lu = a.factorize()?;
    let lut = a.transpose().factorize()?;
    let n = a.n;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0).collect();
    let mut sigma = f64::NAN;
    for _ in 0..50 {
        let nv = norm2(&v);
        v.iter_mut().for_each(|c| *c /= nv);
        let z = lu.solve(&lut.solve(&v)?)?;
        let next = 1.0 / norm2(&z).sqrt();
        if (next - sigma).abs() <= 1e-6 * next {
            return Ok(next);
        }
        sigma = next;
        v = z;
    }
    Ok(sigma)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Weights `w_k` such that `Σ w_k f(s_k)` approximates the `order`-th derivative
/// of `f` at `s0` exactly for polynomials of degree `< nodes.len()` (Fornberg's recursion).
pub fn fd_weights(s0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let m = order;
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - s0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - s0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system_with_duplicates() {
        let mut t = Triplets::new(3);
        t.push(0, 0, 2.0);
        t.push(0, 0, 2.0);
        t.push(0, 1, 1.0);
        t.push(1, 1, 3.0);
        t.push(2, 0, 1.0);
        t.push(2, 2, 5.0);
        let x = t.solve(&[6.0, 3.0, 6.0]).unwrap();
        let r = t.mul(&x);
        for (a, b) in r.iter().zip([6.0, 3.0, 6.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((x[0] - 1.25).abs() < 1e-14);
    }

    #[test]
    fn singular_system_is_reported() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(1, 0, 1.0);
        assert!(t.solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn fornberg_weights() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14 && (w[2] - 1.0).abs() < 1e-14);
        let nodes = [-0.3, 0.0, 0.2, 0.5, 0.9];
        let w = fd_weights(0.1, &nodes, 1);
        let d: f64 = nodes.iter().zip(&w).map(|(s, w)| w * s.powi(4)).sum();
        assert!((d - 4.0 * 0.1f64.powi(3)).abs() < 1e-12);
    }
}
