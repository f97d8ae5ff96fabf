//! Thin wrappers over the faer sparse direct solvers.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use num_complex::Complex64;

use crate::{Error, Result};

/// Coordinate-format matrix; duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct Coo<T> {
    pub n: usize,
    pub entries: Vec<(usize, usize, T)>,
}

impl<T: Copy + std::ops::AddAssign + std::ops::Mul<Output = T> + Default> Coo<T> {
    pub fn new(n: usize) -> Self {
        Coo {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        self.entries.push((i, j, v));
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::default(); self.n];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }
}

/// Sparse Cholesky solve of a symmetric positive definite system for several
/// right-hand sides. Only the lower triangle of `a` is read.
pub fn solve_spd(a: &Coo<f64>, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let triplets: Vec<Triplet<usize, usize, f64>> = a
        .entries
        .iter()
        .filter(|e| e.0 >= e.1)
        .map(|&(i, j, v)| Triplet::new(i, j, v))
        .collect();
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &triplets)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let llt = m
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let mut b = Mat::<f64>::zeros(a.n, rhs.len());
    for (c, r) in rhs.iter().enumerate() {
        for (i, v) in r.iter().enumerate() {
            b[(i, c)] = *v;
        }
    }
    let x = llt.solve(&b);
    Ok((0..rhs.len())
        .map(|c| (0..a.n).map(|i| x[(i, c)]).collect())
        .collect())
}

/// Sparse LU solve of a general complex system.
pub fn solve_complex(a: &Coo<Complex64>, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let triplets: Vec<Triplet<usize, usize, Complex64>> =
        a.entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    let m = SparseColMat::<usize, Complex64>::try_new_from_triplets(a.n, a.n, &triplets)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    drop(triplets);
    let lu = m.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let mut b = Mat::<Complex64>::zeros(a.n, 1);
    for (i, v) in rhs.iter().enumerate() {
        b[(i, 0)] = *v;
    }
    let x = lu.solve(&b);
    Ok((0..a.n).map(|i| x[(i, 0)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut a = Coo::new(2);
        a.push(0, 0, 1.0);
        a.push(0, 0, 1.0);
        a.push(1, 1, 4.0);
        a.push(1, 0, 1.0);
        a.push(0, 1, 1.0);
        let x = solve_spd(&a, &[vec![3.0, 5.0]]).unwrap();
        let y = a.matvec(&x[0]);
        assert!((y[0] - 3.0).abs() < 1e-14 && (y[1] - 5.0).abs() < 1e-14);

        let mut c = Coo::new(2);
        for &(i, j, v) in &a.entries {
            c.push(i, j, Complex64::new(v, 0.5 * v));
        }
        let rhs = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let z = solve_complex(&c, &rhs).unwrap();
        let r = c.matvec(&z);
        assert!((r[0] - rhs[0]).norm() < 1e-14 && (r[1] - rhs[1]).norm() < 1e-14);
    }
}
