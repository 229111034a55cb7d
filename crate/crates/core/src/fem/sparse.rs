//! Symmetric sparse matrices in CSR form and a Jacobi-preconditioned
//! conjugate gradient solver.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sparse symmetric matrix. Both triangles are stored so matrix-vector
/// products are a plain CSR sweep; symmetry is exact because assembly emits
/// symmetric element contributions.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix<S> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<S>,
}

impl<S: Real> SparseSymMatrix<S> {
    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, S)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut entries: Vec<(usize, S)> = vec![(0, S::zero()); triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            entries[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..n {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = S::zero();
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSymMatrix {
            n,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[S], y: &mut [S]) {
        debug_assert_eq!(x.len(), self.n);
        for r in 0..self.n {
            let mut acc = S::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    /// u' * A * v.
    pub fn quadratic_form(&self, u: &[S], v: &[S]) -> S {
        let mut acc = S::zero();
        for r in 0..self.n {
            let mut row = S::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.vals[k] * v[self.col_idx[k]];
            }
            acc += u[r] * row;
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<S> {
        let mut d = vec![S::zero(); self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    d[r] = self.vals[k];
                }
            }
        }
        d
    }

    pub fn sum_entries(&self) -> S {
        self.vals.iter().copied().fold(S::zero(), |a, v| a + v)
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.vals[k]))
    }

    /// Eliminates Dirichlet rows/columns symmetrically: constrained rows get
    /// an identity row with `rhs = value`, and each free row's right-hand
    /// side absorbs `-a_ij * g_j` before the column entry is zeroed.
    pub fn apply_dirichlet(&mut self, rhs: &mut [S], constrained: &[Option<S>]) {
        debug_assert_eq!(constrained.len(), self.n);
        for r in 0..self.n {
            match constrained[r] {
                Some(g) => {
                    for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                        self.vals[k] = if self.col_idx[k] == r {
                            S::one()
                        } else {
                            S::zero()
                        };
                    }
                    rhs[r] = g;
                }
                None => {
                    for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                        let c = self.col_idx[k];
                        if let Some(g) = constrained[c] {
                            rhs[r] = rhs[r] - self.vals[k] * g;
                            self.vals[k] = S::zero();
                        }
                    }
                }
            }
        }
    }

    #[cfg(test)]
    pub fn max_asymmetry(&self) -> S {
        let mut worst = S::zero();
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let vt = self
                    .row(c)
                    .find(|&(cc, _)| cc == r)
                    .map(|(_, v)| v)
                    .unwrap_or_else(S::zero);
                worst = worst.max((self.vals[k] - vt).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct PcgSolution<S> {
    pub x: Vec<S>,
    pub iterations: usize,
    /// Final relative residual.
    pub residual: S,
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.
pub fn solve_pcg<S: Real>(
    a: &SparseSymMatrix<S>,
    b: &[S],
    x0: &[S],
    rel_tol: S,
    max_iter: usize,
) -> Result<PcgSolution<S>> {
    let n = a.dim();
    let norm_b = dot(b, b).sqrt();
    if norm_b == S::zero() {
        return Ok(PcgSolution {
            x: vec![S::zero(); n],
            iterations: 0,
            residual: S::zero(),
        });
    }
    let inv_diag: Vec<S> = a
        .diagonal()
        .into_iter()
        .map(|d| if d != S::zero() { d.recip() } else { S::one() })
        .collect();

    let mut x = x0.to_vec();
    let mut r = vec![S::zero(); n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<S> = (0..n).map(|i| r[i] * inv_diag[i]).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![S::zero(); n];

    let mut res = dot(&r, &r).sqrt() / norm_b;
    if res <= rel_tol {
        return Ok(PcgSolution {
            x,
            iterations: 0,
            residual: res,
        });
    }
    for it in 1..=max_iter {
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= S::zero() {
            return Err(Error::SolverDiverged {
                iterations: it,
                residual: res.to_f64().unwrap_or(f64::NAN),
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = dot(&r, &r).sqrt() / norm_b;
        if res <= rel_tol {
            return Ok(PcgSolution {
                x,
                iterations: it,
                residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: res.to_f64().unwrap_or(f64::NAN),
    })
}

pub(crate) fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
