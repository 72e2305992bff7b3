//! Splittings `A = M - N` and single-component relaxation.
//!
//! Only the relaxed Jacobi splitting `M = D/omega` ships. Its iteration matrix is
//! `H_omega = (1 - omega) I + omega D^{-1} B` with `A = D - B`, and relaxing
//! component `i` is `x <- x + omega (r_i / a_ii) e_i`. Residuals are maintained
//! incrementally through a cached column index of `A`, so one relaxation costs
//! `O(nnz(column i))`.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Number of relaxations (in units of `n`) between full residual recomputations.
pub const RESYNC_PERIOD_SWEEPS: usize = 10;

/// Interface the relaxation drivers are written against.
pub trait Splitting {
    fn dim(&self) -> usize;

    fn matrix(&self) -> &SparseMatrix;

    /// Row `i` of the iteration matrix `H = M^{-1} N` as `(column, value)` pairs.
    fn iteration_row(&self, i: usize) -> Result<Vec<(usize, f64)>>;

    /// Relaxes component `i`, updating `x`, `r` and `r_hat` in place.
    fn relax(&self, v: &mut IterationVectors, b: &[f64], i: usize);

    /// Recomputes `r` and `r_hat` from `x`.
    fn resync(&self, v: &mut IterationVectors, b: &[f64]);
}

/// Iterate together with its residual `r = b - A x` and preconditioned residual
/// `r_hat = D^{-1} r`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationVectors {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub r_hat: Vec<f64>,
    since_resync: usize,
}

impl IterationVectors {
    pub fn new<S: Splitting + ?Sized>(s: &S, b: &[f64], x0: &[f64]) -> Result<Self> {
        let n = s.dim();
        for len in [b.len(), x0.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        let mut v = Self {
            x: x0.to_vec(),
            r: vec![0.0; n],
            r_hat: vec![0.0; n],
            since_resync: 0,
        };
        s.resync(&mut v, b);
        Ok(v)
    }

    /// Relaxations since `r` was last recomputed from `x`.
    pub(crate) fn since_resync(&self) -> usize {
        self.since_resync
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.r).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct JacobiSplitting<'a> {
    a: &'a SparseMatrix,
    columns: SparseMatrix,
    diag: Vec<f64>,
    omega: f64,
}

impl<'a> JacobiSplitting<'a> {
    pub fn new(a: &'a SparseMatrix, omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::InvalidArgument(format!("omega = {omega}")));
        }
        let diag = a.diagonal()?;
        Ok(Self {
            a,
            columns: a.transpose(),
            diag,
            omega,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Materializes `H_omega`; used by the bound and Perron computations.
    pub fn iteration_matrix(&self) -> SparseMatrix {
        let n = self.diag.len();
        let mut triplets = Vec::with_capacity(self.a.nnz() + n);
        for i in 0..n {
            triplets.push((i, i, 1.0 - self.omega));
            let (cols, vals) = self.a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i {
                    triplets.push((i, j, -self.omega * v / self.diag[i]));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, &triplets).expect("pattern of A is valid")
    }

    /// Checked single relaxation.
    pub fn relax_component(&self, v: &mut IterationVectors, b: &[f64], i: usize) -> Result<()> {
        let n = self.dim();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        if v.x.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.x.len().min(b.len()) });
        }
        self.relax(v, b, i);
        Ok(())
    }

    /// Exact decrease of `||x - x*||_A^2` when component `i` with residual `r_i` is
    /// relaxed: `omega (2 - omega) |r_i|^2 / a_ii`.
    pub fn energy_error_sq_drop(&self, r_i: f64, i: usize) -> Result<f64> {
        let n = self.dim();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        let a_ii = self.diag[i];
        if a_ii <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry a[{i}][{i}] = {a_ii} is not positive"
            )));
        }
        Ok(self.omega * (2.0 - self.omega) * r_i * r_i / a_ii)
    }

    /// Relaxes components `0..n` in natural order. For `omega = 1` this is one
    /// Gauss-Seidel iteration `x <- (D - L)^{-1} (U x + b)`.
    pub fn cyclic_sweep(&self, v: &mut IterationVectors, b: &[f64]) -> Result<()> {
        for i in 0..self.dim() {
            self.relax_component(v, b, i)?;
        }
        Ok(())
    }
}

impl Splitting for JacobiSplitting<'_> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn matrix(&self) -> &SparseMatrix {
        self.a
    }

    fn iteration_row(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        let n = self.dim();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        let (cols, vals) = self.a.row(i);
        let mut row = Vec::with_capacity(cols.len());
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                row.push((j, 1.0 - self.omega));
            } else {
                row.push((j, -self.omega * v / self.diag[i]));
            }
        }
        Ok(row)
    }

    #[inline]
    fn relax(&self, v: &mut IterationVectors, b: &[f64], i: usize) {
        let r_i = v.r[i];
        if r_i != 0.0 {
            let delta = self.omega * r_i / self.diag[i];
            v.x[i] += delta;
            let (rows, vals) = self.columns.row(i);
            for (&l, &a_li) in rows.iter().zip(vals) {
                v.r[l] -= delta * a_li;
                v.r_hat[l] = v.r[l] / self.diag[l];
            }
        }
        v.since_resync += 1;
        if v.since_resync >= RESYNC_PERIOD_SWEEPS * self.dim() {
            self.resync(v, b);
        }
    }

    fn resync(&self, v: &mut IterationVectors, b: &[f64]) {
        self.a.mul_vec_into(&v.x, &mut v.r);
        for ((r, bi), (rh, d)) in v.r.iter_mut().zip(b).zip(v.r_hat.iter_mut().zip(&self.diag)) {
            *r = bi - *r;
            *rh = *r / d;
        }
        v.since_resync = 0;
    }
}
