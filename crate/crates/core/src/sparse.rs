//! Compressed sparse row storage and the small set of kernels the solvers and
//! bounds are built from: products, weighted l1 norms, weighted column sums,
//! comparison matrices and column dominance slacks.

use serde::{Deserialize, Serialize};
use num_rational::BigRational;

use crate::error::{Error, Result};

/// Real CSR matrix. Column indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidStructure("row_offsets must start at 0".into()));
        }
        if col_indices.len() != values.len() || *row_offsets.last().unwrap() != values.len() {
            return Err(Error::InvalidStructure(
                "row_offsets, col_indices and values disagree on the number of entries".into(),
            ));
        }
        for row in 0..n_rows {
            let (start, end) = (row_offsets[row], row_offsets[row + 1]);
            if end < start {
                return Err(Error::InvalidStructure(format!(
                    "row_offsets decreases at row {row}"
                )));
            }
            let cols = &col_indices[start..end];
            for (k, &c) in cols.iter().enumerate() {
                if c >= n_cols {
                    return Err(Error::InvalidStructure(format!(
                        "column index {c} out of range in row {row}"
                    )));
                }
                if k > 0 && cols[k - 1] >= c {
                    return Err(Error::InvalidStructure(format!(
                        "column indices in row {row} are not strictly increasing"
                    )));
                }
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {v}")));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assembles from (row, col, value) triplets. Duplicate coordinates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidStructure(format!(
                    "entry ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Dense row-major input; exact zeros are dropped except on the diagonal.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 || i == j {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
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

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    /// Iterates `(row, col, value)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub(crate) fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.n_rows)
        } else {
            Err(Error::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            })
        }
    }

    /// The diagonal, failing if any entry is missing or zero.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        let n = self.require_square()?;
        (0..n)
            .map(|i| {
                let d = self.get(i, i);
                if d == 0.0 {
                    Err(Error::MissingDiagonal { row: i })
                } else {
                    Ok(d)
                }
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Rows are visited in increasing order, so each transposed row comes out sorted.
        for (i, j, v) in self.iter() {
            let slot = next[j];
            col_indices[slot] = i;
            values[slot] = v;
            next[j] += 1;
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Entrywise absolute value, same pattern.
    pub fn abs(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.abs());
        out
    }

    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                out.values[k] = f(i, self.col_indices[k], self.values[k]);
            }
        }
        out
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Structural and numerical symmetry up to `tol` (absolute).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        self.iter().all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol)
    }

    pub fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `y = A x` without dimension checks.
    #[inline]
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `y = A^T x` without materializing the transpose.
    pub fn mul_transpose_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n_rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, j, v) in self.iter() {
            out[i][j] = v;
        }
        out
    }
}

/// Strictly positive weights `u` defining `||x||_{1,u} = sum_j u_j |x_j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "weight {i} is {v}, weights must be positive and finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

impl std::ops::Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `A x`, accumulated row by row in column-index order.
pub fn matvec(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len(a.n_cols(), x.len())?;
    let mut y = vec![0.0; a.n_rows()];
    a.mul_vec_into(x, &mut y);
    Ok(y)
}

pub fn weighted_l1_norm(x: &[f64], u: &WeightVector) -> Result<f64> {
    check_len(u.len(), x.len())?;
    Ok(weighted_l1_unchecked(x, u))
}

#[inline]
pub(crate) fn weighted_l1_unchecked(x: &[f64], u: &[f64]) -> f64 {
    x.iter().zip(u).map(|(xi, ui)| ui * xi.abs()).sum()
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `rho_j = (1/u_j) sum_i u_i |h_ij|`, accumulated in one pass over the rows.
/// The maximum over `j` is the operator norm induced by `||.||_{1,u}`.
pub fn weighted_column_sums(h: &SparseMatrix, u: &WeightVector) -> Result<Vec<f64>> {
    let n = h.require_square()?;
    check_len(n, u.len())?;
    let mut sums = vec![0.0; n];
    for (i, j, v) in h.iter() {
        sums[j] += u[i] * v.abs();
    }
    for (s, uj) in sums.iter_mut().zip(u.iter()) {
        *s /= uj;
    }
    Ok(sums)
}

/// `<A>`: `|a_ii|` on the diagonal, `-|a_ij|` elsewhere.
pub fn comparison_matrix(a: &SparseMatrix) -> Result<SparseMatrix> {
    a.diagonal()?;
    Ok(a.map_values(|i, j, v| if i == j { v.abs() } else { -v.abs() }))
}

/// Per-column slack `s_j = u_j |a_jj| - sum_{i != j} u_i |a_ij|`. All entries are
/// positive exactly when `u^T <A> > 0`, i.e. `u` certifies column dominance.
pub fn column_dominance_slack(a: &SparseMatrix, u: &WeightVector) -> Result<Vec<f64>> {
    let n = a.require_square()?;
    check_len(n, u.len())?;
    let mut slack = vec![0.0; n];
    for (i, j, v) in a.iter() {
        if i == j {
            slack[j] += u[i] * v.abs();
        } else {
            slack[j] -= u[i] * v.abs();
        }
    }
    Ok(slack)
}

/// Outcome of [`mean_inequality_check`]: `min_i g_i a_i <= mid <= max_i g_i a_i`
/// where `mid` is the harmonic mean of `a` times the arithmetic mean of `g`.
///
/// The floating-point fields are rounded; `sorted` is decided in exact rational
/// arithmetic on the given `f64` inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanTriple {
    pub min: f64,
    pub mid: f64,
    pub max: f64,
    pub harmonic_mean: f64,
    pub arithmetic_mean: f64,
    pub sorted: bool,
}

impl MeanTriple {
    pub fn is_sorted(&self) -> bool {
        self.sorted
    }
}

/// `min(g a) * sum(1/a) <= sum(g) <= max(g a) * sum(1/a)`, exactly.
fn mean_triple_sorted_exact(a: &[f64], g: &[f64]) -> bool {
    let q = |v: f64| BigRational::from_float(v).expect("finite input");
    let qa: Vec<BigRational> = a.iter().map(|&v| q(v)).collect();
    let qg: Vec<BigRational> = g.iter().map(|&v| q(v)).collect();
    let products: Vec<BigRational> = qa.iter().zip(&qg).map(|(x, y)| x * y).collect();
    let lo = products.iter().min().expect("nonempty");
    let hi = products.iter().max().expect("nonempty");
    let inv_sum = qa.iter().fold(q(0.0), |s, x| s + x.recip());
    let g_sum = qg.iter().fold(q(0.0), |s, x| s + x);
    lo * &inv_sum <= g_sum && g_sum <= hi * &inv_sum
}

pub fn mean_inequality_check(a: &[f64], g: &[f64]) -> Result<MeanTriple> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    check_len(a.len(), g.len())?;
    if let Some(v) = a.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("a contains nonpositive entry {v}")));
    }
    if let Some(v) = g.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("g contains negative entry {v}")));
    }
    let n = a.len() as f64;
    let harmonic_mean = n / a.iter().map(|v| 1.0 / v).sum::<f64>();
    let arithmetic_mean = g.iter().sum::<f64>() / n;
    let products = a.iter().zip(g).map(|(ai, gi)| ai * gi);
    let (min, max) = products.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p), hi.max(p))
    });
    // alpha * gamma = sum(g) / sum(1/a), evaluated with a single division.
    let mid = g.iter().sum::<f64>() / a.iter().map(|v| 1.0 / v).sum::<f64>();
    Ok(MeanTriple {
        min,
        mid,
        max,
        sorted: mean_triple_sorted_exact(a, g),
        harmonic_mean,
        arithmetic_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn w(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(SparseMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(SparseMatrix::new(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 2.0]).is_err());
        assert!(SparseMatrix::new(1, 2, vec![0, 2], vec![1, 1], vec![1.0, 2.0]).is_err());
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::new(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, 2, &[(1, 0, 1.0), (0, 0, 2.0), (1, 0, 3.0)])
            .unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 0), 2.0);
    }

    #[test]
    fn matvec_examples() {
        let i3 = SparseMatrix::identity(3);
        assert_eq!(matvec(&i3, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let z = SparseMatrix::zeros(3, 3);
        assert_eq!(matvec(&z, &[4.0, -1.0, 7.0]).unwrap(), vec![0.0; 3]);
        let a = dense(&[&[2.0, -1.0], &[-1.0, 2.0]]);
        assert_eq!(matvec(&a, &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(
            matvec(&a, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn weighted_norm_examples() {
        assert_eq!(weighted_l1_norm(&[1.0, -2.0, 3.0], &w(&[1.0, 1.0, 1.0])).unwrap(), 6.0);
        assert_eq!(weighted_l1_norm(&[0.5, 1.0], &w(&[2.0, 1.0])).unwrap(), 2.0);
        assert_eq!(weighted_l1_norm(&[1.0, 1.0, 1.0], &w(&[1.0, 2.0, 3.0])).unwrap(), 6.0);
        assert!(weighted_l1_norm(&[1.0], &w(&[1.0, 2.0])).is_err());
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn column_sum_examples() {
        let h = dense(&[&[0.0, 0.5], &[0.5, 0.0]]);
        assert_eq!(weighted_column_sums(&h, &w(&[1.0, 1.0])).unwrap(), vec![0.5, 0.5]);
        let z = SparseMatrix::zeros(2, 2);
        assert_eq!(weighted_column_sums(&z, &w(&[1.0, 3.0])).unwrap(), vec![0.0, 0.0]);

        // Direct summation: rho_1 = (1/1)(0.8*2), rho_2 = (1/2)(0.2*1).
        let h = dense(&[&[0.0, 0.2], &[0.8, 0.0]]);
        let rho = weighted_column_sums(&h, &w(&[1.0, 2.0])).unwrap();
        assert_relative_eq!(rho[0], 1.6, epsilon = 1e-15);
        assert_relative_eq!(rho[1], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn comparison_matrix_examples() {
        let a = dense(&[&[2.0, -1.0], &[1.0, 3.0]]);
        assert_eq!(comparison_matrix(&a).unwrap().to_dense(), vec![vec![2.0, -1.0], vec![-1.0, 3.0]]);
        let m = dense(&[&[2.0, -1.0], &[-1.0, 3.0]]);
        assert_eq!(comparison_matrix(&m).unwrap(), m);
        let a = dense(&[&[-4.0, 2.0], &[-1.0, 5.0]]);
        assert_eq!(comparison_matrix(&a).unwrap().to_dense(), vec![vec![4.0, -2.0], vec![-1.0, 5.0]]);

        let no_diag = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(comparison_matrix(&no_diag), Err(Error::MissingDiagonal { row: 0 })));
    }

    #[test]
    fn dominance_slack_examples() {
        let a = dense(&[&[2.0, -1.0], &[-1.0, 2.0]]);
        assert_eq!(column_dominance_slack(&a, &w(&[1.0, 1.0])).unwrap(), vec![1.0, 1.0]);
        let a = dense(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        assert_eq!(column_dominance_slack(&a, &w(&[1.0, 1.0])).unwrap(), vec![0.0, 0.0]);
        // s_1 = 1*4 - 2*2 = 0, s_2 = 2*3 - 1*1 = 5.
        let a = dense(&[&[4.0, -1.0], &[-2.0, 3.0]]);
        assert_eq!(column_dominance_slack(&a, &w(&[1.0, 2.0])).unwrap(), vec![0.0, 5.0]);
    }

    #[test]
    fn mean_inequality_examples() {
        let t = mean_inequality_check(&[1.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!((t.min, t.mid, t.max), (1.0, 2.0, 3.0));
        let t = mean_inequality_check(&[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((t.min, t.mid, t.max), (2.0, 2.0, 2.0));
        // harmonic mean 2/(1 + 1/2) = 4/3, arithmetic mean 2.5, products (4, 2).
        let t = mean_inequality_check(&[1.0, 2.0], &[4.0, 1.0]).unwrap();
        assert_relative_eq!(t.harmonic_mean, 4.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(t.arithmetic_mean, 2.5, epsilon = 1e-15);
        assert_relative_eq!(t.mid, 10.0 / 3.0, epsilon = 1e-15);
        assert_eq!((t.min, t.max), (2.0, 4.0));

        assert!(mean_inequality_check(&[], &[]).is_err());
        assert!(mean_inequality_check(&[0.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(mean_inequality_check(&[1.0, 1.0], &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn transpose_matches_dense() {
        let a = dense(&[&[1.0, 0.0, 2.0], &[0.0, 3.0, 0.0], &[4.0, 5.0, 6.0]]);
        let t = a.transpose();
        let d = a.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.get(i, j), d[j][i]);
            }
        }
        let x = [1.0, -2.0, 0.5];
        let mut y1 = vec![0.0; 3];
        let mut y2 = vec![0.0; 3];
        a.mul_transpose_vec_into(&x, &mut y1);
        t.mul_vec_into(&x, &mut y2);
        assert_eq!(y1, y2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sparse_square(n: usize) -> impl Strategy<Value = SparseMatrix> {
            proptest::collection::vec((0..n, 0..n, -3.0f64..3.0), 0..(3 * n)).prop_map(
                move |t| SparseMatrix::from_triplets(n, n, &t).unwrap(),
            )
        }

        proptest! {
            #[test]
            fn norm_homogeneous_and_subadditive(
                x in proptest::collection::vec(-10.0f64..10.0, 6),
                y in proptest::collection::vec(-10.0f64..10.0, 6),
                u in proptest::collection::vec(0.01f64..5.0, 6),
                c in -4.0f64..4.0,
            ) {
                let u = WeightVector::new(u).unwrap();
                let nx = weighted_l1_norm(&x, &u).unwrap();
                let ny = weighted_l1_norm(&y, &u).unwrap();
                let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
                let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                prop_assert!((weighted_l1_norm(&cx, &u).unwrap() - c.abs() * nx).abs() <= 1e-12 * (1.0 + nx));
                prop_assert!(weighted_l1_norm(&sum, &u).unwrap() <= nx + ny + 1e-12);
            }

            #[test]
            fn column_sum_norm_bounds_matvec(
                h in sparse_square(5),
                x in proptest::collection::vec(-10.0f64..10.0, 5),
                u in proptest::collection::vec(0.1f64..3.0, 5),
            ) {
                let u = WeightVector::new(u).unwrap();
                let rho = weighted_column_sums(&h, &u).unwrap();
                let op = rho.iter().cloned().fold(0.0, f64::max);
                let hx = matvec(&h, &x).unwrap();
                let lhs = weighted_l1_norm(&hx, &u).unwrap();
                let rhs = op * weighted_l1_norm(&x, &u).unwrap();
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
            }

            #[test]
            fn comparison_matrix_idempotent(h in sparse_square(4), d in proptest::collection::vec(0.5f64..3.0, 4)) {
                let mut t: Vec<(usize, usize, f64)> = h.iter().filter(|(i, j, _)| i != j).collect();
                t.extend(d.iter().enumerate().map(|(i, &v)| (i, i, -v)));
                let a = SparseMatrix::from_triplets(4, 4, &t).unwrap();
                let once = comparison_matrix(&a).unwrap();
                prop_assert_eq!(comparison_matrix(&once).unwrap(), once);
            }

            #[test]
            fn mean_triple_sorted(
                pairs in proptest::collection::vec((1e-3f64..1e3, 0.0f64..1e3), 1..20)
            ) {
                let (a, g): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                prop_assert!(mean_inequality_check(&a, &g).unwrap().is_sorted());
            }
        }
    }
}
