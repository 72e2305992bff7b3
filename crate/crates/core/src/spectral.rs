//! Perron vectors of nonnegative matrices, H-matrix certificates, and extremal
//! eigenvalue / singular value estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{column_dominance_slack, l2_norm, SparseMatrix, WeightVector};

pub const DEFAULT_PERRON_TOL: f64 = 1e-12;
pub const DEFAULT_PERRON_MAX_ITER: usize = 50_000;
pub const DEFAULT_EIG_TOL: f64 = 1e-8;
pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// Spectral radius estimate and left Perron vector of a nonnegative matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronResult {
    pub rho: f64,
    /// Normalized to maximum entry 1.
    pub w: Vec<f64>,
    /// `||w^T H - rho w^T||_inf` for the matrix the iteration ran on.
    pub residual: f64,
    pub iterations: usize,
    /// Size of the all-ones perturbation used (0 for the unperturbed iteration).
    pub delta: f64,
}

impl PerronResult {
    pub fn weights(&self) -> Result<WeightVector> {
        WeightVector::new(self.w.clone())
    }
}

/// `y = (H + delta E)^T w` with `E` the all-ones matrix, applied as a rank-one update.
fn perturbed_transpose_action(h: &SparseMatrix, delta: f64, w: &[f64], y: &mut [f64]) {
    h.mul_transpose_vec_into(w, y);
    if delta != 0.0 {
        let s: f64 = delta * w.iter().sum::<f64>();
        y.iter_mut().for_each(|v| *v += s);
    }
}

fn max_entry(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Power iteration for the left Perron pair of `H + delta E`.
///
/// Iterates on the shifted operator `(H + delta E)^T + theta I`, `theta` the largest
/// column sum. The shift leaves eigenvectors unchanged and moves every other
/// eigenvalue on the spectral circle strictly inside, so periodic (e.g. bipartite)
/// irreducible matrices converge instead of oscillating.
fn perron_power(
    h: &SparseMatrix,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<PerronResult, PerronResult> {
    let n = h.n_rows();
    let mut w = vec![1.0; n];
    let mut hw = vec![0.0; n];
    perturbed_transpose_action(h, delta, &w, &mut hw);
    let theta = max_entry(&hw);

    let mut best = PerronResult {
        rho: 0.0,
        w: w.clone(),
        residual: f64::INFINITY,
        iterations: 0,
        delta,
    };
    if n == 0 {
        best.residual = 0.0;
        return Ok(best);
    }

    for it in 1..=max_iter {
        // hw holds (H + delta E)^T w for the current, max-normalized w.
        let ww: f64 = w.iter().map(|v| v * v).sum();
        let rho = w.iter().zip(&hw).map(|(a, b)| a * b).sum::<f64>() / ww;
        let residual = w
            .iter()
            .zip(&hw)
            .map(|(a, b)| (b - rho * a).abs())
            .fold(0.0, f64::max);
        if residual < best.residual {
            best = PerronResult {
                rho,
                w: w.clone(),
                residual,
                iterations: it - 1,
                delta,
            };
        }
        if residual <= tol {
            return Ok(best);
        }

        for (wi, hi) in w.iter_mut().zip(&hw) {
            *wi = hi + theta * *wi;
        }
        let m = max_entry(&w);
        if !(m > 0.0 && m.is_finite()) {
            break;
        }
        w.iter_mut().for_each(|v| *v /= m);
        perturbed_transpose_action(h, delta, &w, &mut hw);
        best.iterations = it;
    }
    best.iterations = max_iter;
    Err(best)
}

fn validate_nonnegative_square(h: &SparseMatrix) -> Result<()> {
    h.require_square()?;
    if !h.is_nonnegative() {
        return Err(Error::InvalidArgument(
            "Perron iteration needs a nonnegative matrix".into(),
        ));
    }
    Ok(())
}

/// Left Perron vector `w > 0` with `w^T |H| = rho w^T` for an irreducible `|H|`.
///
/// Succeeds when the residual `||w^T |H| - rho w^T||_inf` drops to `tol`; otherwise
/// returns [`Error::PerronNotConverged`] carrying the best iterate.
pub fn left_perron_vector(h_abs: &SparseMatrix, tol: f64, max_iter: usize) -> Result<PerronResult> {
    validate_nonnegative_square(h_abs)?;
    perron_power(h_abs, 0.0, tol, max_iter).map_err(|r| Error::PerronNotConverged(Box::new(r)))
}

/// Positive `w_eps` with `w_eps^T |H| <= (rho(|H|) + eps) w_eps^T` for any nonnegative
/// `|H|`, reducible or not.
///
/// `w_eps` is the Perron vector of the irreducible `|H| + delta E`. Starting from
/// `delta = eps / (2n)`, `delta` is halved until the Perron value of the perturbed
/// matrix is within `eps` of the Collatz-Wielandt lower bound
/// `min_j (w^T |H|)_j / w_j <= rho(|H|)`, which certifies the inequality without
/// knowing `rho(|H|)`. The returned `rho` is the perturbed Perron value.
pub fn perturbed_perron_vector(
    h_abs: &SparseMatrix,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PerronResult> {
    validate_nonnegative_square(h_abs)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let n = h_abs.n_rows();
    if n == 0 {
        return perron_power(h_abs, 0.0, tol, max_iter)
            .map_err(|r| Error::PerronNotConverged(Box::new(r)));
    }
    let mut delta = eps / (2.0 * n as f64);
    let mut hw = vec![0.0; n];
    for _ in 0..200 {
        let res = perron_power(h_abs, delta, tol, max_iter)
            .map_err(|r| Error::PerronNotConverged(Box::new(r)))?;
        h_abs.mul_transpose_vec_into(&res.w, &mut hw);
        let lower = hw
            .iter()
            .zip(&res.w)
            .map(|(a, b)| a / b)
            .fold(f64::INFINITY, f64::min);
        if res.rho - lower <= eps {
            return Ok(res);
        }
        delta *= 0.5;
    }
    Err(Error::NotConverged {
        method: "perturbed Perron delta search",
        iterations: 200,
    })
}

/// Outcome of [`h_matrix_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HMatrixCertificate {
    pub is_h_matrix: bool,
    pub u: Option<Vec<f64>>,
    pub slack: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Looks for `u > 0` with `u^T <A> > 0` by solving `u^T <A> = e^T` with the
/// column-action Jacobi iteration `u_{k+1}^T = (e^T + u_k^T |B|) |D|^{-1}`.
///
/// The iteration converges exactly when `rho(|D^{-1} B|) < 1`, i.e. when `A` is an
/// H-matrix. Any iterate whose column slacks are all positive is accepted as a
/// certificate; an iteration that stops contracting is reported as `is_h_matrix =
/// false`.
pub fn h_matrix_certificate(a: &SparseMatrix, tol: f64, max_iter: usize) -> Result<HMatrixCertificate> {
    let diag = a.diagonal()?;
    let n = diag.len();
    let abs_diag: Vec<f64> = diag.iter().map(|d| d.abs()).collect();
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut prev_step = f64::INFINITY;
    let mut non_contracting = 0usize;

    let certify = |u: &[f64], iterations: usize| -> Result<Option<HMatrixCertificate>> {
        if u.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Ok(None);
        }
        let uw = WeightVector::new(u.to_vec())?;
        let slack = column_dominance_slack(a, &uw)?;
        Ok(slack.iter().all(|s| *s > 0.0).then(|| HMatrixCertificate {
            is_h_matrix: true,
            u: Some(u.to_vec()),
            slack: Some(slack),
            iterations,
        }))
    };

    for it in 1..=max_iter {
        next.iter_mut().for_each(|v| *v = 1.0);
        for (i, j, v) in a.iter() {
            if i != j {
                next[j] += u[i] * v.abs();
            }
        }
        for (x, d) in next.iter_mut().zip(&abs_diag) {
            *x /= d;
        }
        let step = next
            .iter()
            .zip(&u)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        let scale = max_entry(&next);
        std::mem::swap(&mut u, &mut next);

        if !scale.is_finite() {
            break;
        }
        if step <= tol * scale {
            if let Some(cert) = certify(&u, it)? {
                return Ok(cert);
            }
            break;
        }
        // The increments of a convergent fixed-point iteration shrink geometrically.
        if it > 10 && step >= prev_step * (1.0 - 1e-12) {
            non_contracting += 1;
            if non_contracting >= 50 {
                break;
            }
        } else {
            non_contracting = 0;
        }
        prev_step = step;
    }
    if let Some(cert) = certify(&u, max_iter)? {
        return Ok(cert);
    }
    Ok(HMatrixCertificate {
        is_h_matrix: false,
        u: None,
        slack: None,
        iterations: max_iter,
    })
}

/// Conjugate gradients for a symmetric positive definite operator.
pub(crate) fn conjugate_gradient(
    apply: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, a)| bi - a).collect();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let target = tol * l2_norm(b);
    if rr.sqrt() <= target {
        return Ok(0);
    }
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::CgBreakdown);
        }
        let alpha = rr / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        if rr_new.sqrt() <= target {
            return Ok(it);
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    Err(Error::NotConverged {
        method: "conjugate gradient",
        iterations: max_iter,
    })
}

/// Inverse iteration with CG inner solves; stops on relative Rayleigh-quotient
/// stagnation below `tol`.
fn lambda_min_operator(
    apply: &dyn Fn(&[f64], &mut [f64]),
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    // A slightly irregular positive start avoids orthogonality to the lowest mode
    // for structured operators.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64 / 13.0).collect();
    let nv = l2_norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut av = vec![0.0; n];
    let mut previous = f64::INFINITY;
    for _ in 0..max_iter {
        let mut y = v.clone();
        conjugate_gradient(apply, &v, &mut y, DEFAULT_CG_TOL, 10 * n + 100)?;
        let ny = l2_norm(&y);
        if !(ny > 0.0 && ny.is_finite()) {
            return Err(Error::CgBreakdown);
        }
        v = y.into_iter().map(|x| x / ny).collect();
        apply(&v, &mut av);
        let rq: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        if rq <= 0.0 {
            return Err(Error::CgBreakdown);
        }
        if (previous - rq).abs() <= tol * rq {
            return Ok(rq);
        }
        previous = rq;
    }
    Err(Error::NotConverged {
        method: "inverse iteration",
        iterations: max_iter,
    })
}

/// Smallest eigenvalue of a symmetric positive definite matrix.
pub fn lambda_min_hpd(a: &SparseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.require_square()?;
    if !a.is_symmetric(1e-12 * a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    lambda_min_operator(&|x, y| a.mul_vec_into(x, y), n, tol, max_iter)
}

/// Smallest singular value of a square nonsingular matrix, via `lambda_min(A^T A)`
/// with the product never formed.
pub fn sigma_min(a: &SparseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.require_square()?;
    let apply = |x: &[f64], y: &mut [f64]| {
        let mut ax = vec![0.0; n];
        a.mul_vec_into(x, &mut ax);
        a.mul_transpose_vec_into(&ax, y);
    };
    Ok(lambda_min_operator(&apply, n, tol, max_iter)?.sqrt())
}
