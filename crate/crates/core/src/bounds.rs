//! Convergence-rate constants `alpha` for relaxation and Kaczmarz methods, plus the
//! parameter choices that maximize them.
//!
//! Every bound has the shape `(1 - alpha)^k` in the number `k` of single
//! relaxations; squared energy-norm errors and Kaczmarz squared errors decay in
//! expectation, weighted l1 residual norms in expectation (random picks) or
//! deterministically (greedy picks).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, WeightVector};
use crate::spectral::{sigma_min, DEFAULT_EIG_TOL};

const DISTRIBUTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    HpdRandomized,
    HpdGreedy,
    WeightedRandomized,
    WeightedGreedy,
    Perron,
    Relaxed,
    Kaczmarz,
}

/// Which residual an H-matrix bound is stated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    /// `r_hat = D^{-1} r`; `rho_j` are the u-weighted column sums of `H = D^{-1} B`.
    /// Greedy weights act on `|r_hat|`.
    Preconditioned,
    /// `r = b - A x`; `rho_j = sum_{i != j} u_i |a_ij| / (u_j |a_jj|)`. Greedy
    /// weights act on `|r|`.
    Original,
}

/// How components are selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Random(Vec<f64>),
    Greedy(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub n: usize,
    /// `rho_j`; empty for the energy-norm and Kaczmarz bounds.
    pub rho: Vec<f64>,
    /// `gamma_j = 1 / (1 - rho_j)`.
    pub gamma: Vec<f64>,
    /// Effective greedy distribution `pi_j`.
    pub pi: Option<Vec<f64>>,
    pub alpha: f64,
    pub alpha_opt: f64,
    /// Probabilities (random / Kaczmarz) or greedy weights attaining `alpha_opt`.
    pub optimal_weights: Vec<f64>,
    pub per_relaxation_factor: f64,
    pub per_sweep_factor: f64,
    /// Weights `w_j = u_j / |a_jj|` of the equivalent norm, for H-matrix bounds.
    pub norm_weights: Option<Vec<f64>>,
}

impl BoundReport {
    fn new(kind: BoundKind, n: usize, alpha: f64, alpha_opt: f64, optimal_weights: Vec<f64>) -> Self {
        Self {
            kind,
            n,
            rho: Vec::new(),
            gamma: Vec::new(),
            pi: None,
            alpha,
            alpha_opt,
            optimal_weights,
            per_relaxation_factor: 1.0 - alpha,
            per_sweep_factor: (1.0 - alpha).powi(n as i32),
            norm_weights: None,
        }
    }

    /// `(1 - alpha)^k` for `k` relaxations (fractional `k` allowed).
    pub fn decay(&self, relaxations: f64) -> f64 {
        self.per_relaxation_factor.powf(relaxations)
    }

    /// Bound on a norm whose square obeys `(1 - alpha)^k`, after `sweeps` sweeps.
    pub fn norm_decay_from_squared(&self, sweeps: usize) -> f64 {
        self.decay((sweeps * self.n) as f64 / 2.0)
    }

    /// Bound on a norm obeying `(1 - alpha)^k` directly, after `sweeps` sweeps.
    pub fn norm_decay(&self, sweeps: usize) -> f64 {
        self.decay((sweeps * self.n) as f64)
    }
}

fn validate_distribution(p: &[f64], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    if let Some(v) = p.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(Error::InvalidArgument(format!("probability {v} outside (0, 1]")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidArgument(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

fn validate_positive(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} is empty")));
    }
    match v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        Some(x) => Err(Error::InvalidArgument(format!("{what} has nonpositive entry {x}"))),
        None => Ok(()),
    }
}

fn min_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::INFINITY, f64::min)
}

/// `pi_j = c_j / sum(c)`.
fn normalize(c: &[f64]) -> Vec<f64> {
    let s: f64 = c.iter().sum();
    c.iter().map(|v| v / s).collect()
}

fn gammas(rho: &[f64]) -> Result<Vec<f64>> {
    if rho.is_empty() {
        return Err(Error::InvalidArgument("rho is empty".into()));
    }
    rho.iter()
        .enumerate()
        .map(|(j, &r)| {
            if !(r >= 0.0 && r.is_finite()) {
                Err(Error::InvalidArgument(format!("rho[{j}] = {r} is not a nonnegative number")))
            } else if r >= 1.0 {
                Err(Error::BoundInapplicable { index: j, rho: r })
            } else {
                Ok(1.0 / (1.0 - r))
            }
        })
        .collect()
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega <= 2.0 {
        Ok(())
    } else {
        Err(Error::OmegaOutOfRange { omega, cap: 2.0 })
    }
}

/// `p_i = a_ii / tr(A)`.
pub fn hpd_optimal_probabilities(diag: &[f64]) -> Result<Vec<f64>> {
    validate_positive(diag, "diagonal")?;
    Ok(normalize(diag))
}

/// Energy-norm rate for symmetric positive definite systems:
/// `alpha = omega (2 - omega) lambda_min min_i q_i / a_ii` with `q = p` for random
/// picks and `q_i = beta_i^{-2} / sum_j beta_j^{-2}` for greedy picks.
/// `omega = 2` is accepted and gives `alpha = 0`.
pub fn hpd_alpha(omega: f64, lambda_min: f64, diag: &[f64], selection: &Selection) -> Result<BoundReport> {
    check_omega(omega)?;
    if !(lambda_min > 0.0 && lambda_min.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda_min = {lambda_min} is not positive")));
    }
    validate_positive(diag, "diagonal")?;
    let n = diag.len();
    let c = omega * (2.0 - omega) * lambda_min;
    let trace: f64 = diag.iter().sum();
    let (kind, q, pi) = match selection {
        Selection::Random(p) => {
            validate_distribution(p, n)?;
            (BoundKind::HpdRandomized, p.clone(), None)
        }
        Selection::Greedy(beta) => {
            validate_positive(beta, "beta")?;
            if beta.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: beta.len() });
            }
            let inv_sq: Vec<f64> = beta.iter().map(|b| 1.0 / (b * b)).collect();
            let pi = normalize(&inv_sq);
            (BoundKind::HpdGreedy, pi.clone(), Some(pi))
        }
    };
    let alpha = c * min_of(q.iter().zip(diag).map(|(q, d)| q / d));
    let alpha_opt = c / trace;
    let optimal = match selection {
        Selection::Random(_) => normalize(diag),
        // pi_i proportional to a_ii, i.e. beta_i = a_ii^{-1/2}.
        Selection::Greedy(_) => diag.iter().map(|d| 1.0 / d.sqrt()).collect(),
    };
    let mut report = BoundReport::new(kind, n, alpha, alpha_opt, optimal);
    report.pi = pi;
    Ok(report)
}

/// Weighted-l1 rate for random picks: `alpha = min_j p_j / gamma_j`, maximized by
/// `p = gamma / sum(gamma)` with value `1 / sum(gamma)`.
pub fn weighted_alpha_random(rho: &[f64], p: &[f64]) -> Result<BoundReport> {
    let gamma = gammas(rho)?;
    validate_distribution(p, rho.len())?;
    let alpha = min_of(p.iter().zip(&gamma).map(|(p, g)| p / g));
    let alpha_opt = 1.0 / gamma.iter().sum::<f64>();
    let mut report = BoundReport::new(BoundKind::WeightedRandomized, rho.len(), alpha, alpha_opt, normalize(&gamma));
    report.rho = rho.to_vec();
    report.gamma = gamma;
    Ok(report)
}

/// Weighted-l1 rate for greedy picks with weights `beta`:
/// `alpha = min_j pi_j / gamma_j`, `pi_j = (u_j / beta_j) / sum_l (u_l / beta_l)`.
/// `beta = u / gamma` attains the randomized optimum `1 / sum(gamma)`.
pub fn weighted_alpha_greedy(rho: &[f64], u: &WeightVector, beta: &[f64]) -> Result<BoundReport> {
    let gamma = gammas(rho)?;
    let n = rho.len();
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.len() });
    }
    if beta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: beta.len() });
    }
    validate_positive(beta, "beta")?;
    let ratio: Vec<f64> = u.iter().zip(beta).map(|(u, b)| u / b).collect();
    let pi = normalize(&ratio);
    let alpha = min_of(pi.iter().zip(&gamma).map(|(p, g)| p / g));
    let alpha_opt = 1.0 / gamma.iter().sum::<f64>();
    let optimal: Vec<f64> = u.iter().zip(&gamma).map(|(u, g)| u / g).collect();
    let mut report = BoundReport::new(BoundKind::WeightedGreedy, n, alpha, alpha_opt, optimal);
    report.rho = rho.to_vec();
    report.gamma = gamma;
    report.pi = Some(pi);
    Ok(report)
}

/// Rate in the norm weighted by the left Perron vector of `|H|`:
/// `alpha = (1 - rho) min_j p_j`, optimal for uniform `p`.
pub fn perron_alpha(rho: f64, p: &[f64]) -> Result<BoundReport> {
    let n = p.len();
    let gamma = gammas(&[rho])?[0];
    validate_distribution(p, n)?;
    let alpha = (1.0 - rho) * min_of(p.iter().copied());
    let alpha_opt = (1.0 - rho) / n as f64;
    let mut report = BoundReport::new(BoundKind::Perron, n, alpha, alpha_opt, vec![1.0 / n as f64; n]);
    report.rho = vec![rho; n];
    report.gamma = vec![gamma; n];
    Ok(report)
}

/// Rate for the relaxed splitting with `rho_omega = omega rho + |1 - omega|`:
/// `alpha = (1 - rho_omega - eps) min_j p_j`, for `0 < omega < 2 / (1 + rho)`.
/// `eps` accounts for the perturbed Perron vector of a reducible `|H|`.
pub fn relaxed_alpha(rho: f64, omega: f64, p: &[f64], eps: f64) -> Result<BoundReport> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho = {rho} is not a nonnegative number")));
    }
    if rho >= 1.0 {
        return Err(Error::BoundInapplicable { index: 0, rho });
    }
    let cap = 2.0 / (1.0 + rho);
    if !(omega > 0.0 && omega < cap) {
        return Err(Error::OmegaOutOfRange { omega, cap });
    }
    let rho_omega = omega * rho + (1.0 - omega).abs();
    if rho_omega >= 1.0 {
        return Err(Error::OmegaOutOfRange { omega, cap });
    }
    if !(eps >= 0.0) || rho_omega + eps >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} must be nonnegative with rho_omega + eps < 1 (rho_omega = {rho_omega})"
        )));
    }
    let n = p.len();
    validate_distribution(p, n)?;
    let margin = 1.0 - rho_omega - eps;
    let alpha = margin * min_of(p.iter().copied());
    let alpha_opt = margin / n as f64;
    let mut report = BoundReport::new(BoundKind::Relaxed, n, alpha, alpha_opt, vec![1.0 / n as f64; n]);
    report.rho = vec![rho_omega; n];
    report.gamma = vec![1.0 / margin; n];
    Ok(report)
}

/// Randomized Kaczmarz rate `sigma_min^2 / ||A||_F^2` from precomputed quantities;
/// the optimal row probabilities are `||a_i||^2 / ||A||_F^2`.
pub fn kaczmarz_alpha_from(sigma_min: f64, row_norms_sq: &[f64]) -> Result<BoundReport> {
    validate_positive(row_norms_sq, "row norms")?;
    if !(sigma_min > 0.0 && sigma_min.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma_min = {sigma_min} is not positive")));
    }
    let frob: f64 = row_norms_sq.iter().sum();
    let alpha = sigma_min * sigma_min / frob;
    let n = row_norms_sq.len();
    Ok(BoundReport::new(BoundKind::Kaczmarz, n, alpha, alpha, normalize(row_norms_sq)))
}

pub fn kaczmarz_alpha(a: &SparseMatrix) -> Result<BoundReport> {
    let n = a.require_square()?;
    let s = sigma_min(a, DEFAULT_EIG_TOL, 10 * n + 1000)?;
    let rows = a.row_norms_sq();
    if let Some(i) = rows.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroRow { row: i });
    }
    kaczmarz_alpha_from(s, &rows)
}

/// `rho_j` for an H-matrix with weights `u`, for the chosen residual.
pub fn h_matrix_rho(a: &SparseMatrix, u: &WeightVector, residual: ResidualKind) -> Result<Vec<f64>> {
    let n = a.require_square()?;
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.len() });
    }
    let diag: Vec<f64> = a.diagonal()?.iter().map(|d| d.abs()).collect();
    let mut sums = vec![0.0; n];
    for (i, j, v) in a.iter() {
        if i == j {
            continue;
        }
        sums[j] += match residual {
            ResidualKind::Preconditioned => u[i] * v.abs() / diag[i],
            ResidualKind::Original => u[i] * v.abs(),
        };
    }
    for j in 0..n {
        sums[j] /= match residual {
            ResidualKind::Preconditioned => u[j],
            ResidualKind::Original => u[j] * diag[j],
        };
    }
    Ok(sums)
}

/// Weighted-l1 bound for an H-matrix `A` whose dominance is certified by `u`
/// (all `rho_j < 1` for the chosen residual). Random selections use the
/// probabilities directly, greedy selections the weights `beta` on `|r_hat|` or
/// `|r|` according to `residual`.
pub fn h_matrix_bounds(
    a: &SparseMatrix,
    u: &WeightVector,
    selection: &Selection,
    residual: ResidualKind,
) -> Result<BoundReport> {
    let rho = h_matrix_rho(a, u, residual)?;
    let mut report = match selection {
        Selection::Random(p) => weighted_alpha_random(&rho, p)?,
        Selection::Greedy(beta) => weighted_alpha_greedy(&rho, u, beta)?,
    };
    let diag = a.diagonal()?;
    report.norm_weights = Some(u.iter().zip(&diag).map(|(u, d)| u / d.abs()).collect());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hpd_examples() {
        let r = hpd_alpha(1.0, 1.0, &[1.0, 2.0], &Selection::Random(vec![1.0 / 3.0, 2.0 / 3.0])).unwrap();
        assert_relative_eq!(r.alpha, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(r.alpha_opt, 1.0 / 3.0, epsilon = 1e-15);
        let r = hpd_alpha(2.0, 1.0, &[1.0, 2.0], &Selection::Random(vec![0.5, 0.5])).unwrap();
        assert_eq!(r.alpha, 0.0);
        let r = hpd_alpha(1.0, 1.0, &[1.0, 2.0], &Selection::Random(vec![0.5, 0.5])).unwrap();
        assert_eq!(r.alpha, 0.25);
        assert!(hpd_alpha(0.0, 1.0, &[1.0], &Selection::Random(vec![1.0])).is_err());
        assert!(hpd_alpha(2.5, 1.0, &[1.0], &Selection::Random(vec![1.0])).is_err());
        assert!(hpd_alpha(1.0, 0.0, &[1.0], &Selection::Random(vec![1.0])).is_err());
        assert!(hpd_alpha(1.0, 1.0, &[-1.0], &Selection::Random(vec![1.0])).is_err());
    }

    #[test]
    fn hpd_greedy_optimal_betas() {
        let diag = [1.0, 2.0, 5.0];
        let r = hpd_alpha(1.2, 0.3, &diag, &Selection::Greedy(vec![1.0; 3])).unwrap();
        let best = hpd_alpha(1.2, 0.3, &diag, &Selection::Greedy(r.optimal_weights.clone())).unwrap();
        assert_relative_eq!(best.alpha, best.alpha_opt, max_relative = 1e-14);
        assert!(r.alpha <= r.alpha_opt);
    }

    #[test]
    fn hpd_optimal_probability_examples() {
        assert_eq!(hpd_optimal_probabilities(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        let p = hpd_optimal_probabilities(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(p[0], 1.0 / 3.0);
        assert_relative_eq!(p[1], 2.0 / 3.0);
        assert_eq!(hpd_optimal_probabilities(&[2.0, 9.5]).unwrap(), vec![2.0 / 11.5, 9.5 / 11.5]);
        assert!(hpd_optimal_probabilities(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn weighted_random_examples() {
        let r = weighted_alpha_random(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(r.gamma, vec![2.0, 2.0]);
        assert_eq!(r.alpha, 0.25);
        assert_eq!(r.alpha_opt, 0.25);
        let r = weighted_alpha_random(&[0.0, 0.5], &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert_relative_eq!(r.alpha, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(r.alpha_opt, 1.0 / 3.0, epsilon = 1e-15);
        let r = weighted_alpha_random(&[0.0, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(r.alpha, 0.25);
        assert!(matches!(
            weighted_alpha_random(&[0.2, 1.0], &[0.5, 0.5]),
            Err(Error::BoundInapplicable { index: 1, .. })
        ));
    }

    #[test]
    fn weighted_greedy_examples() {
        let u = WeightVector::new(vec![1.0, 3.0, 0.5]).unwrap();
        let rho = [0.1, 0.4, 0.7];
        let r = weighted_alpha_greedy(&rho, &u, u.as_slice()).unwrap();
        assert_relative_eq!(r.alpha, (1.0 - 0.7) / 3.0, epsilon = 1e-15);
        let best = weighted_alpha_greedy(&rho, &u, &r.optimal_weights).unwrap();
        let rand = weighted_alpha_random(&rho, &[1.0 / 3.0; 3]).unwrap();
        assert!((best.alpha - rand.alpha_opt).abs() <= 1e-14);

        let r = weighted_alpha_greedy(&[0.0, 0.5], &WeightVector::ones(2), &[1.0, 1.0]).unwrap();
        assert_eq!(r.pi, Some(vec![0.5, 0.5]));
        assert_eq!(r.alpha, 0.25);
        assert!(weighted_alpha_greedy(&[0.0, 0.5], &WeightVector::ones(2), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn perron_examples() {
        assert_eq!(perron_alpha(0.5, &[0.25; 4]).unwrap().alpha, 0.125);
        assert_eq!(perron_alpha(0.0, &[0.2, 0.8]).unwrap().alpha, 0.2);
        assert_relative_eq!(perron_alpha(0.9, &[0.7, 0.1, 0.1, 0.1]).unwrap().alpha, 0.01, epsilon = 1e-15);
        assert!(perron_alpha(1.0, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn relaxed_examples() {
        let p = [0.25; 4];
        let a = relaxed_alpha(0.3, 1.0, &p, 0.0).unwrap();
        assert_eq!(a.alpha, perron_alpha(0.3, &p).unwrap().alpha);
        assert!(matches!(
            relaxed_alpha(0.5, 4.0 / 3.0, &p, 0.0),
            Err(Error::OmegaOutOfRange { .. })
        ));
        let r = relaxed_alpha(0.5, 1.2, &p, 0.0).unwrap();
        assert_relative_eq!(r.alpha, 0.05, epsilon = 1e-15);
        assert!(relaxed_alpha(0.5, 1.2, &p, 0.25).is_err());
        let e = relaxed_alpha(0.5, 1.2, &p, 0.1).unwrap();
        assert_relative_eq!(e.alpha, 0.025, epsilon = 1e-15);
    }

    #[test]
    fn kaczmarz_examples() {
        let s = 0.5f64.sqrt();
        let q = dense(&[&[s, s], &[s, -s]]);
        assert_relative_eq!(kaczmarz_alpha(&q).unwrap().alpha, 0.5, max_relative = 1e-8);
        let d = dense(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let r = kaczmarz_alpha(&d).unwrap();
        assert_relative_eq!(r.alpha, 0.2, max_relative = 1e-8);
        assert_eq!(r.optimal_weights, vec![0.2, 0.8]);
        let t = dense(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let sv = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]).singular_values();
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(smin * smin, (3.0 - 5f64.sqrt()) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(kaczmarz_alpha(&t).unwrap().alpha, smin * smin / 3.0, max_relative = 1e-7);
    }

    #[test]
    fn h_matrix_examples() {
        let a = dense(&[&[2.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 2.0]]);
        let r = h_matrix_bounds(&a, &WeightVector::ones(3), &Selection::Random(vec![1.0 / 3.0; 3]), ResidualKind::Preconditioned).unwrap();
        assert_eq!(r.rho, vec![0.0; 3]);
        assert_relative_eq!(r.alpha_opt, 1.0 / 3.0, epsilon = 1e-15);

        let a = dense(&[&[2.0, -1.0], &[-1.0, 2.0]]);
        let r = h_matrix_bounds(&a, &WeightVector::ones(2), &Selection::Random(vec![0.5, 0.5]), ResidualKind::Preconditioned).unwrap();
        assert_eq!(r.rho, vec![0.5, 0.5]);
        assert_eq!(r.alpha_opt, 0.25);

        let a = dense(&[&[4.0, -1.0], &[-2.0, 3.0]]);
        let u = WeightVector::ones(2);
        let r = h_matrix_bounds(&a, &u, &Selection::Random(vec![0.5, 0.5]), ResidualKind::Preconditioned).unwrap();
        assert_relative_eq!(r.rho[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(r.rho[1], 0.25, epsilon = 1e-15);
        assert_relative_eq!(r.alpha_opt, 3.0 / 13.0, epsilon = 1e-15);
        assert_eq!(r.norm_weights, Some(vec![0.25, 1.0 / 3.0]));

        let o = h_matrix_bounds(&a, &u, &Selection::Random(vec![0.5, 0.5]), ResidualKind::Original).unwrap();
        assert_relative_eq!(o.rho[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(o.rho[1], 1.0 / 3.0, epsilon = 1e-15);

        let bad = dense(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        assert!(matches!(
            h_matrix_bounds(&bad, &u, &Selection::Random(vec![0.5, 0.5]), ResidualKind::Original),
            Err(Error::BoundInapplicable { .. })
        ));
    }

    #[test]
    fn reports_serialize() {
        let r = weighted_alpha_random(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: BoundReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(s.contains("\"weighted_randomized\""));
    }

    fn rho_and_p() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..0.999, n),
                prop::collection::vec(0.01f64..1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn random_alpha_never_beats_optimum((rho, raw) in rho_and_p()) {
            let p = normalize(&raw);
            let r = weighted_alpha_random(&rho, &p).unwrap();
            prop_assert!(r.alpha > 0.0 && r.alpha <= 1.0);
            prop_assert!(r.alpha <= r.alpha_opt + 1e-14);
            let best = weighted_alpha_random(&rho, &r.optimal_weights).unwrap();
            prop_assert!((best.alpha - r.alpha_opt).abs() <= 1e-14);
        }

        #[test]
        fn greedy_alpha_never_beats_optimum((rho, beta) in rho_and_p(), seed in 0.1f64..5.0) {
            let u = WeightVector::new(beta.iter().map(|b| b * seed + 0.1).collect()).unwrap();
            let r = weighted_alpha_greedy(&rho, &u, &beta).unwrap();
            prop_assert!(r.alpha > 0.0 && r.alpha <= r.alpha_opt + 1e-14);
            let best = weighted_alpha_greedy(&rho, &u, &r.optimal_weights).unwrap();
            prop_assert!((best.alpha - r.alpha_opt).abs() <= 1e-14);
        }

        #[test]
        fn uniform_matches_closed_form((rho, _p) in rho_and_p()) {
            let n = rho.len();
            let r = weighted_alpha_random(&rho, &vec![1.0 / n as f64; n]).unwrap();
            let max_rho = rho.iter().cloned().fold(0.0, f64::max);
            prop_assert!((r.alpha - (1.0 - max_rho) / n as f64).abs() <= 1e-14);
        }

        #[test]
        fn perron_matches_equal_rho(rho in 0.0f64..0.999, raw in prop::collection::vec(0.01f64..1.0, 1..10)) {
            let p = normalize(&raw);
            let a = perron_alpha(rho, &p).unwrap();
            let b = weighted_alpha_random(&vec![rho; p.len()], &p).unwrap();
            prop_assert!((a.alpha - b.alpha).abs() <= 1e-15);
            prop_assert!((a.alpha_opt - b.alpha_opt).abs() <= 1e-15);
        }
    }
}
