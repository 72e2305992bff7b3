//! Test systems on the unit square with homogeneous Dirichlet boundaries: implicit
//! Euler convection-diffusion matrices and the five-point Laplacian.
//!
//! Grid points are `(x_i, y_j) = (i h, j h)`, `1 <= i, j <= N`, `h = 1/(N+1)`,
//! numbered row by row: index `(j-1) N + (i-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{column_dominance_slack, SparseMatrix, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diffusion {
    /// `alpha = beta = 1`.
    Constant,
    /// `alpha = beta = 1 + 9 (x + y)`.
    Variable,
}

impl Diffusion {
    fn coefficient(self, x: f64, y: f64) -> f64 {
        match self {
            Diffusion::Constant => 1.0,
            Diffusion::Variable => 1.0 + 9.0 * (x + y),
        }
    }
}

/// Convection-diffusion problem `c_t = div(alpha grad c) - (nu c)_x - (mu c)_y`
/// with the recirculating velocity
/// `(nu, mu) = sigma (4x(x-1)(1-2y), -4y(y-1)(1-2x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub sigma: f64,
    pub diffusion: Diffusion,
    /// Time step; `None` means `0.5 h^2`.
    pub tau: Option<f64>,
    pub convection: bool,
}

impl ProblemSpec {
    /// Pure diffusion with constant coefficients and the default time step.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            sigma: 0.0,
            diffusion: Diffusion::Constant,
            tau: None,
            convection: false,
        }
    }

    pub fn with_diffusion(mut self, diffusion: Diffusion) -> Self {
        self.diffusion = diffusion;
        self
    }

    /// Enables convection with strength `sigma`.
    pub fn with_convection(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self.convection = true;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(0.5 * self.h() * self.h())
    }

    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("grid size N = {} must be at least 2", self.n)));
        }
        let tau = self.tau();
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau = {tau} must be positive")));
        }
        if !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma = {}", self.sigma)));
        }
        Ok(())
    }

    fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        if !self.convection {
            return (0.0, 0.0);
        }
        (
            self.sigma * 4.0 * x * (x - 1.0) * (1.0 - 2.0 * y),
            -self.sigma * 4.0 * y * (y - 1.0) * (1.0 - 2.0 * x),
        )
    }
}

/// A manufactured system `A z = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub a: SparseMatrix,
    /// Grid samples of `xy(1-x)(1-y)`.
    pub z: Vec<f64>,
    pub b: Vec<f64>,
}

#[inline]
fn grid_index(n: usize, i: usize, j: usize) -> usize {
    (j - 1) * n + (i - 1)
}

/// Assembles `A = I + (tau/2) B`, `B` the five-point discretization of
/// `-div(alpha grad c) + (nu c)_x + (mu c)_y` with diffusion coefficients at cell
/// midpoints and central differences for the convective fluxes.
pub fn build_system(spec: &ProblemSpec) -> Result<Problem> {
    spec.validate()?;
    let n = spec.n;
    let h = spec.h();
    let half_tau = 0.5 * spec.tau();
    let diff = half_tau / (h * h);
    let conv = half_tau / (2.0 * h);
    let coef = |x: f64, y: f64| spec.diffusion.coefficient(x, y);

    let mut triplets = Vec::with_capacity(5 * n * n);
    for j in 1..=n {
        let y = j as f64 * h;
        for i in 1..=n {
            let x = i as f64 * h;
            let row = grid_index(n, i, j);
            let a_e = coef(x + 0.5 * h, y);
            let a_w = coef(x - 0.5 * h, y);
            let b_n = coef(x, y + 0.5 * h);
            let b_s = coef(x, y - 0.5 * h);
            triplets.push((row, row, 1.0 + diff * (a_e + a_w + b_n + b_s)));
            if i < n {
                let (nu, _) = spec.velocity(x + h, y);
                triplets.push((row, grid_index(n, i + 1, j), -diff * a_e + conv * nu));
            }
            if i > 1 {
                let (nu, _) = spec.velocity(x - h, y);
                triplets.push((row, grid_index(n, i - 1, j), -diff * a_w - conv * nu));
            }
            if j < n {
                let (_, mu) = spec.velocity(x, y + h);
                triplets.push((row, grid_index(n, i, j + 1), -diff * b_n + conv * mu));
            }
            if j > 1 {
                let (_, mu) = spec.velocity(x, y - h);
                triplets.push((row, grid_index(n, i, j - 1), -diff * b_s - conv * mu));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n * n, n * n, &triplets)?;
    let z = manufactured_solution(n);
    let mut b = vec![0.0; n * n];
    a.mul_vec_into(&z, &mut b);
    Ok(Problem { a, z, b })
}

/// `xy(1-x)(1-y)` on the interior grid.
pub fn manufactured_solution(n: usize) -> Vec<f64> {
    let h = 1.0 / (n as f64 + 1.0);
    let mut z = Vec::with_capacity(n * n);
    for j in 1..=n {
        let y = j as f64 * h;
        for i in 1..=n {
            let x = i as f64 * h;
            z.push(x * y * (1.0 - x) * (1.0 - y));
        }
    }
    z
}

/// Five-point Laplacian scaled by `1/h^2`.
pub fn build_laplacian(n: usize) -> Result<SparseMatrix> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("Laplacian needs N >= 3, got {n}")));
    }
    let h = 1.0 / (n as f64 + 1.0);
    let s = 1.0 / (h * h);
    let mut triplets = Vec::with_capacity(5 * n * n);
    for j in 1..=n {
        for i in 1..=n {
            let row = grid_index(n, i, j);
            triplets.push((row, row, 4.0 * s));
            if i < n {
                triplets.push((row, grid_index(n, i + 1, j), -s));
            }
            if i > 1 {
                triplets.push((row, grid_index(n, i - 1, j), -s));
            }
            if j < n {
                triplets.push((row, grid_index(n, i, j + 1), -s));
            }
            if j > 1 {
                triplets.push((row, grid_index(n, i, j - 1), -s));
            }
        }
    }
    SparseMatrix::from_triplets(n * n, n * n, &triplets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackSummary {
    pub min: f64,
    pub max: f64,
    /// All column slacks positive.
    pub dominant: bool,
}

impl SlackSummary {
    fn from_slack(slack: &[f64]) -> Self {
        let min = slack.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = slack.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max, dominant: min > 0.0 }
    }
}

/// Column-dominance slacks `u_j |a_jj| - sum_{i != j} u_i |a_ij|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub unweighted: SlackSummary,
    pub weighted: Option<SlackSummary>,
}

pub fn dominance_report(a: &SparseMatrix, u: Option<&WeightVector>) -> Result<DominanceReport> {
    let n = a.require_square()?;
    let unweighted = SlackSummary::from_slack(&column_dominance_slack(a, &WeightVector::ones(n))?);
    let weighted = match u {
        Some(u) => Some(SlackSummary::from_slack(&column_dominance_slack(a, u)?)),
        None => None,
    };
    Ok(DominanceReport { unweighted, weighted })
}
