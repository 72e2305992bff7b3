//! Geometric V-cycles for the five-point Laplacian with relaxation smoothers.
//!
//! Levels halve the number of intervals per direction (`N -> (N-1)/2`) down to a
//! 7x7 grid, which is solved with a dense Cholesky factorization. Transfers are
//! full-weighting restriction and bilinear prolongation, `P = 4 R^T`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::build_laplacian;
use crate::solvers::{pick_index, GreedyTracker, PickRule, WeightedSampler};
use crate::sparse::{l2_norm, SparseMatrix};
use crate::splittings::{IterationVectors, JacobiSplitting, Splitting};

pub const COARSEST_N: usize = 7;
pub const MAX_CYCLES: usize = 100;

#[derive(Debug, Clone)]
pub struct Level {
    pub n: usize,
    pub a: SparseMatrix,
}

pub struct GridHierarchy {
    levels: Vec<Level>,
    coarse_factor: Cholesky<f64, Dyn>,
}

impl std::fmt::Debug for GridHierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridHierarchy")
            .field("sizes", &self.sizes())
            .finish()
    }
}

impl GridHierarchy {
    /// Requires `n + 1` to be a power of two and `n >= 7`.
    pub fn new(n: usize) -> Result<Self> {
        if n < COARSEST_N || !(n + 1).is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "multigrid needs N >= {COARSEST_N} with N + 1 a power of two, got {n}"
            )));
        }
        let mut levels = Vec::new();
        let mut m = n;
        loop {
            levels.push(Level { n: m, a: build_laplacian(m)? });
            if m == COARSEST_N {
                break;
            }
            m = (m - 1) / 2;
        }
        let coarse = &levels.last().unwrap().a;
        let dim = coarse.n_rows();
        let dense = DMatrix::from_fn(dim, dim, |i, j| coarse.get(i, j));
        let coarse_factor = dense
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("coarse operator is not positive definite".into()))?;
        Ok(Self { levels, coarse_factor })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Grid sizes, finest first.
    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.n).collect()
    }

    pub fn finest(&self) -> &Level {
        &self.levels[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmootherScheme {
    Cyclic,
    GreedyPreconditioned,
    /// Uniform probabilities.
    Randomized,
}

impl SmootherScheme {
    pub fn name(self) -> &'static str {
        match self {
            SmootherScheme::Cyclic => "cyclic",
            SmootherScheme::GreedyPreconditioned => "greedy",
            SmootherScheme::Randomized => "randomized",
        }
    }
}

/// Each smoothing phase on a level with `n` unknowns performs `round(s n)`
/// relaxations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub scheme: SmootherScheme,
    pub s: f64,
    pub seed: u64,
}

impl SmootherConfig {
    pub fn new(scheme: SmootherScheme, s: f64) -> Self {
        Self { scheme, s, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidArgument(format!("smoothing count s = {} must be positive", self.s)));
        }
        if self.scheme == SmootherScheme::Cyclic && self.s.fract() != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cyclic smoothing needs an integer s, got {}",
                self.s
            )));
        }
        Ok(())
    }

    fn relaxations(&self, dim: usize) -> usize {
        (self.s * dim as f64).round() as usize
    }
}

fn coarse_size(n_fine: usize) -> Result<usize> {
    if n_fine < 3 || n_fine % 2 == 0 {
        return Err(Error::InvalidArgument(format!("fine grid size {n_fine} has no coarse grid")));
    }
    Ok((n_fine - 1) / 2)
}

/// Full-weighting restriction with stencil `[1 2 1; 2 4 2; 1 2 1] / 16`.
pub fn restrict(fine: &[f64], n_fine: usize) -> Result<Vec<f64>> {
    let nc = coarse_size(n_fine)?;
    if fine.len() != n_fine * n_fine {
        return Err(Error::DimensionMismatch { expected: n_fine * n_fine, got: fine.len() });
    }
    let at = |i: usize, j: usize| fine[(j - 1) * n_fine + (i - 1)];
    let mut coarse = Vec::with_capacity(nc * nc);
    for jc in 1..=nc {
        let j = 2 * jc;
        for ic in 1..=nc {
            let i = 2 * ic;
            let v = 4.0 * at(i, j)
                + 2.0 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1))
                + at(i - 1, j - 1)
                + at(i + 1, j - 1)
                + at(i - 1, j + 1)
                + at(i + 1, j + 1);
            coarse.push(v / 16.0);
        }
    }
    Ok(coarse)
}

/// Bilinear interpolation; coarse values outside the grid are the zero boundary.
pub fn prolong(coarse: &[f64], n_coarse: usize) -> Result<Vec<f64>> {
    if n_coarse == 0 {
        return Err(Error::InvalidArgument("empty coarse grid".into()));
    }
    if coarse.len() != n_coarse * n_coarse {
        return Err(Error::DimensionMismatch { expected: n_coarse * n_coarse, got: coarse.len() });
    }
    let nf = 2 * n_coarse + 1;
    let at = |i: usize, j: usize| -> f64 {
        if i == 0 || j == 0 || i > n_coarse || j > n_coarse {
            0.0
        } else {
            coarse[(j - 1) * n_coarse + (i - 1)]
        }
    };
    // Coarse neighbours and weights of fine index `k` along one axis.
    let axis = |k: usize| -> [(usize, f64); 2] {
        if k % 2 == 0 {
            [(k / 2, 1.0), (0, 0.0)]
        } else {
            [((k - 1) / 2, 0.5), ((k + 1) / 2, 0.5)]
        }
    };
    let mut fine = Vec::with_capacity(nf * nf);
    for j in 1..=nf {
        let wy = axis(j);
        for i in 1..=nf {
            let wx = axis(i);
            let mut v = 0.0;
            for &(jc, b) in &wy {
                for &(ic, a) in &wx {
                    if a != 0.0 && b != 0.0 {
                        v += a * b * at(ic, jc);
                    }
                }
            }
            fine.push(v);
        }
    }
    Ok(fine)
}

struct LevelSmoother<'h> {
    splitting: JacobiSplitting<'h>,
    sampler: Option<WeightedSampler>,
    rule: PickRule,
}

/// Reusable V-cycle state: per-level splittings and persistent random streams.
pub struct VCycle<'h> {
    hierarchy: &'h GridHierarchy,
    smoothers: Vec<LevelSmoother<'h>>,
    config: SmootherConfig,
}

impl<'h> VCycle<'h> {
    pub fn new(hierarchy: &'h GridHierarchy, config: SmootherConfig) -> Result<Self> {
        config.validate()?;
        let last = hierarchy.levels.len() - 1;
        let mut smoothers = Vec::with_capacity(last);
        for (l, level) in hierarchy.levels[..last].iter().enumerate() {
            let dim = level.a.n_rows();
            let splitting = JacobiSplitting::new(&level.a, 1.0)?;
            let (rule, sampler) = match config.scheme {
                SmootherScheme::Cyclic => (PickRule::Cyclic, None),
                SmootherScheme::GreedyPreconditioned => (PickRule::GreedyPreconditioned(vec![1.0; dim]), None),
                SmootherScheme::Randomized => (
                    PickRule::uniform(dim),
                    // Distinct stream per level, all derived from the one seed.
                    Some(WeightedSampler::uniform(dim, config.seed.wrapping_add((l as u64) << 32))?),
                ),
            };
            smoothers.push(LevelSmoother { splitting, sampler, rule });
        }
        Ok(Self { hierarchy, smoothers, config })
    }

    /// One V-cycle on the finest level; returns the new iterate.
    pub fn cycle(&mut self, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        let dim = self.hierarchy.finest().a.n_rows();
        for v in [b, x0] {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
        }
        self.cycle_level(0, b, x0)
    }

    fn smooth(&mut self, level: usize, b: &[f64], x: Vec<f64>) -> Result<IterationVectors> {
        let count = self.config.relaxations(self.hierarchy.levels[level].a.n_rows());
        let sm = &mut self.smoothers[level];
        let mut state = IterationVectors::new(&sm.splitting, b, &x)?;
        let mut greedy = GreedyTracker::for_rule(&sm.rule, sm.splitting.matrix(), &state);
        for k in 0..count {
            let i = match &greedy {
                Some(g) => g.pick(),
                None => pick_index(&sm.rule, &state, sm.sampler.as_mut(), k),
            };
            sm.splitting.relax(&mut state, b, i);
            if let Some(g) = greedy.as_mut() {
                g.after_relax(i, &state);
            }
        }
        sm.splitting.resync(&mut state, b);
        Ok(state)
    }

    fn cycle_level(&mut self, level: usize, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        if level + 1 == self.hierarchy.levels.len() {
            let rhs = DVector::from_column_slice(b);
            return Ok(self.hierarchy.coarse_factor.solve(&rhs).as_slice().to_vec());
        }
        let n = self.hierarchy.levels[level].n;
        let nc = self.hierarchy.levels[level + 1].n;

        let state = self.smooth(level, b, x0.to_vec())?;
        let rc = restrict(&state.r, n)?;
        let ec = self.cycle_level(level + 1, &rc, &vec![0.0; nc * nc])?;
        let correction = prolong(&ec, nc)?;
        let mut x = state.x;
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
        let state = self.smooth(level, b, x)?;
        Ok(state.x)
    }
}

/// One V-cycle from `x0`.
pub fn v_cycle(h: &GridHierarchy, b: &[f64], x0: &[f64], sm: SmootherConfig) -> Result<Vec<f64>> {
    VCycle::new(h, sm)?.cycle(b, x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycles: usize,
    pub final_relative_residual: f64,
    /// Relative residual 2-norm after each cycle, starting with 1.
    pub history: Vec<f64>,
}

/// V-cycles from `x = 0` until `||b - A x|| <= tol ||b||`; errors after
/// [`MAX_CYCLES`] cycles.
pub fn cycles_to_tolerance(h: &GridHierarchy, b: &[f64], sm: SmootherConfig, tol: f64) -> Result<CycleReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let a = &h.finest().a;
    let dim = a.n_rows();
    if b.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: b.len() });
    }
    let b_norm = l2_norm(b);
    let mut history = vec![1.0];
    if b_norm == 0.0 || tol >= 1.0 {
        return Ok(CycleReport { cycles: 0, final_relative_residual: if b_norm == 0.0 { 0.0 } else { 1.0 }, history });
    }
    let mut vc = VCycle::new(h, sm)?;
    let mut x = vec![0.0; dim];
    let mut r = vec![0.0; dim];
    for cycle in 1..=MAX_CYCLES {
        x = vc.cycle(b, &x)?;
        a.mul_vec_into(&x, &mut r);
        let rel = r.iter().zip(b).map(|(ax, bi)| (bi - ax) * (bi - ax)).sum::<f64>().sqrt() / b_norm;
        if !rel.is_finite() {
            return Err(Error::NonFinite(format!("residual after V-cycle {cycle}")));
        }
        history.push(rel);
        if rel <= tol {
            return Ok(CycleReport { cycles: cycle, final_relative_residual: rel, history });
        }
    }
    Err(Error::NotConverged { method: "V-cycle", iterations: MAX_CYCLES })
}
