//! Cyclic, greedy and randomized relaxation drivers plus Kaczmarz baselines.
//!
//! One "sweep" is `n` relaxations. Traces record the requested norms once per
//! sweep, starting with the initial state, and runs stop when the stopping norm has
//! dropped by `rtol` relative to its initial value or after `max_sweeps` sweeps.
//! Nothing here names a default stopping rule beyond that: callers pick the norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{l2_norm, weighted_l1_unchecked, SparseMatrix, WeightVector};
use crate::splittings::{IterationVectors, JacobiSplitting, Splitting};

const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// How the next component to relax is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PickRule {
    /// `i = k mod n`.
    Cyclic,
    /// `i` drawn with probability `p_i`.
    Random(Vec<f64>),
    /// `argmax_j beta_j |r_j|`.
    GreedyRaw(Vec<f64>),
    /// `argmax_j beta_j |r_hat_j|`.
    GreedyPreconditioned(Vec<f64>),
}

impl PickRule {
    pub fn uniform(n: usize) -> Self {
        PickRule::Random(vec![1.0 / n as f64; n])
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let check_len = |v: &[f64]| {
            if v.len() == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: n, got: v.len() })
            }
        };
        match self {
            PickRule::Cyclic => Ok(()),
            PickRule::Random(p) => {
                check_len(p)?;
                if let Some(v) = p.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
                    return Err(Error::InvalidArgument(format!(
                        "probability {v} outside (0, 1]"
                    )));
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "probabilities sum to {total}, not 1"
                    )));
                }
                Ok(())
            }
            PickRule::GreedyRaw(beta) | PickRule::GreedyPreconditioned(beta) => {
                check_len(beta)?;
                if let Some(v) = beta.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidArgument(format!(
                        "greedy weight {v} is not positive"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Inverse-CDF sampler over `0..n` with a seeded ChaCha stream. Same seed, same
/// index sequence.
#[derive(Debug, Clone)]
pub struct WeightedSampler {
    cumulative: Vec<f64>,
    rng: ChaCha8Rng,
}

impl WeightedSampler {
    pub fn new(p: &[f64], seed: u64) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        if let Some(v) = p.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("bad weight {v}")));
        }
        let cumulative: Vec<f64> = p
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect();
        if !(*cumulative.last().unwrap() > 0.0) {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        Ok(Self {
            cumulative,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn uniform(n: usize, seed: u64) -> Result<Self> {
        Self::new(&vec![1.0; n], seed)
    }

    #[inline]
    pub fn sample(&mut self) -> usize {
        let total = *self.cumulative.last().unwrap();
        let t = self.rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= t);
        idx.min(self.cumulative.len() - 1)
    }
}

#[inline]
fn weighted_argmax(beta: &[f64], r: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, (b, v)) in beta.iter().zip(r).enumerate() {
        let val = b * v.abs();
        if val > best_val {
            best_val = val;
            best = j;
        }
    }
    best
}

/// Greedy picks in `O(log n)` per relaxation: a tournament tree over
/// `beta_j |v_j|`, where `v` is `r` or `r_hat`. After relaxing `i` only the entries
/// in column `i` of `A` change. Ties go to the lowest index, as in the linear scan.
pub(crate) struct GreedyTracker {
    beta: Vec<f64>,
    preconditioned: bool,
    /// Column pattern of `A` (rows of `A^T`).
    offsets: Vec<usize>,
    touched: Vec<usize>,
    keys: Vec<f64>,
    /// `tree[node]` is the winning index below `node`; leaves start at `leaves`.
    tree: Vec<usize>,
    leaves: usize,
}

impl GreedyTracker {
    /// `None` for non-greedy rules.
    pub(crate) fn for_rule(rule: &PickRule, a: &SparseMatrix, v: &IterationVectors) -> Option<Self> {
        let (beta, preconditioned) = match rule {
            PickRule::GreedyRaw(beta) => (beta, false),
            PickRule::GreedyPreconditioned(beta) => (beta, true),
            _ => return None,
        };
        let n = beta.len();
        let at = a.transpose();
        let leaves = n.next_power_of_two();
        let mut t = Self {
            beta: beta.clone(),
            preconditioned,
            offsets: at.row_offsets().to_vec(),
            touched: at.col_indices().to_vec(),
            keys: vec![f64::NEG_INFINITY; leaves],
            tree: vec![0; 2 * leaves],
            leaves,
        };
        t.rebuild(v);
        Some(t)
    }

    #[inline]
    fn key(&self, j: usize, v: &IterationVectors) -> f64 {
        let r = if self.preconditioned { v.r_hat[j] } else { v.r[j] };
        let k = self.beta[j] * r.abs();
        // The scan never selects a NaN entry; rank it last here too.
        if k.is_nan() {
            f64::NEG_INFINITY
        } else {
            k
        }
    }

    #[inline]
    fn winner(&self, left: usize, right: usize) -> usize {
        if self.keys[right] > self.keys[left] {
            right
        } else {
            left
        }
    }

    pub(crate) fn rebuild(&mut self, v: &IterationVectors) {
        for j in 0..self.leaves {
            self.keys[j] = if j < self.beta.len() { self.key(j, v) } else { f64::NEG_INFINITY };
            self.tree[self.leaves + j] = j;
        }
        for node in (1..self.leaves).rev() {
            self.tree[node] = self.winner(self.tree[2 * node], self.tree[2 * node + 1]);
        }
    }

    #[inline]
    fn update(&mut self, j: usize, v: &IterationVectors) {
        self.keys[j] = self.key(j, v);
        let mut node = (self.leaves + j) / 2;
        while node >= 1 {
            self.tree[node] = self.winner(self.tree[2 * node], self.tree[2 * node + 1]);
            node /= 2;
        }
    }

    #[inline]
    pub(crate) fn pick(&self) -> usize {
        self.tree[1]
    }

    /// Refreshes the keys touched by relaxing `i`, or all of them after an
    /// automatic resync.
    #[inline]
    pub(crate) fn after_relax(&mut self, i: usize, v: &IterationVectors) {
        if v.since_resync() == 0 {
            self.rebuild(v);
            return;
        }
        for idx in self.offsets[i]..self.offsets[i + 1] {
            let j = self.touched[idx];
            self.update(j, v);
        }
    }
}

/// Selects the component relaxed at global step `k` (0-based). Greedy ties go to
/// the lowest index.
pub fn pick_index(
    rule: &PickRule,
    v: &IterationVectors,
    sampler: Option<&mut WeightedSampler>,
    k: usize,
) -> usize {
    match rule {
        PickRule::Cyclic => k % v.x.len(),
        PickRule::Random(_) => sampler
            .expect("random pick rule needs a sampler")
            .sample(),
        PickRule::GreedyRaw(beta) => weighted_argmax(beta, &v.r),
        PickRule::GreedyPreconditioned(beta) => weighted_argmax(beta, &v.r_hat),
    }
}

/// A norm recorded once per sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceNorm {
    L2Residual,
    WeightedL1Residual(WeightVector),
    WeightedL1PrecResidual(WeightVector),
    /// `||x - x*||_A`; meaningful for symmetric positive definite `A`.
    EnergyError(Vec<f64>),
    L2Error(Vec<f64>),
}

impl TraceNorm {
    pub fn label(&self) -> &'static str {
        match self {
            TraceNorm::L2Residual => "l2_residual",
            TraceNorm::WeightedL1Residual(_) => "weighted_l1_residual",
            TraceNorm::WeightedL1PrecResidual(_) => "weighted_l1_prec_residual",
            TraceNorm::EnergyError(_) => "energy_error",
            TraceNorm::L2Error(_) => "l2_error",
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let len = match self {
            TraceNorm::L2Residual => n,
            TraceNorm::WeightedL1Residual(u) | TraceNorm::WeightedL1PrecResidual(u) => u.len(),
            TraceNorm::EnergyError(x) | TraceNorm::L2Error(x) => x.len(),
        };
        if len == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: n, got: len })
        }
    }

    /// Evaluates the norm; `r_hat` is `D^{-1} r` and `diff` is scratch space.
    fn evaluate(&self, a: &SparseMatrix, x: &[f64], r: &[f64], r_hat: &[f64], diff: &mut Vec<f64>) -> f64 {
        match self {
            TraceNorm::L2Residual => l2_norm(r),
            TraceNorm::WeightedL1Residual(u) => weighted_l1_unchecked(r, u),
            TraceNorm::WeightedL1PrecResidual(u) => weighted_l1_unchecked(r_hat, u),
            TraceNorm::L2Error(xs) => {
                diff.clear();
                diff.extend(x.iter().zip(xs).map(|(p, q)| p - q));
                l2_norm(diff)
            }
            TraceNorm::EnergyError(xs) => {
                diff.clear();
                diff.extend(x.iter().zip(xs).map(|(p, q)| p - q));
                let mut ad = vec![0.0; diff.len()];
                a.mul_vec_into(diff, &mut ad);
                ad.iter().zip(diff.iter()).map(|(p, q)| p * q).sum::<f64>().max(0.0).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub omega: f64,
    pub pick: PickRule,
    pub max_sweeps: usize,
    pub rtol: f64,
    pub seed: u64,
    pub trace_norms: Vec<TraceNorm>,
    pub stop_norm: TraceNorm,
}

impl RunConfig {
    /// Gauss-Seidel style defaults: `omega = 1`, stop on the relative 2-norm of the
    /// residual, trace only that norm.
    pub fn new(pick: PickRule, max_sweeps: usize, rtol: f64) -> Self {
        Self {
            omega: 1.0,
            pick,
            max_sweeps,
            rtol,
            seed: 0,
            trace_norms: vec![TraceNorm::L2Residual],
            stop_norm: TraceNorm::L2Residual,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_trace(mut self, norms: Vec<TraceNorm>) -> Self {
        self.trace_norms = norms;
        self
    }

    pub fn with_stop_norm(mut self, norm: TraceNorm) -> Self {
        self.stop_norm = norm;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
        }
        if !(self.rtol > 0.0) {
            return Err(Error::InvalidArgument(format!("rtol must be positive, got {}", self.rtol)));
        }
        self.pick.validate(n)?;
        self.stop_norm.validate(n)?;
        self.trace_norms.iter().try_for_each(|t| t.validate(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Tolerance,
    MaxSweeps,
    Diverged,
}

/// Per-sweep history of one run. `records[s][t]` is norm `t` after `s` sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub labels: Vec<String>,
    pub records: Vec<Vec<f64>>,
    pub relaxations: usize,
    pub terminated: Termination,
    pub seed: u64,
    pub x: Vec<f64>,
}

impl RunTrace {
    pub fn sweeps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Column `t` of the records.
    pub fn series(&self, t: usize) -> Vec<f64> {
        self.records.iter().map(|r| r[t]).collect()
    }
}

/// Step-by-step relaxation engine shared by the drivers; exposes the state after
/// every single relaxation.
pub struct Relaxation<'a, S: Splitting> {
    splitting: &'a S,
    b: &'a [f64],
    state: IterationVectors,
    pick: PickRule,
    sampler: Option<WeightedSampler>,
    greedy: Option<GreedyTracker>,
    k: usize,
}

impl<'a, S: Splitting> Relaxation<'a, S> {
    pub fn new(splitting: &'a S, b: &'a [f64], x0: &[f64], pick: PickRule, seed: u64) -> Result<Self> {
        let n = splitting.dim();
        pick.validate(n)?;
        let state = IterationVectors::new(splitting, b, x0)?;
        let sampler = match &pick {
            PickRule::Random(p) => Some(WeightedSampler::new(p, seed)?),
            _ => None,
        };
        let greedy = GreedyTracker::for_rule(&pick, splitting.matrix(), &state);
        Ok(Self {
            splitting,
            b,
            state,
            pick,
            sampler,
            greedy,
            k: 0,
        })
    }

    /// Performs one relaxation and returns the relaxed index.
    #[inline]
    pub fn step(&mut self) -> usize {
        let i = match &self.greedy {
            Some(g) => g.pick(),
            None => pick_index(&self.pick, &self.state, self.sampler.as_mut(), self.k),
        };
        self.splitting.relax(&mut self.state, self.b, i);
        if let Some(g) = self.greedy.as_mut() {
            g.after_relax(i, &self.state);
        }
        self.k += 1;
        i
    }

    pub fn sweep(&mut self) {
        for _ in 0..self.splitting.dim() {
            self.step();
        }
    }

    pub fn state(&self) -> &IterationVectors {
        &self.state
    }

    pub fn resync(&mut self) {
        self.splitting.resync(&mut self.state, self.b);
        if let Some(g) = self.greedy.as_mut() {
            g.rebuild(&self.state);
        }
    }

    pub fn relaxations(&self) -> usize {
        self.k
    }

    pub fn into_state(self) -> IterationVectors {
        self.state
    }
}

struct Recorder<'c> {
    cfg: &'c RunConfig,
    records: Vec<Vec<f64>>,
    initial_stop: f64,
    scratch: Vec<f64>,
}

impl<'c> Recorder<'c> {
    fn new(cfg: &'c RunConfig) -> Self {
        Self {
            cfg,
            records: Vec::with_capacity(cfg.max_sweeps + 1),
            initial_stop: f64::NAN,
            scratch: Vec::new(),
        }
    }

    /// Records one row; returns the stopping norm.
    fn record(&mut self, a: &SparseMatrix, x: &[f64], r: &[f64], r_hat: &[f64]) -> f64 {
        let row = self
            .cfg
            .trace_norms
            .iter()
            .map(|t| t.evaluate(a, x, r, r_hat, &mut self.scratch))
            .collect();
        self.records.push(row);
        let stop = self.cfg.stop_norm.evaluate(a, x, r, r_hat, &mut self.scratch);
        if self.records.len() == 1 {
            self.initial_stop = stop;
        }
        stop
    }

    fn converged(&self, stop: f64) -> bool {
        stop <= self.cfg.rtol * self.initial_stop
    }

    fn finish(self, relaxations: usize, terminated: Termination, x: Vec<f64>) -> RunTrace {
        RunTrace {
            labels: self.cfg.trace_norms.iter().map(|t| t.label().to_string()).collect(),
            records: self.records,
            relaxations,
            terminated,
            seed: self.cfg.seed,
            x,
        }
    }
}

/// Runs cyclic / greedy / randomized relaxation on the relaxed Jacobi splitting of
/// `a` until the stopping norm falls below `rtol` times its initial value.
pub fn run_relaxation(a: &SparseMatrix, b: &[f64], x0: &[f64], cfg: &RunConfig) -> Result<RunTrace> {
    let splitting = JacobiSplitting::new(a, cfg.omega)?;
    run_with_splitting(&splitting, b, x0, cfg)
}

pub fn run_with_splitting<S: Splitting>(
    splitting: &S,
    b: &[f64],
    x0: &[f64],
    cfg: &RunConfig,
) -> Result<RunTrace> {
    let n = splitting.dim();
    cfg.validate(n)?;
    let a = splitting.matrix();
    let mut engine = Relaxation::new(splitting, b, x0, cfg.pick.clone(), cfg.seed)?;
    let mut rec = Recorder::new(cfg);

    let s = engine.state();
    let stop = rec.record(a, &s.x, &s.r, &s.r_hat);
    if rec.converged(stop) {
        let x = engine.state().x.clone();
        return Ok(rec.finish(0, Termination::Tolerance, x));
    }
    for _ in 0..cfg.max_sweeps {
        engine.sweep();
        engine.resync();
        let s = engine.state();
        if !s.is_finite() {
            let x = s.x.clone();
            let relaxations = engine.relaxations();
            return Err(Error::Diverged(Box::new(rec.finish(relaxations, Termination::Diverged, x))));
        }
        let stop = rec.record(a, &s.x, &s.r, &s.r_hat);
        if rec.converged(stop) {
            let relaxations = engine.relaxations();
            return Ok(rec.finish(relaxations, Termination::Tolerance, engine.into_state().x));
        }
    }
    let relaxations = engine.relaxations();
    Ok(rec.finish(relaxations, Termination::MaxSweeps, engine.into_state().x))
}

/// Independent seeded runs (`seed_base + r` for run `r`), executed in parallel.
pub fn run_ensemble(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    cfg: &RunConfig,
    runs: usize,
    seed_base: u64,
) -> Result<Vec<RunTrace>> {
    let splitting = JacobiSplitting::new(a, cfg.omega)?;
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = cfg.clone().with_seed(seed_base + r as u64);
            run_with_splitting(&splitting, b, x0, &cfg)
        })
        .collect()
}

/// Orthogonal projection of `x` onto the hyperplane of row `i`:
/// `x <- x + (b_i - a_i^T x) / ||a_i||^2 a_i`.
pub fn kaczmarz_step(a: &SparseMatrix, b: &[f64], x: &mut [f64], i: usize) -> Result<()> {
    let n = a.n_rows();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, dim: n });
    }
    if x.len() != a.n_cols() || b.len() != n {
        return Err(Error::DimensionMismatch { expected: a.n_cols(), got: x.len() });
    }
    let (cols, vals) = a.row(i);
    let norm_sq: f64 = vals.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(Error::ZeroRow { row: i });
    }
    kaczmarz_project(cols, vals, norm_sq, b[i], x);
    Ok(())
}

#[inline]
fn kaczmarz_project(cols: &[usize], vals: &[f64], norm_sq: f64, b_i: f64, x: &mut [f64]) {
    let dot: f64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
    let t = (b_i - dot) / norm_sq;
    for (&j, &v) in cols.iter().zip(vals) {
        x[j] += t * v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KaczmarzMode {
    Cyclic,
    /// Rows drawn with probability `||a_i||^2 / ||A||_F^2`.
    Randomized,
}

/// Kaczmarz row projections. `cfg.pick` and `cfg.omega` are ignored; everything
/// else (sweeps, tolerance, seed, traced norms) behaves as in [`run_relaxation`].
pub fn run_kaczmarz(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    mode: KaczmarzMode,
    cfg: &RunConfig,
) -> Result<RunTrace> {
    let n = a.require_square()?;
    let mut check = cfg.clone();
    check.pick = PickRule::Cyclic;
    check.validate(n)?;
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len().min(x0.len()) });
    }
    let row_norms = a.row_norms_sq();
    if let Some(i) = row_norms.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroRow { row: i });
    }
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut sampler = match mode {
        KaczmarzMode::Randomized => Some(WeightedSampler::new(&row_norms, cfg.seed)?),
        KaczmarzMode::Cyclic => None,
    };

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    let mut r_hat = vec![0.0; n];
    let refresh = |x: &[f64], r: &mut [f64], r_hat: &mut [f64]| {
        a.mul_vec_into(x, r);
        for i in 0..n {
            r[i] = b[i] - r[i];
            // Only used by the preconditioned-residual norm; a zero diagonal has no
            // meaningful D^{-1} scaling, so it leaves the raw residual.
            r_hat[i] = if diag[i] != 0.0 { r[i] / diag[i] } else { r[i] };
        }
    };

    let mut rec = Recorder::new(cfg);
    refresh(&x, &mut r, &mut r_hat);
    let stop = rec.record(a, &x, &r, &r_hat);
    if rec.converged(stop) {
        return Ok(rec.finish(0, Termination::Tolerance, x));
    }
    let mut k = 0usize;
    for _ in 0..cfg.max_sweeps {
        for _ in 0..n {
            let i = match sampler.as_mut() {
                Some(s) => s.sample(),
                None => k % n,
            };
            let (cols, vals) = a.row(i);
            kaczmarz_project(cols, vals, row_norms[i], b[i], &mut x);
            k += 1;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged(Box::new(rec.finish(k, Termination::Diverged, x))));
        }
        refresh(&x, &mut r, &mut r_hat);
        let stop = rec.record(a, &x, &r, &r_hat);
        if rec.converged(stop) {
            return Ok(rec.finish(k, Termination::Tolerance, x));
        }
    }
    Ok(rec.finish(k, Termination::MaxSweeps, x))
}

/// Kaczmarz ensemble over seeds `seed_base + r`.
pub fn run_kaczmarz_ensemble(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    mode: KaczmarzMode,
    cfg: &RunConfig,
    runs: usize,
    seed_base: u64,
) -> Result<Vec<RunTrace>> {
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = cfg.clone().with_seed(seed_base + r as u64);
            run_kaczmarz(a, b, x0, mode, &cfg)
        })
        .collect()
}

/// Per-sweep arithmetic mean of norm `t` across runs of possibly different length;
/// runs that stopped early contribute their last value.
pub fn mean_series(traces: &[RunTrace], t: usize) -> Vec<f64> {
    let len = traces.iter().map(|tr| tr.records.len()).max().unwrap_or(0);
    (0..len)
        .map(|s| {
            let sum: f64 = traces
                .iter()
                .map(|tr| tr.records[s.min(tr.records.len() - 1)][t])
                .sum();
            sum / traces.len() as f64
        })
        .collect()
}
