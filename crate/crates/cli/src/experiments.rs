//! The experiment drivers behind `--experiment`.

use std::path::PathBuf;

use serde::Serialize;

use relaxkit::bounds::{
    h_matrix_bounds, hpd_alpha, hpd_optimal_probabilities, kaczmarz_alpha, relaxed_alpha,
};
use relaxkit::mm::read_matrix_market_file;
use relaxkit::multigrid::{cycles_to_tolerance, GridHierarchy, SmootherConfig, SmootherScheme};
use relaxkit::problems::{build_system, dominance_report, manufactured_solution, DominanceReport};
use relaxkit::solvers::{run_ensemble, run_kaczmarz, run_kaczmarz_ensemble, run_relaxation};
use relaxkit::spectral::{
    h_matrix_certificate, lambda_min_hpd, perturbed_perron_vector, HMatrixCertificate, DEFAULT_EIG_TOL,
    DEFAULT_PERRON_MAX_ITER, DEFAULT_PERRON_TOL,
};
use relaxkit::sparse::matvec;
use relaxkit::{
    BoundReport, JacobiSplitting, KaczmarzMode, PickRule, ResidualKind, RunConfig, RunTrace, Selection,
    SparseMatrix, TraceNorm, WeightVector,
};

use crate::config::{Experiment, ExperimentConfig, PickArg, ProblemSource, SchemeArg, SolverSpec};
use crate::output::{emit_csv, emit_multigrid_csv, emit_runs_csv, write_json, MultigridRow, SchemeTraces};
use crate::CliError;

/// Slack granted to the Perron-vector perturbation in the relaxed bound.
const PERRON_EPS: f64 = 1e-10;
const TRACE_RTOL: f64 = 1e-12;
const MULTIGRID_TOL: f64 = 1e-6;

/// Files written and one summary line per scheme.
#[derive(Debug, Default)]
pub struct Summary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

struct System {
    a: SparseMatrix,
    b: Vec<f64>,
    /// Exact solution.
    z: Vec<f64>,
}

fn load_system(source: &ProblemSource) -> Result<System, CliError> {
    match source {
        ProblemSource::Generated(spec) => {
            let p = build_system(spec)?;
            Ok(System { a: p.a, b: p.b, z: p.z })
        }
        ProblemSource::File(path) => {
            let a = read_matrix_market_file(path).map_err(|e| match e {
                relaxkit::Error::Io(io) => CliError::io(path, io),
                other => CliError::Config(format!("{}: {other}", path.display())),
            })?;
            if !a.is_square() {
                return Err(CliError::Config(format!("{}: matrix is not square", path.display())));
            }
            let z = vec![1.0; a.n_rows()];
            let b = matvec(&a, &z)?;
            Ok(System { a, b, z })
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    match cfg.experiment {
        Experiment::MultigridStudy => multigrid_study(cfg),
        Experiment::Audit => audit(cfg),
        _ => trace_experiment(cfg),
    }
}

/// How one solver is run and which bound applies to it.
struct Plan {
    pick: PickRule,
    /// Traced norm the bound refers to, the report and whether the bound is on
    /// the square of that norm.
    bound: Option<(&'static str, BoundReport, bool)>,
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Energy-norm error; random picks with uniform or diagonal-proportional
/// probabilities, greedy picks with unit or `a_ii^{-1/2}` weights.
fn hpd_plan(solver: &SolverSpec, diag: &[f64], lambda_min: f64) -> Result<Plan, CliError> {
    let n = diag.len();
    let (pick, selection) = match solver.pick {
        PickArg::Cyclic => (PickRule::Cyclic, None),
        PickArg::Uniform => (PickRule::Random(uniform(n)), Some(Selection::Random(uniform(n)))),
        PickArg::Optimal => {
            let p = hpd_optimal_probabilities(diag)?;
            (PickRule::Random(p.clone()), Some(Selection::Random(p)))
        }
        PickArg::GreedyStd => (PickRule::GreedyRaw(vec![1.0; n]), Some(Selection::Greedy(vec![1.0; n]))),
        PickArg::GreedyOpt => {
            let beta: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
            (PickRule::GreedyRaw(beta.clone()), Some(Selection::Greedy(beta)))
        }
    };
    let bound = match selection {
        Some(sel) => Some(("energy_error", hpd_alpha(solver.omega, lambda_min, diag, &sel)?, true)),
        None => None,
    };
    Ok(Plan { pick, bound })
}

/// Unit-weighted l1 norm of the residual `b - A x` for `omega = 1`.
fn hmatrix_plan(solver: &SolverSpec, a: &SparseMatrix) -> Result<Plan, CliError> {
    let n = a.n_rows();
    let u = WeightVector::ones(n);
    let report = |sel: &Selection| h_matrix_bounds(a, &u, sel, ResidualKind::Original);
    let (pick, selection) = match solver.pick {
        PickArg::Cyclic => (PickRule::Cyclic, None),
        PickArg::Uniform => (PickRule::Random(uniform(n)), Some(Selection::Random(uniform(n)))),
        PickArg::Optimal => match report(&Selection::Random(uniform(n))) {
            Ok(r) => (PickRule::Random(r.optimal_weights.clone()), Some(Selection::Random(r.optimal_weights))),
            Err(e) => return Err(e.into()),
        },
        PickArg::GreedyStd => (PickRule::GreedyRaw(vec![1.0; n]), Some(Selection::Greedy(vec![1.0; n]))),
        PickArg::GreedyOpt => match report(&Selection::Greedy(vec![1.0; n])) {
            Ok(r) => (PickRule::GreedyRaw(r.optimal_weights.clone()), Some(Selection::Greedy(r.optimal_weights))),
            Err(e) => return Err(e.into()),
        },
    };
    let bound = match selection {
        Some(sel) => Some(("weighted_l1_residual", report(&sel)?, false)),
        None => None,
    };
    Ok(Plan { pick, bound })
}

/// Relaxed splitting: the preconditioned residual in the norm weighted by the
/// (perturbed) left Perron vector `w` of `|D^{-1} B|`. Uniform probabilities are
/// optimal here, so `optimal` and `uniform` coincide.
fn relaxed_plan(solver: &SolverSpec, n: usize, perron_rho: f64, w: &WeightVector) -> Result<Plan, CliError> {
    let pick = match solver.pick {
        PickArg::Cyclic => PickRule::Cyclic,
        PickArg::Uniform | PickArg::Optimal => PickRule::Random(uniform(n)),
        PickArg::GreedyStd => PickRule::GreedyRaw(vec![1.0; n]),
        PickArg::GreedyOpt => PickRule::GreedyPreconditioned(w.as_slice().to_vec()),
    };
    let bound = if solver.pick.is_random() {
        Some(("weighted_l1_prec_residual", relaxed_alpha(perron_rho, solver.omega, &uniform(n), 0.0)?, false))
    } else {
        None
    };
    Ok(Plan { pick, bound })
}

fn perron_weights(a: &SparseMatrix) -> Result<(f64, WeightVector), CliError> {
    let h_abs = JacobiSplitting::new(a, 1.0)?.iteration_matrix().abs();
    let res = perturbed_perron_vector(&h_abs, PERRON_EPS, DEFAULT_PERRON_TOL, DEFAULT_PERRON_MAX_ITER)?;
    let w = res.weights()?;
    Ok((res.rho, w))
}

/// Bound curve `c (1 - alpha)^{s n}` (or `^{s n / 2}` for squared norms) scaled by
/// the initial value `c` of the traced norm.
fn bound_curve(report: &BoundReport, squared: bool, initial: f64, sweeps: usize) -> Vec<f64> {
    (0..=sweeps)
        .map(|s| {
            let f = if squared { report.norm_decay_from_squared(s) } else { report.norm_decay(s) };
            initial * f
        })
        .collect()
}

fn trace_experiment(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let sys = load_system(&cfg.problem)?;
    let n = sys.a.n_rows();
    let x0 = vec![0.0; n];
    let needs_gs = cfg.solvers.iter().any(|s| s.scheme == SchemeArg::GaussSeidel);
    let needs_relaxed = cfg.experiment == Experiment::HmatrixConvection
        && cfg.solvers.iter().any(|s| s.scheme == SchemeArg::GaussSeidel && s.omega != 1.0);

    let norms: Vec<TraceNorm> = match cfg.experiment {
        Experiment::HpdDiffusion => vec![TraceNorm::EnergyError(sys.z.clone())],
        Experiment::HmatrixConvection => vec![TraceNorm::WeightedL1Residual(WeightVector::ones(n))],
        _ => vec![TraceNorm::L2Error(sys.z.clone()), TraceNorm::L2Residual],
    };

    let lambda_min = if cfg.experiment == Experiment::HpdDiffusion && needs_gs {
        if !sys.a.is_symmetric(1e-12) {
            return Err(CliError::Config("hpd_diffusion needs a symmetric matrix (use --sigma 0 or omit it)".into()));
        }
        Some(lambda_min_hpd(&sys.a, DEFAULT_EIG_TOL, 10 * n + 1000)?)
    } else {
        None
    };
    let relaxed = if needs_relaxed { Some(perron_weights(&sys.a)?) } else { None };
    let diag = sys.a.diagonal()?;

    let mut summary = Summary::default();
    let mut all = Vec::new();
    let mut reports = Vec::new();
    for solver in &cfg.solvers {
        let label = solver.label();
        let plan = match (solver.scheme, cfg.experiment) {
            (SchemeArg::Kaczmarz, _) => {
                let bound = if solver.pick.is_random() && norms.iter().any(|t| t.label() == "l2_error") {
                    Some(("l2_error", kaczmarz_alpha(&sys.a)?, true))
                } else {
                    None
                };
                Plan { pick: PickRule::Cyclic, bound }
            }
            (SchemeArg::GaussSeidel, Experiment::HpdDiffusion) => {
                hpd_plan(solver, &diag, lambda_min.expect("computed for Gauss-Seidel"))?
            }
            (SchemeArg::GaussSeidel, Experiment::HmatrixConvection) if solver.omega != 1.0 => {
                let (rho, w) = relaxed.as_ref().expect("computed for omega != 1");
                relaxed_plan(solver, n, *rho, w)?
            }
            (SchemeArg::GaussSeidel, Experiment::HmatrixConvection) => hmatrix_plan(solver, &sys.a)?,
            // Plain comparison: picks as in the H-matrix experiment, no bound on the
            // 2-norms traced here.
            (SchemeArg::GaussSeidel, _) => {
                let mut plan = hmatrix_plan(solver, &sys.a)?;
                plan.bound = None;
                plan
            }
        };

        let mut trace_norms = norms.clone();
        if let (Experiment::HmatrixConvection, Some((_, w))) = (cfg.experiment, relaxed.as_ref()) {
            if solver.omega != 1.0 {
                trace_norms.push(TraceNorm::WeightedL1PrecResidual(w.clone()));
            }
        }
        let stop = trace_norms[0].clone();
        let run_cfg = RunConfig::new(plan.pick.clone(), cfg.sweeps, cfg.rtol.unwrap_or(TRACE_RTOL))
            .with_omega(solver.omega)
            .with_trace(trace_norms)
            .with_stop_norm(stop)
            .with_seed(cfg.seed_base);
        let random = solver.pick.is_random();
        let runs: Vec<RunTrace> = match (solver.scheme, random) {
            (SchemeArg::GaussSeidel, true) => run_ensemble(&sys.a, &sys.b, &x0, &run_cfg, cfg.runs, cfg.seed_base)?,
            (SchemeArg::GaussSeidel, false) => vec![run_relaxation(&sys.a, &sys.b, &x0, &run_cfg)?],
            (SchemeArg::Kaczmarz, true) => run_kaczmarz_ensemble(
                &sys.a, &sys.b, &x0, KaczmarzMode::Randomized, &run_cfg, cfg.runs, cfg.seed_base,
            )?,
            (SchemeArg::Kaczmarz, false) => vec![run_kaczmarz(&sys.a, &sys.b, &x0, KaczmarzMode::Cyclic, &run_cfg)?],
        };

        let mut st = SchemeTraces::new(label.clone(), runs);
        let mean_final = st.runs.iter().map(|r| r.records.last().unwrap()[0] / r.records[0][0]).sum::<f64>()
            / st.runs.len() as f64;
        let mut line = format!(
            "{label}: {} run(s), mean relative {} {mean_final:.3e} after {} sweep(s)",
            st.runs.len(),
            st.labels[0],
            st.runs.iter().map(|r| r.sweeps()).max().unwrap_or(0)
        );
        if let Some((norm, report, squared)) = plan.bound {
            if let Some(t) = st.labels.iter().position(|l| l == norm) {
                let initial = st.runs[0].records[0][t];
                let curve = bound_curve(&report, squared, initial, cfg.sweeps);
                st = st.with_bound(norm, curve);
                line.push_str(&format!(", alpha = {:.4e}", report.alpha));
            }
            reports.push((label.clone(), report));
        }
        summary.lines.push(line);
        all.push(st);
    }

    let traces_path = cfg.out.join("traces.csv");
    emit_csv(&all, &traces_path)?;
    summary.files.push(traces_path);
    let runs_path = cfg.out.join("runs.csv");
    emit_runs_csv(&all, &runs_path)?;
    summary.files.push(runs_path);
    for (label, report) in reports {
        let path = cfg.out.join(format!("bound_{label}.json"));
        write_json(&report, &path)?;
        summary.files.push(path);
    }
    Ok(summary)
}

fn smoother_scheme(pick: PickArg) -> SmootherScheme {
    match pick {
        PickArg::Cyclic => SmootherScheme::Cyclic,
        PickArg::Uniform | PickArg::Optimal => SmootherScheme::Randomized,
        PickArg::GreedyStd | PickArg::GreedyOpt => SmootherScheme::GreedyPreconditioned,
    }
}

/// V-cycles to reduce the residual of the Poisson system with a manufactured
/// solution by the tolerance, for every grid, smoother and smoothing count.
fn multigrid_study(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let mut schemes: Vec<SmootherScheme> = Vec::new();
    for s in &cfg.solvers {
        let scheme = smoother_scheme(s.pick);
        if !schemes.contains(&scheme) {
            schemes.push(scheme);
        }
    }
    let tol = cfg.rtol.unwrap_or(MULTIGRID_TOL);
    let mut rows = Vec::new();
    let mut summary = Summary::default();
    for &n in &cfg.grids {
        let h = GridHierarchy::new(n)?;
        let b = matvec(&h.finest().a, &manufactured_solution(n))?;
        for &scheme in &schemes {
            for &s in &cfg.smoothing {
                let sm = SmootherConfig::new(scheme, s).with_seed(cfg.seed_base);
                let report = cycles_to_tolerance(&h, &b, sm, tol)?;
                summary.lines.push(format!(
                    "N = {n}, {} smoother, s = {s}: {} cycles ({:.3e})",
                    scheme.name(),
                    report.cycles,
                    report.final_relative_residual
                ));
                rows.push(MultigridRow {
                    n,
                    scheme: scheme.name().to_string(),
                    s,
                    cycles: report.cycles,
                    final_relative_residual: report.final_relative_residual,
                });
            }
        }
    }
    let path = cfg.out.join("multigrid.csv");
    emit_multigrid_csv(&rows, &path)?;
    summary.files.push(path);
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct AuditReport {
    pub n: usize,
    pub nnz: usize,
    pub symmetric: bool,
    pub positive_diagonal: bool,
    /// Symmetric with positive smallest eigenvalue.
    pub hpd: bool,
    pub lambda_min: Option<f64>,
    /// Energy-norm rate with diagonal-proportional probabilities.
    pub hpd_alpha_opt: Option<f64>,
    pub dominance: Option<DominanceReport>,
    pub h_matrix: Option<HMatrixCertificate>,
    /// Optimal weighted-l1 rate for the certificate weights.
    pub h_matrix_alpha_opt: Option<f64>,
    /// Spectral radius of `|D^{-1} B|`.
    pub perron_rho: Option<f64>,
    pub kaczmarz_alpha: Option<f64>,
    pub notes: Vec<String>,
}

fn audit(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let sys = load_system(&cfg.problem)?;
    let a = &sys.a;
    let n = a.n_rows();
    let mut notes = Vec::new();
    let mut note = |what: &str, e: relaxkit::Error| notes.push(format!("{what}: {e}"));

    let symmetric = a.is_symmetric(1e-12 * a.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let diag = match a.diagonal() {
        Ok(d) => Some(d),
        Err(e) => {
            note("diagonal", e);
            None
        }
    };
    let positive_diagonal = diag.as_ref().is_some_and(|d| d.iter().all(|v| *v > 0.0));
    let lambda_min = if symmetric && positive_diagonal {
        match lambda_min_hpd(a, DEFAULT_EIG_TOL, 10 * n + 1000) {
            Ok(l) => Some(l),
            Err(e) => {
                note("smallest eigenvalue", e);
                None
            }
        }
    } else {
        None
    };
    let hpd = lambda_min.is_some_and(|l| l > 0.0);
    let hpd_alpha_opt = match (hpd, &diag) {
        (true, Some(d)) => hpd_optimal_probabilities(d)
            .and_then(|p| hpd_alpha(1.0, lambda_min.unwrap(), d, &Selection::Random(p)))
            .map(|r| r.alpha_opt)
            .map_err(|e| note("hpd bound", e))
            .ok(),
        _ => None,
    };

    let certificate = match &diag {
        Some(_) => h_matrix_certificate(a, DEFAULT_PERRON_TOL, DEFAULT_PERRON_MAX_ITER)
            .map_err(|e| note("H-matrix certificate", e))
            .ok(),
        None => None,
    };
    let cert_u = certificate
        .as_ref()
        .and_then(|c| c.u.clone())
        .and_then(|u| WeightVector::new(u).ok());
    let dominance = match &diag {
        Some(_) => dominance_report(a, cert_u.as_ref()).map_err(|e| note("dominance", e)).ok(),
        None => None,
    };
    let h_matrix_alpha_opt = cert_u.as_ref().and_then(|u| {
        h_matrix_bounds(a, u, &Selection::Random(uniform(n)), ResidualKind::Original)
            .map(|r| r.alpha_opt)
            .map_err(|e| note("H-matrix bound", e))
            .ok()
    });
    let perron_rho = match &diag {
        Some(_) => JacobiSplitting::new(a, 1.0)
            .and_then(|s| {
                perturbed_perron_vector(&s.iteration_matrix().abs(), PERRON_EPS, DEFAULT_PERRON_TOL, DEFAULT_PERRON_MAX_ITER)
            })
            .map(|r| r.rho)
            .map_err(|e| note("Perron vector", e))
            .ok(),
        None => None,
    };
    let kaczmarz = kaczmarz_alpha(a).map(|r| r.alpha).map_err(|e| note("Kaczmarz rate", e)).ok();

    let report = AuditReport {
        n,
        nnz: a.nnz(),
        symmetric,
        positive_diagonal,
        hpd,
        lambda_min,
        hpd_alpha_opt,
        dominance,
        h_matrix: certificate,
        h_matrix_alpha_opt,
        perron_rho,
        kaczmarz_alpha: kaczmarz,
        notes,
    };
    let path = cfg.out.join("audit.json");
    write_json(&report, &path)?;
    let mut summary = Summary::default();
    summary.lines.push(format!(
        "n = {n}, hpd = {hpd}, lambda_min = {:?}, alpha_opt = {:?}, H-matrix = {:?}, Perron rho = {:?}",
        report.lambda_min,
        report.hpd_alpha_opt,
        report.h_matrix.as_ref().map(|c| c.is_h_matrix),
        report.perron_rho
    ));
    summary.files.push(path);
    Ok(summary)
}
