//! Command-line flags, the JSON config file that mirrors them, and the validated
//! experiment configuration built from both (flags win).

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use relaxkit::problems::{Diffusion, ProblemSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[value(name = "hpd_diffusion")]
    HpdDiffusion,
    #[value(name = "hmatrix_convection")]
    HmatrixConvection,
    #[value(name = "kaczmarz_compare")]
    KaczmarzCompare,
    #[value(name = "multigrid_study")]
    MultigridStudy,
    #[value(name = "audit")]
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionArg {
    Const,
    Var,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    GaussSeidel,
    Kaczmarz,
}

/// `cyclic`, random with uniform or optimal probabilities, or greedy with the
/// standard (unit) or optimal weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PickArg {
    Cyclic,
    Uniform,
    Optimal,
    GreedyStd,
    GreedyOpt,
}

impl PickArg {
    pub fn name(self) -> &'static str {
        match self {
            PickArg::Cyclic => "cyclic",
            PickArg::Uniform => "uniform",
            PickArg::Optimal => "optimal",
            PickArg::GreedyStd => "greedy-std",
            PickArg::GreedyOpt => "greedy-opt",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, PickArg::Uniform | PickArg::Optimal)
    }
}

/// One entry of the solver grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub scheme: SchemeArg,
    #[serde(default = "default_omega")]
    pub omega: f64,
    pub pick: PickArg,
}

fn default_omega() -> f64 {
    1.0
}

impl SolverSpec {
    pub fn label(&self) -> String {
        let base = match self.scheme {
            SchemeArg::GaussSeidel => format!("gs-{}", self.pick.name()),
            SchemeArg::Kaczmarz => format!(
                "kaczmarz-{}",
                if self.pick == PickArg::Cyclic { "cyclic" } else { "randomized" }
            ),
        };
        if self.omega == 1.0 {
            base
        } else {
            format!("{base}-omega{}", self.omega)
        }
    }
}

/// Flags; every field may also come from the `--config` JSON file.
#[derive(Debug, Clone, Default, Parser, Serialize, Deserialize)]
#[command(name = "relaxkit", version, about = "Relaxation solver experiments")]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// Interior grid points per direction.
    #[arg(long)]
    pub n: Option<usize>,
    /// Convection strength.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub diffusion: Option<DiffusionArg>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long, value_enum)]
    pub pick: Option<PickArg>,
    /// Seeded runs per randomized scheme.
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Run `r` uses seed `seed + r`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Matrix Market file used instead of a generated problem.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// JSON file with any of these settings.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Smoothing counts for the multigrid study (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub smoothing: Option<Vec<f64>>,
    /// Grid sizes for the multigrid study (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub grids: Option<Vec<usize>>,
    /// Relative stopping tolerance on the traced stopping norm.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Solver grid; config file only.
    #[arg(skip)]
    pub solvers: Option<Vec<SolverSpec>>,
}

impl Flags {
    /// Fields set in `self` override those in `base`.
    fn over(self, base: Flags) -> Flags {
        Flags {
            experiment: self.experiment.or(base.experiment),
            n: self.n.or(base.n),
            sigma: self.sigma.or(base.sigma),
            diffusion: self.diffusion.or(base.diffusion),
            omega: self.omega.or(base.omega),
            scheme: self.scheme.or(base.scheme),
            pick: self.pick.or(base.pick),
            runs: self.runs.or(base.runs),
            sweeps: self.sweeps.or(base.sweeps),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            matrix: self.matrix.or(base.matrix),
            config: self.config,
            smoothing: self.smoothing.or(base.smoothing),
            grids: self.grids.or(base.grids),
            rtol: self.rtol.or(base.rtol),
            solvers: self.solvers.or(base.solvers),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Generated(ProblemSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub problem: ProblemSource,
    pub solvers: Vec<SolverSpec>,
    pub runs: usize,
    pub sweeps: usize,
    pub seed_base: u64,
    /// Relative stopping tolerance; experiment-specific default when unset.
    pub rtol: Option<f64>,
    pub out: PathBuf,
    pub smoothing: Vec<f64>,
    pub grids: Vec<usize>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load_config_file(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("bad config {}: {e}", path.display())))
}

fn default_solvers(experiment: Experiment) -> Vec<SolverSpec> {
    let gs = |pick| SolverSpec { scheme: SchemeArg::GaussSeidel, omega: 1.0, pick };
    let kz = |pick| SolverSpec { scheme: SchemeArg::Kaczmarz, omega: 1.0, pick };
    match experiment {
        Experiment::HpdDiffusion | Experiment::HmatrixConvection => vec![
            gs(PickArg::Cyclic),
            gs(PickArg::Uniform),
            gs(PickArg::Optimal),
            gs(PickArg::GreedyStd),
            gs(PickArg::GreedyOpt),
        ],
        Experiment::KaczmarzCompare => vec![
            gs(PickArg::Cyclic),
            gs(PickArg::Optimal),
            kz(PickArg::Cyclic),
            kz(PickArg::Optimal),
        ],
        Experiment::MultigridStudy => vec![gs(PickArg::Cyclic), gs(PickArg::Uniform)],
        Experiment::Audit => Vec::new(),
    }
}

impl ExperimentConfig {
    /// Merges the config file (if any) under the flags and validates the result.
    pub fn from_flags(flags: Flags) -> Result<Self, CliError> {
        let flags = match &flags.config {
            Some(path) => {
                let file = load_config_file(path)?;
                flags.over(file)
            }
            None => flags,
        };
        let experiment = flags
            .experiment
            .ok_or_else(|| config_err("--experiment is required"))?;

        let problem = match &flags.matrix {
            Some(path) => ProblemSource::File(path.clone()),
            None => {
                let default_n = 100;
                let mut spec = ProblemSpec::new(flags.n.unwrap_or(default_n));
                spec = spec.with_diffusion(match flags.diffusion.unwrap_or(DiffusionArg::Const) {
                    DiffusionArg::Const => Diffusion::Constant,
                    DiffusionArg::Var => Diffusion::Variable,
                });
                let sigma = match experiment {
                    Experiment::HmatrixConvection | Experiment::KaczmarzCompare => Some(flags.sigma.unwrap_or(1.0)),
                    _ => flags.sigma,
                };
                if let Some(s) = sigma {
                    spec = spec.with_convection(s);
                }
                spec.validate().map_err(|e| config_err(e.to_string()))?;
                ProblemSource::Generated(spec)
            }
        };

        let solvers = match (&flags.solvers, flags.scheme, flags.pick, flags.omega) {
            (Some(list), _, _, _) => list.clone(),
            (None, None, None, None) => default_solvers(experiment),
            (None, scheme, pick, omega) => vec![SolverSpec {
                scheme: scheme.unwrap_or(SchemeArg::GaussSeidel),
                omega: omega.unwrap_or(1.0),
                pick: pick.unwrap_or(PickArg::Optimal),
            }],
        };
        for s in &solvers {
            if !(s.omega > 0.0 && s.omega < 2.0) {
                return Err(config_err(format!("omega = {} outside (0, 2)", s.omega)));
            }
            if s.scheme == SchemeArg::Kaczmarz && !matches!(s.pick, PickArg::Cyclic | PickArg::Optimal) {
                return Err(config_err("Kaczmarz supports --pick cyclic or optimal (row-norm probabilities)"));
            }
            if s.scheme == SchemeArg::Kaczmarz && s.omega != 1.0 {
                return Err(config_err("Kaczmarz takes no relaxation parameter"));
            }
        }

        let runs = flags.runs.unwrap_or(10);
        if runs == 0 {
            return Err(config_err("--runs must be at least 1"));
        }
        let sweeps = flags.sweeps.unwrap_or(100);
        if sweeps == 0 {
            return Err(config_err("--sweeps must be at least 1"));
        }
        if flags.rtol.is_some_and(|t| !(t > 0.0 && t < 1.0)) {
            return Err(config_err("--rtol must lie in (0, 1)"));
        }
        let smoothing = flags.smoothing.clone().unwrap_or_else(|| vec![1.0]);
        if smoothing.iter().any(|s| !(*s > 0.0)) {
            return Err(config_err("smoothing counts must be positive"));
        }
        let grids = match (&flags.grids, flags.n) {
            (Some(g), _) => g.clone(),
            (None, Some(n)) if experiment == Experiment::MultigridStudy => vec![n],
            _ => vec![31, 63, 127],
        };
        if experiment == Experiment::MultigridStudy {
            if let Some(g) = grids.iter().find(|g| **g < 7 || !(**g + 1).is_power_of_two()) {
                return Err(config_err(format!("multigrid grid size {g}: need N >= 7 with N + 1 a power of two")));
            }
            let cyclic = solvers.iter().any(|s| s.pick == PickArg::Cyclic);
            if let Some(s) = smoothing.iter().find(|s| cyclic && s.fract() != 0.0) {
                return Err(config_err(format!("cyclic smoothing needs an integer count, got {s}")));
            }
            if solvers.iter().any(|s| s.scheme == SchemeArg::Kaczmarz) {
                return Err(config_err("the multigrid study uses Gauss-Seidel smoothers only"));
            }
        }

        Ok(Self {
            experiment,
            problem,
            solvers,
            runs,
            sweeps,
            seed_base: flags.seed.unwrap_or(0),
            rtol: flags.rtol,
            out: flags.out.unwrap_or_else(|| PathBuf::from("out")),
            smoothing,
            grids,
        })
    }
}
