//! Configuration-driven experiment runner: builds problems from recipes,
//! runs seeded algorithm sweeps, and writes per-run trace CSVs plus an
//! aggregate summary CSV.
//!
//! Configs are strict JSON (unknown keys are rejected with the offending
//! key named and its position). Runs for different `(b, seed)` pairs are
//! independent and may execute concurrently; outputs are written in a
//! deterministic order, and with timing disabled the CSVs are byte-exact
//! reproducible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use vrprox::algorithms::{
    default_params, run_proxgd, run_proxsgd, run_proxsvrg_plus, run_ssrgd, run_ssrgd_saddle,
    AlgoParams, TheoremSchedule,
};
use vrprox::estimators::RunRng;
use vrprox::problems::{reference_optimum, ProblemRecipe};
use vrprox::trace::{RunTrace, Termination};
use vrprox::{CompositeProblem, ProblemKind, Vector, VrError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Run(#[from] VrError),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------------------
// config schema
// ---------------------------------------------------------------------------

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ProxGd,
    ProxSgd,
    ProxSvrgPlus,
    Ssrgd,
    SsrgdSaddle,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Algorithm::ProxGd => "prox_gd",
            Algorithm::ProxSgd => "prox_sgd",
            Algorithm::ProxSvrgPlus => "prox_svrg_plus",
            Algorithm::Ssrgd => "ssrgd",
            Algorithm::SsrgdSaddle => "ssrgd_saddle",
        };
        f.write_str(s)
    }
}

/// Theorem-derived parameterization request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub theorem: TheoremSchedule,
    pub epsilon: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub b: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StartPoint {
    #[default]
    Zeros,
    /// Seeded Gaussian start, shared by every run of the experiment.
    Gaussian {
        scale: f64,
        seed: u64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

/// One experiment: a problem, an algorithm, its parameterization, and the
/// seed sweep. Unknown keys anywhere in the document are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub problem: ProblemRecipe,
    pub algorithm: Algorithm,
    /// Exactly one of `schedule` and `params` must be present.
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub params: Option<AlgoParams>,
    pub seeds: Vec<u64>,
    /// Optional sweep: one run per (b, seed). Under a schedule each `b`
    /// re-derives the schedule; with explicit params only `b` is replaced.
    #[serde(default)]
    pub b_sweep: Option<Vec<usize>>,
    #[serde(default)]
    pub x0: StartPoint,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub eval_stride: Option<u64>,
    #[serde(default)]
    pub no_timing: bool,
    #[serde(default)]
    pub early_stop: Option<bool>,
    #[serde(default)]
    pub max_iters: Option<u64>,
    /// Tolerance for the reference-optimum solve when a schedule needs the
    /// optimal value and the recipe does not declare it.
    #[serde(default)]
    pub reference_tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate_shape()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }

    fn validate_shape(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match (&self.schedule, &self.params) {
            (None, None) => {
                return Err(CliError::Config(
                    "one of `schedule` or `params` is required".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "`schedule` and `params` are mutually exclusive".into(),
                ))
            }
            _ => {}
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("`seeds` must not be empty".into()));
        }
        if let Some(sweep) = &self.b_sweep {
            if sweep.is_empty() || sweep.iter().any(|&b| b == 0) {
                return Err(CliError::Config(
                    "`b_sweep` entries must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Builds the problem and resolves everything needed to start runs,
    /// without running anything. `validate` stops here.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        self.validate_shape()?;
        let problem = self.problem.build()?;
        let x0 = self.start_point(&problem)?;
        if let Some(schedule) = &self.schedule {
            // the PL and sublinear schedules need Phi*; solve for it when
            // the recipe did not declare one
            if problem.phi_star().is_none() && !problem.is_streaming() {
                if matches!(
                    problem.kind(),
                    ProblemKind::QuadraticL1 | ProblemKind::PlQuadratic
                ) {
                    reference_optimum(&problem, self.reference_tol.unwrap_or(1e-9))?;
                }
            }
            let _probe = self.derive_params(&problem, &x0, schedule, schedule.b)?;
        }
        let sweep = match &self.b_sweep {
            Some(list) => list.clone(),
            None => vec![],
        };
        Ok(ResolvedExperiment {
            problem,
            x0,
            b_sweep: sweep,
        })
    }

    fn start_point(&self, problem: &CompositeProblem) -> Result<Vector> {
        let d = problem.dim();
        let x0 = match &self.x0 {
            StartPoint::Zeros => Vector::zeros(d),
            StartPoint::Gaussian { scale, seed } => {
                let mut rng = RunRng::seed_from_u64(*seed);
                Vector::from_fn(d, |_| scale * rng.standard_normal())?
            }
            StartPoint::Explicit { values } => {
                let v = Vector::new(values.clone())?;
                v.check_dim(d)?;
                v
            }
        };
        Ok(x0)
    }

    fn derive_params(
        &self,
        problem: &CompositeProblem,
        x0: &Vector,
        schedule: &ScheduleConfig,
        b: Option<usize>,
    ) -> Result<AlgoParams> {
        let params = default_params(
            schedule.theorem,
            problem,
            x0,
            schedule.epsilon,
            schedule.delta,
            schedule.zeta,
            b,
        )?;
        Ok(params)
    }

    /// Final parameters for one run of the sweep.
    fn params_for(
        &self,
        problem: &CompositeProblem,
        x0: &Vector,
        b: Option<usize>,
        seed: u64,
    ) -> Result<AlgoParams> {
        let mut params = match (&self.schedule, &self.params) {
            (Some(schedule), None) => {
                self.derive_params(problem, x0, schedule, b.or(schedule.b))?
            }
            (None, Some(explicit)) => {
                let mut p = explicit.clone();
                if let Some(b) = b {
                    p.b = b;
                }
                p
            }
            _ => unreachable!("validated shape"),
        };
        if let Some(stride) = self.eval_stride {
            params.eval_stride = stride;
        }
        if let Some(early) = self.early_stop {
            params.early_stop = early;
        }
        if let Some(cap) = self.max_iters {
            params.max_iters = cap;
        }
        params.record_timing = !self.no_timing;
        params.seed = seed;
        Ok(params)
    }
}

pub struct ResolvedExperiment {
    pub problem: CompositeProblem,
    pub x0: Vector,
    pub b_sweep: Vec<usize>,
}

// ---------------------------------------------------------------------------
// running
// ---------------------------------------------------------------------------

/// One row of the summary CSV.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub b: usize,
    pub seed: u64,
    pub iterations: u64,
    pub iters_to_epsilon: i64,
    pub sfo: u64,
    pub sfo_paper: u64,
    pub po: u64,
    pub success: bool,
    pub lambda_min_est: Option<f64>,
    pub best_grad_map_norm: f64,
    pub final_phi: f64,
    pub error: Option<String>,
}

pub struct ExperimentOutcome {
    pub rows: Vec<SummaryRow>,
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub failed_runs: usize,
}

fn dispatch(
    algorithm: Algorithm,
    problem: &CompositeProblem,
    params: &AlgoParams,
    x0: &Vector,
) -> vrprox::Result<RunTrace> {
    match algorithm {
        Algorithm::ProxGd => run_proxgd(problem, params, x0),
        Algorithm::ProxSgd => run_proxsgd(problem, params, x0),
        Algorithm::ProxSvrgPlus => run_proxsvrg_plus(problem, params, x0),
        Algorithm::Ssrgd => run_ssrgd(problem, params, x0),
        Algorithm::SsrgdSaddle => run_ssrgd_saddle(problem, params, x0),
    }
}

/// Runs the whole sweep, writes one trace CSV per run plus the summary CSV,
/// and returns the aggregate. Individual run failures (for example numeric
/// overflow) are recorded in their summary rows; the remaining seeds still
/// run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let resolved = config.resolve()?;
    let problem = &resolved.problem;
    let x0 = &resolved.x0;
    fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))?;

    // the run grid: (b override, seed)
    let mut grid: Vec<(Option<usize>, u64)> = Vec::new();
    if resolved.b_sweep.is_empty() {
        for &seed in &config.seeds {
            grid.push((None, seed));
        }
    } else {
        for &b in &resolved.b_sweep {
            for &seed in &config.seeds {
                grid.push((Some(b), seed));
            }
        }
    }

    let runs: Vec<(usize, u64, vrprox::Result<(AlgoParams, RunTrace)>)> = grid
        .par_iter()
        .map(|&(b, seed)| {
            let outcome = config
                .params_for(problem, x0, b, seed)
                .map_err(|e| match e {
                    CliError::Run(e) => e,
                    other => VrError::ContractViolation(other.to_string()),
                })
                .and_then(|params| {
                    dispatch(config.algorithm, problem, &params, x0)
                        .map(|trace| (params.clone(), trace))
                });
            let b_label = match (&outcome, b) {
                (Ok((params, _)), _) => params.b,
                (Err(_), Some(b)) => b,
                (Err(_), None) => config.params.as_ref().map(|p| p.b).unwrap_or(0),
            };
            (b_label, seed, outcome)
        })
        .collect();

    let mut rows = Vec::with_capacity(runs.len());
    let mut trace_paths = Vec::new();
    let mut failed = 0usize;
    for (b, seed, outcome) in runs {
        match outcome {
            Ok((params, trace)) => {
                let path = config.output_dir.join(format!("trace_b{b}_seed{seed}.csv"));
                emit_csv(&trace, &path)?;
                trace_paths.push(path);
                rows.push(summary_row(b, seed, &params, &trace, config.algorithm));
            }
            Err(err) => {
                failed += 1;
                rows.push(SummaryRow {
                    b,
                    seed,
                    iterations: 0,
                    iters_to_epsilon: -1,
                    sfo: 0,
                    sfo_paper: 0,
                    po: 0,
                    success: false,
                    lambda_min_est: None,
                    best_grad_map_norm: f64::NAN,
                    final_phi: f64::NAN,
                    error: Some(err.to_string()),
                });
            }
        }
    }
    rows.sort_by_key(|r| (r.b, r.seed));

    let summary_path = config.output_dir.join("summary.csv");
    write_summary(&rows, &summary_path)?;
    Ok(ExperimentOutcome {
        rows,
        trace_paths,
        summary_path,
        failed_runs: failed,
    })
}

fn summary_row(
    b: usize,
    seed: u64,
    params: &AlgoParams,
    trace: &RunTrace,
    algorithm: Algorithm,
) -> SummaryRow {
    let iterations = trace.records.last().map(|r| r.iter).unwrap_or(0);
    let iters_to_epsilon = trace
        .first_iter_below(params.epsilon)
        .map(|t| t as i64)
        .unwrap_or(-1);
    let success = match algorithm {
        Algorithm::SsrgdSaddle => trace.termination == Termination::Certified,
        _ => {
            params.epsilon > 0.0
                && trace.best_grad_map_norm.is_finite()
                && trace.best_grad_map_norm <= params.epsilon
        }
    };
    SummaryRow {
        b,
        seed,
        iterations,
        iters_to_epsilon,
        sfo: trace.counters.sfo,
        sfo_paper: trace.counters.sfo_paper,
        po: trace.counters.po,
        success,
        lambda_min_est: trace.lambda_min_est,
        best_grad_map_norm: trace.best_grad_map_norm,
        final_phi: trace.records.last().map(|r| r.phi).unwrap_or(f64::NAN),
        error: None,
    }
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// 17 significant digits: round-trip exact for f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRACE_HEADER: &str = "iter,epoch,super_epoch,phi,grad_map_norm,sfo,sfo_paper,po,wall_ms";

/// Writes a run trace: the fixed header plus one row per retained record,
/// floats serialized with 17 significant digits.
pub fn emit_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.iter,
            r.epoch,
            u8::from(r.in_super_epoch),
            fmt_f64(r.phi),
            fmt_f64(r.grad_map_norm),
            r.sfo,
            r.sfo_paper,
            r.po,
            fmt_f64(r.wall_ms),
        ));
    }
    fs::write(path, out).map_err(io_err(path))
}

pub const SUMMARY_HEADER: &str = "b,seed,iterations,iters_to_epsilon,sfo,sfo_paper,po,success,lambda_min_est,best_grad_map_norm,final_phi,error";

fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let lambda = r.lambda_min_est.map(fmt_f64).unwrap_or_default();
        let error = r
            .error
            .as_deref()
            .map(|e| e.replace([',', '\n'], ";"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.b,
            r.seed,
            r.iterations,
            r.iters_to_epsilon,
            r.sfo,
            r.sfo_paper,
            r.po,
            u8::from(r.success),
            lambda,
            fmt_f64(r.best_grad_map_norm),
            fmt_f64(r.final_phi),
            error,
        ));
    }
    fs::write(path, out).map_err(io_err(path))
}

// ---------------------------------------------------------------------------
// auxiliary verbs
// ---------------------------------------------------------------------------

/// Prints the parameter table every theorem schedule derives for this
/// config's problem (used by the `schedules` verb).
pub fn schedules_table(config: &ExperimentConfig, out: &mut impl Write) -> Result<()> {
    let resolved = config.resolve()?;
    let (epsilon, delta, zeta) = match &config.schedule {
        Some(s) => (s.epsilon, s.delta, s.zeta),
        None => {
            let p = config.params.as_ref().expect("validated shape");
            (p.epsilon, (p.delta > 0.0).then_some(p.delta), None)
        }
    };
    writeln!(
        out,
        "{:<5} {:>10} {:>8} {:>8} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "sched", "B", "b", "m", "eta", "T", "r", "f_thres", "t_thres"
    )
    .ok();
    for theorem in TheoremSchedule::ALL {
        match default_params(
            theorem,
            &resolved.problem,
            &resolved.x0,
            epsilon,
            delta,
            zeta,
            None,
        ) {
            Ok(p) => {
                writeln!(
                    out,
                    "{:<5} {:>10} {:>8} {:>8} {:>12.4e} {:>12} {:>12.4e} {:>12.4e} {:>10}",
                    theorem.to_string(),
                    p.big_b,
                    p.b,
                    p.m,
                    p.eta,
                    p.max_iters,
                    p.r,
                    p.f_thres,
                    p.t_thres
                )
                .ok();
            }
            Err(err) => {
                writeln!(out, "{:<5} unavailable: {err}", theorem.to_string()).ok();
            }
        }
    }
    Ok(())
}

/// Reads a whitespace/newline-separated vector of floats.
pub fn read_x_file(path: &Path) -> Result<Vector> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let values: std::result::Result<Vec<f64>, _> = text
        .split_whitespace()
        .map(|tok| tok.parse::<f64>())
        .collect();
    let values = values.map_err(|e| CliError::Config(format!("bad float in {path:?}: {e}")))?;
    Ok(Vector::new(values)?)
}

/// Parses `--seeds a..b` (inclusive) or a single seed.
pub fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("bad seed range start: {e}")))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("bad seed range end: {e}")))?;
        if b < a {
            return Err(CliError::Config("seed range end before start".into()));
        }
        Ok((a..=b).collect())
    } else {
        let s: u64 = text
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("bad seed: {e}")))?;
        Ok(vec![s])
    }
}
