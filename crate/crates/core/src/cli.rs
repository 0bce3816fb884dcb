//! Experiment driver behind the `fy-invopt` binary.
//!
//! Subcommands:
//!
//! - `synth`: one of the Examples A-E over a grid of methods, sample sizes
//!   and (optionally) FY regularization strengths, replicated.
//! - `spath`: the contextual shortest-path pipeline on a synthetic grid or on
//!   user CSV files.
//! - `grad-check`: FY gradients against central finite differences.
//! - `calib-check`: the calibration inequality and the ball exactness bound.
//!
//! `synth` and `spath` write `report.csv` (one row per cell) and
//! `summary.json` into `--out`.
//!
//! Config files are TOML; every key is optional:
//!
//! ```toml
//! experiment = "C"                # A..E (ignored by `spath`)
//! methods = ["fy", "subopt", "kka", "spa"]
//! noise = "noisy-decision"        # or "noisy-objective", "noiseless"
//! sigma = 1.0
//! sample_sizes = [50, 100, 300, 500, 1000]
//! replications = 20
//! lambdas = [0.0, 0.01, 0.1, 0.5] # FY sweep; 0 falls back to subopt
//! seed = 0
//! n_test = 1000
//! dim = 10
//!
//! [fit.fy]                        # any SgdConfig field
//! learning_rate = 0.05
//!
//! [spath]
//! n = 2000                        # synthetic instance size
//! sigma = 0.1
//! # edges = "edges.csv"           # real data instead of the synthetic grid
//! # records = "records.csv"
//! # source = "A"
//! # sink = "B"
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses;
use crate::metrics::{self, MetricsReport};
use crate::model::{ForwardProblem, Parameter};
use crate::rng;
use crate::spath::{self, GridSpec, SpDataset, SpRunConfig};
use crate::synth::{self, build_example, ExampleKind, ExampleSpec};
use crate::train::{self, FitConfig, Method};
use crate::vecops::norm;

#[derive(Debug, Parser)]
#[command(name = "fy-invopt", version, about = "Inverse optimization with the Fenchel-Young loss")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct GlobalOpts {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for report.csv and summary.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replications per cell (overrides the config).
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic Examples A-E.
    Synth,
    /// Contextual shortest-path pipeline.
    Spath,
    /// FY gradient vs central finite differences.
    GradCheck {
        /// A-E, or `flow` for a small shortest-path problem.
        #[arg(long, default_value = "C")]
        example: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Calibration inequality on perturbed parameters plus ball exactness.
    CalibCheck {
        #[arg(long, default_value = "C")]
        example: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    pub methods: Vec<Method>,
    pub noise: String,
    pub sigma: f64,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub lambdas: Option<Vec<f64>>,
    pub seed: u64,
    pub n_test: usize,
    pub dim: usize,
    pub fit: FitConfig,
    pub spath: SpathConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: "C".into(),
            methods: vec![Method::Fy],
            noise: "noisy-decision".into(),
            sigma: 1.0,
            sample_sizes: vec![50, 100, 300, 500, 1000],
            replications: 20,
            lambdas: None,
            seed: 0,
            n_test: 1000,
            dim: 10,
            fit: FitConfig::default(),
            spath: SpathConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpathConfig {
    pub grid: GridSpec,
    pub n: usize,
    pub sigma: f64,
    pub edges: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub source: Option<String>,
    pub sink: Option<String>,
    pub run: SpRunConfig,
}

impl Default for SpathConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            n: 2000,
            sigma: 0.1,
            edges: None,
            records: None,
            source: None,
            sink: None,
            run: SpRunConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::Config("sample sizes must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.n_test == 0 {
            return Err(Error::Config("n_test must be >= 1".into()));
        }
        if let Some(ls) = &self.lambdas {
            if ls.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
                return Err(Error::Config("lambdas must be finite and >= 0".into()));
            }
        }
        synth::noise_setting(&self.noise, self.sigma).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    fn apply(&mut self, g: &GlobalOpts) {
        if let Some(s) = g.seed {
            self.seed = s;
        }
        if let Some(r) = g.reps {
            self.replications = r;
        }
    }
}

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub method: String,
    pub noise: String,
    pub n: usize,
    /// FY regularization; empty for the baselines.
    pub lambda: Option<f64>,
    pub reps_ok: usize,
    pub reps_failed: usize,
    pub parameter_error_mean: Option<f64>,
    pub parameter_error_se: Option<f64>,
    pub decision_error_mean: Option<f64>,
    pub decision_error_se: Option<f64>,
    pub regret_mean: Option<f64>,
    pub regret_se: Option<f64>,
    pub relative_regret_ratio_mean: Option<f64>,
    pub relative_regret_ratio_se: Option<f64>,
    pub wall_time_mean: Option<f64>,
    pub identifiable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub config: RunConfig,
    pub rows: Vec<ReportRow>,
    pub errors: Vec<String>,
}

/// A (method, n, λ) cell.
#[derive(Debug, Clone, Copy)]
struct Cell {
    method: Method,
    n: usize,
    lambda: Option<f64>,
}

fn cells(cfg: &RunConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &cfg.sample_sizes {
        for &method in &cfg.methods {
            match (&cfg.lambdas, method) {
                (Some(ls), Method::Fy) => {
                    out.extend(ls.iter().map(|&l| Cell {
                        method,
                        n,
                        lambda: Some(l),
                    }))
                }
                (_, Method::Fy) => out.push(Cell {
                    method,
                    n,
                    lambda: Some(cfg.fit.fy.lambda),
                }),
                _ => out.push(Cell {
                    method,
                    n,
                    lambda: None,
                }),
            }
        }
    }
    out
}

fn mean_se(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (Some(m), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (Some(m), Some((var / k).sqrt()))
}

fn aggregate(
    experiment: &str,
    noise: &str,
    cell: Cell,
    results: &[Result<MetricsReport>],
    identifiable: bool,
) -> ReportRow {
    let ok: Vec<&MetricsReport> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let col = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let (pe, pe_se) = mean_se(&col(&|r| r.parameter_error));
    let (de, de_se) = mean_se(&col(&|r| Some(r.decision_error)));
    let (rg, rg_se) = mean_se(&col(&|r| Some(r.regret)));
    let (rr, rr_se) = mean_se(&col(&|r| r.relative_regret_ratio));
    let (wt, _) = mean_se(&col(&|r| Some(r.wall_time_seconds)));
    let method = match (cell.method, cell.lambda) {
        (Method::Fy, Some(0.0)) => "subopt".to_string(),
        (m, _) => m.name().to_string(),
    };
    ReportRow {
        experiment: experiment.to_string(),
        method,
        noise: noise.to_string(),
        n: cell.n,
        lambda: cell.lambda,
        reps_ok: ok.len(),
        reps_failed: results.len() - ok.len(),
        parameter_error_mean: pe,
        parameter_error_se: pe_se,
        decision_error_mean: de,
        decision_error_se: de_se,
        regret_mean: rg,
        regret_se: rg_se,
        relative_regret_ratio_mean: rr,
        relative_regret_ratio_se: rr_se,
        wall_time_mean: wt,
        identifiable,
    }
}

/// Seed of the data shared by every method at `(rep, n)`.
pub fn data_seed(master: u64, rep: usize, n: usize) -> u64 {
    rng::mix(master, rng::mix(rep as u64, n as u64))
}

fn synth_job(cfg: &RunConfig, spec: &ExampleSpec, cell: Cell, rep: usize) -> Result<MetricsReport> {
    let (fp, theta_star) = build_example(spec)?;
    let noise = synth::noise_setting(&cfg.noise, cfg.sigma)?;
    let seed = data_seed(cfg.seed, rep, cell.n);
    let data = synth::generate(spec, cell.n, noise, seed)?;
    let test = spec
        .contexts
        .sample_many(cfg.n_test, &mut rng::derive(seed, 1));
    let mut fit_cfg = cfg.fit.clone().with_seed(rng::mix(seed, 2));
    let method = match (cell.method, cell.lambda) {
        (Method::Fy, Some(0.0)) => Method::Subopt,
        (Method::Fy, Some(l)) => {
            fit_cfg.fy.lambda = l;
            Method::Fy
        }
        (m, _) => m,
    };
    let fit = train::fit(method, &data, &fp, &fit_cfg)?;
    metrics::evaluate(&fp, &fit.theta, &theta_star, &test, fit.wall_time_seconds)
}

fn pool(parallel: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Runs every `(cell, replication)` job and aggregates per cell.
pub fn run_synth(cfg: &RunConfig, parallel: Option<usize>) -> Result<Summary> {
    cfg.validate()?;
    let kind: ExampleKind = cfg.experiment.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    let spec = ExampleSpec::with_dim(kind, cfg.dim);
    build_example(&spec)?;
    let cells = cells(cfg);
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replications).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<MetricsReport>> = pool(parallel)?.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| synth_job(cfg, &spec, cells[c], r))
            .collect()
    });
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let chunk = &results[c * cfg.replications..(c + 1) * cfg.replications];
        for (r, res) in chunk.iter().enumerate() {
            if let Err(e) = res {
                let msg = format!("{} n={} rep={r}: {e}", cell.method, cell.n);
                log::error!("{msg}");
                errors.push(msg);
            }
        }
        rows.push(aggregate(&cfg.experiment, &cfg.noise, *cell, chunk, spec.identifiable()));
    }
    Ok(Summary {
        command: "synth".into(),
        config: cfg.clone(),
        rows,
        errors,
    })
}

/// Loads user CSVs if configured, otherwise builds the synthetic grid.
pub fn spath_dataset(cfg: &RunConfig) -> Result<SpDataset> {
    let s = &cfg.spath;
    match (&s.edges, &s.records) {
        (Some(e), Some(r)) => {
            let source = s.source.as_deref().ok_or_else(|| Error::Config("spath.source missing".into()))?;
            let sink = s.sink.as_deref().ok_or_else(|| Error::Config("spath.sink missing".into()))?;
            let (g, names) = spath::load_graph(e, source, sink)?;
            spath::load_records(r, Arc::new(g), names)
        }
        (None, None) => spath::synth_graph_instance(&s.grid, s.n, s.sigma, cfg.seed),
        _ => Err(Error::Config("spath needs both edges and records, or neither".into())),
    }
}

/// Replicated random splits of one shortest-path dataset.
pub fn run_spath(cfg: &RunConfig, parallel: Option<usize>) -> Result<Summary> {
    cfg.validate()?;
    let sp = spath_dataset(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.methods.len())
        .flat_map(|m| (0..cfg.replications).map(move |r| (m, r)))
        .collect();
    let results: Vec<Result<MetricsReport>> = pool(parallel)?.install(|| {
        jobs.par_iter()
            .map(|&(m, r)| {
                spath::sp_run(&sp, cfg.methods[m], &cfg.spath.run, rng::mix(cfg.seed, r as u64))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (m, &method) in cfg.methods.iter().enumerate() {
        let chunk = &results[m * cfg.replications..(m + 1) * cfg.replications];
        for (r, res) in chunk.iter().enumerate() {
            if let Err(e) = res {
                let msg = format!("{method} rep={r}: {e}");
                log::error!("{msg}");
                errors.push(msg);
            }
        }
        let cell = Cell {
            method,
            n: sp.len(),
            lambda: (method == Method::Fy).then_some(cfg.spath.run.fit.fy.lambda),
        };
        rows.push(aggregate("spath", "travel-times", cell, chunk, false));
    }
    Ok(Summary {
        command: "spath".into(),
        config: cfg.clone(),
        rows,
        errors,
    })
}

pub fn write_outputs(out: &Path, summary: &Summary) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("report.csv"))?;
    for row in &summary.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let f = std::fs::File::create(out.join("summary.json"))?;
    serde_json::to_writer_pretty(f, summary)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub example: String,
    pub trials: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

pub const GRAD_CHECK_TOL: f64 = 1e-5;

pub type ContextSampler = Box<dyn Fn(&mut rng::Rng) -> Vec<f64> + Send + Sync>;

/// Forward problem and context sampler for `example` (A-E or `flow`).
pub fn check_problem(example: &str) -> Result<(ForwardProblem, ContextSampler)> {
    if example.eq_ignore_ascii_case("flow") {
        let grid = GridSpec {
            rows: 3,
            cols: 4,
            edges: 20,
            context_dim: 3,
        };
        let (g, _) = spath::grid_graph(&grid, &mut rng::from_seed(17))?;
        let fp = ForwardProblem::linear(
            crate::model::CostMap::matrix_product(g.num_edges(), 3),
            crate::model::FeasibleRegion::flow(Arc::new(g)),
            crate::model::Sense::Min,
        )?;
        let ctx = crate::model::ContextDist::uniform(0.0, 1.0, 3);
        return Ok((fp, Box::new(move |r| ctx.sample(r))));
    }
    let kind: ExampleKind = example.parse()?;
    let spec = ExampleSpec::new(kind);
    let (fp, _) = build_example(&spec)?;
    let ctx = spec.contexts;
    Ok((fp, Box::new(move |r| ctx.sample(r))))
}

/// `‖g − fd‖∞ / max(‖fd‖∞, 1)` for one random `(θ, u, y, λ)`.
pub fn grad_rel_error(fp: &ForwardProblem, theta: &Parameter, u: &[f64], y: &[f64], lambda: f64) -> Result<f64> {
    let g = losses::fy_grad(fp, theta, u, y, lambda)?;
    let h = 1e-6;
    let mut worst = 0.0_f64;
    let mut scale = 1.0_f64;
    for k in 0..theta.len() {
        let mut p = theta.clone();
        p.as_mut_slice()[k] += h;
        let mut m = theta.clone();
        m.as_mut_slice()[k] -= h;
        let fd = (losses::fy_loss(fp, &p, u, y, lambda)? - losses::fy_loss(fp, &m, u, y, lambda)?) / (2.0 * h);
        worst = worst.max((g[k] - fd).abs());
        scale = scale.max(fd.abs());
    }
    Ok(worst / scale)
}

pub fn grad_check(example: &str, trials: usize, seed: u64) -> Result<GradCheckReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let (fp, ctx) = check_problem(example)?;
    let mut r = rng::derive(seed, 3);
    let mut max_err = 0.0_f64;
    for t in 0..trials {
        let theta = random_parameter(&fp, &mut r);
        let u = ctx(&mut r);
        let y: Vec<f64> = (0..fp.decision_dim()).map(|_| gauss(&mut r)).collect();
        let lambda = if t % 2 == 0 { 0.1 } else { 1.0 };
        max_err = max_err.max(grad_rel_error(&fp, &theta, &u, &y, lambda)?);
    }
    Ok(GradCheckReport {
        example: example.to_string(),
        trials,
        max_rel_error: max_err,
        passed: max_err <= GRAD_CHECK_TOL,
    })
}

fn gauss(r: &mut rng::Rng) -> f64 {
    use rand::Rng as _;
    r.sample(rand_distr::StandardNormal)
}

pub fn random_parameter(fp: &ForwardProblem, r: &mut rng::Rng) -> Parameter {
    let (rows, cols) = fp.cost_map.param_shape();
    Parameter::matrix(rows, cols, (0..rows * cols).map(|_| gauss(r)).collect()).expect("shape")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibCheckReport {
    pub example: String,
    pub lambda: f64,
    pub samples: usize,
    pub calibration_hold_rate: f64,
    pub ball_trials: usize,
    pub ball_violations: usize,
    pub passed: bool,
}

/// Perturbations `θ* + s·ξ` with `s ∈ [0.02, 1]` log-uniform.
pub fn calibration_sweep(
    spec: &ExampleSpec,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<metrics::CalibrationReport>> {
    use rand::Rng as _;
    let (fp, theta_star) = build_example(spec)?;
    let contexts = spec.contexts.sample_many(500, &mut rng::derive(seed, 4));
    let surrogate = crate::model::Dataset::new(
        contexts
            .iter()
            .map(|u| {
                Ok(crate::model::DataPoint {
                    u: u.clone(),
                    y: crate::solvers::solve_exact(&fp, &theta_star, u)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        None,
    )?;
    let fit = train::fy_sgd_fit(
        &surrogate,
        &fp,
        &train::SgdConfig {
            lambda,
            seed,
            ..train::SgdConfig::default()
        },
    )?;
    let candidates = [theta_star.clone(), fit.theta];
    let mut r = rng::derive(seed, 5);
    (0..samples)
        .map(|_| {
            let s = (r.random_range(0.02f64.ln()..0.0)).exp();
            let theta = Parameter::vector(
                theta_star
                    .as_slice()
                    .iter()
                    .map(|v| v + s * gauss(&mut r))
                    .collect(),
            );
            metrics::calibration_check(&fp, &theta, &theta_star, lambda, &contexts, &candidates)
        })
        .collect()
}

/// Ball exactness: `x_λ = x*` when `λ ≤ ‖h‖/a`, else
/// `‖x_λ − x*‖ ≤ λa²/(2‖h‖)`. Returns the number of violations.
pub fn ball_exactness(trials: usize, seed: u64) -> Result<usize> {
    use rand::Rng as _;
    let spec = ExampleSpec::new(ExampleKind::E);
    let (fp, _) = build_example(&spec)?;
    let a = spec.scale;
    let mut r = rng::derive(seed, 6);
    let mut bad = 0;
    for _ in 0..trials {
        let theta = random_parameter(&fp, &mut r);
        let u = spec.contexts.sample(&mut r);
        let lambda = (r.random_range(-3.0f64..1.5)).exp();
        let h = fp.cost_map.cost(&theta, &u)?;
        let hn = norm(&h);
        let xl = crate::solvers::solve_regularized(&fp, &theta, &u, lambda)?;
        let x = crate::solvers::solve_exact(&fp, &theta, &u)?;
        let dist = crate::vecops::dist_sq(&xl, &x).sqrt();
        let ok = if lambda <= hn / a {
            dist == 0.0
        } else {
            dist <= lambda * a * a / (2.0 * hn) + 1e-12
        };
        bad += usize::from(!ok);
    }
    Ok(bad)
}

pub fn calib_check(example: &str, samples: usize, lambda: f64, seed: u64) -> Result<CalibCheckReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let spec = ExampleSpec::new(example.parse()?);
    let reps = calibration_sweep(&spec, lambda, samples, seed)?;
    let rate = reps.iter().filter(|r| r.holds).count() as f64 / samples as f64;
    let ball_trials = 1000;
    let ball_violations = ball_exactness(ball_trials, seed)?;
    Ok(CalibCheckReport {
        example: example.to_string(),
        lambda,
        samples,
        calibration_hold_rate: rate,
        ball_trials,
        ball_violations,
        passed: rate >= 0.95 && ball_violations == 0,
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        serde_json::to_writer_pretty(std::fs::File::create(dir.join("summary.json"))?, value)?;
    }
    Ok(())
}

/// Executes a parsed command line; the return value is the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let g = cli.global;
    let seed = g.seed.unwrap_or(0);
    match cli.command {
        Command::Synth | Command::Spath => {
            let mut cfg = match &g.config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            cfg.apply(&g);
            let spath_cmd = matches!(cli.command, Command::Spath);
            if spath_cmd && g.config.is_none() {
                cfg.methods = vec![Method::Fy, Method::Subopt];
                cfg.replications = g.reps.unwrap_or(3);
            }
            let summary = if spath_cmd {
                run_spath(&cfg, g.parallel)?
            } else {
                run_synth(&cfg, g.parallel)?
            };
            let out = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
            write_outputs(&out, &summary)?;
            for row in &summary.rows {
                println!(
                    "{:<8} n={:<5} lambda={:<6} decision_error={:.4} regret={:.4} param_error={} rr={} time={:.3}s",
                    row.method,
                    row.n,
                    row.lambda.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
                    row.decision_error_mean.unwrap_or(f64::NAN),
                    row.regret_mean.unwrap_or(f64::NAN),
                    row.parameter_error_mean.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
                    row.relative_regret_ratio_mean.map(|v| format!("{v:.2}%")).unwrap_or_else(|| "-".into()),
                    row.wall_time_mean.unwrap_or(f64::NAN),
                );
            }
            Ok(if summary.errors.is_empty() { 0 } else { 1 })
        }
        Command::GradCheck { example, trials } => {
            let rep = grad_check(&example, trials, seed)?;
            println!(
                "grad-check {}: {} trials, max rel err {:.3e} -> {}",
                rep.example,
                rep.trials,
                rep.max_rel_error,
                if rep.passed { "PASS" } else { "FAIL" }
            );
            write_json(g.out.as_deref(), &rep)?;
            Ok(if rep.passed { 0 } else { 1 })
        }
        Command::CalibCheck { example, samples, lambda } => {
            let rep = calib_check(&example, samples, lambda, seed)?;
            println!(
                "calib-check {}: bound holds on {:.1}% of {} samples; ball exactness violations {}/{} -> {}",
                rep.example,
                100.0 * rep.calibration_hold_rate,
                rep.samples,
                rep.ball_violations,
                rep.ball_trials,
                if rep.passed { "PASS" } else { "FAIL" }
            );
            write_json(g.out.as_deref(), &rep)?;
            Ok(if rep.passed { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_method_is_config_error() {
        assert!(matches!(
            RunConfig::from_toml("methods = [\"magic\"]"),
            Err(Error::Config(_))
        ));
        assert!(RunConfig::from_toml("colour = 1").is_err());
        assert!(RunConfig::from_toml("replications = 0").is_err());
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg = RunConfig::from_toml("experiment = \"B\"\n[fit.fy]\nlambda = 0.5\n").unwrap();
        assert_eq!(cfg.experiment, "B");
        assert_eq!(cfg.fit.fy.lambda, 0.5);
        assert_eq!(cfg.fit.fy.learning_rate, 0.05);
        assert_eq!(cfg.replications, 20);
    }

    #[test]
    fn lambda_sweep_cells() {
        let cfg = RunConfig {
            methods: vec![Method::Fy, Method::Kka],
            sample_sizes: vec![10],
            lambdas: Some(vec![0.0, 0.1]),
            ..RunConfig::default()
        };
        let c = cells(&cfg);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].lambda, Some(0.0));
        assert_eq!(c[2].lambda, None);
    }

    #[test]
    fn grad_check_rejects_zero_trials() {
        assert!(grad_check("C", 0, 0).is_err());
        assert!(grad_check("C", 5, 0).unwrap().passed);
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, Some(2.0));
        assert!((se.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(mean_se(&[]), (None, None));
    }
}
