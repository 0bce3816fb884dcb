//! Parameter estimation.
//!
//! [`fy_sgd_fit`] is mini-batch SGD on the empirical Fenchel-Young risk. The
//! baselines are [`subopt_fit`] (subgradient descent on the suboptimality /
//! VIA loss), [`kka_fit`] (projected gradient on KKT residuals) and
//! [`spa_fit`] (kernel denoising, projection, then suboptimality fitting).

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{self, KkaState};
use crate::model::{DataPoint, Dataset, ForwardProblem, Parameter};
use crate::rng;
use crate::solvers;
use crate::vecops::{axpy, dist_sq, norm};

/// Feasible set for the iterates, applied after every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSpace {
    #[default]
    Unconstrained,
    /// `‖θ‖₂ = 1` (the zero vector is left alone).
    UnitL2Sphere,
    /// Componentwise `lo ≤ θ_k ≤ hi`.
    Box { lo: f64, hi: f64 },
}

impl ParamSpace {
    pub fn project(&self, theta: &mut [f64]) {
        match self {
            ParamSpace::Unconstrained => {}
            ParamSpace::UnitL2Sphere => {
                let n = norm(theta);
                if n > 0.0 {
                    theta.iter_mut().for_each(|v| *v /= n);
                }
            }
            ParamSpace::Box { lo, hi } => theta.iter_mut().for_each(|v| *v = v.clamp(*lo, *hi)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StepSchedule {
    #[default]
    Constant,
    /// `η_t = η / √(t + 1)`
    InvSqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub learning_rate: f64,
    /// Mini-batch size; `None` means `min(32, n)`. Clamped to `n` at use.
    pub batch_size: Option<usize>,
    pub max_iters: usize,
    /// Stop once the batch gradient norm falls to this level.
    pub tolerance: f64,
    /// Regularization `λ > 0` of the FY loss (ignored by the baselines).
    pub lambda: f64,
    pub seed: u64,
    /// Starting point; `None` means the zero parameter.
    pub init: Option<Vec<f64>>,
    pub param_space: ParamSpace,
    pub schedule: StepSchedule,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: None,
            max_iters: 10_000,
            tolerance: 1e-6,
            lambda: 0.1,
            seed: 0,
            init: None,
            param_space: ParamSpace::Unconstrained,
            schedule: StepSchedule::Constant,
        }
    }
}

impl SgdConfig {
    /// Defaults tuned for the non-smooth baselines: full batch, decaying step.
    pub fn subgradient() -> Self {
        Self {
            schedule: StepSchedule::InvSqrt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if let ParamSpace::Box { lo, hi } = self.param_space {
            if !(lo <= hi) {
                return Err(Error::InvalidArgument("parameter box needs lo <= hi".into()));
            }
        }
        Ok(())
    }

    fn step(&self, t: usize) -> f64 {
        match self.schedule {
            StepSchedule::Constant => self.learning_rate,
            StepSchedule::InvSqrt => self.learning_rate / ((t + 1) as f64).sqrt(),
        }
    }

    fn initial(&self, fp: &ForwardProblem) -> Result<Parameter> {
        let (rows, cols) = fp.cost_map.param_shape();
        match &self.init {
            None => Ok(Parameter::zeros(rows, cols)),
            Some(v) => Parameter::matrix(rows, cols, v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: Parameter,
    /// Parameter updates applied.
    pub iterations: usize,
    pub final_grad_norm: f64,
    /// Batch risk before each update; `trace.len() == iterations`.
    pub trace: Vec<f64>,
    pub wall_time_seconds: f64,
}

/// Epoch-shuffled mini-batches drawn without replacement.
struct Batcher {
    order: Vec<usize>,
    pos: usize,
    size: usize,
    rng: rng::Rng,
}

impl Batcher {
    fn new(n: usize, size: usize, seed: u64) -> Self {
        let mut rng = rng::from_seed(seed);
        let mut order: Vec<usize> = (0..n).collect();
        if size < n {
            order.shuffle(&mut rng);
        }
        Self {
            order,
            pos: 0,
            size,
            rng,
        }
    }

    fn next(&mut self) -> &[usize] {
        let n = self.order.len();
        if self.size >= n {
            return &self.order;
        }
        if self.pos + self.size > n {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let b = &self.order[self.pos..self.pos + self.size];
        self.pos += self.size;
        b
    }
}

const DIVERGENCE_NORM: f64 = 1e6;

/// Shared first-order loop. `eval` returns a point's loss and gradient.
fn descend<F>(dataset: &Dataset, fp: &ForwardProblem, cfg: &SgdConfig, eval: F) -> Result<FitResult>
where
    F: Fn(&Parameter, &DataPoint) -> Result<(f64, Vec<f64>)>,
{
    let start = Instant::now();
    cfg.validate()?;
    dataset.check_against(fp)?;
    let n = dataset.len();
    let size = cfg.batch_size.unwrap_or(32).min(n);
    let mut theta = cfg.initial(fp)?;
    cfg.param_space.project(theta.as_mut_slice());
    let mut batcher = Batcher::new(n, size, cfg.seed);
    let mut trace = Vec::new();
    let mut grad = vec![0.0; theta.len()];
    let mut gnorm = f64::INFINITY;
    for t in 0..cfg.max_iters {
        let batch = batcher.next();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut risk = 0.0;
        let w = 1.0 / batch.len() as f64;
        for &i in batch {
            let (v, g) = eval(&theta, &dataset.points()[i])?;
            risk += w * v;
            axpy(&mut grad, w, &g);
        }
        gnorm = norm(&grad);
        if gnorm <= cfg.tolerance {
            break;
        }
        trace.push(risk);
        axpy(theta.as_mut_slice(), -cfg.step(t), &grad);
        cfg.param_space.project(theta.as_mut_slice());
        let tn = theta.norm();
        if !(tn <= DIVERGENCE_NORM) {
            return Err(Error::Diverged {
                iteration: t + 1,
                norm: tn,
            });
        }
    }
    Ok(FitResult {
        theta,
        iterations: trace.len(),
        final_grad_norm: gnorm,
        trace,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mini-batch SGD on the empirical FY risk.
pub fn fy_sgd_fit(dataset: &Dataset, fp: &ForwardProblem, cfg: &SgdConfig) -> Result<FitResult> {
    solvers::check_lambda(cfg.lambda)?;
    descend(dataset, fp, cfg, |theta, p| {
        let e = losses::fy_eval(fp, theta, &p.u, &p.y, cfg.lambda)?;
        Ok((e.value, e.grad.expect("fy_eval returns a gradient")))
    })
}

/// Subgradient descent on the mean of `max(subopt(θ; u, y), 0)`.
///
/// The suboptimality gap of an infeasible observation can be negative; the
/// hinge keeps such points from rewarding arbitrarily large `θ`.
pub fn subopt_fit(dataset: &Dataset, fp: &ForwardProblem, cfg: &SgdConfig) -> Result<FitResult> {
    descend(dataset, fp, cfg, |theta, p| {
        let e = losses::subopt_eval(fp, theta, &p.u, &p.y)?;
        if e.value < 0.0 {
            Ok((0.0, vec![0.0; theta.len()]))
        } else {
            Ok((e.value, e.grad.expect("subopt_eval returns a gradient")))
        }
    })
}

/// Projected gradient descent on the KKT-residual objective over `θ` and
/// nonnegative per-point duals; returns the best iterate seen.
///
/// Each dual block only enters its own point's residual, so its step is
/// scaled by `n` to act on the per-point objective.
pub fn kka_fit(dataset: &Dataset, fp: &ForwardProblem, cfg: &SgdConfig) -> Result<FitResult> {
    let start = Instant::now();
    cfg.validate()?;
    dataset.check_against(fp)?;
    let mut state = KkaState::zeros(fp, cfg.initial(fp)?, dataset)?;
    cfg.param_space.project(state.theta.as_mut_slice());
    let n = dataset.len() as f64;
    let mut trace = Vec::new();
    let mut gnorm = f64::INFINITY;
    let mut best: Option<(f64, KkaState)> = None;
    for t in 0..cfg.max_iters {
        let g = losses::kka_grad(fp, &state, dataset)?;
        let gd: f64 = g.duals.iter().flatten().map(|v| (n * v).powi(2)).sum();
        gnorm = (crate::vecops::norm_sq(&g.theta) + gd / n).sqrt();
        if gnorm <= cfg.tolerance {
            break;
        }
        let obj = losses::kka_objective(fp, &state, dataset)?;
        trace.push(obj);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, state.clone()));
        }
        let eta = cfg.step(t);
        axpy(state.theta.as_mut_slice(), -eta, &g.theta);
        cfg.param_space.project(state.theta.as_mut_slice());
        for (lam, gl) in state.duals.iter_mut().zip(&g.duals) {
            for (l, gv) in lam.iter_mut().zip(gl) {
                *l = (*l - eta * n * gv).max(0.0);
            }
        }
        let tn = state.theta.norm();
        if !(tn <= DIVERGENCE_NORM) {
            return Err(Error::Diverged {
                iteration: t + 1,
                norm: tn,
            });
        }
    }
    if let Some((b, s)) = best {
        if b < losses::kka_objective(fp, &state, dataset)? {
            state = s;
        }
    }
    Ok(FitResult {
        theta: state.theta,
        iterations: trace.len(),
        final_grad_norm: gnorm,
        trace,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpaConfig {
    /// Candidate Gaussian-kernel bandwidths for cross-validation.
    pub bandwidths: Vec<f64>,
    pub folds: usize,
    pub inner: SgdConfig,
}

impl Default for SpaConfig {
    fn default() -> Self {
        Self {
            bandwidths: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0],
            folds: 5,
            inner: SgdConfig::subgradient(),
        }
    }
}

/// Nadaraya-Watson estimate at `u` from `train` with a Gaussian kernel.
pub fn nw_predict(train: &[DataPoint], u: &[f64], bandwidth: f64) -> Result<Vec<f64>> {
    let d = train
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty training set".into()))?
        .y
        .len();
    let s = 0.5 / (bandwidth * bandwidth);
    let mut acc = vec![0.0; d];
    let mut total = 0.0;
    for p in train {
        let w = (-s * dist_sq(&p.u, u)).exp();
        total += w;
        axpy(&mut acc, w, &p.y);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateKernel { bandwidth });
    }
    acc.iter_mut().for_each(|v| *v /= total);
    Ok(acc)
}

/// Smoothed decisions `ỹ_i`; each point is its own neighbour.
pub fn nw_denoise(dataset: &Dataset, bandwidth: f64) -> Result<Vec<Vec<f64>>> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if dataset.len() < 2 {
        return Err(Error::InvalidArgument("denoising needs at least 2 points".into()));
    }
    dataset
        .points()
        .iter()
        .map(|p| nw_predict(dataset.points(), &p.u, bandwidth))
        .collect()
}

/// Bandwidth with the smallest k-fold held-out reconstruction MSE.
///
/// Bandwidths whose held-out predictions degenerate are skipped.
pub fn select_bandwidth(dataset: &Dataset, cfg: &SpaConfig, seed: u64) -> Result<f64> {
    let n = dataset.len();
    if cfg.bandwidths.is_empty() || cfg.bandwidths.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::InvalidArgument("bandwidth grid must be nonempty and positive".into()));
    }
    let folds = cfg.folds.clamp(2, n.max(2));
    if n < 2 {
        return Err(Error::InvalidArgument("cross-validation needs at least 2 points".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::from_seed(seed));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; n];
        for (rank, &i) in order.iter().enumerate() {
            f[i] = rank % folds;
        }
        f
    };
    let mut best: Option<(f64, f64)> = None;
    'bw: for &bw in &cfg.bandwidths {
        let mut sse = 0.0;
        for k in 0..folds {
            let train: Vec<DataPoint> = (0..n)
                .filter(|&i| fold_of[i] != k)
                .map(|i| dataset.points()[i].clone())
                .collect();
            for i in (0..n).filter(|&i| fold_of[i] == k) {
                let p = &dataset.points()[i];
                match nw_predict(&train, &p.u, bw) {
                    Ok(pred) => sse += dist_sq(&pred, &p.y),
                    Err(Error::DegenerateKernel { .. }) => continue 'bw,
                    Err(e) => return Err(e),
                }
            }
        }
        if best.is_none_or(|(_, b)| sse < b) {
            best = Some((bw, sse));
        }
    }
    best.map(|(bw, _)| bw).ok_or(Error::DegenerateKernel {
        bandwidth: cfg.bandwidths.iter().copied().fold(0.0, f64::max),
    })
}

/// Denoise, project onto `X(u)`, then run [`subopt_fit`].
pub fn spa_fit(dataset: &Dataset, fp: &ForwardProblem, cfg: &SpaConfig) -> Result<FitResult> {
    let start = Instant::now();
    dataset.check_against(fp)?;
    let bw = select_bandwidth(dataset, cfg, cfg.inner.seed)?;
    log::debug!("spa bandwidth {bw}");
    let smoothed = nw_denoise(dataset, bw)?;
    let points = dataset
        .points()
        .iter()
        .zip(smoothed)
        .map(|(p, y)| {
            Ok(DataPoint {
                u: p.u.clone(),
                y: solvers::project(&fp.region, &y)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cleaned = Dataset::new(points, dataset.truth().cloned())?;
    let mut fit = subopt_fit(&cleaned, fp, &cfg.inner)?;
    fit.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(fit)
}

/// Estimators selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fy,
    Subopt,
    Kka,
    Spa,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fy => "fy",
            Method::Subopt => "subopt",
            Method::Kka => "kka",
            Method::Spa => "spa",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fy" => Ok(Method::Fy),
            "subopt" | "via" => Ok(Method::Subopt),
            "kka" => Ok(Method::Kka),
            "spa" => Ok(Method::Spa),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// Hyperparameters for every estimator in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub fy: SgdConfig,
    pub subopt: SgdConfig,
    pub kka: SgdConfig,
    pub spa: SpaConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            fy: SgdConfig::default(),
            subopt: SgdConfig::subgradient(),
            kka: SgdConfig::default(),
            spa: SpaConfig::default(),
        }
    }
}

impl FitConfig {
    /// Same seed for every estimator.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.fy.seed = seed;
        self.subopt.seed = seed;
        self.kka.seed = seed;
        self.spa.inner.seed = seed;
        self
    }
}

pub fn fit(method: Method, dataset: &Dataset, fp: &ForwardProblem, cfg: &FitConfig) -> Result<FitResult> {
    match method {
        Method::Fy => fy_sgd_fit(dataset, fp, &cfg.fy),
        Method::Subopt => subopt_fit(dataset, fp, &cfg.subopt),
        Method::Kka => kka_fit(dataset, fp, &cfg.kka),
        Method::Spa => spa_fit(dataset, fp, &cfg.spa),
    }
}
