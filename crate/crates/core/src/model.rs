//! Domain types: parameters, cost maps, feasible regions, forward problems,
//! datasets and observation noise.
//!
//! Every forward problem is stored in one canonical form,
//!
//! ```text
//! max_{x ∈ X}  h_c(θ; u)ᵀ x − (q/2)‖x‖²,     h_c = +h (Max) or −h (Min),
//! ```
//!
//! so solvers and losses never branch on the objective sense.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::solvers::{self, FwConfig, Graph};

/// Real parameter vector; matrices are stored flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Parameter {
    pub fn vector(values: Vec<f64>) -> Self {
        let rows = values.len();
        Self {
            values,
            rows,
            cols: 1,
        }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::dims("parameter matrix", rows * cols, values.len()));
        }
        Ok(Self { values, rows, cols })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            values: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Same shape, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::matrix(self.rows, self.cols, values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        crate::vecops::norm(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostKind {
    /// `h(θ; u) = θ + u`
    Additive,
    /// `h(θ; u) = θ ∘ u`
    Hadamard,
    /// `h(Θ; u) = Θ u` with `Θ ∈ R^{d×m}`
    MatrixProduct,
    /// `h(θ; u) = θ`
    Identity,
}

/// Cost map `h(θ; u)`, affine in `θ` with a constant Jacobian for fixed `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostMap {
    kind: CostKind,
    p: usize,
    m: usize,
    d: usize,
}

impl CostMap {
    pub fn additive(d: usize) -> Self {
        Self {
            kind: CostKind::Additive,
            p: d,
            m: d,
            d,
        }
    }

    pub fn hadamard(d: usize) -> Self {
        Self {
            kind: CostKind::Hadamard,
            p: d,
            m: d,
            d,
        }
    }

    pub fn matrix_product(d: usize, m: usize) -> Self {
        Self {
            kind: CostKind::MatrixProduct,
            p: d * m,
            m,
            d,
        }
    }

    /// Context is ignored; `m` is kept so datasets still carry their features.
    pub fn identity(d: usize, m: usize) -> Self {
        Self {
            kind: CostKind::Identity,
            p: d,
            m,
            d,
        }
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    /// `(p, m, d)`: parameter, context and decision dimensions.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.p, self.m, self.d)
    }

    pub fn param_shape(&self) -> (usize, usize) {
        match self.kind {
            CostKind::MatrixProduct => (self.d, self.m),
            _ => (self.p, 1),
        }
    }

    fn check(&self, theta: &[f64], u: &[f64]) -> Result<()> {
        if theta.len() != self.p {
            return Err(Error::dims("parameter", self.p, theta.len()));
        }
        self.check_context(u)
    }

    fn check_context(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.m {
            return Err(Error::dims("context", self.m, u.len()));
        }
        Ok(())
    }

    pub fn cost(&self, theta: &Parameter, u: &[f64]) -> Result<Vec<f64>> {
        self.cost_slice(theta.as_slice(), u)
    }

    pub fn cost_slice(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check(theta, u)?;
        Ok(match self.kind {
            CostKind::Additive => theta.iter().zip(u).map(|(t, c)| t + c).collect(),
            CostKind::Hadamard => theta.iter().zip(u).map(|(t, c)| t * c).collect(),
            CostKind::Identity => theta.to_vec(),
            CostKind::MatrixProduct => theta
                .chunks_exact(self.m)
                .map(|row| crate::vecops::dot(row, u))
                .collect(),
        })
    }

    pub fn jacobian<'u>(&self, u: &'u [f64]) -> Result<Jacobian<'u>> {
        self.check_context(u)?;
        Ok(Jacobian { map: *self, u })
    }
}

/// `∂h/∂θ` at a fixed context, as a linear operator `R^p → R^d`.
#[derive(Debug, Clone, Copy)]
pub struct Jacobian<'u> {
    map: CostMap,
    u: &'u [f64],
}

impl Jacobian<'_> {
    /// `J δθ`
    pub fn apply(&self, dtheta: &[f64]) -> Vec<f64> {
        let m = self.map.m;
        match self.map.kind {
            CostKind::Additive | CostKind::Identity => dtheta.to_vec(),
            CostKind::Hadamard => dtheta.iter().zip(self.u).map(|(t, c)| t * c).collect(),
            CostKind::MatrixProduct => dtheta
                .chunks_exact(m)
                .map(|row| crate::vecops::dot(row, self.u))
                .collect(),
        }
    }

    /// `Jᵀ r`; for matrix parameters this is the flattened outer product `r uᵀ`.
    pub fn apply_transpose(&self, r: &[f64]) -> Vec<f64> {
        match self.map.kind {
            CostKind::Additive | CostKind::Identity => r.to_vec(),
            CostKind::Hadamard => r.iter().zip(self.u).map(|(a, c)| a * c).collect(),
            CostKind::MatrixProduct => {
                let mut out = Vec::with_capacity(r.len() * self.u.len());
                for rk in r {
                    out.extend(self.u.iter().map(|uj| rk * uj));
                }
                out
            }
        }
    }

    /// `acc += s · Jᵀ r` without allocating.
    pub fn accumulate_transpose(&self, acc: &mut [f64], s: f64, r: &[f64]) {
        match self.map.kind {
            CostKind::Additive | CostKind::Identity => crate::vecops::axpy(acc, s, r),
            CostKind::Hadamard => {
                for ((a, rk), uk) in acc.iter_mut().zip(r).zip(self.u) {
                    *a += s * rk * uk;
                }
            }
            CostKind::MatrixProduct => {
                let m = self.u.len();
                for (row, rk) in acc.chunks_exact_mut(m).zip(r) {
                    if *rk != 0.0 {
                        crate::vecops::axpy(row, s * rk, self.u);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    /// Sign folding the cost into canonical max form.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum FeasibleRegion {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { radius: f64 },
    /// `{x ≥ 0, Σ x ≤ cap}`
    NonNegL1Cap { cap: f64 },
    /// Convex hull of unit source→sink path flows.
    FlowPolytope { graph: Arc<Graph>, fw: FwConfig },
}

impl FeasibleRegion {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let region = FeasibleRegion::Box { lo, hi };
        region.validate()?;
        Ok(region)
    }

    pub fn uniform_box(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; d], vec![hi; d])
    }

    pub fn ball(radius: f64) -> Result<Self> {
        let region = FeasibleRegion::Ball { radius };
        region.validate()?;
        Ok(region)
    }

    pub fn nonneg_l1cap(cap: f64) -> Result<Self> {
        let region = FeasibleRegion::NonNegL1Cap { cap };
        region.validate()?;
        Ok(region)
    }

    pub fn flow(graph: Arc<Graph>) -> Self {
        FeasibleRegion::FlowPolytope {
            graph,
            fw: FwConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleRegion::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::dims("box bounds", lo.len(), hi.len()));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidRegion("box requires lo <= hi".into()));
                }
            }
            FeasibleRegion::Ball { radius: a } | FeasibleRegion::NonNegL1Cap { cap: a } => {
                if !(*a > 0.0 && a.is_finite()) {
                    return Err(Error::InvalidRegion(format!(
                        "{} requires a positive radius, got {a}",
                        self.name()
                    )));
                }
            }
            FeasibleRegion::FlowPolytope { fw, .. } => fw.validate()?,
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeasibleRegion::Box { .. } => "box",
            FeasibleRegion::Ball { .. } => "ball",
            FeasibleRegion::NonNegL1Cap { .. } => "nonneg-l1cap",
            FeasibleRegion::FlowPolytope { .. } => "flow-polytope",
        }
    }

    /// Fixed decision dimension, if the region pins one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            FeasibleRegion::Box { lo, .. } => Some(lo.len()),
            FeasibleRegion::FlowPolytope { graph, .. } => Some(graph.num_edges()),
            _ => None,
        }
    }

    /// Membership up to `tol`. For flows this checks `Ax = b` and `0 ≤ x ≤ 1`,
    /// the LP relaxation containing the path polytope.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            FeasibleRegion::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            FeasibleRegion::Ball { radius } => crate::vecops::norm(x) <= radius + tol,
            FeasibleRegion::NonNegL1Cap { cap } => {
                x.iter().all(|v| *v >= -tol) && x.iter().sum::<f64>() <= cap + tol
            }
            FeasibleRegion::FlowPolytope { graph, .. } => {
                x.iter().all(|v| *v >= -tol && *v <= 1.0 + tol)
                    && graph.flow_residual(x) <= tol
            }
        }
    }
}

/// Parametric forward optimization problem, kept in canonical max form.
#[derive(Debug, Clone)]
pub struct ForwardProblem {
    pub cost_map: CostMap,
    pub region: FeasibleRegion,
    pub sense: Sense,
    /// Intrinsic quadratic coefficient `q ≥ 0` (objective gets `−(q/2)‖x‖²`).
    pub base_quad: f64,
}

impl ForwardProblem {
    pub fn new(
        cost_map: CostMap,
        region: FeasibleRegion,
        sense: Sense,
        base_quad: f64,
    ) -> Result<Self> {
        region.validate()?;
        if !(base_quad >= 0.0 && base_quad.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "base_quad must be >= 0, got {base_quad}"
            )));
        }
        let (_, _, d) = cost_map.dims();
        if let Some(rd) = region.dim() {
            if rd != d {
                return Err(Error::dims("region dimension", d, rd));
            }
        }
        Ok(Self {
            cost_map,
            region,
            sense,
            base_quad,
        })
    }

    pub fn linear(cost_map: CostMap, region: FeasibleRegion, sense: Sense) -> Result<Self> {
        Self::new(cost_map, region, sense, 0.0)
    }

    pub fn param_dim(&self) -> usize {
        self.cost_map.dims().0
    }

    pub fn context_dim(&self) -> usize {
        self.cost_map.dims().1
    }

    pub fn decision_dim(&self) -> usize {
        self.cost_map.dims().2
    }

    pub fn sign(&self) -> f64 {
        self.sense.sign()
    }

    /// `h_c(θ; u)`, the cost in canonical max orientation.
    pub fn canonical_cost(&self, theta: &Parameter, u: &[f64]) -> Result<Vec<f64>> {
        let mut h = self.cost_map.cost(theta, u)?;
        if self.sense == Sense::Min {
            h.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(h)
    }

    /// Canonical objective `h_cᵀx − (coef/2)‖x‖²`.
    pub fn canonical_value(h_c: &[f64], x: &[f64], coef: f64) -> f64 {
        crate::vecops::dot(h_c, x) - 0.5 * coef * crate::vecops::norm_sq(x)
    }

    /// Replace the region's Frank-Wolfe settings (no-op for other regions).
    pub fn with_fw_config(mut self, cfg: FwConfig) -> Self {
        if let FeasibleRegion::FlowPolytope { fw, .. } = &mut self.region {
            *fw = cfg;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<DataPoint>,
    m: usize,
    d: usize,
    truth: Option<Parameter>,
}

impl Dataset {
    pub fn new(points: Vec<DataPoint>, truth: Option<Parameter>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("dataset must be nonempty".into()))?;
        let (m, d) = (first.u.len(), first.y.len());
        for p in &points {
            if p.u.len() != m {
                return Err(Error::dims("context", m, p.u.len()));
            }
            if p.y.len() != d {
                return Err(Error::dims("decision", d, p.y.len()));
            }
        }
        Ok(Self {
            points,
            m,
            d,
            truth,
        })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.d)
    }

    pub fn truth(&self) -> Option<&Parameter> {
        self.truth.as_ref()
    }

    pub fn contexts(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.u.as_slice())
    }

    /// Checks that the dataset fits `fp`.
    pub fn check_against(&self, fp: &ForwardProblem) -> Result<()> {
        let (p, m, d) = fp.cost_map.dims();
        if self.m != m {
            return Err(Error::dims("dataset context", m, self.m));
        }
        if self.d != d {
            return Err(Error::dims("dataset decision", d, self.d));
        }
        if let Some(t) = &self.truth {
            if t.len() != p {
                return Err(Error::dims("dataset truth", p, t.len()));
            }
        }
        Ok(())
    }

    /// Sub-dataset with the given indices (truth is kept).
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            idx.iter().map(|&i| self.points[i].clone()).collect(),
            self.truth.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// `y = x*(θ*; u) + w`, `w ~ N(0, σ²I)`; observations may be infeasible.
    NoisyDecision { sigma: f64 },
    /// `y = x*` for the cost `h(θ*; u) + w`; observations stay feasible.
    NoisyObjective { sigma: f64 },
    Noiseless,
}

impl NoiseModel {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::NoisyDecision { .. } => "noisy-decision",
            NoiseModel::NoisyObjective { .. } => "noisy-objective",
            NoiseModel::Noiseless => "noiseless",
        }
    }
}

/// Product-uniform context distribution `Uniform(lo, hi)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextDist {
    pub lo: f64,
    pub hi: f64,
    pub dim: usize,
}

impl ContextDist {
    pub fn uniform(lo: f64, hi: f64, dim: usize) -> Self {
        Self { lo, hi, dim }
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> Vec<f64> {
        if self.lo == self.hi {
            return vec![self.lo; self.dim];
        }
        let dist = Uniform::new(self.lo, self.hi).expect("lo < hi");
        (0..self.dim).map(|_| dist.sample(rng)).collect()
    }

    pub fn sample_many(&self, n: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

fn gaussian(n: usize, sigma: f64, rng: &mut rng::Rng) -> Vec<f64> {
    (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Observation for one context under `noise`.
pub fn observe(
    fp: &ForwardProblem,
    theta_star: &Parameter,
    u: &[f64],
    noise: NoiseModel,
    rng: &mut rng::Rng,
) -> Result<Vec<f64>> {
    match noise {
        NoiseModel::Noiseless => solvers::solve_exact(fp, theta_star, u),
        NoiseModel::NoisyDecision { sigma } => {
            let mut y = solvers::solve_exact(fp, theta_star, u)?;
            let w = gaussian(y.len(), sigma, rng);
            crate::vecops::axpy(&mut y, 1.0, &w);
            Ok(y)
        }
        NoiseModel::NoisyObjective { sigma } => {
            let mut h = fp.cost_map.cost(theta_star, u)?;
            let w = gaussian(h.len(), sigma, rng);
            crate::vecops::axpy(&mut h, 1.0, &w);
            let h_c = crate::vecops::scale(&h, fp.sign());
            solvers::maximize(&fp.region, &h_c, fp.base_quad)
        }
    }
}

/// Draw `n` IID `(u, y)` pairs; deterministic in `seed`.
pub fn sample_dataset(
    fp: &ForwardProblem,
    theta_star: &Parameter,
    n: usize,
    noise: NoiseModel,
    contexts: ContextDist,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = rng::from_seed(seed);
    sample_dataset_with(fp, theta_star, n, noise, contexts, &mut rng)
}

pub fn sample_dataset_with(
    fp: &ForwardProblem,
    theta_star: &Parameter,
    n: usize,
    noise: NoiseModel,
    contexts: ContextDist,
    rng: &mut rng::Rng,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    if contexts.dim != fp.context_dim() {
        return Err(Error::dims("context distribution", fp.context_dim(), contexts.dim));
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u = contexts.sample(rng);
        let y = observe(fp, theta_star, &u, noise, rng)?;
        points.push(DataPoint { u, y });
    }
    Dataset::new(points, Some(theta_star.clone()))
}
