//! Exact and regularized forward solvers.
//!
//! With `coef > 0` the canonical problem `max h_cᵀx − (coef/2)‖x‖²` over `X`
//! is the Euclidean projection of `h_c/coef` onto `X`; with `coef = 0` it is a
//! linear program solved in closed form (or by shortest path for flows).

mod frank_wolfe;
mod graph;
mod projection;

pub use frank_wolfe::{fw_project, fw_project_detailed, FwConfig, FwSolution, StepRule};
pub use graph::{enumerate_paths, shortest_path, Graph};
pub use projection::{project_ball, project_box, project_nonneg_l1cap};

use crate::error::{Error, Result};
use crate::model::{FeasibleRegion, ForwardProblem, Parameter};
use crate::vecops::{norm, scale};

/// `argmax_{x ∈ X} h_cᵀx − (coef/2)‖x‖²` for `coef ≥ 0`.
pub fn maximize(region: &FeasibleRegion, h_c: &[f64], coef: f64) -> Result<Vec<f64>> {
    if let Some(d) = region.dim() {
        if d != h_c.len() {
            return Err(Error::dims("cost vector", d, h_c.len()));
        }
    }
    if let FeasibleRegion::Ball { radius } = region {
        // Boundary case straight from h_c so it matches the linear answer
        // bit for bit.
        let n = norm(h_c);
        if coef > 0.0 && n <= coef * radius {
            return Ok(scale(h_c, 1.0 / coef));
        }
        return linear_max(region, h_c);
    }
    if coef > 0.0 {
        project(region, &scale(h_c, 1.0 / coef))
    } else {
        linear_max(region, h_c)
    }
}

/// Maximizer of the linear objective `h_cᵀx` with deterministic tie-breaks.
fn linear_max(region: &FeasibleRegion, h_c: &[f64]) -> Result<Vec<f64>> {
    Ok(match region {
        FeasibleRegion::Box { lo, hi } => h_c
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(h, (l, u))| {
                if *h > 0.0 {
                    *u
                } else if *h < 0.0 {
                    *l
                } else {
                    0.5 * (l + u)
                }
            })
            .collect(),
        FeasibleRegion::Ball { radius } => {
            let n = norm(h_c);
            if n == 0.0 {
                vec![0.0; h_c.len()]
            } else {
                scale(h_c, radius / n)
            }
        }
        FeasibleRegion::NonNegL1Cap { cap } => {
            let mut x = vec![0.0; h_c.len()];
            let mut best: Option<usize> = None;
            for (k, h) in h_c.iter().enumerate() {
                if best.is_none_or(|b| *h > h_c[b]) {
                    best = Some(k);
                }
            }
            if let Some(k) = best {
                if h_c[k] > 0.0 {
                    x[k] = *cap;
                }
            }
            x
        }
        FeasibleRegion::FlowPolytope { graph, .. } => {
            let costs: Vec<f64> = h_c.iter().map(|v| -v).collect();
            shortest_path(graph, &costs)?
        }
    })
}

/// Euclidean projection of `v` onto the region.
pub fn project(region: &FeasibleRegion, v: &[f64]) -> Result<Vec<f64>> {
    Ok(match region {
        FeasibleRegion::Box { lo, hi } => {
            if lo.len() != v.len() {
                return Err(Error::dims("projection input", lo.len(), v.len()));
            }
            project_box(v, lo, hi)
        }
        FeasibleRegion::Ball { radius } => project_ball(v, *radius),
        FeasibleRegion::NonNegL1Cap { cap } => project_nonneg_l1cap(v, *cap),
        FeasibleRegion::FlowPolytope { graph, fw } => fw_project(graph, v, fw)?,
    })
}

/// Optimal decision `x*(θ; u)` of the forward problem.
pub fn solve_exact(fp: &ForwardProblem, theta: &Parameter, u: &[f64]) -> Result<Vec<f64>> {
    let h_c = fp.canonical_cost(theta, u)?;
    maximize(&fp.region, &h_c, fp.base_quad)
}

/// Unique optimum `x_λ*(θ; u)` with the extra penalty `(λ/2)‖x‖²`.
pub fn solve_regularized(
    fp: &ForwardProblem,
    theta: &Parameter,
    u: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let h_c = fp.canonical_cost(theta, u)?;
    maximize(&fp.region, &h_c, fp.base_quad + lambda)
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}
