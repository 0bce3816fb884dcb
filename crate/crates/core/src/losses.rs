//! Per-observation losses and their (sub)gradients in `θ`.
//!
//! With `V_c(x) = h_cᵀx − (c/2)‖x‖²`:
//!
//! - Fenchel-Young: `V_{q+λ}(x_λ*) − V_{q+λ}(y)`, gradient `J_cᵀ(x_λ* − y)`.
//! - Suboptimality: `V_q(x*) − V_q(y)`, subgradient `J_cᵀ(x* − y)`.
//! - KKA: squared KKT stationarity and complementary-slackness residuals.
//!
//! `J_c` is the Jacobian of the sign-folded cost, so Min problems need no
//! special casing.

use crate::error::{Error, Result};
use crate::model::{Dataset, FeasibleRegion, ForwardProblem, Parameter};
use crate::solvers;
use crate::vecops::{dist_sq, sub};

#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub grad: Option<Vec<f64>>,
}

/// Value and gradient of the FY loss sharing one regularized solve.
pub fn fy_eval(
    fp: &ForwardProblem,
    theta: &Parameter,
    u: &[f64],
    y: &[f64],
    lambda: f64,
) -> Result<LossEval> {
    let (value, grad) = gap_and_grad(fp, theta, u, y, Some(lambda))?;
    Ok(LossEval {
        value,
        grad: Some(grad),
    })
}

pub fn fy_loss(
    fp: &ForwardProblem,
    theta: &Parameter,
    u: &[f64],
    y: &[f64],
    lambda: f64,
) -> Result<f64> {
    solvers::check_lambda(lambda)?;
    check_y(fp, y)?;
    let h_c = fp.canonical_cost(theta, u)?;
    let coef = fp.base_quad + lambda;
    let x = solvers::maximize(&fp.region, &h_c, coef)?;
    Ok(ForwardProblem::canonical_value(&h_c, &x, coef)
        - ForwardProblem::canonical_value(&h_c, y, coef))
}

pub fn fy_grad(
    fp: &ForwardProblem,
    theta: &Parameter,
    u: &[f64],
    y: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    gap_and_grad(fp, theta, u, y, Some(lambda)).map(|(_, g)| g)
}

pub fn subopt_loss(fp: &ForwardProblem, theta: &Parameter, u: &[f64], y: &[f64]) -> Result<f64> {
    gap_and_grad(fp, theta, u, y, None).map(|(v, _)| v)
}

pub fn subopt_subgrad(
    fp: &ForwardProblem,
    theta: &Parameter,
    u: &[f64],
    y: &[f64],
) -> Result<Vec<f64>> {
    gap_and_grad(fp, theta, u, y, None).map(|(_, g)| g)
}

pub fn subopt_eval(fp: &ForwardProblem, theta: &Parameter, u: &[f64], y: &[f64]) -> Result<LossEval> {
    let (value, grad) = gap_and_grad(fp, theta, u, y, None)?;
    Ok(LossEval {
        value,
        grad: Some(grad),
    })
}

/// `‖y − x*(θ; u)‖²`, the (non-convex, piecewise-constant) distance loss.
pub fn dist_loss_oracle(fp: &ForwardProblem, theta: &Parameter, u: &[f64], y: &[f64]) -> Result<f64> {
    check_y(fp, y)?;
    let x = solvers::solve_exact(fp, theta, u)?;
    Ok(dist_sq(&x, y))
}

fn check_y(fp: &ForwardProblem, y: &[f64]) -> Result<()> {
    let d = fp.decision_dim();
    if y.len() != d {
        return Err(Error::dims("observed decision", d, y.len()));
    }
    Ok(())
}

/// `λ = None` gives the unregularized suboptimality gap.
fn gap_and_grad(
    fp: &ForwardProblem,
    theta: &Parameter,
    u: &[f64],
    y: &[f64],
    lambda: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    if let Some(l) = lambda {
        solvers::check_lambda(l)?;
    }
    check_y(fp, y)?;
    let h_c = fp.canonical_cost(theta, u)?;
    let coef = fp.base_quad + lambda.unwrap_or(0.0);
    let x = solvers::maximize(&fp.region, &h_c, coef)?;
    let value =
        ForwardProblem::canonical_value(&h_c, &x, coef) - ForwardProblem::canonical_value(&h_c, y, coef);
    let mut grad = vec![0.0; theta.len()];
    fp.cost_map
        .jacobian(u)?
        .accumulate_transpose(&mut grad, fp.sign(), &sub(&x, y));
    Ok((value, grad))
}

/// KKA decision variables: `θ` plus one nonnegative dual vector per point.
///
/// Dual layout per point: Box has `2d` entries (`lo − x ≤ 0` then
/// `x − hi ≤ 0`); NonNegL1Cap has `d + 1` (`−x_k ≤ 0` then `Σx − a ≤ 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct KkaState {
    pub theta: Parameter,
    pub duals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KkaGrad {
    pub theta: Vec<f64>,
    pub duals: Vec<Vec<f64>>,
}

/// Number of inequality constraints KKA dualizes for `region`.
pub fn kka_dual_len(region: &FeasibleRegion, d: usize) -> Result<usize> {
    match region {
        FeasibleRegion::Box { .. } => Ok(2 * d),
        FeasibleRegion::NonNegL1Cap { .. } => Ok(d + 1),
        other => Err(Error::UnsupportedRegion {
            method: "kka",
            region: other.name(),
        }),
    }
}

impl KkaState {
    /// `θ` with all-zero duals sized for `dataset`.
    pub fn zeros(fp: &ForwardProblem, theta: Parameter, dataset: &Dataset) -> Result<Self> {
        let q = kka_dual_len(&fp.region, fp.decision_dim())?;
        Ok(Self {
            theta,
            duals: vec![vec![0.0; q]; dataset.len()],
        })
    }
}

/// Constraint values `g_j(y)` and the stationarity residual
/// `h_c − q·y − Σ_j λ_j ∇g_j`.
fn kka_residuals(
    fp: &ForwardProblem,
    h_c: &[f64],
    y: &[f64],
    duals: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = y.len();
    let mut r: Vec<f64> = h_c.iter().zip(y).map(|(h, yk)| h - fp.base_quad * yk).collect();
    let g = match &fp.region {
        FeasibleRegion::Box { lo, hi } => {
            for k in 0..d {
                r[k] += duals[k] - duals[d + k];
            }
            lo.iter()
                .zip(y)
                .map(|(l, yk)| l - yk)
                .chain(y.iter().zip(hi).map(|(yk, h)| yk - h))
                .collect()
        }
        FeasibleRegion::NonNegL1Cap { cap } => {
            for k in 0..d {
                r[k] += duals[k] - duals[d];
            }
            y.iter()
                .map(|yk| -yk)
                .chain(std::iter::once(y.iter().sum::<f64>() - cap))
                .collect()
        }
        other => {
            return Err(Error::UnsupportedRegion {
                method: "kka",
                region: other.name(),
            })
        }
    };
    Ok((g, r))
}

fn check_kka(fp: &ForwardProblem, state: &KkaState, dataset: &Dataset) -> Result<usize> {
    let q = kka_dual_len(&fp.region, fp.decision_dim())?;
    dataset.check_against(fp)?;
    if state.duals.len() != dataset.len() {
        return Err(Error::dims("kka dual blocks", dataset.len(), state.duals.len()));
    }
    if let Some(bad) = state.duals.iter().find(|l| l.len() != q) {
        return Err(Error::dims("kka duals", q, bad.len()));
    }
    Ok(q)
}

/// Mean over points of `‖r_stat‖² + Σ_j (λ_j g_j(y))²`.
pub fn kka_objective(fp: &ForwardProblem, state: &KkaState, dataset: &Dataset) -> Result<f64> {
    check_kka(fp, state, dataset)?;
    let mut total = 0.0;
    for (pt, lam) in dataset.points().iter().zip(&state.duals) {
        let h_c = fp.canonical_cost(&state.theta, &pt.u)?;
        let (g, r) = kka_residuals(fp, &h_c, &pt.y, lam)?;
        total += r.iter().map(|v| v * v).sum::<f64>();
        total += g.iter().zip(lam).map(|(gj, lj)| (gj * lj).powi(2)).sum::<f64>();
    }
    Ok(total / dataset.len() as f64)
}

/// Exact gradient of [`kka_objective`] in `θ` and every dual block.
pub fn kka_grad(fp: &ForwardProblem, state: &KkaState, dataset: &Dataset) -> Result<KkaGrad> {
    check_kka(fp, state, dataset)?;
    let n = dataset.len() as f64;
    let d = fp.decision_dim();
    let mut g_theta = vec![0.0; state.theta.len()];
    let mut g_duals = Vec::with_capacity(dataset.len());
    for (pt, lam) in dataset.points().iter().zip(&state.duals) {
        let h_c = fp.canonical_cost(&state.theta, &pt.u)?;
        let (g, r) = kka_residuals(fp, &h_c, &pt.y, lam)?;
        fp.cost_map
            .jacobian(&pt.u)?
            .accumulate_transpose(&mut g_theta, 2.0 * fp.sign() / n, &r);
        let mut gl: Vec<f64> = g.iter().zip(lam).map(|(gj, lj)| 2.0 * lj * gj * gj / n).collect();
        match &fp.region {
            FeasibleRegion::Box { .. } => {
                for k in 0..d {
                    gl[k] += 2.0 * r[k] / n;
                    gl[d + k] -= 2.0 * r[k] / n;
                }
            }
            _ => {
                for k in 0..d {
                    gl[k] += 2.0 * r[k] / n;
                }
                gl[d] -= 2.0 * r.iter().sum::<f64>() / n;
            }
        }
        g_duals.push(gl);
    }
    Ok(KkaGrad {
        theta: g_theta,
        duals: g_duals,
    })
}
