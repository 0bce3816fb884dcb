//! Euclidean projection onto a path polytope using only a shortest-path
//! oracle.
//!
//! The default step rule keeps the current point as an explicit convex
//! combination of path vertices and, after every oracle call, re-optimizes
//! over the affine hull of the active set (Wolfe's minimum-norm-point
//! corrections). Once the optimal face is found the answer is exact up to
//! rounding. The plain Frank-Wolfe step with exact line search is available
//! for comparison; it converges sublinearly.

use serde::{Deserialize, Serialize};

use super::graph::{shortest_path, Graph};
use crate::error::{Error, Result};
use crate::vecops::{axpy, dot, norm_sq, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Classic FW step `x ← x + γ(s − x)` with the closed-form optimal `γ`.
    ExactLineSearch,
    /// Fully corrective: affine re-optimization over the active vertex set.
    MinNormCorrection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FwConfig {
    pub max_iters: usize,
    pub gap_tol: f64,
    pub step_rule: StepRule,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            gap_tol: 1e-6,
            step_rule: StepRule::MinNormCorrection,
        }
    }
}

impl FwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gap_tol must be positive, got {}",
                self.gap_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwSolution {
    pub x: Vec<f64>,
    /// Final duality gap `(x − t)ᵀ(x − s)`; bounds `½‖x − Π(t)‖²`.
    pub gap: f64,
    /// Oracle calls made, the initial one included.
    pub iterations: usize,
}

/// Projection of `target` onto the path polytope of `g`.
pub fn fw_project(g: &Graph, target: &[f64], cfg: &FwConfig) -> Result<Vec<f64>> {
    fw_project_detailed(g, target, cfg).map(|s| s.x)
}

pub fn fw_project_detailed(g: &Graph, target: &[f64], cfg: &FwConfig) -> Result<FwSolution> {
    cfg.validate()?;
    if target.len() != g.num_edges() {
        return Err(Error::dims("projection target", g.num_edges(), target.len()));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("projection target is not finite".into()));
    }
    let neg: Vec<f64> = target.iter().map(|v| -v).collect();
    let first = shortest_path(g, &neg)?;
    match cfg.step_rule {
        StepRule::ExactLineSearch => line_search(g, target, cfg, first),
        StepRule::MinNormCorrection => min_norm(g, target, cfg, first),
    }
}

fn line_search(g: &Graph, t: &[f64], cfg: &FwConfig, mut x: Vec<f64>) -> Result<FwSolution> {
    let mut gap = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        let grad = sub(&x, t);
        let s = shortest_path(g, &grad)?;
        let dir = sub(&s, &x);
        gap = -dot(&grad, &dir);
        if gap <= cfg.gap_tol {
            return Ok(FwSolution {
                x,
                gap: gap.max(0.0),
                iterations: it,
            });
        }
        let gamma = (gap / norm_sq(&dir)).clamp(0.0, 1.0);
        axpy(&mut x, gamma, &dir);
    }
    Err(Error::NonConvergence { final_gap: gap })
}

const WEIGHT_EPS: f64 = 1e-12;

fn min_norm(g: &Graph, t: &[f64], cfg: &FwConfig, first: Vec<f64>) -> Result<FwSolution> {
    let mut verts = vec![first];
    let mut w = vec![1.0];
    let mut x = verts[0].clone();
    let mut gap = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        let grad = sub(&x, t);
        let s = shortest_path(g, &grad)?;
        gap = dot(&grad, &sub(&x, &s));
        if gap <= cfg.gap_tol {
            return Ok(FwSolution {
                x,
                gap: gap.max(0.0),
                iterations: it,
            });
        }
        if verts.contains(&s) {
            // Rounding has stalled the corrections; nothing new to add.
            log::debug!("frank-wolfe stalled at gap {gap:e}");
            return Ok(FwSolution {
                x,
                gap,
                iterations: it,
            });
        }
        verts.push(s);
        w.push(0.0);
        correct(&mut verts, &mut w, t);
        x = combine(&verts, &w);
    }
    Err(Error::NonConvergence { final_gap: gap })
}

fn combine(verts: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; verts[0].len()];
    for (v, wi) in verts.iter().zip(w) {
        axpy(&mut x, *wi, v);
    }
    x
}

/// Wolfe minor cycles: move toward the affine minimizer of `‖Σwᵢvᵢ − t‖²`
/// over the active set, dropping vertices whose weight hits zero.
fn correct(verts: &mut Vec<Vec<f64>>, w: &mut Vec<f64>, t: &[f64]) {
    loop {
        let alpha = affine_minimizer(verts, t);
        if alpha.iter().all(|a| *a > WEIGHT_EPS) {
            *w = alpha;
            return;
        }
        let mut step = 1.0_f64;
        for (wi, ai) in w.iter().zip(&alpha) {
            if *ai <= WEIGHT_EPS && wi > ai {
                step = step.min(wi / (wi - ai));
            }
        }
        for (wi, ai) in w.iter_mut().zip(&alpha) {
            *wi += step * (ai - *wi);
        }
        let keep: Vec<bool> = w.iter().map(|wi| *wi > WEIGHT_EPS).collect();
        if keep.iter().all(|k| *k) {
            // Numerically the step did not zero anything; drop the smallest.
            let (imin, _) = w
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("active set is nonempty");
            verts.remove(imin);
            w.remove(imin);
        } else {
            let mut k = 0;
            verts.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            w.retain(|wi| *wi > WEIGHT_EPS);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= total);
        if verts.len() == 1 {
            w[0] = 1.0;
            return;
        }
    }
}

/// Weights summing to one that minimize `‖Σwᵢ(vᵢ − t)‖²`, from the KKT
/// system `[G 1; 1ᵀ 0][w; μ] = [0; 1]` with a tiny ridge on `G`.
fn affine_minimizer(verts: &[Vec<f64>], t: &[f64]) -> Vec<f64> {
    let k = verts.len();
    let z: Vec<Vec<f64>> = verts.iter().map(|v| sub(v, t)).collect();
    let n = k + 1;
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..k {
        for j in 0..=i {
            let gij = dot(&z[i], &z[j]);
            a[i][j] = gij;
            a[j][i] = gij;
        }
        a[i][i] += 1e-12 * (1.0 + a[i][i]);
        a[i][k] = 1.0;
        a[k][i] = 1.0;
    }
    a[k][n] = 1.0;
    let sol = gauss_solve(a);
    sol[..k].to_vec()
}

/// Gaussian elimination with partial pivoting on an augmented `n × (n+1)`
/// matrix.
fn gauss_solve(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty");
        a.swap(col, piv);
        let p = a[col][col];
        if p == 0.0 {
            continue;
        }
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f != 0.0 {
                for c in col..=n {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = a[row][n];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = if a[row][row] == 0.0 { 0.0 } else { s / a[row][row] };
    }
    x
}
