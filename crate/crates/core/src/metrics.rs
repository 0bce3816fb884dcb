//! Evaluation metrics and numerical checks of the estimation bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses;
use crate::model::{ForwardProblem, Parameter};
use crate::solvers;
use crate::vecops::{dist_sq, dot, l1_dist, norm_sq};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `‖θ̂ − θ*‖₁`, when a ground truth exists.
    pub parameter_error: Option<f64>,
    pub decision_error: f64,
    pub regret: f64,
    /// Percent; shortest-path runs only.
    pub relative_regret_ratio: Option<f64>,
    pub n_test: usize,
    pub wall_time_seconds: f64,
}

pub fn parameter_error(theta_hat: &Parameter, theta_star: &Parameter) -> Result<f64> {
    if theta_hat.len() != theta_star.len() {
        return Err(Error::dims("parameter", theta_star.len(), theta_hat.len()));
    }
    Ok(l1_dist(theta_hat.as_slice(), theta_star.as_slice()))
}

fn nonempty(contexts: &[Vec<f64>]) -> Result<f64> {
    if contexts.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    Ok(contexts.len() as f64)
}

/// Mean `‖x*(θ̂; u) − x*(θ*; u)‖²`.
pub fn decision_error(
    fp: &ForwardProblem,
    theta_hat: &Parameter,
    theta_star: &Parameter,
    contexts: &[Vec<f64>],
) -> Result<f64> {
    let n = nonempty(contexts)?;
    let mut total = 0.0;
    for u in contexts {
        let a = solvers::solve_exact(fp, theta_hat, u)?;
        let b = solvers::solve_exact(fp, theta_star, u)?;
        total += dist_sq(&a, &b);
    }
    Ok(total / n)
}

/// Mean true-objective loss from acting on `θ̂`, oriented to be `≥ 0`.
///
/// Uses the full canonical objective, so the quadratic term of problems with
/// `q > 0` is included.
pub fn regret(
    fp: &ForwardProblem,
    theta_hat: &Parameter,
    theta_star: &Parameter,
    contexts: &[Vec<f64>],
) -> Result<f64> {
    let n = nonempty(contexts)?;
    let mut total = 0.0;
    for u in contexts {
        let h_c = fp.canonical_cost(theta_star, u)?;
        let best = solvers::maximize(&fp.region, &h_c, fp.base_quad)?;
        let acted = solvers::solve_exact(fp, theta_hat, u)?;
        total += ForwardProblem::canonical_value(&h_c, &best, fp.base_quad)
            - ForwardProblem::canonical_value(&h_c, &acted, fp.base_quad);
    }
    Ok(total / n)
}

/// `100 · (mean realized cost of the decisions for θ̂ − mean clairvoyant cost)
/// / mean clairvoyant cost`, for records `(u, realized edge costs)` of a
/// cost-minimizing problem.
pub fn relative_regret_ratio<'a, I>(fp: &ForwardProblem, theta_hat: &Parameter, records: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let mut predicted = 0.0;
    let mut clairvoyant = 0.0;
    let mut n = 0usize;
    for (u, t) in records {
        let x = solvers::solve_exact(fp, theta_hat, u)?;
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        let best = solvers::maximize(&fp.region, &neg, 0.0)?;
        predicted += dot(t, &x);
        clairvoyant += dot(t, &best);
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if !(clairvoyant > 0.0) {
        return Err(Error::InvalidArgument(
            "relative regret needs a positive clairvoyant cost".into(),
        ));
    }
    Ok(100.0 * (predicted - clairvoyant) / clairvoyant)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub lhs: f64,
    pub reg_error_term: f64,
    pub excess_risk_term: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Mean FY loss against the noiseless observations `x*(θ*; u)`.
fn surrogate_risk(
    fp: &ForwardProblem,
    theta: &Parameter,
    targets: &[(Vec<f64>, Vec<f64>)],
    lambda: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (u, y) in targets {
        total += losses::fy_loss(fp, theta, u, y, lambda)?;
    }
    Ok(total / targets.len() as f64)
}

/// Checks `D(θ) ≤ 2·E‖x_λ*(θ) − x*(θ)‖² + (4/λ)·(R_λ(θ) − inf R_λ)`, with the
/// infimum replaced by the best of `candidates` (and `θ` itself).
pub fn calibration_check(
    fp: &ForwardProblem,
    theta: &Parameter,
    theta_star: &Parameter,
    lambda: f64,
    contexts: &[Vec<f64>],
    candidates: &[Parameter],
) -> Result<CalibrationReport> {
    solvers::check_lambda(lambda)?;
    let n = nonempty(contexts)?;
    let targets = contexts
        .iter()
        .map(|u| Ok((u.clone(), solvers::solve_exact(fp, theta_star, u)?)))
        .collect::<Result<Vec<_>>>()?;
    let lhs = decision_error(fp, theta, theta_star, contexts)?;
    let mut reg = 0.0;
    for u in contexts {
        let xl = solvers::solve_regularized(fp, theta, u, lambda)?;
        let x = solvers::solve_exact(fp, theta, u)?;
        reg += dist_sq(&xl, &x);
    }
    reg /= n;
    let risk = surrogate_risk(fp, theta, &targets, lambda)?;
    let mut inf = risk;
    for c in candidates {
        inf = inf.min(surrogate_risk(fp, c, &targets, lambda)?);
    }
    let excess = risk - inf;
    let rhs = 2.0 * reg + (4.0 / lambda) * excess.max(0.0);
    Ok(CalibrationReport {
        lhs,
        reg_error_term: reg,
        excess_risk_term: excess,
        rhs,
        holds: lhs <= rhs + 1e-8,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretBound {
    pub regret: f64,
    /// `√(B̂·D̂)` with `B̂ = mean ‖h(θ*; u)‖²` and `D̂` the decision error.
    pub bound: f64,
    pub holds: bool,
}

/// Cauchy-Schwarz bound of the regret by the decision error (linear
/// objectives).
pub fn regret_bound_check(
    fp: &ForwardProblem,
    theta_hat: &Parameter,
    theta_star: &Parameter,
    contexts: &[Vec<f64>],
) -> Result<RegretBound> {
    let n = nonempty(contexts)?;
    let mut b = 0.0;
    for u in contexts {
        b += norm_sq(&fp.cost_map.cost(theta_star, u)?);
    }
    b /= n;
    let d = decision_error(fp, theta_hat, theta_star, contexts)?;
    let r = regret(fp, theta_hat, theta_star, contexts)?;
    let bound = (b * d).sqrt();
    Ok(RegretBound {
        regret: r,
        bound,
        holds: r <= bound + 1e-8,
    })
}

/// Decision error, regret and (if a truth is given) parameter error on
/// `contexts`.
pub fn evaluate(
    fp: &ForwardProblem,
    theta_hat: &Parameter,
    theta_star: &Parameter,
    contexts: &[Vec<f64>],
    wall_time_seconds: f64,
) -> Result<MetricsReport> {
    Ok(MetricsReport {
        parameter_error: Some(parameter_error(theta_hat, theta_star)?),
        decision_error: decision_error(fp, theta_hat, theta_star, contexts)?,
        regret: regret(fp, theta_hat, theta_star, contexts)?,
        relative_regret_ratio: None,
        n_test: contexts.len(),
        wall_time_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostMap, FeasibleRegion, Sense};
    use crate::synth::{build_example, ExampleKind, ExampleSpec};
    use approx::assert_abs_diff_eq;

    fn contexts(spec: &ExampleSpec, n: usize) -> Vec<Vec<f64>> {
        spec.contexts.sample_many(n, &mut crate::rng::from_seed(3))
    }

    #[test]
    fn parameter_error_examples() {
        let a = Parameter::vector(vec![0.5; 10]);
        assert_eq!(parameter_error(&a, &a).unwrap(), 0.0);
        let b = Parameter::vector(vec![0.6; 10]);
        assert_abs_diff_eq!(parameter_error(&b, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert!(parameter_error(&Parameter::vector(vec![0.0]), &a).is_err());
    }

    #[test]
    fn example_b_sign_metrics() {
        let spec = ExampleSpec::new(ExampleKind::B);
        let (fp, th) = build_example(&spec).unwrap();
        let us = contexts(&spec, 200);
        let scaled = Parameter::vector(th.as_slice().iter().map(|v| v * 1e-3).collect());
        assert_eq!(decision_error(&fp, &scaled, &th, &us).unwrap(), 0.0);
        assert_eq!(regret(&fp, &scaled, &th, &us).unwrap(), 0.0);
        let mut flipped = th.clone();
        flipped.as_mut_slice()[3] *= -1.0;
        assert_abs_diff_eq!(decision_error(&fp, &flipped, &th, &us).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn regret_nonnegative() {
        for kind in ExampleKind::ALL {
            let spec = ExampleSpec::new(kind);
            let (fp, th) = build_example(&spec).unwrap();
            let us = contexts(&spec, 50);
            assert_eq!(regret(&fp, &th, &th, &us).unwrap(), 0.0);
            let other = Parameter::vector((0..10).map(|k| (k as f64 * 0.37).sin()).collect());
            assert!(regret(&fp, &other, &th, &us).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn ball_reg_term_is_zero_for_small_lambda() {
        let fp = ForwardProblem::linear(
            CostMap::additive(3),
            FeasibleRegion::ball(3.0).unwrap(),
            Sense::Max,
        )
        .unwrap();
        let th = Parameter::vector(vec![0.5; 3]);
        let us = vec![vec![1.0, 0.0, 0.5], vec![0.2, 1.9, 0.3]];
        // ‖h‖ ≥ 1.5 everywhere, so λ = 0.4 ≤ ‖h‖/3.
        let rep = calibration_check(&fp, &th, &th, 0.4, &us, &[]).unwrap();
        assert_eq!(rep.reg_error_term, 0.0);
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.holds);
    }

    #[test]
    fn relative_regret_zero_when_clairvoyant() {
        let g = std::sync::Arc::new(
            solvers::Graph::new(3, vec![(0, 1), (1, 2), (0, 2)], 0, 2).unwrap(),
        );
        let fp = ForwardProblem::linear(
            CostMap::matrix_product(3, 1),
            FeasibleRegion::flow(g),
            Sense::Min,
        )
        .unwrap();
        let th = Parameter::matrix(3, 1, vec![1.0, 1.0, 3.0]).unwrap();
        let u = [1.0];
        let t = [1.0, 1.0, 3.0];
        let r = relative_regret_ratio(&fp, &th, [(&u[..], &t[..])]).unwrap();
        assert_eq!(r, 0.0);
        let bad = Parameter::matrix(3, 1, vec![5.0, 5.0, 1.0]).unwrap();
        let r = relative_regret_ratio(&fp, &bad, [(&u[..], &t[..])]).unwrap();
        assert_abs_diff_eq!(r, 50.0, epsilon = 1e-12);
    }
}
