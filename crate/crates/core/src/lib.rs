//! Data-driven inverse optimization with the Fenchel-Young loss.
//!
//! A *forward problem* maps a parameter `θ` and a context `u` to a decision
//! `x*(θ; u)` by maximizing a linear (optionally linear-minus-quadratic)
//! objective over a convex region. Given noisy observations `(u_i, y_i)` of
//! such decisions, this crate estimates the unknown parameter by minimizing
//! the empirical Fenchel-Young risk with mini-batch SGD, and provides the
//! classical baselines (suboptimality / VIA, KKT residual, semi-parametric
//! denoise-then-fit) for comparison.
//!
//! Module map:
//!
//! - [`model`]: cost maps, feasible regions, forward problems, datasets, noise.
//! - [`solvers`]: closed-form projections, Bellman-Ford shortest paths and a
//!   Frank-Wolfe projection onto path polytopes.
//! - [`losses`]: Fenchel-Young, suboptimality, KKT-residual and distance losses.
//! - [`train`]: FY-SGD and the baseline fitters.
//! - [`synth`]: the five synthetic benchmark problems.
//! - [`metrics`]: parameter error, decision error, regret and bound checkers.
//! - [`spath`]: contextual shortest-path pipeline and its CSV formats.
//! - [`cli`]: experiment configs, replication sweeps and report emission.

pub mod cli;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod solvers;
pub mod spath;
pub mod synth;
pub mod train;

mod vecops;

pub use error::{Error, Result};
pub use model::{
    CostKind, CostMap, DataPoint, Dataset, FeasibleRegion, ForwardProblem, NoiseModel, Parameter,
    Sense,
};
