//! The five synthetic benchmark problems.
//!
//! | kind | sense | cost       | region         | contexts        |
//! |------|-------|------------|----------------|-----------------|
//! | A    | Min   | `θ + u`    | `x ≥ 0, Σx ≤ 3`| `U[−1, 1]^p`    |
//! | B    | Min   | `θ ∘ u`    | `[−1, 1]^p`    | `U[−1, 1]^p`    |
//! | C    | Min   | `θ + u`    | `[−1, 1]^p`    | `U[−1, 1]^p`    |
//! | D    | Max   | `θ + u`, `q = 2` | `[0, 1]^p` | `U[0, 2]^p`   |
//! | E    | Max   | `θ + u`    | `‖x‖ ≤ 3`      | `U[0, 2]^p`     |
//!
//! D minimizes `xᵀx − (θ+u)ᵀx`, i.e. maximizes `(θ+u)ᵀx − ‖x‖²`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    sample_dataset, ContextDist, CostMap, Dataset, FeasibleRegion, ForwardProblem, NoiseModel,
    Parameter, Sense,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExampleKind {
    A,
    B,
    C,
    D,
    E,
}

impl ExampleKind {
    pub const ALL: [ExampleKind; 5] = [
        ExampleKind::A,
        ExampleKind::B,
        ExampleKind::C,
        ExampleKind::D,
        ExampleKind::E,
    ];
}

impl fmt::Display for ExampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExampleKind::A => "A",
            ExampleKind::B => "B",
            ExampleKind::C => "C",
            ExampleKind::D => "D",
            ExampleKind::E => "E",
        };
        f.write_str(s)
    }
}

impl FromStr for ExampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(ExampleKind::A),
            "B" => Ok(ExampleKind::B),
            "C" => Ok(ExampleKind::C),
            "D" => Ok(ExampleKind::D),
            "E" => Ok(ExampleKind::E),
            _ => Err(Error::InvalidArgument(format!("unknown example kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub kind: ExampleKind,
    pub dim: usize,
    /// Cap of A, radius of E; unused otherwise.
    pub scale: f64,
    pub theta_star: Vec<f64>,
    pub contexts: ContextDist,
}

impl ExampleSpec {
    pub fn new(kind: ExampleKind) -> Self {
        Self::with_dim(kind, 10)
    }

    pub fn with_dim(kind: ExampleKind, dim: usize) -> Self {
        let theta_star = match kind {
            ExampleKind::B => {
                let mut t = vec![-0.5; dim];
                if let Some(first) = t.first_mut() {
                    *first = 0.5;
                }
                if dim >= 2 {
                    t[dim - 1] = 1.0;
                }
                if dim >= 3 {
                    t[dim - 2] = 0.5;
                }
                t
            }
            _ => vec![0.5; dim],
        };
        let contexts = match kind {
            ExampleKind::D | ExampleKind::E => ContextDist::uniform(0.0, 2.0, dim),
            _ => ContextDist::uniform(-1.0, 1.0, dim),
        };
        Self {
            kind,
            dim,
            scale: 3.0,
            theta_star,
            contexts,
        }
    }

    /// Parameter errors are meaningless for B: only the signs of `θ` matter.
    pub fn identifiable(&self) -> bool {
        self.kind != ExampleKind::B
    }
}

pub fn build_example(spec: &ExampleSpec) -> Result<(ForwardProblem, Parameter)> {
    let p = spec.dim;
    if p == 0 {
        return Err(Error::InvalidArgument("example dimension must be >= 1".into()));
    }
    if spec.theta_star.len() != p {
        return Err(Error::dims("example theta_star", p, spec.theta_star.len()));
    }
    let fp = match spec.kind {
        ExampleKind::A => ForwardProblem::linear(
            CostMap::additive(p),
            FeasibleRegion::nonneg_l1cap(spec.scale)?,
            Sense::Min,
        )?,
        ExampleKind::B => ForwardProblem::linear(
            CostMap::hadamard(p),
            FeasibleRegion::uniform_box(p, -1.0, 1.0)?,
            Sense::Min,
        )?,
        ExampleKind::C => ForwardProblem::linear(
            CostMap::additive(p),
            FeasibleRegion::uniform_box(p, -1.0, 1.0)?,
            Sense::Min,
        )?,
        ExampleKind::D => ForwardProblem::new(
            CostMap::additive(p),
            FeasibleRegion::uniform_box(p, 0.0, 1.0)?,
            Sense::Max,
            2.0,
        )?,
        ExampleKind::E => ForwardProblem::linear(
            CostMap::additive(p),
            FeasibleRegion::ball(spec.scale)?,
            Sense::Max,
        )?,
    };
    Ok((fp, Parameter::vector(spec.theta_star.clone())))
}

/// `n` observations under `noise`, with `θ*` attached as the truth.
pub fn generate(spec: &ExampleSpec, n: usize, noise: NoiseModel, seed: u64) -> Result<Dataset> {
    let (fp, theta) = build_example(spec)?;
    sample_dataset(&fp, &theta, n, noise, spec.contexts, seed)
}

/// The three noise settings at unit scale.
pub fn noise_setting(name: &str, sigma: f64) -> Result<NoiseModel> {
    match name {
        "noiseless" => Ok(NoiseModel::Noiseless),
        "noisy-decision" => Ok(NoiseModel::NoisyDecision { sigma }),
        "noisy-objective" => Ok(NoiseModel::NoisyObjective { sigma }),
        other => Err(Error::InvalidArgument(format!("unknown noise setting {other:?}"))),
    }
}
