use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("regularization coefficient must be positive, got {0}")]
    InvalidLambda(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative-cost cycle reachable from the source")]
    NegativeCycle,

    #[error("sink is unreachable from the source")]
    Unreachable,

    #[error("Frank-Wolfe did not converge: final gap {final_gap:e}")]
    NonConvergence { final_gap: f64 },

    #[error("iterates diverged at iteration {iteration} (|theta| = {norm:e})")]
    Diverged { iteration: usize, norm: f64 },

    #[error("unsupported region for {method}: {region}")]
    UnsupportedRegion {
        method: &'static str,
        region: &'static str,
    },

    #[error("all kernel weights underflowed (bandwidth {bandwidth} too small)")]
    DegenerateKernel { bandwidth: f64 },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(what: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            got,
        }
    }
}
