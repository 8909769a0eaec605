use std::path::PathBuf;

use thiserror::Error;

/// Why a rate-region subproblem has no feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasibleCause {
    /// Source A's combined signal at the relay cannot support B's SINR target
    /// (`p_A |w_r^H h_AR|^2 <= Gamma_B`).
    SourceGate,
    /// The relay budget cannot push enough power towards B inside the ZF subspace.
    RelayGate,
    /// The power-allocation polygon is empty.
    EmptyPolygon,
    /// The null space is one-dimensional and the target needs a partial projection.
    RankOneSubspace,
    /// No receive-combiner parameter on the search grid is feasible.
    NoFeasibleAlpha,
}

impl std::fmt::Display for InfeasibleCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InfeasibleCause::SourceGate => "source A cannot reach the relay strongly enough",
            InfeasibleCause::RelayGate => "relay budget too small inside the zero-forcing subspace",
            InfeasibleCause::EmptyPolygon => "power allocation polygon is empty",
            InfeasibleCause::RankOneSubspace => "one-dimensional subspace cannot meet a partial target",
            InfeasibleCause::NoFeasibleAlpha => "no feasible receive combiner on the alpha grid",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is rank deficient (smallest/largest singular value {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("zero vector has no null space")]
    ZeroVector,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("all polynomial coefficients are zero")]
    ZeroPolynomial,

    #[error("empty interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("infeasible: {0}")]
    Infeasible(InfeasibleCause),

    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
