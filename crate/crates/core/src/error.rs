use thiserror::Error;

pub type Result<T, E = SpecError> = std::result::Result<T, E>;

/// Failure modes of the numerical pipeline.
///
/// Variants group into three classes that the CLI maps onto exit codes:
/// validation problems (2), numerical failures (3) and internal
/// inconsistencies between two routes that must agree (4).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpecError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("window endpoint {endpoint} lies within {distance:e} of the spectrum")]
    SpectralBoundaryCollision { endpoint: f64, distance: f64 },

    #[error("rank decision not well separated (gap ratio {gap_ratio:e})")]
    DegenerateRank { gap_ratio: f64 },

    #[error("symmetry eigenvalues {first} and {second} are closer than the cluster tolerance but numerically distinct")]
    ClusterAmbiguity { first: String, second: String },

    #[error("operator does not commute with the symmetry (residual {residual:e})")]
    NotEquivariant { residual: f64 },

    #[error("subspace is not invariant under the symmetry (residual {residual:e})")]
    NotInvariant { residual: f64 },

    #[error("could not certify a flow partition: {0}")]
    PartitionFailure(String),

    #[error("partition is not certified for this family: {0}")]
    InvalidPartition(String),

    #[error("endpoint families do not match (difference {difference:e})")]
    InvalidConcat { difference: f64 },

    #[error("endpoint operator has eigenvalue {eigenvalue:e} too close to zero")]
    DegenerateEndpoint { eigenvalue: f64 },

    #[error("closed form unavailable for this spectrum; use the numeric oracle")]
    UseNumericOracle,

    #[error("extrapolation did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

impl SpecError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SpecError::InvalidInput(msg.into())
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        use SpecError::*;
        match self {
            InvalidInput(_)
            | NotEquivariant { .. }
            | InvalidConcat { .. }
            | OutOfScope(_)
            | UseNumericOracle => 2,
            SpectralBoundaryCollision { .. }
            | DegenerateRank { .. }
            | ClusterAmbiguity { .. }
            | NotInvariant { .. }
            | PartitionFailure(_)
            | InvalidPartition(_)
            | DegenerateEndpoint { .. }
            | NoConvergence { .. } => 3,
            InternalInconsistency(_) => 4,
        }
    }

    /// Stable machine-readable name.
    pub fn kind(&self) -> &'static str {
        use SpecError::*;
        match self {
            InvalidInput(_) => "InvalidInput",
            SpectralBoundaryCollision { .. } => "SpectralBoundaryCollision",
            DegenerateRank { .. } => "DegenerateRank",
            ClusterAmbiguity { .. } => "ClusterAmbiguity",
            NotEquivariant { .. } => "NotEquivariant",
            NotInvariant { .. } => "NotInvariant",
            PartitionFailure(_) => "PartitionFailure",
            InvalidPartition(_) => "InvalidPartition",
            InvalidConcat { .. } => "InvalidConcat",
            DegenerateEndpoint { .. } => "DegenerateEndpoint",
            UseNumericOracle => "UseNumericOracle",
            NoConvergence { .. } => "NoConvergence",
            OutOfScope(_) => "OutOfScope",
            InternalInconsistency(_) => "InternalInconsistency",
        }
    }
}
