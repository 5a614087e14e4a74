use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("{} is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})", describe_outcome(*outcome))]
    NotPsd {
        outcome: Option<usize>,
        min_eigenvalue: f64,
    },

    #[error("effects do not sum to the identity (deficit norm {deficit:.3e})")]
    NotNormalized { deficit: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("outcome sets differ")]
    OutcomeMismatch,

    #[error("an observable needs at least one outcome")]
    EmptyObservable,

    #[error("duplicate outcome label {0}")]
    DuplicateOutcome(usize),

    #[error("not a density matrix: {0}")]
    NotAState(String),

    #[error("Kraus operators are not trace preserving (deficit norm {deficit:.3e})")]
    NotTracePreserving { deficit: f64 },

    #[error("Kraus normalizer is singular (smallest eigenvalue {min_eigenvalue:.3e})")]
    SingularNormalizer { min_eigenvalue: f64 },

    #[error("relabeling is not total: outcome {0} has no image")]
    IncompleteRelabeling(usize),

    #[error("invalid dilation: {0}")]
    InvalidDilation(String),

    #[error("invalid stochastic matrix: {0}")]
    InvalidStochasticMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ill-formed feasibility problem: {0}")]
    IllFormedProblem(String),
}

fn describe_outcome(outcome: Option<usize>) -> String {
    match outcome {
        Some(j) => format!("effect of outcome {j}"),
        None => "operator".to_owned(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
