//! Error type shared by the algebra engine and the pipeline.

use thiserror::Error;

/// Everything that can go wrong while computing.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GndError {
    #[error("division by zero in the parameter field")]
    DivisionByZero,
    #[error("element is a zero-divisor modulo the parameter ideal, not invertible")]
    NonInvertible,
    #[error("operands live in different rings")]
    RingMismatch,
    #[error("exact division failed: no polynomial quotient exists")]
    NotDivisible,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("substitution produced a denominator that is not a local unit")]
    NonUnitDenominator,
    #[error("computation budget exceeded after {0} S-pair reductions")]
    BudgetExceeded(usize),
    #[error("map image is not polynomial; kernel computation needs cleared denominators")]
    NonPolynomialImage,
    #[error("no candidate (f, M, N) with nonzero image was found")]
    NoCandidate,
    #[error("truncation order too short: at least {required} is needed")]
    TruncationTooShort { required: usize },
    #[error("no exponent c with pivot^c in (v(P')) + (pivot^(2c)) within the truncation order")]
    NotFound,
    #[error("linear solve in the truncated ring failed; truncation is insufficient")]
    LinearSolveFailed,
    #[error("supplied truncation insufficient: order {required} is required")]
    InsufficientTruncation { required: usize },
    #[error("computed Q has a term of T-degree below two; upstream invariant broken")]
    QNotInTSquared,
    #[error("matrix dimensions do not match: {0}")]
    DimensionMismatch(String),
    #[error("residual order failed to increase during Newton lifting")]
    NoContraction,
    #[error("hypothesis (v(MN)) contains m^e fails for monomial {0}")]
    HypothesisFailed(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("pipeline stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<GndError>,
    },
    #[error("{0}")]
    Other(String),
}

impl GndError {
    /// Tag an error with the pipeline stage it came from.
    pub fn at(self, stage: &'static str) -> GndError {
        match self {
            GndError::Stage { .. } => self,
            e => GndError::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, GndError>;
