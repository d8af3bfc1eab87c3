use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a model needs at least two particles, got {0}")]
    TooFewParticles(usize),

    #[error("mass {index} must be a positive finite number, got {value}")]
    BadMass { index: usize, value: f64 },

    #[error("spring constant K[{i}][{j}] = {value} is negative")]
    NegativeSpring { i: usize, j: usize, value: f64 },

    #[error("spring matrix is not symmetric at ({i},{j})")]
    AsymmetricSprings { i: usize, j: usize },

    #[error("spring matrix has a nonzero diagonal entry at index {0}")]
    SelfSpring(usize),

    #[error("duplicate spring entry for pair ({i},{j})")]
    DuplicateSpring { i: usize, j: usize },

    #[error("interaction graph is disconnected; the model has no single translational zero mode")]
    DisconnectedModel,

    #[error("model is unstable: mass-weighted Hessian eigenvalue {0:.6e} is not positive")]
    UnstableModel(f64),

    #[error("particle index {index} out of range for {len} particles")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("transform row 1 must hold the mass fractions m_i/M (mismatch in column {col})")]
    BadCmRow { col: usize },

    #[error("transform row {row} is not translation-free: entries sum to {sum:.6e}")]
    BadInternalRow { row: usize, sum: f64 },

    #[error("matrix is singular or too ill-conditioned (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("objects live in different coordinate frames: {left} vs {right}")]
    FrameMismatch { left: String, right: String },

    #[error("expected a {expected:?} form, got {got:?}")]
    KindMismatch {
        expected: crate::quadratic::FormKind,
        got: crate::quadratic::FormKind,
    },

    #[error("potential couples the center of mass to internal coordinates (residual {0:.3e}); it is not translation invariant")]
    NotTranslationInvariant(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("moment evaluation supports polynomial degree <= 4, got a term of degree {0}")]
    UnsupportedDegree(usize),

    #[error("density is not symmetric under exchange of its two coordinates (diagonal gap {0:.3e})")]
    NotSymmetricPair(f64),

    #[error("grid diagonalization supports at most 2 internal dimensions, got {0}")]
    DimensionTooLarge(usize),

    #[error("eigensolver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergent { residual: f64, iterations: usize },

    #[error("parameters outside the feasible region: {0}")]
    InfeasibleParams(String),

    #[error("minimization did not converge: gradient norm {grad_norm:.3e} after {iterations} iterations")]
    DidNotConverge { grad_norm: f64, iterations: usize },

    #[error("{0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
