use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero momentum has no direction")]
    ZeroMomentum,

    #[error("direction {0:?} is not primitive")]
    NotPrimitive([i64; 3]),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel arity {found} does not match required arity {expected}")]
    KernelArity { expected: usize, found: usize },

    #[error("invalid kernel: {0}")]
    Kernel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("no collision operator enabled")]
    NoOperator,

    #[error("infeasible conserved values: {0}")]
    Infeasible(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("step size underflow after {halvings} halvings at t = {t}; last state {state:?}")]
    Stiff {
        halvings: u32,
        t: f64,
        state: Vec<f64>,
    },

    #[error("siphon enumeration supports at most {bound} species, network has {species}; use the semiflow certificate check instead")]
    Capability { species: usize, bound: usize },

    #[error("not an equilibrium: residual {0:e}")]
    NotEquilibrium(f64),

    #[error("error floor reached: all tail errors below {0:e}; use a shorter horizon")]
    ErrorFloor(f64),

    #[error("fit needs at least {needed} tail samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Infeasible(_)
            | Error::Kernel(_)
            | Error::KernelArity { .. }
            | Error::NoOperator
            | Error::Json(_)
            | Error::Io(_)
            | Error::Dimension { .. }
            | Error::ZeroMomentum
            | Error::NotPrimitive(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
