use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("point {x} lies outside the open domain ({lo}, {hi})")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("adaptive quadrature did not converge: estimate {estimate} with error {error}")]
    QuadratureFailure { estimate: f64, error: f64 },

    #[error("zeta2 = E + m v^2 changes sign near x = {x} (E = {energy})")]
    ZetaCrossing { x: f64, energy: f64 },

    #[error("non-relativistic effective potential is undefined: {0}")]
    ApproximationInvalid(String),

    #[error("potential has a singular node at q = {q}")]
    SingularNode { q: f64 },

    #[error("grid with {nodes} nodes cannot resolve {requested} states")]
    InsufficientResolution { requested: usize, nodes: usize },

    #[error("state {state} has {nodes} nodes, expected {state}")]
    SturmViolation { state: usize, nodes: usize },

    #[error("self-consistent energy iteration did not converge after {iterations} steps (history: {history:?})")]
    NonConvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("energy squared is negative ({radicand}); no real energy exists")]
    ImaginaryEnergy { radicand: f64 },

    #[error("energy {energy} lies inside the gap (|E| < {gap})")]
    SubGap { energy: f64, gap: f64 },

    #[error("state is not normalizable: {0}")]
    NonNormalizable(String),

    #[error("potential does not confine toward the {side} end of the q-domain")]
    NotConfining { side: &'static str },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
