use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid modular parameter tau = {re} + {im}i (need Im > 0 and Re = 0)")]
    InvalidModularParam { re: f64, im: f64 },

    #[error("derivative order {0} is not supported (max 6)")]
    UnsupportedOrder(usize),

    #[error("{function} evaluated within {distance:.3e} of a pole at {at}")]
    PoleProximity {
        function: &'static str,
        at: String,
        distance: f64,
    },

    #[error("branch of S lost between consecutive samples (log-argument jump {jump:.3})")]
    BranchJump { jump: f64 },

    #[error("driving points collide: {detail}")]
    Collision { detail: String },

    #[error("series order {requested} exceeds available order {available}")]
    OrderExceeded { requested: usize, available: usize },

    #[error("Q(u, xi_j) - Q(u, xi_i) vanishes at z = {z}")]
    DegenerateDenominator { z: String },

    #[error("operation needs at least 3 reduction variables, got {0}")]
    NotEnoughAxes(usize),

    #[error("hodograph Jacobian is singular ({0})")]
    SingularJacobian(String),

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("point {0} lies outside the integrated lambda domain")]
    OutOfDomain(String),

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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
