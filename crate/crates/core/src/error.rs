//! Error type shared by all modules.

use crate::vec3::Vec3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The Coulomb kernel and related quantities are unbounded at v = 0.
    #[error("kernel is singular at v = 0")]
    ZeroVelocity,

    /// An integrand produced NaN or infinity at a quadrature node.
    #[error("integrand is not finite at node ({}, {}, {})", node.x, node.y, node.z)]
    NonFiniteSample { node: Vec3 },

    /// Successive quadrature refinements disagree beyond tolerance.
    #[error("quadrature did not converge: levels gave {previous} and {latest}")]
    Accuracy { previous: f64, latest: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Covering construction could not verify coverage of the annulus.
    #[error("covering failed: sample point ({}, {}, {}) of A_{shell} is uncovered", point.x, point.y, point.z)]
    Uncovered { shell: u32, point: Vec3 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) | Error::InvalidSpec(_) => 2,
            _ => 3,
        }
    }
}
