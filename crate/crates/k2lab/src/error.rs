// SPDX-License-Identifier: Apache-2.0
//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{x} is not a unit modulo {modulus}")]
    NotAUnit { x: i64, modulus: u64 },
    #[error("Jacobi symbol needs an odd modulus, got {0}")]
    EvenModulus(u64),
    #[error("cube root target {r} is divisible by {p}")]
    NonUnitTarget { r: i64, p: u64 },
    #[error("no primitive cube root of unity modulo {0}")]
    NoPrimitiveRoot(u64),
    #[error("exact engine order {order} exceeds cap {cap}")]
    ExactEngineOverflow { order: u64, cap: u64 },
    #[error("prime {0} is too small (need p > 3)")]
    SmallPrime(u64),
    #[error("exponent {0} too small (need n >= 2)")]
    BadExponent(u32),
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("correlation with no shifts")]
    EmptyCorrelation,
    #[error("b = {0} lies outside the diamond classes")]
    OutsideDiamond(u64),
    #[error("epsilon vector is zero")]
    ZeroEps,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("{q} is not {y}-smooth")]
    NotSmooth { q: u64, y: u64 },
    #[error("{q} is not {y}-ultrasmooth")]
    NotUltrasmooth { q: String, y: u64 },
    #[error("no factorization fits the windows: {0}")]
    WindowInfeasible(String),
    #[error("invalid plan: {0}")]
    PlanInvalid(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Budget-type failures map to a distinct CLI exit code.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded(_) | Error::ExactEngineOverflow { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
