use thiserror::Error;

use crate::channel::Party;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Protocol parameter constraint that failed during [`crate::protocol::derive_params`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("need 0 < gamma < delta < 1/2, got gamma={gamma}, delta={delta}")]
    ChannelOrdering { gamma: f64, delta: f64 },
    #[error("slack constants must be positive, got beta1={beta1}, beta2={beta2}")]
    NonPositiveSlack { beta1: f64, beta2: f64 },
    #[error("need beta3 > beta1 + beta2, got beta3={beta3}, beta1+beta2={sum}")]
    Beta3TooSmall { beta3: f64, sum: f64 },
    #[error("need 0 < alpha1 < min(delta, 1/2 - delta), got alpha1={alpha1}")]
    AlphaOutOfRange { alpha1: f64 },
    #[error("rate H(delta) - H(kappa) - beta3 = {rate} is not positive")]
    NonPositiveRate { rate: f64 },
    #[error("block length n={n} commits to zero bits")]
    EmptyCommitment { n: usize },
    #[error("block length must be positive")]
    ZeroBlockLength,
    #[error("hash length {len} exceeds block length {n}")]
    HashTooLong { len: usize, n: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{party} has no elasticity rights on {family}")]
    RightsViolation { party: Party, family: String },
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("search budget exceeded: n={n} > {limit}")]
    Budget { n: usize, limit: usize },
    #[error("protocol step {attempted} invoked in phase {phase}")]
    Phase {
        attempted: &'static str,
        phase: &'static str,
    },
    #[error("malformed wire data: {0}")]
    Wire(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
