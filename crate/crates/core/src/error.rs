use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam { name: &'static str, value: f64, reason: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no steady state found on the sign scan ({nodes} nodes)")]
    NoEquilibrium { nodes: usize },

    #[error("orbit left the finite range at step {step}")]
    Divergence { step: usize },

    #[error("invalid setting: {0}")]
    InvalidSetting(String),

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
}
