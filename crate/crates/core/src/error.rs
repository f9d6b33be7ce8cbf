use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("value at flat position {0} is not finite")]
    NonFinite(usize),
    #[error("kernel flagged symmetric but h(x_σ) != h(x)")]
    NotSymmetric,
    #[error("field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("malformed kernel file: {0}")]
    Parse(String),
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("partition spec {spec} is not valid for order {d}")]
    InvalidSpec { spec: String, d: usize },
    #[error("feasible-space dimension {dim} exceeds the limit {limit}")]
    Guard { dim: usize, limit: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("randomized sum requires Rademacher signs")]
    MissingSigns,
    #[error("sample shape: {0}")]
    Shape(String),
    #[error("{what} = {count} exceeds the limit {limit}")]
    Guard { what: &'static str, count: u128, limit: u128 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
