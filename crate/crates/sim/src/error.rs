use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("lattice too coarse: {0}")]
    Lattice(String),
    #[error("Poisson solve left a residual of {residual:e}")]
    Solver { residual: f64 },
    #[error(transparent)]
    Core(#[from] fusion_core::Error),
    #[error("output: {0}")]
    Output(String),
}

pub type SimResult<T> = std::result::Result<T, SimError>;
