use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("operator order must be nonnegative and finite, got {0}")]
    NegativeOrder(f64),
    #[error("mollifier width must be nonnegative and finite, got {0}")]
    NegativeMollifier(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("rescaled mode {0:?} falls outside the target dealias mask")]
    RescaleAliasing([i64; 3]),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("CFL violation: courant number {courant:.4} exceeds 0.5 at dt = {dt}")]
    Cfl { courant: f64, dt: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("forcing series does not cover the time grid: {0}")]
    ForcingGap(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    #[error("inadmissible (α,β,s,δ): {0}")]
    Inadmissible(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}
