use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("infinite distance: boundary point supplied where an interior point is required")]
    InfiniteDistance,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate triangles (area < 1e-14): {0:?}")]
    DegenerateTriangles(Vec<usize>),
    #[error("degenerate Jacobian in chart cell {0}")]
    DegenerateCell(usize),
    #[error("numerically degenerate operator (smallest singular value estimate {0:.3e})")]
    NumericallyDegenerate(f64),
    #[error("Newton iteration diverged: last residual {residual:.3e} at continuation step {step}/{steps}")]
    NewtonDiverged { residual: f64, step: usize, steps: usize },
    #[error("t below gluing regime: {0}")]
    BelowGluingRegime(String),
    #[error("linear solver failure: {0}")]
    LinearSolver(String),
    #[error("divergent energy: truncated energies {0:?} grow like 1/eps (surface not orthogonal to the boundary?)")]
    DivergentEnergy(Vec<(f64, f64)>),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}
