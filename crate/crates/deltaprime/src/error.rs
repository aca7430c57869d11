//! Error type shared by all modules.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),
    #[error("non-finite value at x = {x} (index {index})")]
    NonFinite { x: f64, index: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("profiles are discretely linearly dependent (Gram-Schmidt remainder norm {0:.3e})")]
    LinearDependence(f64),
    #[error("free-operator limit: kappa = {0:.3e} is numerically zero")]
    FreeOperatorLimit(f64),
    #[error("unreachable regime: beta = 0 with alpha != 1 is excluded")]
    ExcludedFamily,
    #[error("beta = 0 with alpha = 1 is the free operator; the moment a2 diverges")]
    FreeTarget,
    #[error("alpha must be nonzero")]
    AlphaZero,
    #[error("degenerate: alpha undefined (a2 = kappa * a1)")]
    DegenerateAlpha,
    #[error("a2 must be nonzero when beta != 0")]
    A2Zero,
    #[error("coupling constraint a0*a2 = a1^2 violated by {0:.3e}")]
    CouplingConstraint(f64),
    #[error("omega is too close to constant on the window support (condition estimate {0:.3e})")]
    WindowDegenerate(f64),
    #[error("window must vanish at the endpoints and be positive inside")]
    BadWindow,
    #[error("solvability conditions violated: |a - b - (1,h)| = {0:.3e}, |a - (1 - omega/kappa, h)| = {1:.3e}")]
    Solvability(f64, f64),
    #[error("spectral parameter must have nonzero imaginary part")]
    RealZeta,
    #[error("line problem: {0}")]
    LineProblem(String),
    #[error("insufficient resolution: {0} interior points across [-eps, eps], need at least 64")]
    EpsResolution(usize),
    #[error("capacitance matrix is numerically singular (|det| = {0:.3e})")]
    EpsResonance(f64),
    #[error("singular linear system")]
    Singular,
    #[error("rate fit needs at least 3 entries with positive gaps")]
    FitInput,
    #[error("config: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
