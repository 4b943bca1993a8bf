//! Error types shared across the crate.

use thiserror::Error;

/// Errors from parsing a potential expression.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { name: String },
    #[error("non-smooth construct `{name}`: {detail}")]
    NonSmoothFunction { name: String, detail: String },
}

/// Errors from evaluating a potential.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("point lies outside the closed domain")]
    OutOfDomain,
    #[error("point is not on the domain boundary")]
    NotOnBoundary,
    #[error("evaluation left the function's domain: {0}")]
    Domain(String),
}

/// Errors from critical-point and basin analysis.
#[derive(Debug, Clone, Error)]
pub enum LandscapeError {
    #[error("degenerate critical point at {location:?}: |det Hess| = {det:.3e} below tolerance")]
    DegenerateCritical { location: [f64; 2], det: f64 },
    #[error("no critical points found in the domain interior")]
    NoCriticalPoints,
    #[error("gradient vanishes on the boundary near {location:?}")]
    GradientVanishesOnBoundary { location: [f64; 2] },
    #[error("gradient-flow integration exceeded t_max = {t_max} without resolving")]
    FlowTimeout { t_max: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Errors from the sublevel-set machinery.
#[derive(Debug, Clone, Error)]
pub enum TopologyError {
    #[error("grid too coarse: critical points {a:?} and {b:?} share a cell")]
    ResolutionTooCoarse { a: [f64; 2], b: [f64; 2] },
    #[error(
        "descent branch seed at {seed:?} does not lie below the saddle level; increase resolution"
    )]
    AmbiguousBranch { seed: [f64; 2] },
    #[error(
        "labeling recursion terminated with {count} unlabeled minima (inconsistent saddle set)"
    )]
    UnlabeledMinimum { count: usize },
    #[error("no separating saddle found on the boundary of the well of minimum #{minimum} (grid artifact)")]
    MissingGate { minimum: usize },
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
}

/// Refusals from the closed-form prediction layer.
#[derive(Debug, Clone, Error)]
pub enum AsymptoticsError {
    #[error("assumptions violated: {failed:?}")]
    AssumptionsViolated { failed: Vec<String> },
    #[error("neither eigenvalue theorem's hypotheses are certified for this landscape")]
    HypothesesNotCertified,
    #[error("global minimum does not lie in the maximal well")]
    MinimumNotInCmax,
    #[error("well hypothesis violated: {0}")]
    WellHypothesisViolated(String),
}

/// Errors from Monte Carlo simulation.
#[derive(Debug, Clone, Error)]
pub enum SamplerError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(
        "{censored} of {total} paths were censored at max_steps; dt*max_steps too small for this h"
    )]
    CensoredMajority { censored: usize, total: usize },
    #[error("burn-in rejection rate {rate:.4} exceeds 0.999; burn_time vastly exceeds the mean exit time")]
    BurnInInfeasible { rate: f64 },
    #[error("regions `{a}` and `{b}` overlap")]
    OverlappingRegions { a: String, b: String },
    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Errors from the 1D Dirichlet eigensolver.
#[derive(Debug, Clone, Error)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("under-resolved: lambda_1 changed by {change:.1}% when the grid was doubled")]
    UnderResolved { change: f64 },
    #[error("scaling failure: exponent {0:.1} exceeds double range")]
    ScalingFailure(f64),
    #[error(
        "negative exit density at a boundary node (discretization failure); raise the grid size"
    )]
    NegativeDensity,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Errors from exact 1D quadrature.
#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("adaptive quadrature failed to reach the requested tolerance")]
    QuadratureNonConvergence,
    #[error("landscape shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Top-level error for pipeline code and the CLI.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),
    #[error("config error: {0}")]
    Config(String),
}
