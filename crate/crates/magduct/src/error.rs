//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building geometry, gauges,
/// discretizations or while solving.
#[derive(Debug, Error)]
pub enum Error {
    /// A profile or grid was given non-monotone or empty abscissae.
    #[error("abscissae must be strictly increasing: {0}")]
    NonMonotoneGrid(String),

    /// A declared bound failed its sampled certification.
    #[error("declared {name} = {declared} exceeded by sampled value {sampled}")]
    BoundViolated {
        name: &'static str,
        declared: f64,
        sampled: f64,
    },

    /// Composite quadrature failed to reach the requested tolerance.
    #[error("quadrature did not reach tolerance {tol:e} (residual {residual:e}) in {what}")]
    QuadratureTolerance {
        what: &'static str,
        tol: f64,
        residual: f64,
    },

    /// A strip map stopped being a diffeomorphism: `1 + λf ≤ 0` or
    /// `1 + yβγ ≤ 0` somewhere on the closed strip.
    #[error("strip map Jacobian non-positive at (x, y) = ({x}, {y}): J = {value}")]
    JacobianNonPositive { x: f64, y: f64, value: f64 },

    /// Aharonov–Bohm flux must be non-integer for the potential to matter.
    #[error("Aharonov-Bohm flux {0} is integer; the field is gauge-trivial")]
    IntegerFlux(f64),

    /// Requested an evaluation on top of the flux singularity.
    #[error("evaluation at ({x}, {y}) within {dist:e} of the flux singularity")]
    EvalAtSingularity { x: f64, y: f64, dist: f64 },

    /// A sup-norm estimate over a region that contains the singular point
    /// of an Aharonov–Bohm potential is meaningless.
    #[error("region contains the flux singularity at ({0}, {1})")]
    RegionContainsSingularity(f64, f64),

    /// The flux function vanishes identically; no Hardy weight can be
    /// extracted from it.
    #[error("flux profile is identically zero to tolerance {0:e}")]
    TrivialFlux(f64),

    /// Certificate validity window `|y0 - π/2| + R < π/2` violated.
    #[error("certificate window violated: |y0 - pi/2| + R = {0} >= pi/2")]
    ValidityWindow(f64),

    /// A threshold certificate was asked for without one of the norms it
    /// needs.
    #[error("missing norm for threshold certificate: {0}")]
    MissingNorm(&'static str),

    /// The iterative eigensolver ran out of iterations.  Carries the best
    /// approximations found so far for diagnosis.
    #[error("eigensolver did not converge in {iters} iterations; best residual {best_residual:e}")]
    NoConvergence {
        iters: usize,
        best_residual: f64,
        /// Ritz values at the final iteration.
        best_values: Vec<f64>,
    },

    /// The shifted numerator form `S - M` turned out indefinite beyond
    /// what truncation can explain.
    #[error("numerator form indefinite: smallest pencil eigenvalue {0}")]
    IndefiniteNumerator(f64),

    /// A punctured grid placed the flux point too close to a node.
    #[error("flux point ({x}, {y}) lies {dist:e} from the nearest grid node (minimum {min:e})")]
    PunctureNearNode { x: f64, y: f64, dist: f64, min: f64 },

    /// Bad run configuration.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("toml: {0}")]
    Toml(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Toml(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
