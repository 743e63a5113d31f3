//! Numerical toolkit for the Cauchy problem of the linear wave equation with a
//! time-dependent dissipation coefficient,
//!
//! ```text
//!     u_tt - Δu + b(t) u_t = 0,      b(t) = mu(t) + sigma(t),
//! ```
//!
//! where `mu(t) = mu0/(1+t)` is a non-effective principal damping and `sigma`
//! is a possibly very fast oscillating perturbation whose amplitude may even
//! grow in time.  After a Fourier transform the problem decouples into one
//! 2x2 ODE system per frequency `|xi|`, and the question becomes for which
//! oscillation families and which initial-data classes the total energy still
//! obeys the non-oscillating benchmark decay `E(t) ≲ E0 * exp(-∫ mu)`.
//!
//! The crate provides the pieces needed to study that question numerically:
//!
//! * [`jet`] — truncated Taylor arithmetic used for exact coefficient
//!   derivatives (no finite differencing anywhere),
//! * [`coeffs`] — the dissipation coefficient families (power-law sine
//!   oscillations and sparse bump trains),
//! * [`hypotheses`] — stabilisation / smoothness conditions, their measured
//!   constants, and the sharp exponent thresholds,
//! * [`zones`] — the dissipative / hyperbolic / intermediate partition of the
//!   time–frequency half plane,
//! * [`modes`] — adaptive Runge–Kutta integration of single Fourier modes,
//! * [`volterra`] — series solution of the dissipative zone integral equation
//!   with explicit factorial bounds,
//! * [`diag`] — the refined diagonalisation hierarchy for the hyperbolic zone
//!   and the transfer matrices that bridge the intermediate zone,
//! * [`spectral`] — radial frequency quadrature assembling total energies for
//!   Sobolev-, Gevrey- and band-limited initial data,
//! * [`decayfit`] — decay-exponent fitting and boundedness reports,
//! * [`scenario`] — TOML scenario configuration and the pipeline driver used
//!   by the `osciwave` binary.

pub mod coeffs;
pub mod decayfit;
pub mod diag;
pub mod hypotheses;
pub mod jet;
pub mod modes;
pub mod quad;
pub mod rk;
pub mod scenario;
pub mod spectral;
pub mod volterra;
pub mod zones;

use thiserror::Error;

/// Crate-wide error type.
///
/// The grouping mirrors the process exit codes of the command line tool:
/// configuration and contract violations exit with 2, violated analytic
/// hypotheses with 3, and numerical failures (stiffness, blow-up, divergent
/// series, diagonalisation breakdown) with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched truncation orders in jet arithmetic.
    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    /// Reciprocal (or division) of a jet whose value at the base point is 0.
    #[error("division by zero at the jet base point")]
    DivisionAtBase,
    /// Square root of a jet that is not positive at the base point.
    #[error("square-root branch error: base value {0} is not positive")]
    SqrtBranch(f64),
    /// Differentiation of an order-0 jet.
    #[error("cannot differentiate an order-0 jet")]
    CannotDifferentiate,
    /// A derivative of order beyond the guaranteed smoothness was requested.
    #[error("smoothness exceeded: requested order {requested}, coefficient is C^{available}")]
    SmoothnessExceeded { requested: usize, available: usize },
    /// Invalid parameter or argument outside the documented domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed configuration input.
    #[error("configuration error: {0}")]
    Config(String),
    /// An analytic hypothesis required by the requested computation fails.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    /// Adaptive step size underflow.
    #[error("integrator stalled at t = {t}: step size {h} below resolution limit")]
    Stiffness { t: f64, h: f64 },
    /// Non-finite state during integration.
    #[error("numerical blow-up at t = {t}")]
    Blowup { t: f64 },
    /// The iterated-kernel series failed to converge within the depth cap.
    #[error("series did not converge within {depth} iterations (last update {last:.3e})")]
    SeriesDivergence { depth: usize, last: f64 },
    /// Diagonalisation breakdown: |r| >= |Im phi| at the base point.
    #[error("diagonalisation breakdown at level {level}: |r| = {r_abs:.3e} >= |Im phi| = {phi_im:.3e}")]
    DiagBreakdown { level: usize, r_abs: f64, phi_im: f64 },
    /// I/O failure while reading configs or writing reports.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the command line tool maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OrderMismatch(..)
            | Error::DivisionAtBase
            | Error::SqrtBranch(_)
            | Error::CannotDifferentiate
            | Error::SmoothnessExceeded { .. }
            | Error::Domain(_)
            | Error::Config(_)
            | Error::Io(_) => 2,
            Error::Hypothesis(_) => 3,
            Error::Stiffness { .. }
            | Error::Blowup { .. }
            | Error::SeriesDivergence { .. }
            | Error::DiagBreakdown { .. } => 4,
        }
    }
}

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
