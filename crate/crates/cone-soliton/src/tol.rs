//! Centralized numerical tolerances.
//!
//! Every threshold used by the library lives here with a short rationale, so
//! that a tolerance is never invented ad hoc at a call site and tests can
//! reference the same constants the implementation enforces.

/// Minimum eigenvalue a metric must exceed, pointwise, to be accepted.
/// Anything smaller is indistinguishable from degenerate at f64 precision
/// once curvature (two derivatives, one inversion) is taken.
pub const PD_MIN_EIG: f64 = 1e-10;

/// Relative deviation allowed when validating a declared tensor symmetry.
/// Spectral differentiation and matrix inversion keep symmetric inputs
/// symmetric to a few ulps; 1e-13 relative leaves headroom.
pub const SYMMETRY_REL: f64 = 1e-13;

/// Probe linearity: the response of an expansion step to a probe coefficient
/// must be a scalar multiple of the probe to this relative accuracy.
pub const PROBE_LINEARITY_REL: f64 = 1e-10;

/// A measured solve divisor below this magnitude is treated as degenerate.
pub const DEGENERATE_DIVISOR_ABS: f64 = 1e-8;

/// A series term whose sup-norm is below this multiple of the largest
/// coefficient in the same series is treated as numerically zero (used for
/// leading-term detection and for pruning before decay-slope fits).
pub const NUMERICAL_ZERO_REL: f64 = 1e-9;

/// A spatial derivative whose sup-norm is below this multiple of its input
/// coefficient's sup-norm is the derivative of a numerically constant field
/// and is treated as exactly zero. Spectral differentiation of a constant
/// leaves O(ε·k_max) junk on grids with odd radix factors (the power-of-two
/// case cancels exactly); any resolvable variation produces a derivative
/// orders of magnitude above this threshold.
pub const DERIVATIVE_ZERO_REL: f64 = 1e-13;

/// Spectrum bins below this multiple of a line's largest bin are double
/// roundoff, not signal, and are zeroed before wavenumber multiplication.
/// Without this, each differentiation amplifies the broadband roundoff floor
/// of the previous product by up to the Nyquist wavenumber, and deep series
/// coefficients (which stack many such steps) drown in compounded noise.
/// Genuine analytic content removed by the cut is below 1e-14 relative and
/// was never resolvable in double precision to begin with.
pub const SPECTRUM_NOISE_REL: f64 = 1e-14;

/// Constant-frame fields must lie in the homogeneous block family to this
/// relative accuracy (plus a tiny absolute slack for all-but-zero tensors).
pub const FAMILY_REL: f64 = 1e-8;
pub const FAMILY_ABS: f64 = 1e-13;

/// Convergence target for identities evaluated on constant-frame links,
/// where everything is closed-form matrix algebra.
pub const CONSTANT_FRAME_TOL: f64 = 1e-12;

/// Convergence target for identities evaluated spectrally on periodic grids
/// with analytic data (curvature cross-checks, expansion path equality).
pub const GRID_REL_TOL: f64 = 1e-6;

/// Sup-norm budget for the weighted divergence identities on random
/// analytic data at the default grid resolutions.
pub const BIANCHI_SUP_TOL: f64 = 1e-7;

/// Relative sup-norm budget for residual series coefficients that the solved
/// orders guarantee to vanish, evaluated on grids.
pub const RESIDUAL_REL_TOL: f64 = 1e-8;

/// Largest single-step relative state change the integrator accepts before
/// reporting a step-size failure.
pub const ODE_MAX_STEP_CHANGE: f64 = 0.5;

/// Radius cap for decay-slope fits; far beyond this the residual magnitudes
/// underflow the useful f64 range.
pub const DECAY_R_MAX: f64 = 1e6;

/// Denominator magnitude below which expression evaluation reports a
/// division by zero instead of returning an overflowing quotient.
pub const EXPR_DIV_EPS: f64 = 1e-300;
