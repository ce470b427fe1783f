//! Numerical tolerances shared across the crate, with their rationale.
//!
//! Centralizing these keeps solver gates and test assertions in sync; the
//! values are all overridable where an options struct exposes them.

/// Strict-positivity gate: a matrix is accepted as a transport anchor only if
/// its minimum eigenvalue exceeds this. Near-singular anchors make `M^{-1/2}`
/// explode, so they are rejected rather than regularized.
pub const PD_GATE: f64 = 1e-10;

/// Relative positive-semidefiniteness slack: eigenvalues down to
/// `-PSD_SLACK_REL * spectral norm` are treated as roundoff and clamped to 0;
/// anything below is rejected as genuinely indefinite.
pub const PSD_SLACK_REL: f64 = 1e-10;

/// Constructor symmetry gate, relative to `max(1, max |entry|)`: inputs whose
/// asymmetry exceeds this are rejected instead of silently symmetrized.
pub const SYMMETRY_REL: f64 = 1e-12;

/// Weight vectors must sum to 1 within this absolute tolerance.
pub const WEIGHT_SUM: f64 = 1e-12;

/// Barycenter fixed-point residual target, measured in the anchor norm
/// `‖·‖_M` in which the stationarity condition is stated.
pub const BARY_TOL: f64 = 1e-10;

/// Dual-ascent convergence target `‖t̄_A − I‖_M` for the rate-function solver.
pub const DUAL_TOL: f64 = 1e-9;

/// Tilt-parameter blow-up cap (spectral norm of `A`). Crossing it with a
/// non-vanishing residual is the operational diagnosis that the anchor lies
/// outside the effective domain; there is no exact computable test.
pub const DUAL_CAP: f64 = 1e6;

/// Tilted weights below this are flushed to exact zero (support bookkeeping
/// stays explicit instead of drowning in denormals).
pub const WEIGHT_FLUSH: f64 = 1e-300;

/// Monotonicity slack for quantile functions: adjacent descents larger than
/// this are rejected.
pub const QUANTILE_MONOTONE: f64 = 1e-12;

/// Primal-dual gap certified by the univariate KL projection at convergence.
pub const UV_GAP: f64 = 1e-9;

/// Relative residual above which a univariate target is declared outside the
/// span of the atom quantiles (the restricted dual cannot see the orthogonal
/// component, so this is checked up front).
pub const UV_SPAN: f64 = 1e-8;
