//! Bures-Wasserstein geometry on positive-semidefinite matrices and the
//! large-deviation machinery built on top of it.
//!
//! The crate covers, bottom to top:
//!
//! * [`spd`] — the metric itself: distances, optimal-transport maps, the
//!   tangent-space log/exp pair, and geodesics on covariance matrices.
//! * [`population`] — finitely supported populations of covariance matrices,
//!   validation, categorical sampling, and the scalar statistics used by the
//!   sub-Gaussian tail bound.
//! * [`barycenter`] — the fixed-point solver for population and empirical
//!   barycenters.
//! * [`tilting`] — exponential tilting, the cumulant generating function, the
//!   dual ascent solver for the rate function `I_P`, and relative entropy.
//! * [`rate_gradient`] — Fréchet derivatives of the matrix square root and
//!   transport maps, and the envelope-formula gradient of `I_P`.
//! * [`optimizer`] — projected Riemannian gradient descent over ball
//!   complements, radial rate profiles, and the Hoeffding-style bound report.
//! * [`monte_carlo`] — replicated simulation of empirical barycenters, tail
//!   estimation with Wilson intervals, decay-slope fits, and an exact binomial
//!   oracle for the scalar two-atom case.
//! * [`univariate`] — the flat case: quantile-function embeddings of
//!   distributions on the line, their barycenters, and the rate function as a
//!   KL projection.
//!
//! Everything numerical is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix `f64` for ordinary use.

pub mod barycenter;
pub mod linalg;
pub mod monte_carlo;
pub mod optimizer;
pub mod population;
pub mod rate_gradient;
pub mod scalar;
pub mod spd;
pub mod tilting;
pub mod tol;
pub mod univariate;

/// Double-precision covariance matrix.
pub type Cov64 = spd::CovMatrix<f64>;
/// Double-precision tangent vector (symmetric matrix).
pub type Tangent64 = spd::TangentVector<f64>;
/// Double-precision geodesic.
pub type Geodesic64 = spd::GeodesicParam<f64>;
/// Double-precision population.
pub type Population64 = population::DiscretePopulation<f64>;
/// Double-precision dual solution (tilt, rate value, certificates).
pub type Dual64 = tilting::DualSolution<f64>;
/// Double-precision quantile function.
pub type Quantile64 = univariate::QuantileFunction<f64>;
/// Double-precision univariate population.
pub type UvPopulation64 = univariate::UnivariatePopulation<f64>;
