//! Predictive hypothesis identification.
//!
//! Given data `D`, a parametric model `p(x|θ)` and a prior, a hypothesis
//! `Θ` (a point, a union of intervals or a mixture of points) is scored by
//! how well its predictive distribution for `m` future observations matches
//! the Bayesian one. The best scoring member of a class is selected.
//!
//! * [`models`]: the Bernoulli model, priors, posteriors and their moments,
//!   plus exact rational closed forms in [`models::exact`].
//! * [`distances`]: distances between predictive probabilities.
//! * [`loss`]: hat and tilde losses, batch and offline.
//! * [`selector`]: hypothesis classes and the loss minimizer, MAP and ML.
//! * [`asymptotics`]: IMAP, the ML×MAP objective, level sets and checks of
//!   the large-`m` expansions.
//! * [`smf`]: sequential moment fitting for large `n`.
//!
//! ```
//! use phi_core::{loss::LossSpec, models::{Bernoulli, CountSummary, Hypothesis, Prior}, Distance};
//!
//! let data = CountSummary::new(2, 2).into();
//! let spec = LossSpec::hat(2, Distance::Absolute);
//! let fair = Hypothesis::Simple(0.5);
//! let loss = phi_core::loss::loss_hat(&Bernoulli, &Prior::Uniform, &data, &fair, &spec).unwrap();
//! assert!((loss.value - 1.0 / 7.0).abs() < 1e-12);
//! ```

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod distances;
pub mod loss;
pub mod models;
pub mod numerics;
pub mod scalar;
pub mod selector;
pub mod smf;

/// Exact rationals for the closed-form tables.
pub type Rational = num_rational::BigRational;
/// Distances over `f64`, the scalar every loss is evaluated in.
pub type Distance = distances::DistanceKind<f64>;
pub type Quadrature = numerics::QuadratureSettings<f64>;
pub type Optimum = numerics::OptimResult<f64>;
/// Two-step table rows in exact arithmetic.
pub type ExactErrTable = Vec<models::exact::ErrRow<Rational>>;
