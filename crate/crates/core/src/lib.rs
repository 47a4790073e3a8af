//! Bregman divergences and the generalized bias-variance decomposition.
//!
//! The central object is a [`ConvexGenerator`]: a strictly convex,
//! differentiable `F` together with its gradient `∇F` and the gradient of its
//! convex conjugate `∇F*`. Every generator induces a Bregman divergence
//!
//! ```text
//! D(y‖x) = F(y) − F(x) − ⟨∇F(x), y − x⟩
//! ```
//!
//! and a dual coordinate system `x* = ∇F(x)`. Averaging in dual coordinates
//! gives the *dual mean* `𝓔X = ∇F*(𝔼 ∇F(X))`, the minimizer of `z ↦ 𝔼 D(z‖X)`.
//! With it the expected loss between independent labels `Y` and predictions
//! `X` splits exactly into
//!
//! ```text
//! 𝔼 D(Y‖X) = 𝔼 D(Y‖𝔼Y) + D(𝔼Y‖𝓔X) + 𝔼 D(𝓔X‖X)
//!            (primal var)   (bias)     (dual var)
//! ```
//!
//! All expectations are exact weighted sums over finite [`SampleSet`]s, so the
//! identities hold to floating-point precision.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`generator`] | domains, generators, divergence, dual divergence, triangle expansion |
//! | [`dualspace`] | primal/dual means and variances, primal/dual averaging, ensembles |
//! | [`decomposition`] | bias-variance reports, total variance, conditional gaps |
//! | [`oracle`] | brute-force minimizers and finite differences used for certification |
//! | [`field`] | divergence-to-center grids for plotting |
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use bregman_core::{decompose, make_generator, GeneratorSpec, Point, SampleSet};
//!
//! let g = make_generator(GeneratorSpec::NegativeEntropySimplex { dim: 2 }).unwrap();
//! let labels = SampleSet::singleton(Point::from([1.0, 0.0]));
//! let preds = SampleSet::uniform(vec![Point::from([0.8, 0.2]), Point::from([0.6, 0.4])]).unwrap();
//! let report = decompose(&g, &labels, &preds).unwrap();
//! assert!(report.identity_residual.abs() < 1e-12);
//! ```
#![no_std]
// NaN must fail membership and convexity checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod decomposition;
pub mod dualspace;
mod error;
pub mod field;
pub mod generator;
mod math;
pub mod oracle;
mod point;
mod sample;

pub use decomposition::{
    conditional_label, conditional_prediction, decompose, ensemble_effect, label_ensemble_effect,
    total_variance, ConditionalReport, DecompositionReport, EnsembleEffect, Side,
    TotalVarianceReport, IDENTITY_TOLERANCE,
};
pub use dualspace::{
    dual_average, dual_mean, dual_variance, ensemble_distribution, ensemble_monte_carlo,
    primal_average, primal_mean, primal_variance, Space, DEFAULT_ENSEMBLE_CAP,
};
pub use error::{Error, Result};
pub use field::{divergence_field, FieldRow, Region};
pub use generator::{
    divergence, dual_divergence, log_barrier_generator, make_generator, triangle_expansion,
    ConvexGenerator, Domain, GeneratorSpec, Piece, TriangleExpansion,
};
pub use math::pairwise_sum;
pub use oracle::{argmin_from, argmin_to, fd_gradient, gradient_check, Minimizer, OracleConfig};
pub use point::{DualPoint, Point};
pub use sample::{GroupedSampleSet, SampleSet};
