//! Learning-theory toolkit for stochastic matrix factorization (SMF) and the
//! equivalent topic model.
//!
//! A rank-`H0` truth `A0·B0` (both factors column-stochastic) is fit by a
//! rank-`H` learner `A·B`. The real log canonical threshold λ of the
//! factorization error controls the Bayesian learning curves: the expected
//! generalization error falls like λ/n and the free energy grows like
//! λ·log n. This crate provides
//!
//! * exact rational upper bounds and known exact values for λ ([`bounds`]),
//! * the column-stochastic matrix types and divergence kernels ([`matrix`],
//!   [`truth`], [`kernels`]),
//! * a Monte Carlo sublevel-volume estimator that reads λ (and the pole
//!   multiplicity) off the scaling of `Pr[Φ < t]` ([`estimator`]),
//! * samplers and posterior machinery to measure the learning curves
//!   directly ([`sim`]),
//! * reproducible experiment drivers used by the `smf-rlct` binary
//!   ([`experiments`]).
//!
//! All randomized components consume explicit seeds and derive independent
//! ChaCha streams per work unit, so results are bit-reproducible regardless
//! of thread count.

pub mod bounds;
pub mod dims;
pub mod estimator;
pub mod experiments;
pub mod kernels;
pub mod linalg;
pub mod matrix;
pub mod sim;
pub mod truth;

pub use bounds::Rational;
pub use dims::ModelDims;
pub use matrix::StochasticMatrix;
pub use truth::GroundTruth;
