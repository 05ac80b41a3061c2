//! losslab: a desk-scale laboratory for the geometry of neural-network
//! loss landscapes.
//!
//! The crate bundles five small subsystems that share one deterministic
//! random-number discipline (see [`rng`]):
//!
//! * [`sphere`] — closed-form and Monte-Carlo geometry of n-balls:
//!   volumes, surfaces, peak dimensions, expected pairwise distances and
//!   Gaussian-support volumes.
//! * [`net`] — a from-scratch tiny multilayer perceptron with binary
//!   cross-entropy, analytic gradients and constant-rate SGD.
//! * [`hist`] — a seed-deterministic, partition-invariant Monte-Carlo
//!   engine producing loss histograms over random initializations, with
//!   mode detection, tail-mass metrics and targeted tail resampling.
//! * [`distfit`] — maximum-likelihood fitting of left-bounded
//!   distributions (lognormal, gamma, Weibull) and a Kolmogorov-Smirnov
//!   goodness-of-fit test.
//! * [`probes`] — intrinsic-dimension estimators, minibatch gradient
//!   ensembles, gradient confusion and the architecture influence ratio.
//!
//! All Monte-Carlo results are bit-identical for a given seed regardless
//! of worker count; parallelism is enabled through the `parallel` feature
//! (on by default, off for wasm builds).

pub mod data;
pub mod distfit;
pub mod error;
pub mod hist;
pub mod net;
pub mod parallel;
pub mod plot;
pub mod probes;
pub mod rng;
pub mod special;
pub mod sphere;

pub use error::{Error, Result};
