//! Functional horseshoe shrinkage for nonparametric regression.
//!
//! A spline (or Gaussian-process) fit is shrunk towards a user-chosen
//! parametric subspace — constants, lines, quadratics, or any custom
//! design — with the amount of shrinkage learned from the data through a
//! Beta-distributed shrinkage factor. The crate provides:
//!
//! * [`basis`]: B-spline bases and design matrices;
//! * [`projection`]: projectors and the orthogonal decomposition of the
//!   spline span against the parametric null space;
//! * [`sampler`]: the Gibbs sampler with a slice step for the shrinkage
//!   scale, posterior summaries, and normalizer diagnostics;
//! * [`extmodels`]: varying-coefficient regression, log-spline density
//!   estimation, and shrinkage Gaussian-process priors;
//! * [`additive`]: componentwise shrinkage for additive models with
//!   credible-band variable selection;
//! * [`harness`]: data generators, experiment orchestration, metrics,
//!   CSV/SVG output, and the pieces behind the `fhs` CLI.

pub mod additive;
pub mod basis;
pub mod error;
pub mod extmodels;
pub mod harness;
pub mod projection;
pub mod sampler;
pub mod special;

pub use error::{FhsError, Result};
