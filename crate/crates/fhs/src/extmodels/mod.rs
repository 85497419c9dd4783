//! Model extensions: varying-coefficient regression, log-spline density
//! estimation, and shrinkage Gaussian-process priors.

pub mod gp;
pub mod logspline;
pub mod vc;

pub use gp::{gp_prior_sample, GpShrinkagePrior, Kernel};
pub use logspline::{fit_logspline, LogSplineFit, LogSplineModel, MhSettings};
pub use vc::{fit_varying_coefficient, VaryingCoefficientData, VcFit};
