//! Varying-coefficient regression y_i = w_i f(x_i) + e_i, fitted by
//! reduction to the weighted design: the likelihood in diag(w) Phi is
//! exactly the simple-regression likelihood, so the same Gibbs sampler
//! applies unchanged and w = 1 reproduces the simple fit draw for draw.

use nalgebra::{DMatrix, DVector};

use crate::basis::BSplineBasis;
use crate::error::{FhsError, Result};
use crate::projection::{NullBasis, ShrinkageDesign};
use crate::sampler::{run_chain, ChainDraws, FhsConfig};

#[derive(Debug, Clone)]
pub struct VaryingCoefficientData {
    pub y: DVector<f64>,
    pub w: DVector<f64>,
    pub x: Vec<f64>,
}

impl VaryingCoefficientData {
    pub fn new(y: Vec<f64>, w: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if y.len() != w.len() || y.len() != x.len() {
            return Err(FhsError::DimensionMismatch(format!(
                "y ({}), w ({}) and x ({}) must have equal lengths",
                y.len(),
                w.len(),
                x.len()
            )));
        }
        if y.iter()
            .chain(w.iter())
            .chain(x.iter())
            .any(|v| !v.is_finite())
        {
            return Err(FhsError::Data(
                "varying-coefficient data contains non-finite values".into(),
            ));
        }
        Ok(Self {
            y: DVector::from_vec(y),
            w: DVector::from_vec(w),
            x,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Draws of the coefficient-function fit together with the basis the
/// coefficients refer to.
#[derive(Debug, Clone)]
pub struct VcFit {
    pub draws: ChainDraws,
    pub basis: BSplineBasis,
    pub design: ShrinkageDesign,
}

/// Fit the varying-coefficient model, shrinking f towards the span of
/// `null_basis` (constants in the default protocol, which reduces the
/// model to plain linear regression in w).
pub fn fit_varying_coefficient(
    data: &VaryingCoefficientData,
    null_basis: &NullBasis,
    cfg: &FhsConfig,
) -> Result<VcFit> {
    cfg.validate()?;
    let lo = data.x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let basis = BSplineBasis::new(cfg.k_n, cfg.degree, (lo, hi))?;
    let phi = basis.design_matrix(&data.x)?;
    let phi0 = null_basis.build(&data.x);

    let weighted = scale_rows(&phi.values, &data.w);
    let weighted0 = scale_rows(&phi0, &data.w);
    let design = ShrinkageDesign::from_matrices(weighted, weighted0)?;
    let draws = run_chain(&data.y, &design, cfg)?;
    Ok(VcFit {
        draws,
        basis,
        design,
    })
}

fn scale_rows(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= w[i];
    }
    out
}
