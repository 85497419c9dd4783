//! Orthogonal projectors and the shrinkage decomposition: the spline
//! span is split into a parametric null space and its orthogonal
//! complement, and the fitted mean interpolates between the projections
//! onto the two pieces.
//!
//! Projectors are held as orthonormal factors (n x d) and applied as two
//! matrix-vector products; the full n x n matrix is materialized only on
//! demand for diagnostics and tests.

use nalgebra::{DMatrix, DVector};

use crate::basis::DesignMatrix;
use crate::error::{FhsError, Result};

/// Relative singular-value cutoff below which columns count as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Orthogonal projector onto a subspace, stored as an orthonormal basis
/// of that subspace.
#[derive(Debug, Clone)]
pub struct Projector {
    u: DMatrix<f64>,
}

impl Projector {
    pub fn dim(&self) -> usize {
        self.u.ncols()
    }

    /// Orthonormal basis of the projected subspace.
    pub fn orthonormal_basis(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Apply the projector: U (U^T v).
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.u * (self.u.transpose() * v)
    }

    /// Materialize the full n x n projector matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.u * self.u.transpose()
    }
}

/// Orthonormal basis of the column space of `a` via SVD, together with
/// the detected rank and the leading singular value.
fn orthonormal_factor(a: &DMatrix<f64>) -> (DMatrix<f64>, usize, f64) {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let s = svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0_f64, f64::max);
    let rank = s.iter().filter(|&&sv| sv > RANK_TOL * s_max).count();
    (u.columns(0, rank).into_owned(), rank, s_max)
}

/// Orthogonal projector onto the column space of a full-column-rank
/// matrix. Rank deficiency (smallest singular value below 1e-10 of the
/// largest) is an error rather than a silent column drop, because the
/// null-space dimension enters the prior exponent.
pub fn projector(a: &DMatrix<f64>) -> Result<Projector> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(FhsError::DimensionMismatch(
            "projector of an empty matrix".into(),
        ));
    }
    let (u, rank, _) = orthonormal_factor(a);
    if rank < a.ncols() {
        return Err(FhsError::RankDeficient {
            deficient: a.ncols() - rank,
            cols: a.ncols(),
        });
    }
    Ok(Projector { u })
}

/// Named parametric null spaces used throughout the models, evaluated at
/// a covariate vector.
#[derive(Debug, Clone)]
pub enum NullBasis {
    /// span{1}
    Constant,
    /// span{1, x}
    Linear,
    /// span{1, x, x^2}
    Quadratic,
    /// caller-supplied columns
    Custom(DMatrix<f64>),
}

impl NullBasis {
    pub fn build(&self, xs: &[f64]) -> DMatrix<f64> {
        let n = xs.len();
        match self {
            NullBasis::Constant => DMatrix::from_element(n, 1, 1.0),
            NullBasis::Linear => DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { xs[i] }),
            NullBasis::Quadratic => DMatrix::from_fn(n, 3, |i, j| xs[i].powi(j as i32)),
            NullBasis::Custom(m) => m.clone(),
        }
    }
}

/// The orthogonal decomposition of a spline design against a nested
/// parametric null design: spans, projectors, and the change-of-basis
/// data the sampler needs to draw coefficients in block form.
#[derive(Debug, Clone)]
pub struct ShrinkageDesign {
    phi: DMatrix<f64>,
    phi0: DMatrix<f64>,
    q0: Projector,
    q1: Projector,
    q_phi: Projector,
    /// u1^T phi ((k-d0) x k): complement coordinates; beta^T c1^T c1 beta
    /// is the quadratic form in the prior exponent.
    c1: DMatrix<f64>,
    /// phi^+ u0 and phi^+ u1: map block coordinates back to beta.
    m0: DMatrix<f64>,
    m1: DMatrix<f64>,
    /// thin QR of phi for least-squares solves
    qr_q: DMatrix<f64>,
    qr_r: DMatrix<f64>,
    d0: usize,
}

impl ShrinkageDesign {
    /// Decompose `phi` against the null design `phi0`.
    ///
    /// Fails if either matrix is rank deficient, if d0 >= k, or if the
    /// null space is not (numerically) contained in the spline span.
    pub fn new(phi: &DesignMatrix, phi0: DMatrix<f64>) -> Result<Self> {
        Self::from_matrices(phi.values.clone(), phi0)
    }

    /// Matrix-level constructor; used directly by the weighted-design
    /// models where the rows are rescaled basis evaluations.
    pub fn from_matrices(phi: DMatrix<f64>, phi0: DMatrix<f64>) -> Result<Self> {
        let n = phi.nrows();
        let k = phi.ncols();
        if phi0.nrows() != n {
            return Err(FhsError::DimensionMismatch(format!(
                "null design has {} rows, spline design has {n}",
                phi0.nrows()
            )));
        }
        if phi0.ncols() >= k {
            return Err(FhsError::InvalidConfig(format!(
                "null space dimension {} must be smaller than the basis size {k}",
                phi0.ncols()
            )));
        }
        let q0 = projector(&phi0)?;
        let q_phi = projector(&phi)?;
        let d0 = q0.dim();

        // nestedness: phi0 must lie in span(phi)
        let resid =
            &phi0 - q_phi.orthonormal_basis() * (q_phi.orthonormal_basis().transpose() * &phi0);
        let rel = resid.norm() / phi0.norm().max(f64::MIN_POSITIVE);
        if rel > 1e-8 {
            return Err(FhsError::NotNested { residual: rel });
        }

        // complement: orthonormalize (I - Q0) phi, then re-orthogonalize
        // against u0 once more (B-spline columns are highly collinear and
        // a single pass loses orthogonality)
        let u0 = q0.orthonormal_basis();
        let resid_phi = &phi - u0 * (u0.transpose() * &phi);
        let (u1_raw, rank1, _) = orthonormal_factor(&resid_phi);
        if rank1 < k - d0 {
            return Err(FhsError::RankDeficient {
                deficient: (k - d0) - rank1,
                cols: k - d0,
            });
        }
        let u1_raw = u1_raw.columns(0, k - d0).into_owned();
        let u1_re = &u1_raw - u0 * (u0.transpose() * &u1_raw);
        let (u1, rank1b, _) = orthonormal_factor(&u1_re);
        if rank1b < k - d0 {
            return Err(FhsError::RankDeficient {
                deficient: (k - d0) - rank1b,
                cols: k - d0,
            });
        }

        let c1 = u1.transpose() * &phi;

        // coefficient maps via thin QR of phi
        let qr = phi.clone().qr();
        let qr_q = qr.q();
        let qr_r = qr.r();
        let solve_r = |b: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            qr_r.solve_upper_triangular(b)
                .ok_or_else(|| FhsError::RankDeficient {
                    deficient: 1,
                    cols: k,
                })
        };
        let m0 = solve_r(&(qr_q.transpose() * u0))?;
        let m1 = solve_r(&(qr_q.transpose() * &u1))?;

        Ok(Self {
            phi,
            phi0,
            q0: Projector { u: u0.clone() },
            q1: Projector { u: u1 },
            q_phi,
            c1,
            m0,
            m1,
            qr_q,
            qr_r,
            d0,
        })
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn k(&self) -> usize {
        self.phi.ncols()
    }

    pub fn d0(&self) -> usize {
        self.d0
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn phi0(&self) -> &DMatrix<f64> {
        &self.phi0
    }

    /// Orthonormal basis of the complement span (the paper's third block
    /// of the orthogonalized design).
    pub fn phi1(&self) -> &DMatrix<f64> {
        self.q1.orthonormal_basis()
    }

    pub fn q0(&self) -> &Projector {
        &self.q0
    }

    pub fn q1(&self) -> &Projector {
        &self.q1
    }

    pub fn q_phi(&self) -> &Projector {
        &self.q_phi
    }

    pub(crate) fn m0(&self) -> &DMatrix<f64> {
        &self.m0
    }

    pub(crate) fn m1(&self) -> &DMatrix<f64> {
        &self.m1
    }

    /// Least-squares coefficients phi^+ y.
    pub fn least_squares(&self, y: &DVector<f64>) -> DVector<f64> {
        let rhs = self.qr_q.transpose() * y;
        self.qr_r
            .solve_upper_triangular(&rhs)
            .expect("design QR is full rank by construction")
    }

    /// ||(I - Q0) phi beta||^2 = ||c1 beta||^2, the quadratic form in the
    /// prior exponent.
    pub fn complement_quad_form(&self, beta: &DVector<f64>) -> f64 {
        (&self.c1 * beta).norm_squared()
    }

    /// y^T Q1 y, the evidence against the null space (2 sigma^2 H_n).
    pub fn complement_energy(&self, y: &DVector<f64>) -> f64 {
        (self.q1.orthonormal_basis().transpose() * y).norm_squared()
    }

    /// Conditional posterior mean fit (1-omega) Q_phi y + omega Q0 y.
    pub fn shrinkage_mean(&self, y: &DVector<f64>, omega: f64) -> DVector<f64> {
        assert!((0.0..=1.0).contains(&omega), "omega must lie in [0, 1]");
        let spline = self.q_phi.apply(y);
        let parametric = self.q0.apply(y);
        spline * (1.0 - omega) + parametric * omega
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BSplineBasis;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn mean_projector_of_ones() {
        let a = DMatrix::from_element(4, 1, 1.0);
        let p = projector(&a).unwrap().matrix();
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(p[(i, j)], 0.25, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn coordinate_projector() {
        let a = DMatrix::from_fn(3, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let p = projector(&a).unwrap().matrix();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        assert!(max_abs_diff(&p, &expect) < 1e-14);
    }

    #[test]
    fn projector_matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 6, 3);
        let p = projector(&a).unwrap().matrix();
        // naive A (A^T A)^{-1} A^T via dense inverse
        let gram = a.transpose() * &a;
        let inv = gram.try_inverse().unwrap();
        let oracle = &a * inv * a.transpose();
        assert!(max_abs_diff(&p, &oracle) < 1e-10);
    }

    #[test]
    fn projector_rejects_rank_deficiency_with_count() {
        let mut a = DMatrix::zeros(5, 3);
        a.set_column(0, &DVector::from_element(5, 1.0));
        a.set_column(1, &DVector::from_fn(5, |i, _| i as f64));
        a.set_column(2, &DVector::from_fn(5, |i, _| 2.0 * i as f64 + 3.0)); // dependent
        match projector(&a).unwrap_err() {
            FhsError::RankDeficient { deficient, cols } => {
                assert_eq!(deficient, 1);
                assert_eq!(cols, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn spline_design(n: usize, k: usize, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        BSplineBasis::new(k, 3, (0.0, 1.0))
            .unwrap()
            .design_matrix(&xs)
            .unwrap()
    }

    #[test]
    fn nested_polynomial_decomposition() {
        let n = 40;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let phi = DMatrix::from_fn(n, 3, |i, j| xs[i].powi(j as i32));
        let phi0 = DMatrix::from_fn(n, 2, |i, j| xs[i].powi(j as i32));
        let d = ShrinkageDesign::from_matrices(phi, phi0).unwrap();
        assert_eq!(d.d0(), 2);
        assert_eq!(d.phi1().ncols(), 1);
        let sum = d.q0().matrix() + d.q1().matrix();
        assert!(max_abs_diff(&sum, &d.q_phi().matrix()) < 1e-8);
    }

    #[test]
    fn first_column_null_space() {
        let phi = spline_design(60, 8, 3);
        let phi0 = phi.values.column(0).into_owned();
        let d =
            ShrinkageDesign::new(&phi, DMatrix::from_column_slice(60, 1, phi0.as_slice())).unwrap();
        assert_eq!(d.d0(), 1);
        let tr: f64 = d.q1().matrix().trace();
        assert_relative_eq!(tr, 7.0, epsilon = 1e-8);
    }

    #[test]
    fn linear_null_against_cubic_splines() {
        // k = 8 cubic splines over 200 points, null = {1, x}
        let phi = spline_design(200, 8, 11);
        let phi0 = NullBasis::Linear.build(&phi.covariates);
        let d = ShrinkageDesign::new(&phi, phi0).unwrap();
        assert_eq!(d.phi1().ncols(), 6);
        let residual = max_abs_diff(&(d.q0().matrix() + d.q1().matrix()), &d.q_phi().matrix());
        assert!(residual < 1e-8, "decomposition residual {residual}");
        // projector invariants
        for q in [d.q0(), d.q1(), d.q_phi()] {
            let m = q.matrix();
            assert!(max_abs_diff(&(&m * &m), &m) < 1e-8);
            assert!(max_abs_diff(&m.transpose(), &m) < 1e-10);
        }
        assert_relative_eq!(d.q0().matrix().trace(), 2.0, epsilon = 1e-9);
        // orthogonality of the two blocks
        let cross = d.phi1().transpose() * d.phi0();
        assert!(cross.iter().all(|v| v.abs() < 1e-10));
        let q1q0 = d.q1().matrix() * d.q0().matrix();
        assert!(q1q0.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn rejects_non_nested_null_space() {
        let phi = spline_design(50, 8, 5);
        // sin(20x) is far outside the span of 8 cubic splines
        let phi0 = DMatrix::from_fn(50, 1, |i, _| (20.0 * phi.covariates[i]).sin());
        match ShrinkageDesign::new(&phi, phi0).unwrap_err() {
            FhsError::NotNested { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shrinkage_mean_endpoints_and_direct_solve_oracle() {
        let phi = spline_design(120, 8, 17);
        let phi0 = NullBasis::Linear.build(&phi.covariates);
        let d = ShrinkageDesign::new(&phi, phi0.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let y = DVector::from_fn(120, |_, _| rng.random::<f64>() * 4.0 - 2.0);

        let unshrunk = d.shrinkage_mean(&y, 0.0);
        assert!((unshrunk - d.q_phi().apply(&y)).norm() < 1e-12);
        let parametric = d.shrinkage_mean(&y, 1.0);
        assert!((parametric - d.q0().apply(&y)).norm() < 1e-12);

        // direct conditional-mean solve: beta = (Phi'Phi + eta Phi'(I-P0)Phi)^{-1} Phi'y
        let omega: f64 = 0.3;
        let eta = omega / (1.0 - omega);
        let gram0 = phi0.transpose() * &phi0;
        let p0 = &phi0 * gram0.try_inverse().unwrap() * phi0.transpose();
        let ip = DMatrix::identity(120, 120) - &p0;
        let m = d.phi().transpose() * d.phi() + (d.phi().transpose() * &ip * d.phi()) * eta;
        let beta = m.lu().solve(&(d.phi().transpose() * &y)).unwrap();
        let oracle_fit = d.phi() * beta;
        let fit = d.shrinkage_mean(&y, omega);
        let max_diff = (&fit - &oracle_fit).amax();
        assert!(max_diff < 1e-8, "convex-combination mismatch {max_diff}");
    }

    #[test]
    fn shrinkage_distance_to_parametric_fit_is_monotone() {
        let phi = spline_design(80, 8, 23);
        let phi0 = NullBasis::Linear.build(&phi.covariates);
        let d = ShrinkageDesign::new(&phi, phi0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = DVector::from_fn(80, |_, _| rng.random::<f64>() - 0.5);
        let target = d.q0().apply(&y);
        let mut last = f64::INFINITY;
        for i in 0..=10 {
            let omega = i as f64 / 10.0;
            let dist = (d.shrinkage_mean(&y, omega) - &target).norm();
            assert!(dist <= last + 1e-12);
            last = dist;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn projector_invariant_under_change_of_basis(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 9, 3);
            // random invertible 3x3 (diagonally dominated to stay well-conditioned)
            let mut t = random_matrix(&mut rng, 3, 3);
            for i in 0..3 {
                t[(i, i)] += 3.0;
            }
            let p1 = projector(&a).unwrap().matrix();
            let p2 = projector(&(&a * &t)).unwrap().matrix();
            prop_assert!(max_abs_diff(&p1, &p2) < 1e-8);
        }

        #[test]
        fn convex_combination_identity_random_draws(seed in 0u64..500) {
            let phi = spline_design(60, 8, seed.wrapping_add(1000));
            let phi0 = NullBasis::Linear.build(&phi.covariates);
            let d = ShrinkageDesign::new(&phi, phi0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = DVector::from_fn(60, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let omega = rng.random::<f64>();
            let lhs = d.shrinkage_mean(&y, omega);
            let rhs = d.q_phi().apply(&y) * (1.0 - omega) + d.q0().apply(&y) * omega;
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }
    }
}
