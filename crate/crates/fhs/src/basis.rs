//! B-spline bases on a closed interval: knot construction, pointwise
//! evaluation, and design matrices.
//!
//! Knots are clamped: the boundary knot is repeated `degree` extra times
//! on each side, so the first basis function equals 1 at the left
//! endpoint and the last equals 1 at the right endpoint (the right
//! endpoint is treated as part of the last span rather than producing a
//! zero row).

use nalgebra::{DMatrix, DVector};

use crate::error::{FhsError, Result};

/// A B-spline basis of `n_basis` functions of the given degree over a
/// closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    /// Full non-decreasing knot vector, length `n_basis + degree + 1`.
    knots: Vec<f64>,
    n_basis: usize,
    lo: f64,
    hi: f64,
}

impl BSplineBasis {
    /// Basis with equally spaced interior breakpoints over `domain`.
    ///
    /// Requires `n_basis >= degree + 1` (at least one span; the single
    /// span case is the Bernstein basis) and a non-degenerate domain.
    pub fn new(n_basis: usize, degree: usize, domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(FhsError::InvalidBasis(format!(
                "domain [{lo}, {hi}] must be finite with positive length"
            )));
        }
        if n_basis < degree + 1 {
            return Err(FhsError::InvalidBasis(format!(
                "n_basis = {n_basis} is too small for degree {degree} (need at least {})",
                degree + 1
            )));
        }
        // n_basis - degree + 1 breakpoints including both boundaries
        let n_breaks = n_basis - degree + 1;
        let step = (hi - lo) / (n_breaks - 1) as f64;
        let breaks: Vec<f64> = (0..n_breaks)
            .map(|i| {
                if i + 1 == n_breaks {
                    hi
                } else {
                    lo + step * i as f64
                }
            })
            .collect();
        Self::with_breaks(degree, &breaks)
    }

    /// Basis over an explicit ascending breakpoint sequence (first and
    /// last entries are the domain boundaries). This is the hook for
    /// quantile-based knot placement.
    pub fn with_breaks(degree: usize, breaks: &[f64]) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(FhsError::InvalidBasis(
                "need at least two breakpoints".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(FhsError::InvalidBasis(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        let lo = breaks[0];
        let hi = *breaks.last().unwrap();
        let mut knots = Vec::with_capacity(breaks.len() + 2 * degree);
        knots.extend(std::iter::repeat(lo).take(degree));
        knots.extend_from_slice(breaks);
        knots.extend(std::iter::repeat(hi).take(degree));
        let n_basis = knots.len() - degree - 1;
        Ok(Self {
            degree,
            knots,
            n_basis,
            lo,
            hi,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Full clamped knot vector.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Index of the knot span containing x, clamped to valid spans and
    /// treating the right boundary as part of the last span.
    fn span_index(&self, x: f64) -> usize {
        let q = self.degree;
        let last = self.n_basis - 1;
        if x >= self.hi {
            return last;
        }
        // binary search over knots[q ..= n_basis] for t[i] <= x < t[i+1]
        let mut lo = q;
        let mut hi = self.n_basis;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo.min(last)
    }

    /// Evaluate all basis functions at x.
    ///
    /// The result is non-negative and sums to 1; x outside the closed
    /// domain is an error (this module never extrapolates).
    pub fn eval(&self, x: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.n_basis);
        self.eval_into(x, 0, &mut out)?;
        Ok(out)
    }

    fn eval_into(&self, x: f64, index: usize, out: &mut DVector<f64>) -> Result<()> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(FhsError::OutOfDomain {
                index,
                value: x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let q = self.degree;
        let i = self.span_index(x);
        // de Boor triangular scheme for the q+1 functions alive on span i
        let mut vals = vec![0.0_f64; q + 1];
        let mut left = vec![0.0_f64; q + 1];
        let mut right = vec![0.0_f64; q + 1];
        vals[0] = 1.0;
        for j in 1..=q {
            left[j] = x - self.knots[i + 1 - j];
            right[j] = self.knots[i + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let tmp = vals[r] / denom;
                vals[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            vals[j] = saved;
        }
        out.fill(0.0);
        for (r, v) in vals.iter().enumerate() {
            out[i - q + r] = *v;
        }
        Ok(())
    }

    /// Design matrix with row i equal to `eval(xs[i])`.
    pub fn design_matrix(&self, xs: &[f64]) -> Result<DesignMatrix> {
        let n = xs.len();
        let mut values = DMatrix::zeros(n, self.n_basis);
        let mut row = DVector::zeros(self.n_basis);
        for (i, &x) in xs.iter().enumerate() {
            self.eval_into(x, i, &mut row)?;
            values.row_mut(i).copy_from(&row.transpose());
        }
        Ok(DesignMatrix {
            basis: self.clone(),
            values,
            covariates: xs.to_vec(),
        })
    }
}

/// Basis functions evaluated at a set of covariates.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub basis: BSplineBasis,
    /// n x n_basis matrix with entry (i, j) = phi_j(x_i).
    pub values: DMatrix<f64>,
    pub covariates: Vec<f64>,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_basis(&self) -> usize {
        self.values.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Textbook Cox-de Boor recursion, written independently of the de
    /// Boor triangular scheme used by `eval`. Degree-0 functions are
    /// right-continuous indicators, with the last nonempty interval
    /// closed on the right.
    fn cox_de_boor(knots: &[f64], j: usize, q: usize, x: f64, hi: f64) -> f64 {
        if q == 0 {
            let nonempty = knots[j] < knots[j + 1];
            let inside = knots[j] <= x && x < knots[j + 1];
            let at_right_end = x == hi && knots[j + 1] == hi;
            return if nonempty && (inside || at_right_end) {
                1.0
            } else {
                0.0
            };
        }
        let mut acc = 0.0;
        let d1 = knots[j + q] - knots[j];
        if d1 > 0.0 {
            acc += (x - knots[j]) / d1 * cox_de_boor(knots, j, q - 1, x, hi);
        }
        let d2 = knots[j + q + 1] - knots[j + 1];
        if d2 > 0.0 {
            acc += (knots[j + q + 1] - x) / d2 * cox_de_boor(knots, j + 1, q - 1, x, hi);
        }
        acc
    }

    fn oracle_eval(basis: &BSplineBasis, x: f64) -> Vec<f64> {
        (0..basis.n_basis())
            .map(|j| cox_de_boor(basis.knots(), j, basis.degree(), x, basis.domain().1))
            .collect()
    }

    #[test]
    fn cubic_basis_knot_layout() {
        let b = BSplineBasis::new(8, 3, (-PI, PI)).unwrap();
        assert_eq!(b.n_basis(), 8);
        assert_eq!(b.knots().len(), 12);
        // 3 replicated end knots each side (4 copies of each boundary value)
        assert!(b.knots()[..4].iter().all(|&t| t == -PI));
        assert!(b.knots()[8..].iter().all(|&t| t == PI));
        // 4 strictly interior knots
        let interior: Vec<f64> = b
            .knots()
            .iter()
            .cloned()
            .filter(|&t| t > -PI && t < PI)
            .collect();
        assert_eq!(interior.len(), 4);
    }

    #[test]
    fn single_span_linear_basis_is_the_hat_pair() {
        let b = BSplineBasis::new(2, 1, (0.0, 1.0)).unwrap();
        for &x in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let v = b.eval(x).unwrap();
            assert_relative_eq!(v[0], 1.0 - x, epsilon = 1e-15);
            assert_relative_eq!(v[1], x, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_too_few_functions_and_degenerate_domain() {
        assert!(BSplineBasis::new(3, 3, (0.0, 1.0)).is_err());
        assert!(BSplineBasis::new(8, 3, (1.0, 1.0)).is_err());
        assert!(BSplineBasis::new(8, 3, (2.0, 1.0)).is_err());
    }

    #[test]
    fn degree_zero_is_an_indicator_basis() {
        let b = BSplineBasis::with_breaks(0, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(b.n_basis(), 2);
        let v = b.eval(0.25).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0]);
        let v = b.eval(0.75).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 1.0]);
        // right-continuity at the interior knot, closed right end
        assert_eq!(b.eval(0.5).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(b.eval(1.0).unwrap().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn boundary_values_pin_first_and_last_functions() {
        let b = BSplineBasis::new(8, 3, (0.0, 1.0)).unwrap();
        let v = b.eval(0.0).unwrap();
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-14);
        assert!(v.iter().skip(1).all(|&x| x.abs() < 1e-14));
        let v = b.eval(1.0).unwrap();
        assert_relative_eq!(v[7], 1.0, epsilon = 1e-14);
        assert!(v.iter().take(7).all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn matches_recursive_oracle_quadratic() {
        let b = BSplineBasis::new(5, 2, (0.0, 1.0)).unwrap();
        let v = b.eval(0.37).unwrap();
        let o = oracle_eval(&b, 0.37);
        for j in 0..5 {
            assert_relative_eq!(v[j], o[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_recursive_oracle_cubic() {
        let b = BSplineBasis::new(8, 3, (0.0, 1.0)).unwrap();
        for &x in &[0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 0.999, 1.0] {
            let v = b.eval(x).unwrap();
            let o = oracle_eval(&b, x);
            for j in 0..8 {
                assert_relative_eq!(v[j], o[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn design_matrix_rows_match_eval_and_report_bad_index() {
        let b = BSplineBasis::new(2, 1, (0.0, 1.0)).unwrap();
        let d = b.design_matrix(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(d.values.row(0).transpose().as_slice(), &[1.0, 0.0]);
        assert_eq!(d.values.row(1).transpose().as_slice(), &[0.5, 0.5]);
        assert_eq!(d.values.row(2).transpose().as_slice(), &[0.0, 1.0]);

        let err = b.design_matrix(&[0.5, 1.5]).unwrap_err();
        match err {
            FhsError::OutOfDomain { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn gram_matrix_is_spd_and_matches_direct_assembly() {
        // 200 covariates spread over the domain, k = 8 cubic basis
        let b = BSplineBasis::new(8, 3, (-PI, PI)).unwrap();
        let xs: Vec<f64> = (0..200)
            .map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / 200.0)
            .collect();
        let d = b.design_matrix(&xs).unwrap();
        let gram = d.values.transpose() * &d.values;
        // direct assembly from eval
        let mut oracle = DMatrix::zeros(8, 8);
        for &x in &xs {
            let v = b.eval(x).unwrap();
            oracle += &v * v.transpose();
        }
        for i in 0..8 {
            for j in 0..8 {
                assert_relative_eq!(gram[(i, j)], oracle[(i, j)], epsilon = 1e-10);
            }
        }
        assert!(nalgebra::Cholesky::new(gram).is_some(), "Gram must be SPD");
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_local_support(
            degree in 0usize..=5,
            extra in 0usize..=9,
            frac in 0.0f64..=1.0,
        ) {
            let n_basis = degree + 1 + extra;
            let b = BSplineBasis::new(n_basis, degree, (-2.0, 3.0)).unwrap();
            let x = -2.0 + 5.0 * frac;
            let v = b.eval(x).unwrap();
            let sum: f64 = v.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(v.iter().all(|&p| p >= 0.0));
            prop_assert!(v.iter().filter(|&&p| p != 0.0).count() <= degree + 1);
            // support of function j is [knots[j], knots[j+degree+1]]
            for j in 0..n_basis {
                if v[j] != 0.0 {
                    prop_assert!(x >= b.knots()[j] && x <= b.knots()[j + degree + 1]);
                }
            }
        }
    }
}
