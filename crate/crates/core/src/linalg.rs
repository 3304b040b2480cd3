//! Symmetric-matrix utilities: eigendecompositions, square roots, and
//! Loewner-order comparisons.
//!
//! Everything here is deterministic for fixed inputs: eigenvalues are sorted
//! ascending with a fixed permutation applied to the eigenvectors, so repeated
//! calls yield bitwise-identical results.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative symmetry tolerance used by [`check_symmetric`].
pub const SYM_TOL: f64 = 1e-12;

/// Eigenvalues below `-PSD_CLAMP_REL * lambda_max` are treated as genuine
/// negativity; anything between that and zero is rounding noise and clamped.
pub const PSD_CLAMP_REL: f64 = 1e-10;

/// Default conditioning threshold for inverse square roots:
/// `lambda_min / lambda_max` must be at least this.
pub const INV_SQRT_COND_THRESHOLD: f64 = 1e-12;

/// Sorted symmetric eigendecomposition: `values` ascending, `vectors`
/// column-aligned with `values`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn lambda_min(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Rebuild `V diag(f(lambda)) V^T`.
    pub fn map_rebuild(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        let m = &scaled * self.vectors.transpose();
        symmetrize(&m)
    }
}

/// `(M + M^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Rejects matrices whose asymmetry exceeds `SYM_TOL` relative to their
/// norm; non-finite entries are rejected too (NaN comparisons would
/// otherwise slip through).
pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let norm = m.norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite("symmetric-matrix argument"));
    }
    let defect = (m - m.transpose()).norm();
    if defect > SYM_TOL * norm.max(1.0) {
        return Err(Error::NotSymmetric { defect });
    }
    Ok(())
}

pub fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Eigendecomposition of a symmetric matrix with ascending eigenvalue order.
///
/// The input is symmetrized first so callers can pass matrices carrying
/// rounding-level asymmetry.
pub fn sym_eigen(m: &DMatrix<f64>) -> SymEigen {
    let n = m.nrows();
    let se = nalgebra::SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = se.eigenvalues[src];
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    SymEigen { values, vectors }
}

/// Clamps rounding-level negative eigenvalues of a PSD matrix to zero; errors
/// on negativity beyond `PSD_CLAMP_REL * lambda_max`.
fn psd_eigenvalues(eig: &SymEigen) -> Result<DVector<f64>> {
    let lambda_max = eig.lambda_max().max(0.0);
    let floor = -PSD_CLAMP_REL * lambda_max.max(1e-300);
    let mut vals = eig.values.clone();
    for v in vals.iter_mut() {
        if *v < floor {
            return Err(Error::NotPsd {
                lambda_min: eig.lambda_min(),
                lambda_max,
            });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(vals)
}

/// Symmetric PSD square root via eigendecomposition: `S = V L V^T` gives
/// `S^{1/2} = V L^{1/2} V^T`.
pub fn sym_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(s)?;
    check_finite(s, "sym_sqrt input")?;
    let eig = sym_eigen(s);
    let vals = psd_eigenvalues(&eig)?;
    let fixed = SymEigen {
        values: vals,
        vectors: eig.vectors,
    };
    Ok(fixed.map_rebuild(f64::sqrt))
}

/// Symmetric inverse square root; the spectrum must be well separated from
/// zero (`lambda_min/lambda_max >= threshold`) or the matrix is declared
/// near-singular, which in this crate signals loss of minimality.
pub fn sym_inv_sqrt_with(s: &DMatrix<f64>, threshold: f64) -> Result<DMatrix<f64>> {
    check_symmetric(s)?;
    check_finite(s, "sym_inv_sqrt input")?;
    let eig = sym_eigen(s);
    let vals = psd_eigenvalues(&eig)?;
    let lambda_max = vals[vals.len() - 1];
    let lambda_min = vals[0];
    if lambda_max <= 0.0 {
        return Err(Error::NearSingular {
            ratio: 0.0,
            threshold,
        });
    }
    let ratio = lambda_min / lambda_max;
    if ratio < threshold {
        return Err(Error::NearSingular { ratio, threshold });
    }
    let fixed = SymEigen {
        values: vals,
        vectors: eig.vectors,
    };
    Ok(fixed.map_rebuild(|l| 1.0 / l.sqrt()))
}

pub fn sym_inv_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    sym_inv_sqrt_with(s, INV_SQRT_COND_THRESHOLD)
}

/// Smallest `eps` with `e^{-eps} X_ref <= X_s <= e^{eps} X_ref` in the Loewner
/// order, computed as the extreme log-eigenvalues of the whitened matrix
/// `X_ref^{-1/2} X_s X_ref^{-1/2}`.
///
/// Returns `f64::INFINITY` when `X_s` is singular (or indefinite at rounding
/// level) in a direction where `X_ref` is not, so no finite factor exists.
pub fn loewner_sandwich_epsilon(x_ref: &DMatrix<f64>, x_s: &DMatrix<f64>) -> Result<f64> {
    if x_ref.shape() != x_s.shape() {
        return Err(Error::DimensionMismatch(format!(
            "sandwich operands {}x{} vs {}x{}",
            x_ref.nrows(),
            x_ref.ncols(),
            x_s.nrows(),
            x_s.ncols()
        )));
    }
    check_symmetric(x_s)?;
    let inv_root = sym_inv_sqrt(x_ref)?;
    let whitened = symmetrize(&(&inv_root * x_s * &inv_root));
    let eig = sym_eigen(&whitened);
    let lo = eig.lambda_min();
    let hi = eig.lambda_max();
    if lo <= 0.0 || hi <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(hi.ln().max(-lo.ln()))
}

/// Numerical rank: count of singular values above
/// `max(rows, cols) * sigma_max * tol_factor`.
pub fn numerical_rank(m: &DMatrix<f64>, tol_factor: f64) -> usize {
    let svals = m.singular_values();
    let sigma_max = svals.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return 0;
    }
    let tol = m.nrows().max(m.ncols()) as f64 * sigma_max * tol_factor;
    svals.iter().filter(|&&s| s > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dmat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn sqrt_of_diagonal_is_elementwise() {
        let s = dmat(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let r = sym_sqrt(&s).unwrap();
        assert_relative_eq!(r, dmat(2, 2, &[2.0, 0.0, 0.0, 3.0]), epsilon = 1e-12);
    }

    #[test]
    fn sqrt_and_inv_sqrt_of_identity() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert_relative_eq!(sym_sqrt(&id).unwrap(), id, epsilon = 1e-12);
        assert_relative_eq!(sym_inv_sqrt(&id).unwrap(), id, epsilon = 1e-12);
    }

    #[test]
    fn random_psd_multiply_back() {
        // S = M M^T, square of sym_sqrt reproduces S within 1e-10 relative.
        let mut rng = crate::system::seeded_rng(7);
        let m = crate::system::random_normal_matrix(6, 6, &mut rng);
        let s = symmetrize(&(&m * m.transpose()));
        let root = sym_sqrt(&s).unwrap();
        let back = &root * &root;
        assert!((&back - &s).norm() <= 1e-10 * s.norm());

        let inv_root = sym_inv_sqrt(&s).unwrap();
        let iden = &inv_root * &s * &inv_root;
        assert!((&iden - DMatrix::<f64>::identity(6, 6)).norm() <= 1e-8 * 6.0_f64.sqrt());
    }

    #[test]
    fn inv_sqrt_rejects_near_singular() {
        let s = dmat(2, 2, &[1.0, 0.0, 0.0, 1e-15]);
        match sym_inv_sqrt(&s) {
            Err(Error::NearSingular { .. }) => {}
            other => panic!("expected NearSingular, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let s = dmat(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(sym_sqrt(&s), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn sandwich_identity_case_is_zero() {
        let x = dmat(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let eps = loewner_sandwich_epsilon(&x, &x).unwrap();
        assert!(eps.abs() < 1e-12, "eps = {eps}");
    }

    #[test]
    fn sandwich_pure_scaling() {
        let x = dmat(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let xs = &x * (0.1_f64).exp();
        let eps = loewner_sandwich_epsilon(&x, &xs).unwrap();
        assert!((eps - 0.1).abs() < 1e-12, "eps = {eps}");
    }

    #[test]
    fn sandwich_diagonal_closed_form() {
        let x = DMatrix::<f64>::identity(2, 2);
        let xs = dmat(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let eps = loewner_sandwich_epsilon(&x, &xs).unwrap();
        assert!((eps - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sandwich_singular_direction_is_infinite() {
        let x = DMatrix::<f64>::identity(2, 2);
        let xs = dmat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(loewner_sandwich_epsilon(&x, &xs).unwrap().is_infinite());
    }

    #[test]
    fn rank_counts_above_threshold() {
        let m = dmat(3, 3, &[1.0, 0.0, 0.0, 0.0, 1e-3, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(numerical_rank(&m, 1e-12), 2);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(3, 3), 1e-12), 0);
    }

    proptest! {
        // |ln c| law for pure scalings of a fixed PD matrix.
        #[test]
        fn sandwich_scaling_law(c in 0.05_f64..20.0) {
            let x = dmat(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, 0.2, 0.1, 0.2, 1.0]);
            let eps = loewner_sandwich_epsilon(&x, &(&x * c)).unwrap();
            prop_assert!((eps - c.ln().abs()).abs() < 1e-10);
        }

        // For diagonal inputs sym_sqrt is elementwise sqrt.
        #[test]
        fn sqrt_diagonal_elementwise(a in 0.0_f64..50.0, b in 0.0_f64..50.0, c in 0.0_f64..50.0) {
            let s = DMatrix::from_diagonal(&DVector::from_vec(vec![a, b, c]));
            let r = sym_sqrt(&s).unwrap();
            for i in 0..3 {
                prop_assert!((r[(i, i)] - s[(i, i)].sqrt()).abs() < 1e-12);
            }
        }
    }
}
