//! Finite-horizon reachability/observability matrices, Gramians, Hankel
//! matrices and their spectra.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};
use crate::system::LtiSystem;

/// Cap on the number of f64 elements a single assembled matrix may hold
/// (about 1 GiB).
pub const MEMORY_BUDGET_ELEMENTS: usize = 1 << 27;

fn check_budget(rows: usize, cols: usize) -> Result<()> {
    let elements = rows.saturating_mul(cols);
    if elements > MEMORY_BUDGET_ELEMENTS {
        return Err(Error::MemoryBudget {
            elements,
            budget: MEMORY_BUDGET_ELEMENTS,
        });
    }
    Ok(())
}

/// Controllability and observability Gramians at a common horizon.
///
/// Both matrices are validated as symmetric PSD on construction.
#[derive(Debug, Clone)]
pub struct GramianSet {
    p: DMatrix<f64>,
    q: DMatrix<f64>,
    t: usize,
}

impl GramianSet {
    pub fn new(p: DMatrix<f64>, q: DMatrix<f64>, t: usize) -> Result<Self> {
        if p.nrows() != q.nrows() || p.ncols() != q.ncols() || p.nrows() != p.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "Gramians must be square and same size, got {}x{} and {}x{}",
                p.nrows(),
                p.ncols(),
                q.nrows(),
                q.ncols()
            )));
        }
        if p.nrows() == 0 {
            return Err(Error::InvalidParameter(
                "Gramians must have positive dimension".into(),
            ));
        }
        for m in [&p, &q] {
            linalg::check_symmetric(m)?;
            let eig = linalg::sym_eigen(m);
            let lambda_max = eig.lambda_max().max(0.0);
            if eig.lambda_min() < -linalg::PSD_CLAMP_REL * lambda_max.max(1e-300) {
                return Err(Error::NotPsd {
                    lambda_min: eig.lambda_min(),
                    lambda_max,
                });
            }
        }
        Ok(Self { p, q, t })
    }

    /// Controllability Gramian P(t).
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Observability Gramian Q(t).
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn horizon(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// The symmetric product `Q^{1/2} P Q^{1/2}` whose eigenvalues are the
    /// squared Hankel singular values.
    pub fn sandwich(&self) -> Result<DMatrix<f64>> {
        let root = linalg::sym_sqrt(&self.q)?;
        Ok(linalg::symmetrize(&(&root * &self.p * &root)))
    }
}

/// `[B, AB, ..., A^{t-1}B]`, assembled by repeated left-multiplication.
pub fn reachability_matrix(sys: &LtiSystem, t: usize) -> Result<DMatrix<f64>> {
    if t == 0 {
        return Err(Error::EmptyHorizon);
    }
    let (n, m) = (sys.n(), sys.m());
    check_budget(n, m * t)?;
    let mut out = DMatrix::zeros(n, m * t);
    let mut block = sys.b().clone();
    out.view_mut((0, 0), (n, m)).copy_from(&block);
    for j in 1..t {
        block = sys.a() * &block;
        out.view_mut((0, j * m), (n, m)).copy_from(&block);
    }
    Ok(out)
}

/// `[C; CA; ...; CA^{t-1}]`, the dual stacking of [`reachability_matrix`].
pub fn observability_matrix(sys: &LtiSystem, t: usize) -> Result<DMatrix<f64>> {
    if t == 0 {
        return Err(Error::EmptyHorizon);
    }
    let (n, p) = (sys.n(), sys.p());
    check_budget(p * t, n)?;
    let mut out = DMatrix::zeros(p * t, n);
    let mut block = sys.c().clone();
    out.view_mut((0, 0), (p, n)).copy_from(&block);
    for i in 1..t {
        block = &block * sys.a();
        out.view_mut((i * p, 0), (p, n)).copy_from(&block);
    }
    Ok(out)
}

/// Gramians `P = R R^T`, `Q = O^T O` at horizon `t >= n`, symmetrized to
/// suppress rounding asymmetry.
pub fn gramians(sys: &LtiSystem, t: usize) -> Result<GramianSet> {
    if t < sys.n() {
        return Err(Error::HorizonTooShort { t, n: sys.n() });
    }
    let reach = reachability_matrix(sys, t)?;
    let obs = observability_matrix(sys, t)?;
    let p = linalg::symmetrize(&(&reach * reach.transpose()));
    let q = linalg::symmetrize(&(obs.transpose() * &obs));
    GramianSet::new(p, q, t)
}

/// The time-t Hankel matrix with block `(i, j) = C A^{i+j} B`.
///
/// Blocks on a common anti-diagonal are placed from one shared computation,
/// so their equality is exact.
pub fn hankel_matrix(sys: &LtiSystem, t: usize) -> Result<DMatrix<f64>> {
    if t == 0 {
        return Err(Error::EmptyHorizon);
    }
    let (p, m) = (sys.p(), sys.m());
    check_budget(p * t, m * t)?;
    // Markov blocks C A^k B for k = 0 .. 2t-2.
    let mut blocks = Vec::with_capacity(2 * t - 1);
    let mut ca = sys.c().clone();
    blocks.push(&ca * sys.b());
    for _ in 1..(2 * t - 1) {
        ca = &ca * sys.a();
        blocks.push(&ca * sys.b());
    }
    let mut out = DMatrix::zeros(p * t, m * t);
    for i in 0..t {
        for j in 0..t {
            out.view_mut((i * p, j * m), (p, m)).copy_from(&blocks[i + j]);
        }
    }
    Ok(out)
}

/// Hankel singular values at horizon `t`, descending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HankelSpectrum {
    values: Vec<f64>,
    t: usize,
}

impl HankelSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> usize {
        self.t
    }
}

/// Hankel singular values `sigma_i = sqrt(lambda_i(Q^{1/2} P Q^{1/2}))`,
/// computed from the symmetric sandwich with rounding-level negative
/// eigenvalues clamped at zero.
pub fn hankel_spectrum(gramians: &GramianSet) -> Result<HankelSpectrum> {
    let sandwich = gramians.sandwich()?;
    let eig: SymEigen = linalg::sym_eigen(&sandwich);
    let lambda_max = eig.lambda_max().max(0.0);
    let floor = -linalg::PSD_CLAMP_REL * lambda_max.max(1e-300);
    let mut values = Vec::with_capacity(eig.values.len());
    for &l in eig.values.iter() {
        if l < floor {
            return Err(Error::NotPsd {
                lambda_min: eig.lambda_min(),
                lambda_max,
            });
        }
        values.push(l.max(0.0).sqrt());
    }
    values.reverse();
    Ok(HankelSpectrum {
        values,
        t: gramians.horizon(),
    })
}

/// The Hankel norm: the largest Hankel singular value.
pub fn hankel_norm(spectrum: &HankelSpectrum) -> f64 {
    spectrum.values[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::random_system;
    use approx::assert_relative_eq;

    fn diag2(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }

    fn half_identity_system() -> LtiSystem {
        LtiSystem::new(
            diag2(0.5, 0.5),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn reachability_zero_a_kills_later_blocks() {
        let sys = LtiSystem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let r = reachability_matrix(&sys, 3).unwrap();
        let mut expect = DMatrix::zeros(2, 6);
        expect.view_mut((0, 0), (2, 2)).copy_from(&DMatrix::identity(2, 2));
        assert_relative_eq!(r, expect);
    }

    #[test]
    fn reachability_diagonal_half() {
        let r = reachability_matrix(&half_identity_system(), 2).unwrap();
        let expect = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.5]);
        assert_relative_eq!(r, expect);
    }

    #[test]
    fn reachability_blocks_match_power_oracle() {
        let sys = random_system(4, 2, 3, 31, 0.9).unwrap();
        let t = 8;
        let r = reachability_matrix(&sys, t).unwrap();
        let mut a_pow = DMatrix::<f64>::identity(4, 4);
        for k in 0..t {
            let block = &a_pow * sys.b();
            assert_relative_eq!(
                r.view((0, k * 2), (4, 2)).into_owned(),
                block,
                epsilon = 1e-12
            );
            a_pow = sys.a() * a_pow;
        }
    }

    #[test]
    fn observability_dual_cases() {
        let sys = LtiSystem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let o = observability_matrix(&sys, 3).unwrap();
        let mut expect = DMatrix::zeros(6, 2);
        expect.view_mut((0, 0), (2, 2)).copy_from(&DMatrix::identity(2, 2));
        assert_relative_eq!(o, expect);

        let o = observability_matrix(&half_identity_system(), 2).unwrap();
        let expect = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.5]);
        assert_relative_eq!(o, expect);
    }

    #[test]
    fn observability_blocks_match_power_oracle() {
        let sys = random_system(4, 2, 3, 33, 0.9).unwrap();
        let t = 8;
        let o = observability_matrix(&sys, t).unwrap();
        let mut a_pow = DMatrix::<f64>::identity(4, 4);
        for k in 0..t {
            let block = sys.c() * &a_pow;
            assert_relative_eq!(
                o.view((k * 3, 0), (3, 4)).into_owned(),
                block,
                epsilon = 1e-12
            );
            a_pow = sys.a() * a_pow;
        }
    }

    #[test]
    fn gramians_diagonal_closed_form() {
        let g = gramians(&half_identity_system(), 2).unwrap();
        assert_relative_eq!(*g.p(), DMatrix::identity(2, 2) * 1.25, epsilon = 1e-14);
        assert_relative_eq!(*g.q(), DMatrix::identity(2, 2) * 1.25, epsilon = 1e-14);
    }

    #[test]
    fn gramians_zero_a_identity_b() {
        let sys = LtiSystem::new(
            DMatrix::zeros(3, 3),
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        let g = gramians(&sys, 3).unwrap();
        assert_relative_eq!(*g.p(), DMatrix::identity(3, 3), epsilon = 1e-14);
    }

    #[test]
    fn gramians_match_rank_one_sum_oracle() {
        // Term-by-term accumulation of A^i B B^T (A^i)^T and (A^i)^T C^T C A^i.
        let sys = random_system(5, 3, 2, 41, 0.9).unwrap();
        let t = 15;
        let g = gramians(&sys, t).unwrap();
        let mut p_sum = DMatrix::<f64>::zeros(5, 5);
        let mut q_sum = DMatrix::<f64>::zeros(5, 5);
        let mut a_pow = DMatrix::<f64>::identity(5, 5);
        for _ in 0..t {
            let ab = &a_pow * sys.b();
            let ca = sys.c() * &a_pow;
            p_sum += &ab * ab.transpose();
            q_sum += ca.transpose() * &ca;
            a_pow = sys.a() * a_pow;
        }
        assert!((g.p() - &p_sum).norm() <= 1e-10 * p_sum.norm());
        assert!((g.q() - &q_sum).norm() <= 1e-10 * q_sum.norm());
    }

    #[test]
    fn gramians_reject_short_horizon() {
        let sys = random_system(4, 2, 2, 1, 0.9).unwrap();
        assert!(matches!(
            gramians(&sys, 3),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn hankel_matrix_diagonal_closed_form() {
        let h = hankel_matrix(&half_identity_system(), 2).unwrap();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.5, 0.0, //
                0.0, 1.0, 0.0, 0.5, //
                0.5, 0.0, 0.25, 0.0, //
                0.0, 0.5, 0.0, 0.25,
            ],
        );
        assert_relative_eq!(h, expect);
    }

    #[test]
    fn hankel_matrix_zero_a() {
        let sys = LtiSystem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let h = hankel_matrix(&sys, 2).unwrap();
        let mut expect = DMatrix::zeros(4, 4);
        expect.view_mut((0, 0), (2, 2)).copy_from(&DMatrix::identity(2, 2));
        assert_relative_eq!(h, expect);
    }

    #[test]
    fn hankel_blocks_match_per_block_oracle() {
        let sys = random_system(4, 2, 3, 55, 0.9).unwrap();
        let t = 6;
        let h = hankel_matrix(&sys, t).unwrap();
        for i in 0..t {
            for j in 0..t {
                let mut a_pow = DMatrix::<f64>::identity(4, 4);
                for _ in 0..(i + j) {
                    a_pow = sys.a() * a_pow;
                }
                let block = sys.c() * a_pow * sys.b();
                assert_relative_eq!(
                    h.view((i * 3, j * 2), (3, 2)).into_owned(),
                    block,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn hankel_anti_diagonal_blocks_identical_bitwise() {
        let sys = random_system(4, 2, 3, 56, 0.9).unwrap();
        let t = 5;
        let h = hankel_matrix(&sys, t).unwrap();
        for i in 0..t {
            for j in 0..t {
                for i2 in 0..t {
                    for j2 in 0..t {
                        if i + j == i2 + j2 {
                            let b1 = h.view((i * 3, j * 2), (3, 2));
                            let b2 = h.view((i2 * 3, j2 * 2), (3, 2));
                            assert!(b1 == b2, "blocks ({i},{j}) vs ({i2},{j2}) differ");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn spectrum_diagonal_closed_forms() {
        let g = GramianSet::new(
            DMatrix::identity(2, 2) * 1.25,
            DMatrix::identity(2, 2) * 1.25,
            2,
        )
        .unwrap();
        let s = hankel_spectrum(&g).unwrap();
        assert_relative_eq!(s.values()[0], 1.25, epsilon = 1e-12);
        assert_relative_eq!(s.values()[1], 1.25, epsilon = 1e-12);

        let g = GramianSet::new(diag2(4.0, 1.0), DMatrix::identity(2, 2), 2).unwrap();
        let s = hankel_spectrum(&g).unwrap();
        assert_relative_eq!(s.values()[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.values()[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(hankel_norm(&s), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_matches_hankel_svd_oracle() {
        // Two independent paths: Gramian sandwich vs SVD of the explicit H(t).
        let sys = random_system(5, 3, 3, 77, 0.9).unwrap();
        let t = 15;
        let g = gramians(&sys, t).unwrap();
        let spec = hankel_spectrum(&g).unwrap();
        let h = hankel_matrix(&sys, t).unwrap();
        let svals = h.singular_values();
        let mut svd_sorted: Vec<f64> = svals.iter().cloned().collect();
        svd_sorted.sort_by(|a, b| b.total_cmp(a));
        for (i, sigma) in spec.values().iter().enumerate() {
            let rel = (sigma - svd_sorted[i]).abs() / svd_sorted[0];
            assert!(rel <= 1e-8, "sigma_{i}: {sigma} vs {}", svd_sorted[i]);
        }
    }

    #[test]
    fn spectrum_squares_equal_pq_eigenvalues() {
        let sys = random_system(5, 2, 4, 78, 0.9).unwrap();
        let g = gramians(&sys, 15).unwrap();
        let spec = hankel_spectrum(&g).unwrap();
        let pq = g.p() * g.q();
        let mut eigs: Vec<f64> = pq.complex_eigenvalues().iter().map(|z| z.re).collect();
        eigs.sort_by(|a, b| b.total_cmp(a));
        for (sigma, lambda) in spec.values().iter().zip(eigs.iter()) {
            let rel = (sigma * sigma - lambda).abs() / eigs[0].abs();
            assert!(rel <= 1e-8, "{} vs {}", sigma * sigma, lambda);
        }
    }

    #[test]
    fn gramian_set_rejects_asymmetric() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(GramianSet::new(bad, DMatrix::identity(2, 2), 2).is_err());
    }

    #[test]
    fn gramian_set_rejects_indefinite() {
        let bad = diag2(1.0, -1.0);
        assert!(GramianSet::new(bad, DMatrix::identity(2, 2), 2).is_err());
    }

    #[test]
    fn memory_budget_enforced() {
        let sys = random_system(2, 2, 2, 9, 0.9).unwrap();
        assert!(matches!(
            reachability_matrix(&sys, MEMORY_BUDGET_ELEMENTS),
            Err(Error::MemoryBudget { .. })
        ));
    }
}
