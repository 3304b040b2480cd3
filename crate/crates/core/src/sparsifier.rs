//! Deterministic dual-set spectral sparsification by the barrier method.
//!
//! A single pass walks two moving barriers around the spectrum of a running
//! rank-one sum. At every iteration the candidate whose upper-barrier gain is
//! dominated by its lower-barrier gain receives weight `2 / (U + L)`, which
//! keeps all eigenvalues strictly between the barriers. After `kappa`
//! iterations the reweighted family satisfies a two-sided `e^{+-eps}`
//! approximation of the identity with `eps = 2 atanh(sqrt(n/kappa))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};

/// Relative Frobenius tolerance for the isotropy precondition
/// `sum u u^T = I`.
pub const ISOTROPY_TOL: f64 = 1e-8;

/// How raw barrier weights are scaled into the returned weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightNormalization {
    /// `kappa^{-1} (1 + sqrt(n/kappa))^{-1}`: yields the symmetric
    /// `e^{+-eps}` sandwich with `eps = 2 atanh(sqrt(n/kappa))`.
    #[default]
    Proof,
    /// `kappa^{-1} (1 - sqrt(n/kappa))`: yields the one-sided
    /// `(1 -+ sqrt(n/kappa))^2` bounds. Kept for cross-checking.
    ReturnLine,
}

/// Sparsifier loop state: iteration counter, barrier positions, shifts, the
/// accumulated rank-one sum and the weight vector over candidates.
#[derive(Debug, Clone)]
pub struct BarrierState {
    tau: usize,
    mu_lower: f64,
    mu_upper: f64,
    delta_lower: f64,
    delta_upper: f64,
    accumulated: DMatrix<f64>,
    weights: Vec<f64>,
}

impl BarrierState {
    fn new(n: usize, candidates: usize, kappa: usize) -> Self {
        let x = (n as f64 / kappa as f64).sqrt();
        let mut state = BarrierState {
            tau: 0,
            mu_lower: 0.0,
            mu_upper: 0.0,
            delta_lower: 1.0,
            delta_upper: (1.0 + x) / (1.0 - x),
            accumulated: DMatrix::zeros(n, n),
            weights: vec![0.0; candidates],
        };
        state.set_barriers(kappa, n);
        state
    }

    fn set_barriers(&mut self, kappa: usize, n: usize) {
        let root_kn = ((kappa * n) as f64).sqrt();
        self.mu_lower = self.tau as f64 - root_kn;
        self.mu_upper = self.delta_upper * (self.tau as f64 + root_kn);
    }

    fn advance(&mut self, kappa: usize, n: usize) {
        self.tau += 1;
        self.set_barriers(kappa, n);
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn mu_lower(&self) -> f64 {
        self.mu_lower
    }

    pub fn mu_upper(&self) -> f64 {
        self.mu_upper
    }

    pub fn accumulated(&self) -> &DMatrix<f64> {
        &self.accumulated
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// All eigenvalues must sit strictly between the barriers.
    fn check_barriers(&self, eig: &SymEigen) -> Result<()> {
        if eig.lambda_min() <= self.mu_lower || eig.lambda_max() >= self.mu_upper {
            return Err(Error::BarrierViolation(format!(
                "tau = {}: spectrum [{:.6e}, {:.6e}] escaped barriers ({:.6e}, {:.6e})",
                self.tau,
                eig.lambda_min(),
                eig.lambda_max(),
                self.mu_lower,
                self.mu_upper
            )));
        }
        Ok(())
    }
}

/// One sparsifier iteration as seen by the trace: barriers and spectrum
/// extremes before the update, plus the action taken. The final record of a
/// pass has no action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tau: usize,
    pub mu_lower: f64,
    pub mu_upper: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub chosen: Option<usize>,
    pub delta: Option<f64>,
}

/// Renders trace records as line-delimited JSON.
pub fn trace_to_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
        out.push('\n');
    }
    out
}

/// Output of one sparsification pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsifyResult {
    weights: Vec<f64>,
    kappa: usize,
    epsilon_theory: f64,
}

impl SparsifyResult {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Count of candidates with positive weight.
    pub fn selected(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    /// `2 atanh(sqrt(n/kappa))` for the pass that produced these weights.
    pub fn epsilon_theory(&self) -> f64 {
        self.epsilon_theory
    }
}

/// Lower-barrier potential `sum_i 1 / (lambda_i - mu)`; requires `mu`
/// strictly below the spectrum.
pub fn phi_lower(mu: f64, a: &DMatrix<f64>) -> Result<f64> {
    linalg::check_symmetric(a)?;
    let eig = linalg::sym_eigen(a);
    if mu >= eig.lambda_min() {
        return Err(Error::BarrierViolation(format!(
            "lower barrier {mu:.6e} not below lambda_min = {:.6e}",
            eig.lambda_min()
        )));
    }
    Ok(eig.values.iter().map(|&l| 1.0 / (l - mu)).sum())
}

/// Upper-barrier potential `sum_i 1 / (mu - lambda_i)`; requires `mu`
/// strictly above the spectrum.
pub fn phi_upper(mu: f64, a: &DMatrix<f64>) -> Result<f64> {
    linalg::check_symmetric(a)?;
    let eig = linalg::sym_eigen(a);
    if mu <= eig.lambda_max() {
        return Err(Error::BarrierViolation(format!(
            "upper barrier {mu:.6e} not above lambda_max = {:.6e}",
            eig.lambda_max()
        )));
    }
    Ok(eig.values.iter().map(|&l| 1.0 / (mu - l)).sum())
}

fn phi_lower_unchecked(mu: f64, values: &DVector<f64>) -> f64 {
    values.iter().map(|&l| 1.0 / (l - mu)).sum()
}

fn phi_upper_unchecked(mu: f64, values: &DVector<f64>) -> f64 {
    values.iter().map(|&l| 1.0 / (mu - l)).sum()
}

/// Lower gain evaluated in eigen-coordinates: `w` holds the candidate
/// projected onto the eigenbasis of the accumulated matrix.
fn gain_lower_projected(
    w: impl Iterator<Item = f64>,
    values: &DVector<f64>,
    denom: f64,
    shift: f64,
) -> f64 {
    let mut quad2 = 0.0;
    let mut quad1 = 0.0;
    for (wi, &l) in w.zip(values.iter()) {
        let d = l - shift;
        let sq = wi * wi;
        quad2 += sq / (d * d);
        quad1 += sq / d;
    }
    quad2 / denom - quad1
}

/// Upper gain in eigen-coordinates (dual of [`gain_lower_projected`]).
fn gain_upper_projected(
    w: impl Iterator<Item = f64>,
    values: &DVector<f64>,
    denom: f64,
    shift: f64,
) -> f64 {
    let mut quad2 = 0.0;
    let mut quad1 = 0.0;
    for (wi, &l) in w.zip(values.iter()) {
        let d = shift - l;
        let sq = wi * wi;
        quad2 += sq / (d * d);
        quad1 += sq / d;
    }
    quad2 / denom + quad1
}

fn resolvent_guard(values: &DVector<f64>, shift: f64) -> Result<()> {
    let scale = values.iter().fold(shift.abs(), |acc, &l| acc.max(l.abs()));
    if values.iter().any(|&l| (l - shift).abs() <= f64::EPSILON * scale.max(1.0)) {
        return Err(Error::SingularResolvent { shift });
    }
    Ok(())
}

/// Lower-barrier gain
/// `L = v^T (A - cI)^{-2} v / (phi_lower(c) - phi_lower(mu)) - v^T (A - cI)^{-1} v`
/// with `c = mu + delta`, evaluated from one eigendecomposition of `A`.
pub fn gain_lower(v: &DVector<f64>, delta: f64, a: &DMatrix<f64>, mu: f64) -> Result<f64> {
    linalg::check_symmetric(a)?;
    let eig = linalg::sym_eigen(a);
    let shift = mu + delta;
    resolvent_guard(&eig.values, shift)?;
    resolvent_guard(&eig.values, mu)?;
    let denom = phi_lower_unchecked(shift, &eig.values) - phi_lower_unchecked(mu, &eig.values);
    if denom == 0.0 {
        return Err(Error::ZeroPotentialGap);
    }
    let w = eig.vectors.transpose() * v;
    Ok(gain_lower_projected(w.iter().cloned(), &eig.values, denom, shift))
}

/// Upper-barrier gain
/// `U = u^T (cI - A)^{-2} u / (phi_upper(mu) - phi_upper(c)) + u^T (cI - A)^{-1} u`
/// with `c = mu + delta`; the shifted barrier must clear the spectrum.
pub fn gain_upper(u: &DVector<f64>, delta: f64, a: &DMatrix<f64>, mu: f64) -> Result<f64> {
    linalg::check_symmetric(a)?;
    let eig = linalg::sym_eigen(a);
    let shift = mu + delta;
    if shift <= eig.lambda_max() {
        return Err(Error::BarrierViolation(format!(
            "shifted upper barrier {shift:.6e} not above lambda_max = {:.6e}",
            eig.lambda_max()
        )));
    }
    if mu <= eig.lambda_max() {
        return Err(Error::BarrierViolation(format!(
            "upper barrier {mu:.6e} not above lambda_max = {:.6e}",
            eig.lambda_max()
        )));
    }
    let denom = phi_upper_unchecked(mu, &eig.values) - phi_upper_unchecked(shift, &eig.values);
    if denom <= 0.0 {
        return Err(Error::ZeroPotentialGap);
    }
    let w = eig.vectors.transpose() * u;
    Ok(gain_upper_projected(w.iter().cloned(), &eig.values, denom, shift))
}

fn check_isotropic(candidates: &DMatrix<f64>) -> Result<()> {
    linalg::check_finite(candidates, "candidate family")?;
    let n = candidates.nrows();
    let gram = candidates * candidates.transpose();
    let defect = (&gram - DMatrix::<f64>::identity(n, n)).norm();
    let tol = ISOTROPY_TOL * (n as f64).sqrt();
    if defect > tol {
        return Err(Error::NotIsotropic { defect, tol });
    }
    Ok(())
}

/// One sparsification pass over an isotropic candidate family (columns of
/// `candidates`, whose outer products must sum to the identity).
///
/// Runs `kappa` iterations with barriers `mu_lower = tau - sqrt(kappa n)`,
/// `mu_upper = delta_upper (tau + sqrt(kappa n))`. Index selection is
/// deterministic: the admissible candidate maximizing `L - U`, ties to the
/// smallest index.
pub fn bss_pass_with(
    candidates: &DMatrix<f64>,
    kappa: usize,
    normalization: WeightNormalization,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> Result<SparsifyResult> {
    let n = candidates.nrows();
    let count = candidates.ncols();
    if kappa <= n || kappa > count {
        return Err(Error::BudgetOutOfRange {
            kappa,
            n,
            candidates: count,
        });
    }
    check_isotropic(candidates)?;

    let x = (n as f64 / kappa as f64).sqrt();
    let mut state = BarrierState::new(n, count, kappa);

    for _ in 0..kappa {
        let eig = linalg::sym_eigen(&state.accumulated);
        state.check_barriers(&eig)?;

        let shift_lo = state.mu_lower + state.delta_lower;
        let shift_hi = state.mu_upper + state.delta_upper;
        if shift_hi <= eig.lambda_max() {
            return Err(Error::BarrierViolation(format!(
                "tau = {}: shifted upper barrier {shift_hi:.6e} inside spectrum",
                state.tau
            )));
        }
        let denom_lo = phi_lower_unchecked(shift_lo, &eig.values)
            - phi_lower_unchecked(state.mu_lower, &eig.values);
        let denom_hi = phi_upper_unchecked(state.mu_upper, &eig.values)
            - phi_upper_unchecked(shift_hi, &eig.values);
        if !(denom_lo != 0.0 && denom_lo.is_finite()) || denom_hi <= 0.0 {
            return Err(Error::ZeroPotentialGap);
        }

        // Candidate coordinates in the eigenbasis, one matmul for all gains.
        let projected = eig.vectors.transpose() * candidates;

        let mut best: Option<(usize, f64, f64)> = None; // (j, gap, delta)
        for j in 0..count {
            let col = projected.column(j);
            let gain_lo = gain_lower_projected(col.iter().cloned(), &eig.values, denom_lo, shift_lo);
            let gain_hi = gain_upper_projected(col.iter().cloned(), &eig.values, denom_hi, shift_hi);
            if !gain_lo.is_finite() || !gain_hi.is_finite() {
                continue;
            }
            let sum = gain_hi + gain_lo;
            if gain_hi <= gain_lo && sum > 0.0 {
                let gap = gain_lo - gain_hi;
                if best.is_none_or(|(_, best_gap, _)| gap > best_gap) {
                    best = Some((j, gap, 2.0 / sum));
                }
            }
        }

        let (chosen, _, delta) = best.ok_or_else(|| Error::NoAdmissibleIndex {
            tau: state.tau,
            details: format!(
                "barriers ({:.6e}, {:.6e}), spectrum [{:.6e}, {:.6e}], {} candidates",
                state.mu_lower,
                state.mu_upper,
                eig.lambda_min(),
                eig.lambda_max(),
                count
            ),
        })?;

        if let Some(sink) = trace.as_deref_mut() {
            sink.push(TraceRecord {
                tau: state.tau,
                mu_lower: state.mu_lower,
                mu_upper: state.mu_upper,
                lambda_min: eig.lambda_min(),
                lambda_max: eig.lambda_max(),
                chosen: Some(chosen),
                delta: Some(delta),
            });
        }

        let u = candidates.column(chosen);
        state.weights[chosen] += delta;
        let update = u * u.transpose() * delta;
        state.accumulated = linalg::symmetrize(&(state.accumulated.clone() + update));
        state.advance(kappa, n);
    }

    // Final barrier check covers the state after the last update.
    let eig = linalg::sym_eigen(&state.accumulated);
    state.check_barriers(&eig)?;
    if let Some(sink) = trace {
        sink.push(TraceRecord {
            tau: state.tau,
            mu_lower: state.mu_lower,
            mu_upper: state.mu_upper,
            lambda_min: eig.lambda_min(),
            lambda_max: eig.lambda_max(),
            chosen: None,
            delta: None,
        });
    }

    let scale = match normalization {
        WeightNormalization::Proof => 1.0 / (kappa as f64 * (1.0 + x)),
        WeightNormalization::ReturnLine => (1.0 - x) / kappa as f64,
    };
    let weights = state.weights.iter().map(|w| w * scale).collect();
    Ok(SparsifyResult {
        weights,
        kappa,
        epsilon_theory: 2.0 * x.atanh(),
    })
}

pub fn bss_pass(candidates: &DMatrix<f64>, kappa: usize) -> Result<SparsifyResult> {
    bss_pass_with(candidates, kappa, WeightNormalization::default(), None)
}

/// Weights for both candidate families of a dual-set run.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSetWeights {
    pub s: SparsifyResult,
    pub r: SparsifyResult,
}

/// Dual-set sparsification: whitens the `V` family by `(V V^T)^{-1/2}` and
/// sparsifies both families independently.
///
/// Guarantees, with `X = V V^T` and `eps_i = 2 atanh(sqrt(n/kappa_i))`:
/// `e^{-eps_1} X <= sum s_i v_i v_i^T <= e^{eps_1} X`,
/// `e^{-eps_2} I <= sum r_i u_i u_i^T <= e^{eps_2} I`, and the symmetrized
/// product of the two sums stays within `e^{+-(eps_1+eps_2)}` of `X`.
pub fn gen_dual_set_with(
    v: &DMatrix<f64>,
    u: &DMatrix<f64>,
    kappa1: usize,
    kappa2: usize,
    normalization: WeightNormalization,
    trace_v: Option<&mut Vec<TraceRecord>>,
    trace_u: Option<&mut Vec<TraceRecord>>,
) -> Result<DualSetWeights> {
    if v.nrows() != u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "V has {} rows, U has {}",
            v.nrows(),
            u.nrows()
        )));
    }
    let x = linalg::symmetrize(&(v * v.transpose()));
    let x_inv_root = linalg::sym_inv_sqrt(&x)?;
    let whitened = &x_inv_root * v;
    let s = bss_pass_with(&whitened, kappa1, normalization, trace_v)?;
    let r = bss_pass_with(u, kappa2, normalization, trace_u)?;
    Ok(DualSetWeights { s, r })
}

pub fn gen_dual_set(
    v: &DMatrix<f64>,
    u: &DMatrix<f64>,
    kappa1: usize,
    kappa2: usize,
) -> Result<DualSetWeights> {
    gen_dual_set_with(v, u, kappa1, kappa2, WeightNormalization::default(), None, None)
}

/// Weighted rank-one sum `sum_j w_j c_j c_j^T` over the columns of
/// `candidates`.
pub fn weighted_outer_sum(candidates: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let n = candidates.nrows();
    let mut acc = DMatrix::zeros(n, n);
    for (j, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            let col = candidates.column(j);
            acc += col * col.transpose() * w;
        }
    }
    linalg::symmetrize(&acc)
}
