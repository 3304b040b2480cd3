//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("horizon t = {t} is shorter than the state dimension n = {n}; Gramian-based guarantees need t >= n")]
    HorizonTooShort { t: usize, n: usize },

    #[error("horizon must be at least 1")]
    EmptyHorizon,

    #[error("matrix is not symmetric within tolerance (defect {defect:.3e})")]
    NotSymmetric { defect: f64 },

    #[error("matrix is not positive semidefinite (lambda_min = {lambda_min:.3e}, lambda_max = {lambda_max:.3e})")]
    NotPsd { lambda_min: f64, lambda_max: f64 },

    #[error("near-singular matrix: loss of minimality or degenerate Gramian (lambda_min/lambda_max = {ratio:.3e} below threshold {threshold:.3e})")]
    NearSingular { ratio: f64, threshold: f64 },

    #[error("barrier violation: {0}")]
    BarrierViolation(String),

    #[error("singular resolvent: an eigenvalue coincides with the shifted barrier {shift:.6e}")]
    SingularResolvent { shift: f64 },

    #[error("zero potential difference in gain evaluation")]
    ZeroPotentialGap,

    #[error("candidate family is not isotropic (||sum u u^T - I||_F = {defect:.3e} exceeds {tol:.3e})")]
    NotIsotropic { defect: f64, tol: f64 },

    #[error("budget kappa = {kappa} out of range: need n = {n} < kappa <= {candidates} candidates")]
    BudgetOutOfRange {
        kappa: usize,
        n: usize,
        candidates: usize,
    },

    #[error("no admissible index at iteration {tau}: {details}")]
    NoAdmissibleIndex { tau: usize, details: String },

    #[error("memory budget exceeded: {elements} matrix elements requested, budget is {budget}")]
    MemoryBudget { elements: usize, budget: usize },

    #[error("matrix exponential overflow: ||A_c * h|| too large")]
    ExpOverflow,

    #[error("system is not minimal at t = {t}: rank R = {rank_reach}, rank O = {rank_obs}, n = {n}")]
    NotMinimal {
        t: usize,
        rank_reach: usize,
        rank_obs: usize,
        n: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot normalize: {side} side has no positive scalings")]
    AllZeroSide { side: &'static str },

    #[error("metric '{name}' failed the {property} spot-check")]
    MetricSpotCheck {
        name: String,
        property: &'static str,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
