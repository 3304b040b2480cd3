//! Sparse time-varying sensor/actuator scheduling for discrete-time LTI
//! systems.
//!
//! The pipeline: build finite-horizon Gramians, run a deterministic
//! barrier-method dual-set sparsifier over the Gramians' rank-one candidate
//! families, map the resulting weights to per-step channel scalings, and
//! certify the schedule against two-sided `e^{+-eps}` Loewner bounds on the
//! Gramians and the Hankel spectrum.

pub use nalgebra;

pub mod error;
pub mod gramian;
pub mod linalg;
pub mod schedule;
pub mod sparsifier;
pub mod sweep;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use gramian::{
    gramians, hankel_matrix, hankel_norm, hankel_spectrum, observability_matrix,
    reachability_matrix, GramianSet, HankelSpectrum,
};
pub use linalg::{loewner_sandwich_epsilon, sym_inv_sqrt, sym_sqrt};
pub use schedule::{
    actuator_schedule, average_cardinalities, joint_schedule, normalize_schedule,
    scheduled_gramians, sensor_schedule, separation_schedule, CandidateVariant, Provenance,
    Schedule, ScheduleOptions,
};
pub use sparsifier::{bss_pass, gen_dual_set, SparsifyResult, WeightNormalization};
pub use sweep::{run_sweep, SweepMode, SweepOutcome, SweepSpec};
pub use system::{
    discretize_zoh, random_swing_params, random_system, swing_system, swing_to_continuous,
    validate_minimal, LtiSystem, MinimalityReport, SwingParams,
};
pub use verify::{
    metric_log_ratio, theoretical_epsilon, verify_schedule, verify_schedule_with, SystemicMetric,
    VerificationReport,
};
