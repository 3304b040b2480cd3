//! Time-varying sensor/actuator schedules: construction from sparsifier
//! weights, scheduled Gramians, sparsity accounting and normalization.
//!
//! Weight-to-scaling mapping: the candidate built from `A^i b_j` (resp.
//! `(c_j A^i)^T`) carries its weight to schedule time `k = t - i - 1` on
//! channel `j`, scaled by the square root of the weight. With that reversal
//! the scheduled Gramians are exactly the weighted rank-one sums the
//! sparsifier certified.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{self, GramianSet};
use crate::linalg;
use crate::sparsifier::{self, SparsifyResult, TraceRecord, WeightNormalization};
use crate::system::LtiSystem;

/// Scalings at or below this magnitude are treated as zero and dropped from
/// the sparse maps.
pub const ZERO_SCALE: f64 = 1e-300;

/// Which construction produced a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Joint,
    SensorOnly,
    ActuatorOnly,
    Separation,
    Full,
}

/// Candidate-family construction for the joint schedule.
///
/// `Proof` weights actuator candidates by `Q` and whitens sensor candidates
/// by `Q^{-1/2}`; `Listing` mirrors the roles around `P` instead. Both yield
/// the same two-sided guarantees; `Proof` is the default, `Listing` is kept
/// for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateVariant {
    #[default]
    Proof,
    Listing,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScheduleOptions {
    pub variant: CandidateVariant,
    pub weight_normalization: WeightNormalization,
}

/// Sparse per-step channel scalings for both sides of a system.
///
/// Only strictly positive scalings are stored; keys are `(k, i)` pairs of
/// time step and channel index, so iteration order (and serialization) is
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    t: usize,
    m: usize,
    p: usize,
    actuators: BTreeMap<(usize, usize), f64>,
    sensors: BTreeMap<(usize, usize), f64>,
    provenance: Provenance,
}

impl Schedule {
    pub fn new(
        t: usize,
        m: usize,
        p: usize,
        actuators: BTreeMap<(usize, usize), f64>,
        sensors: BTreeMap<(usize, usize), f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if t == 0 {
            return Err(Error::EmptyHorizon);
        }
        let check_side = |map: BTreeMap<(usize, usize), f64>,
                              channels: usize,
                              side: &str|
         -> Result<BTreeMap<(usize, usize), f64>> {
            let mut clean = BTreeMap::new();
            for ((k, i), scale) in map {
                if k >= t || i >= channels {
                    return Err(Error::DimensionMismatch(format!(
                        "{side} entry (k = {k}, i = {i}) outside t = {t}, channels = {channels}"
                    )));
                }
                if !scale.is_finite() || scale < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "{side} scaling at (k = {k}, i = {i}) is {scale}; must be finite and nonnegative"
                    )));
                }
                if scale > ZERO_SCALE {
                    clean.insert((k, i), scale);
                }
            }
            Ok(clean)
        };
        let actuators = check_side(actuators, m, "actuator")?;
        let sensors = check_side(sensors, p, "sensor")?;
        Ok(Self {
            t,
            m,
            p,
            actuators,
            sensors,
            provenance,
        })
    }

    /// All channels active with unit scalings: the original system.
    pub fn full(t: usize, m: usize, p: usize) -> Result<Self> {
        Schedule::new(
            t,
            m,
            p,
            full_side(m, t),
            full_side(p, t),
            Provenance::Full,
        )
    }

    pub fn horizon(&self) -> usize {
        self.t
    }

    pub fn inputs(&self) -> usize {
        self.m
    }

    pub fn outputs(&self) -> usize {
        self.p
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn actuator_scalings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.actuators
    }

    pub fn sensor_scalings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.sensors
    }

    pub fn actuator_scale(&self, k: usize, i: usize) -> f64 {
        self.actuators.get(&(k, i)).copied().unwrap_or(0.0)
    }

    pub fn sensor_scale(&self, k: usize, i: usize) -> f64 {
        self.sensors.get(&(k, i)).copied().unwrap_or(0.0)
    }

    /// Distinct active (time, channel) pairs per side.
    pub fn active_pairs(&self) -> (usize, usize) {
        (self.sensors.len(), self.actuators.len())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ScheduleFile = serde_json::from_str(s)?;
        let actuators = file
            .actuators
            .into_iter()
            .map(|e| ((e.k, e.i), e.scale))
            .collect();
        let sensors = file
            .sensors
            .into_iter()
            .map(|e| ((e.k, e.i), e.scale))
            .collect();
        Schedule::new(file.t, file.m, file.p, actuators, sensors, file.provenance)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let entries = |map: &BTreeMap<(usize, usize), f64>| -> Vec<ScaleEntry> {
            map.iter()
                .map(|(&(k, i), &scale)| ScaleEntry { k, i, scale })
                .collect()
        };
        Ok(serde_json::to_string_pretty(&ScheduleFile {
            t: self.t,
            m: self.m,
            p: self.p,
            actuators: entries(&self.actuators),
            sensors: entries(&self.sensors),
            provenance: self.provenance,
        })?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleFile {
    t: usize,
    m: usize,
    p: usize,
    actuators: Vec<ScaleEntry>,
    sensors: Vec<ScaleEntry>,
    provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScaleEntry {
    k: usize,
    i: usize,
    scale: f64,
}

fn full_side(channels: usize, t: usize) -> BTreeMap<(usize, usize), f64> {
    let mut map = BTreeMap::new();
    for k in 0..t {
        for i in 0..channels {
            map.insert((k, i), 1.0);
        }
    }
    map
}

/// Weight at flat index `i * channels + j` (power i, channel j) becomes the
/// scaling `sqrt(w)` at time `k = t - i - 1`.
fn side_from_weights(
    weights: &[f64],
    channels: usize,
    t: usize,
) -> BTreeMap<(usize, usize), f64> {
    let mut map = BTreeMap::new();
    for (col, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            let i = col / channels;
            let j = col % channels;
            let scale = w.sqrt();
            if scale > ZERO_SCALE {
                map.insert((t - 1 - i, j), scale);
            }
        }
    }
    map
}

/// An integer per-side budget. `Full` means every channel at every step stays
/// active with unit scaling and no sparsification runs for that side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Budget {
    Full,
    Sparse(usize),
}

fn integer_budget(d: f64, t: usize, channels: usize, n: usize, side: &str) -> Result<Budget> {
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "average {side} budget must be positive and finite, got {d}"
        )));
    }
    let exact = d * t as f64;
    let kappa = exact.floor() as usize;
    let total = channels * t;
    if kappa > total {
        return Err(Error::InvalidParameter(format!(
            "{side} budget d*t = {kappa} exceeds the {total} available (channel, time) pairs"
        )));
    }
    if kappa == total {
        return Ok(Budget::Full);
    }
    if kappa <= n {
        return Err(Error::BudgetOutOfRange {
            kappa,
            n,
            candidates: total,
        });
    }
    let eps_floor = 2.0 * (n as f64 / kappa as f64).sqrt().atanh();
    let eps_exact = 2.0 * (n as f64 / exact).sqrt().atanh();
    if (eps_floor - eps_exact).abs() > 0.01 * eps_exact {
        log::warn!(
            "{side} budget d*t = {exact:.3} rounded down to {kappa}, shifting the theoretical \
             bound from {eps_exact:.4} to {eps_floor:.4} (more than 1%)"
        );
    }
    Ok(Budget::Sparse(kappa))
}

fn check_horizon(sys: &LtiSystem, t: usize) -> Result<()> {
    if t < sys.n() {
        return Err(Error::HorizonTooShort { t, n: sys.n() });
    }
    Ok(())
}

/// Joint sensor/actuator schedule meeting the two-sided Gramian-sandwich
/// guarantee with `eps = eps_s + eps_a`,
/// `eps_side = 2 atanh(sqrt(n / floor(d_side * t)))`.
///
/// A side whose budget covers every (channel, time) pair is left fully active
/// (its exact bound is zero); if both sides are full this returns the full
/// schedule, and if exactly one side is full it reduces to the single-sided
/// construction.
pub fn joint_schedule(sys: &LtiSystem, t: usize, d_s: f64, d_a: f64) -> Result<Schedule> {
    joint_schedule_with(sys, t, d_s, d_a, ScheduleOptions::default(), None, None)
}

pub fn joint_schedule_with(
    sys: &LtiSystem,
    t: usize,
    d_s: f64,
    d_a: f64,
    options: ScheduleOptions,
    trace_actuators: Option<&mut Vec<TraceRecord>>,
    trace_sensors: Option<&mut Vec<TraceRecord>>,
) -> Result<Schedule> {
    check_horizon(sys, t)?;
    let n = sys.n();
    let sensor_budget = integer_budget(d_s, t, sys.p(), n, "sensor")?;
    let actuator_budget = integer_budget(d_a, t, sys.m(), n, "actuator")?;

    let (kappa_s, kappa_a) = match (sensor_budget, actuator_budget) {
        (Budget::Full, Budget::Full) => return Schedule::full(t, sys.m(), sys.p()),
        (Budget::Full, Budget::Sparse(_)) => {
            return actuator_schedule_with(sys, t, d_a, options.weight_normalization, trace_actuators)
        }
        (Budget::Sparse(_), Budget::Full) => {
            return sensor_schedule_with(sys, t, d_s, options.weight_normalization, trace_sensors)
        }
        (Budget::Sparse(ks), Budget::Sparse(ka)) => (ks, ka),
    };

    let gram = gramian::gramians(sys, t)?;
    let reach = gramian::reachability_matrix(sys, t)?;
    let obs_t = gramian::observability_matrix(sys, t)?.transpose();

    let (actuator_weights, sensor_weights) = match options.variant {
        CandidateVariant::Proof => {
            // Actuator candidates Q A^i b_j (outer products sum to Q P Q),
            // sensor candidates Q^{-1/2} (c_j A^i)^T (isotropic).
            let v = gram.q() * &reach;
            let q_inv_root = linalg::sym_inv_sqrt(gram.q())?;
            let u = &q_inv_root * &obs_t;
            let weights = sparsifier::gen_dual_set_with(
                &v,
                &u,
                kappa_a,
                kappa_s,
                options.weight_normalization,
                trace_actuators,
                trace_sensors,
            )?;
            (weights.s, weights.r)
        }
        CandidateVariant::Listing => {
            // Mirror image around P: sensor candidates P^{1/2} (c_j A^i)^T,
            // actuator candidates P^{-1/2} A^i b_j (isotropic).
            let p_root = linalg::sym_sqrt(gram.p())?;
            let v = &p_root * &obs_t;
            let p_inv_root = linalg::sym_inv_sqrt(gram.p())?;
            let u = &p_inv_root * &reach;
            let weights = sparsifier::gen_dual_set_with(
                &v,
                &u,
                kappa_s,
                kappa_a,
                options.weight_normalization,
                trace_sensors,
                trace_actuators,
            )?;
            (weights.r, weights.s)
        }
    };

    Schedule::new(
        t,
        sys.m(),
        sys.p(),
        side_from_weights(actuator_weights.weights(), sys.m(), t),
        side_from_weights(sensor_weights.weights(), sys.p(), t),
        Provenance::Joint,
    )
}

fn single_sided_weights(
    candidates: &DMatrix<f64>,
    kappa: usize,
    normalization: WeightNormalization,
    trace: Option<&mut Vec<TraceRecord>>,
) -> Result<SparsifyResult> {
    sparsifier::bss_pass_with(candidates, kappa, normalization, trace)
}

/// Sensor schedule per the observability-Gramian sandwich
/// `e^{-eps} Q <= Q_s <= e^{eps} Q`; all actuators stay active.
pub fn sensor_schedule(sys: &LtiSystem, t: usize, d_s: f64) -> Result<Schedule> {
    sensor_schedule_with(sys, t, d_s, WeightNormalization::default(), None)
}

pub fn sensor_schedule_with(
    sys: &LtiSystem,
    t: usize,
    d_s: f64,
    normalization: WeightNormalization,
    trace: Option<&mut Vec<TraceRecord>>,
) -> Result<Schedule> {
    check_horizon(sys, t)?;
    let kappa = match integer_budget(d_s, t, sys.p(), sys.n(), "sensor")? {
        Budget::Full => return Schedule::full(t, sys.m(), sys.p()),
        Budget::Sparse(k) => k,
    };
    let gram = gramian::gramians(sys, t)?;
    let q_inv_root = linalg::sym_inv_sqrt(gram.q())?;
    let u = &q_inv_root * gramian::observability_matrix(sys, t)?.transpose();
    let weights = single_sided_weights(&u, kappa, normalization, trace)?;
    Schedule::new(
        t,
        sys.m(),
        sys.p(),
        full_side(sys.m(), t),
        side_from_weights(weights.weights(), sys.p(), t),
        Provenance::SensorOnly,
    )
}

/// Actuator schedule per the controllability-Gramian sandwich
/// `e^{-eps} P <= P_s <= e^{eps} P`; all sensors stay active.
pub fn actuator_schedule(sys: &LtiSystem, t: usize, d_a: f64) -> Result<Schedule> {
    actuator_schedule_with(sys, t, d_a, WeightNormalization::default(), None)
}

pub fn actuator_schedule_with(
    sys: &LtiSystem,
    t: usize,
    d_a: f64,
    normalization: WeightNormalization,
    trace: Option<&mut Vec<TraceRecord>>,
) -> Result<Schedule> {
    check_horizon(sys, t)?;
    let kappa = match integer_budget(d_a, t, sys.m(), sys.n(), "actuator")? {
        Budget::Full => return Schedule::full(t, sys.m(), sys.p()),
        Budget::Sparse(k) => k,
    };
    let gram = gramian::gramians(sys, t)?;
    let p_inv_root = linalg::sym_inv_sqrt(gram.p())?;
    let u = &p_inv_root * gramian::reachability_matrix(sys, t)?;
    let weights = single_sided_weights(&u, kappa, normalization, trace)?;
    Schedule::new(
        t,
        sys.m(),
        sys.p(),
        side_from_weights(weights.weights(), sys.m(), t),
        full_side(sys.p(), t),
        Provenance::ActuatorOnly,
    )
}

/// Separation-principle composition: designs the sensor and actuator
/// schedules independently and merges their scaling maps.
///
/// The merged schedule keeps both single-sided sandwich certificates, and
/// every Hankel singular value stays within `e^{+-(eps_s + eps_a)}` of its
/// full-system counterpart (the two sides' factors add eigenvalue-wise by
/// Weyl monotonicity). The analogous matrix-level sandwich between
/// `Q_s^{1/2} P_s Q_s^{1/2}` and `Q^{1/2} P Q^{1/2}` does not follow from
/// the per-side factors in original coordinates and can exceed their sum.
pub fn separation_schedule(sys: &LtiSystem, t: usize, d_s: f64, d_a: f64) -> Result<Schedule> {
    separation_schedule_with(sys, t, d_s, d_a, WeightNormalization::default())
}

pub fn separation_schedule_with(
    sys: &LtiSystem,
    t: usize,
    d_s: f64,
    d_a: f64,
    normalization: WeightNormalization,
) -> Result<Schedule> {
    let sensor = sensor_schedule_with(sys, t, d_s, normalization, None)?;
    let actuator = actuator_schedule_with(sys, t, d_a, normalization, None)?;
    let provenance = match (sensor.provenance(), actuator.provenance()) {
        (Provenance::Full, Provenance::Full) => Provenance::Full,
        _ => Provenance::Separation,
    };
    Schedule::new(
        t,
        sys.m(),
        sys.p(),
        actuator.actuators,
        sensor.sensors,
        provenance,
    )
}

/// Scheduled Gramians by direct weighted rank-one accumulation:
/// `P_s = sum_k sum_j a_j(k)^2 (A^{t-k-1} b_j)(A^{t-k-1} b_j)^T` and the
/// sensor-side dual.
pub fn scheduled_gramians(sys: &LtiSystem, schedule: &Schedule) -> Result<GramianSet> {
    if schedule.inputs() != sys.m() || schedule.outputs() != sys.p() {
        return Err(Error::DimensionMismatch(format!(
            "schedule is for m = {}, p = {}; system has m = {}, p = {}",
            schedule.inputs(),
            schedule.outputs(),
            sys.m(),
            sys.p()
        )));
    }
    let t = schedule.horizon();
    let n = sys.n();
    let reach = gramian::reachability_matrix(sys, t)?;
    let obs_t = gramian::observability_matrix(sys, t)?.transpose();

    let mut p_s = DMatrix::zeros(n, n);
    for (&(k, j), &scale) in schedule.actuator_scalings() {
        let col = reach.column((t - 1 - k) * sys.m() + j);
        p_s += col * col.transpose() * (scale * scale);
    }
    let mut q_s = DMatrix::zeros(n, n);
    for (&(k, j), &scale) in schedule.sensor_scalings() {
        let col = obs_t.column((t - 1 - k) * sys.p() + j);
        q_s += col * col.transpose() * (scale * scale);
    }
    GramianSet::new(linalg::symmetrize(&p_s), linalg::symmetrize(&q_s), t)
}

/// Average active sensors and actuators per step: `(sum_k card(sigma_k)) / t`
/// for each side, returned as `(sensors, actuators)`.
pub fn average_cardinalities(schedule: &Schedule) -> (f64, f64) {
    let t = schedule.horizon() as f64;
    (
        schedule.sensor_scalings().len() as f64 / t,
        schedule.actuator_scalings().len() as f64 / t,
    )
}

/// Uniform per-side rescaling so the squared scalings sum to `n * d` on each
/// side that is given a target; the sparsity pattern is untouched.
pub fn normalize_schedule(
    schedule: &Schedule,
    d_s: Option<f64>,
    d_a: Option<f64>,
    n: usize,
) -> Result<Schedule> {
    let rescale = |map: &BTreeMap<(usize, usize), f64>,
                   target: Option<f64>,
                   side: &'static str|
     -> Result<BTreeMap<(usize, usize), f64>> {
        let Some(d) = target else {
            return Ok(map.clone());
        };
        let sum_sq: f64 = map.values().map(|s| s * s).sum();
        if sum_sq <= 0.0 {
            return Err(Error::AllZeroSide { side });
        }
        let factor = (n as f64 * d / sum_sq).sqrt();
        Ok(map.iter().map(|(&key, &s)| (key, s * factor)).collect())
    };
    let sensors = rescale(schedule.sensor_scalings(), d_s, "sensor")?;
    let actuators = rescale(schedule.actuator_scalings(), d_a, "actuator")?;
    Schedule::new(
        schedule.horizon(),
        schedule.inputs(),
        schedule.outputs(),
        actuators,
        sensors,
        schedule.provenance(),
    )
}
