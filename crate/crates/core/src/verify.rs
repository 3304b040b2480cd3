//! Schedule certification: closed-form bounds, empirical sandwich factors,
//! Hankel norms and systemic performance-metric ratios, all folded into a
//! deterministic report.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{self, GramianSet};
use crate::linalg::{self, loewner_sandwich_epsilon};
use crate::schedule::{self, Provenance, Schedule};
use crate::system::LtiSystem;

/// Absolute slack added to every bound check; above eigensolver noise for
/// the problem sizes this crate targets, far below any meaningful gap.
pub const PASS_TOL: f64 = 1e-8;

/// The closed-form approximation factor `2 atanh(sqrt(n / kappa))`.
pub fn theoretical_epsilon(n: usize, kappa: usize) -> Result<f64> {
    if kappa <= n {
        return Err(Error::BudgetOutOfRange {
            kappa,
            n,
            candidates: usize::MAX,
        });
    }
    let x = (n as f64 / kappa as f64).sqrt();
    Ok(2.0 * x.atanh())
}

/// A homogeneous, Loewner-monotone functional of the Gramian sandwich.
///
/// Custom metrics are spot-checked on seeded random PSD pairs for both
/// properties before they are accepted.
pub struct SystemicMetric {
    name: String,
    eval: Box<dyn Fn(&DMatrix<f64>) -> f64 + Send + Sync>,
}

impl SystemicMetric {
    /// `lambda_max` of the sandwich: the squared Hankel norm.
    pub fn squared_hankel_norm() -> Self {
        SystemicMetric {
            name: "squared-hankel-norm".into(),
            eval: Box::new(|m| linalg::sym_eigen(m).lambda_max()),
        }
    }

    pub fn trace() -> Self {
        SystemicMetric {
            name: "trace".into(),
            eval: Box::new(|m| m.trace()),
        }
    }

    /// Registers a user metric after randomized homogeneity and
    /// monotonicity spot-checks.
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(&DMatrix<f64>) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let metric = SystemicMetric {
            name: name.into(),
            eval: Box::new(eval),
        };
        metric.spot_check()?;
        Ok(metric)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, m: &DMatrix<f64>) -> f64 {
        (self.eval)(m)
    }

    fn spot_check(&self) -> Result<()> {
        let mut rng = crate::system::seeded_rng(0x5eed);
        for trial in 0..8 {
            let raw = crate::system::random_normal_matrix(4, 4, &mut rng);
            let a = linalg::symmetrize(&(&raw * raw.transpose()));
            let value = self.evaluate(&a);
            for kappa in [2.0, 3.7] {
                let scaled = self.evaluate(&(&a * kappa));
                if (scaled - kappa * value).abs() > 1e-9 * (kappa * value).abs().max(1.0) {
                    return Err(Error::MetricSpotCheck {
                        name: self.name.clone(),
                        property: "homogeneity",
                    });
                }
            }
            let bump = crate::system::random_normal_matrix(4, 4, &mut rng);
            let larger = &a + linalg::symmetrize(&(&bump * bump.transpose()));
            if self.evaluate(&larger) < value - 1e-9 * value.abs().max(1.0) {
                return Err(Error::MetricSpotCheck {
                    name: self.name.clone(),
                    property: "monotonicity",
                });
            }
            let _ = trial;
        }
        Ok(())
    }
}

/// `|ln(rho(M_s) / rho(M))|` for a systemic metric; both values must be
/// strictly positive.
pub fn metric_log_ratio(
    metric: &SystemicMetric,
    m_ref: &DMatrix<f64>,
    m_s: &DMatrix<f64>,
) -> Result<f64> {
    let reference = metric.evaluate(m_ref);
    let scheduled = metric.evaluate(m_s);
    if reference <= 0.0 || !reference.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "metric '{}' is {reference} on the reference matrix; need positive",
            metric.name
        )));
    }
    if scheduled <= 0.0 || !scheduled.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok((scheduled / reference).ln().abs())
}

/// serde adapter: finite floats as numbers, infinities as the string "inf".
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            ser.serialize_f64(*value)
        } else if *value > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        Ok(match Raw::deserialize(de)? {
            Raw::Num(x) => x,
            Raw::Str(s) if s == "inf" => f64::INFINITY,
            Raw::Str(s) if s == "-inf" => f64::NEG_INFINITY,
            Raw::Str(s) => {
                return Err(serde::de::Error::custom(format!(
                    "expected a float or \"inf\", got {s:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRatio {
    pub metric: String,
    #[serde(with = "maybe_inf")]
    pub log_ratio: f64,
}

/// Everything `verify_schedule` certifies about one schedule, with fixed
/// field order for byte-stable serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub provenance: Provenance,
    pub t: usize,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub requested_d_s: Option<f64>,
    pub requested_d_a: Option<f64>,
    pub achieved_d_s: f64,
    pub achieved_d_a: f64,
    pub active_sensor_pairs: usize,
    pub active_actuator_pairs: usize,
    pub epsilon_theory_sensor: Option<f64>,
    pub epsilon_theory_actuator: Option<f64>,
    pub epsilon_theory_joint: Option<f64>,
    #[serde(with = "maybe_inf")]
    pub epsilon_q: f64,
    #[serde(with = "maybe_inf")]
    pub epsilon_p: f64,
    #[serde(with = "maybe_inf")]
    pub epsilon_joint: f64,
    /// Eigenvalue-wise factor `max_k |ln(lambda_k(S_s) / lambda_k(S))|` over
    /// the two sandwich spectra: the certificate for Hankel-singular-value
    /// approximation (each sigma_k moves by at most half this, log-scale).
    #[serde(with = "maybe_inf")]
    pub epsilon_hankel_spectrum: f64,
    pub epsilon_q_normalized: Option<f64>,
    pub epsilon_p_normalized: Option<f64>,
    pub epsilon_joint_normalized: Option<f64>,
    pub hankel_norm_full: f64,
    #[serde(with = "maybe_inf")]
    pub hankel_norm_scheduled: f64,
    #[serde(with = "maybe_inf")]
    pub hankel_log_error: f64,
    pub metric_log_ratios: Vec<MetricRatio>,
    pub pass_q: Option<bool>,
    pub pass_p: Option<bool>,
    pub pass_joint: Option<bool>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn csv_header() -> &'static str {
        "d_s,d_a,provenance,epsilon_q,epsilon_p,epsilon_joint,epsilon_theory_joint,\
         hankel_norm_scheduled,hankel_log_error,avg_sensors,avg_actuators,pass"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "".to_string(), fmt_significant);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            opt(self.requested_d_s),
            opt(self.requested_d_a),
            provenance_str(self.provenance),
            fmt_significant(self.epsilon_q),
            fmt_significant(self.epsilon_p),
            fmt_significant(self.epsilon_joint),
            opt(self.epsilon_theory_joint),
            fmt_significant(self.hankel_norm_scheduled),
            fmt_significant(self.hankel_log_error),
            fmt_significant(self.achieved_d_s),
            fmt_significant(self.achieved_d_a),
            self.pass
        )
    }
}

pub fn provenance_str(p: Provenance) -> &'static str {
    match p {
        Provenance::Joint => "joint",
        Provenance::SensorOnly => "sensor-only",
        Provenance::ActuatorOnly => "actuator-only",
        Provenance::Separation => "separation",
        Provenance::Full => "full",
    }
}

/// Six significant digits in positional notation; deterministic.
pub fn fmt_significant(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

fn theory_for_budget(n: usize, d: Option<f64>, t: usize, channels: usize) -> Option<f64> {
    let d = d?;
    let kappa = (d * t as f64).floor() as usize;
    if kappa >= channels * t {
        // Fully active side: exact, no slack needed.
        return Some(0.0);
    }
    theoretical_epsilon(n, kappa).ok()
}

/// Certifies a schedule against the full system: empirical sandwich factors
/// for Q, P and the joint combination, cardinalities, Hankel norms, metric
/// log-ratios, and pass flags against the closed-form bounds where the
/// requested budgets are known.
///
/// Both pre- and post-normalization factors are reported; only the
/// pre-normalization values are bound-checked, since the fair-comparison
/// rescaling deliberately trades the raw guarantee away.
pub fn verify_schedule(sys: &LtiSystem, sched: &Schedule) -> Result<VerificationReport> {
    verify_schedule_with(sys, sched, None, None, &[])
}

pub fn verify_schedule_with(
    sys: &LtiSystem,
    sched: &Schedule,
    requested_d_s: Option<f64>,
    requested_d_a: Option<f64>,
    extra_metrics: &[SystemicMetric],
) -> Result<VerificationReport> {
    let t = sched.horizon();
    let full = gramian::gramians(sys, t)?;
    let scheduled = schedule::scheduled_gramians(sys, sched)?;
    let provenance = sched.provenance();

    let (epsilon_q, epsilon_p, epsilon_joint) = sandwich_epsilons(&full, &scheduled, provenance)?;
    let epsilon_hankel_spectrum = if provenance == Provenance::Full {
        0.0
    } else {
        eigenwise_epsilon(&full.sandwich()?, &scheduled.sandwich()?)
    };

    let builtins = [
        SystemicMetric::squared_hankel_norm(),
        SystemicMetric::trace(),
    ];
    let all_metrics = || builtins.iter().chain(extra_metrics.iter());

    let full_sandwich = full.sandwich()?;
    let hankel_norm_full = gramian::hankel_norm(&gramian::hankel_spectrum(&full)?);
    let (hankel_norm_scheduled, hankel_log_error, metric_log_ratios) =
        if provenance == Provenance::Full {
            let zeros = all_metrics()
                .map(|m| MetricRatio {
                    metric: m.name().to_string(),
                    log_ratio: 0.0,
                })
                .collect();
            (hankel_norm_full, 0.0, zeros)
        } else {
            let scheduled_sandwich = scheduled.sandwich()?;
            let sigma = gramian::hankel_norm(&gramian::hankel_spectrum(&scheduled)?);
            let log_error = if sigma > 0.0 {
                (sigma / hankel_norm_full).ln().abs()
            } else {
                f64::INFINITY
            };
            let ratios = all_metrics()
                .map(|m| {
                    metric_log_ratio(m, &full_sandwich, &scheduled_sandwich).map(|r| MetricRatio {
                        metric: m.name().to_string(),
                        log_ratio: r,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (sigma, log_error, ratios)
        };

    let n = sys.n();
    let epsilon_theory_sensor = match provenance {
        Provenance::Full | Provenance::ActuatorOnly => Some(0.0),
        _ => theory_for_budget(n, requested_d_s, t, sys.p()),
    };
    let epsilon_theory_actuator = match provenance {
        Provenance::Full | Provenance::SensorOnly => Some(0.0),
        _ => theory_for_budget(n, requested_d_a, t, sys.m()),
    };
    let epsilon_theory_joint = match (epsilon_theory_sensor, epsilon_theory_actuator) {
        (Some(s), Some(a)) => Some(s + a),
        _ => None,
    };

    let pass_q = epsilon_theory_sensor.map(|b| epsilon_q <= b + PASS_TOL);
    let pass_p = epsilon_theory_actuator.map(|b| epsilon_p <= b + PASS_TOL);
    let pass_joint = epsilon_theory_joint.map(|b| epsilon_joint <= b + PASS_TOL);
    let pass = [pass_q, pass_p, pass_joint]
        .iter()
        .all(|f| f.unwrap_or(true));

    // The rescaled schedule is a different schedule: no by-construction
    // zeros apply, so all three factors are measured outright.
    let (epsilon_q_normalized, epsilon_p_normalized, epsilon_joint_normalized) =
        match schedule::normalize_schedule(sched, requested_d_s, requested_d_a, n) {
            Ok(normalized) if requested_d_s.is_some() || requested_d_a.is_some() => {
                let gram_n = schedule::scheduled_gramians(sys, &normalized)?;
                let q = loewner_sandwich_epsilon(full.q(), gram_n.q())?;
                let p = loewner_sandwich_epsilon(full.p(), gram_n.p())?;
                let joint =
                    loewner_sandwich_epsilon(&full.sandwich()?, &gram_n.sandwich()?)?;
                (Some(q), Some(p), Some(joint))
            }
            _ => (None, None, None),
        };

    let (avg_s, avg_a) = schedule::average_cardinalities(sched);
    let (sensor_pairs, actuator_pairs) = sched.active_pairs();

    Ok(VerificationReport {
        provenance,
        t,
        n,
        m: sys.m(),
        p: sys.p(),
        requested_d_s,
        requested_d_a,
        achieved_d_s: avg_s,
        achieved_d_a: avg_a,
        active_sensor_pairs: sensor_pairs,
        active_actuator_pairs: actuator_pairs,
        epsilon_theory_sensor,
        epsilon_theory_actuator,
        epsilon_theory_joint,
        epsilon_q,
        epsilon_p,
        epsilon_joint,
        epsilon_hankel_spectrum,
        epsilon_q_normalized,
        epsilon_p_normalized,
        epsilon_joint_normalized,
        hankel_norm_full,
        hankel_norm_scheduled,
        hankel_log_error,
        metric_log_ratios,
        pass_q,
        pass_p,
        pass_joint,
        pass,
    })
}

/// `max_k |ln(lambda_k(scheduled) / lambda_k(reference))|` over descending
/// eigenvalues; infinite if the scheduled matrix loses rank.
pub fn eigenwise_epsilon(reference: &DMatrix<f64>, scheduled: &DMatrix<f64>) -> f64 {
    let ref_eigs = linalg::sym_eigen(reference);
    let sched_eigs = linalg::sym_eigen(scheduled);
    let mut worst = 0.0_f64;
    for (&lr, &ls) in ref_eigs.values.iter().zip(sched_eigs.values.iter()) {
        if lr <= 0.0 {
            continue;
        }
        if ls <= 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max((ls / lr).ln().abs());
    }
    worst
}

fn sandwich_epsilons(
    full: &GramianSet,
    scheduled: &GramianSet,
    provenance: Provenance,
) -> Result<(f64, f64, f64)> {
    if provenance == Provenance::Full {
        return Ok((0.0, 0.0, 0.0));
    }
    let epsilon_q = if provenance == Provenance::ActuatorOnly {
        0.0
    } else {
        loewner_sandwich_epsilon(full.q(), scheduled.q())?
    };
    let epsilon_p = if provenance == Provenance::SensorOnly {
        0.0
    } else {
        loewner_sandwich_epsilon(full.p(), scheduled.p())?
    };
    let epsilon_joint =
        loewner_sandwich_epsilon(&full.sandwich()?, &scheduled.sandwich()?)?;
    Ok((epsilon_q, epsilon_p, epsilon_joint))
}
