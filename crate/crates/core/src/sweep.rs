//! Budget sweeps: a grid of schedules over (d_s, d_a) pairs with
//! fully-sensed / fully-actuated margins, rendered as CSV tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::schedule::{self, CandidateVariant, Schedule, ScheduleOptions};
use crate::system::LtiSystem;
use crate::verify::{self, fmt_significant, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    #[default]
    Joint,
    Separation,
    Sensor,
    Actuator,
}

/// What to sweep: the budget lists, the construction mode, and whether the
/// displayed values come from fair-comparison-normalized schedules.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub t: usize,
    pub d_s_values: Vec<f64>,
    pub d_a_values: Vec<f64>,
    pub mode: SweepMode,
    pub normalize: bool,
    pub variant: CandidateVariant,
    /// Worker threads for cell evaluation; 0 or 1 runs sequentially. Output
    /// is identical either way.
    pub threads: usize,
}

/// One grid cell: the raw-schedule report (always bound-checked), plus the
/// normalized-schedule report when the sweep asked for normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellResult {
    Report {
        raw: Box<VerificationReport>,
        normalized: Option<Box<VerificationReport>>,
    },
    Skip {
        reason: String,
    },
}

impl CellResult {
    pub fn report(&self) -> Option<&VerificationReport> {
        match self {
            CellResult::Report { raw, .. } => Some(raw),
            CellResult::Skip { .. } => None,
        }
    }

    /// The report whose values the tables display: normalized when present.
    fn display_report(&self) -> Option<&VerificationReport> {
        match self {
            CellResult::Report { raw, normalized } => {
                Some(normalized.as_deref().unwrap_or(raw))
            }
            CellResult::Skip { .. } => None,
        }
    }

    pub fn is_skip(&self) -> bool {
        matches!(self, CellResult::Skip { .. })
    }
}

/// Full sweep result: interior cells indexed `[d_s row][d_a column]`, the
/// two margins, and the fully-sensed/fully-actuated corner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub t: usize,
    pub d_s_values: Vec<f64>,
    pub d_a_values: Vec<f64>,
    pub mode: SweepMode,
    pub normalized: bool,
    pub cells: Vec<Vec<CellResult>>,
    /// Sensor-only schedules (fully actuated), one per d_s row.
    pub sensor_margin: Vec<CellResult>,
    /// Actuator-only schedules (fully sensed), one per d_a column.
    pub actuator_margin: Vec<CellResult>,
    pub corner: CellResult,
}

enum CellKind {
    Interior { d_s: f64, d_a: f64 },
    SensorMargin { d_s: f64 },
    ActuatorMargin { d_a: f64 },
    Corner,
}

fn build_schedule(sys: &LtiSystem, spec: &SweepSpec, kind: &CellKind) -> Result<Schedule> {
    let options = ScheduleOptions {
        variant: spec.variant,
        ..Default::default()
    };
    match kind {
        CellKind::Interior { d_s, d_a } => match spec.mode {
            SweepMode::Joint => {
                schedule::joint_schedule_with(sys, spec.t, *d_s, *d_a, options, None, None)
            }
            SweepMode::Separation => schedule::separation_schedule(sys, spec.t, *d_s, *d_a),
            SweepMode::Sensor => schedule::sensor_schedule(sys, spec.t, *d_s),
            SweepMode::Actuator => schedule::actuator_schedule(sys, spec.t, *d_a),
        },
        CellKind::SensorMargin { d_s } => schedule::sensor_schedule(sys, spec.t, *d_s),
        CellKind::ActuatorMargin { d_a } => schedule::actuator_schedule(sys, spec.t, *d_a),
        CellKind::Corner => Schedule::full(spec.t, sys.m(), sys.p()),
    }
}

fn evaluate_cell(sys: &LtiSystem, spec: &SweepSpec, kind: &CellKind) -> CellResult {
    let (req_s, req_a) = match kind {
        CellKind::Interior { d_s, d_a } => match spec.mode {
            SweepMode::Sensor => (Some(*d_s), None),
            SweepMode::Actuator => (None, Some(*d_a)),
            _ => (Some(*d_s), Some(*d_a)),
        },
        CellKind::SensorMargin { d_s } => (Some(*d_s), None),
        CellKind::ActuatorMargin { d_a } => (None, Some(*d_a)),
        CellKind::Corner => (None, None),
    };
    let outcome = build_schedule(sys, spec, kind).and_then(|sched| {
        let raw = verify::verify_schedule_with(sys, &sched, req_s, req_a, &[])?;
        let normalized = if spec.normalize && (req_s.is_some() || req_a.is_some()) {
            let scaled = schedule::normalize_schedule(&sched, req_s, req_a, sys.n())?;
            Some(Box::new(verify::verify_schedule_with(
                sys, &scaled, req_s, req_a, &[],
            )?))
        } else {
            None
        };
        Ok(CellResult::Report {
            raw: Box::new(raw),
            normalized,
        })
    });
    match outcome {
        Ok(cell) => cell,
        // Commas would break the CSV cell; semicolons read the same.
        Err(e) => CellResult::Skip {
            reason: format!("skip:{}", e).replace(',', ";"),
        },
    }
}

/// Runs every cell of the grid plus margins and corner. Cell evaluation is
/// pure, so the thread count only affects wall time, never the outcome.
pub fn run_sweep(sys: &LtiSystem, spec: &SweepSpec) -> Result<SweepOutcome> {
    let mut kinds = Vec::new();
    for &d_s in &spec.d_s_values {
        for &d_a in &spec.d_a_values {
            kinds.push(CellKind::Interior { d_s, d_a });
        }
    }
    for &d_s in &spec.d_s_values {
        kinds.push(CellKind::SensorMargin { d_s });
    }
    for &d_a in &spec.d_a_values {
        kinds.push(CellKind::ActuatorMargin { d_a });
    }
    kinds.push(CellKind::Corner);

    let results: Vec<CellResult> = if spec.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| crate::error::Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            kinds
                .par_iter()
                .map(|kind| evaluate_cell(sys, spec, kind))
                .collect()
        })
    } else {
        kinds.iter().map(|kind| evaluate_cell(sys, spec, kind)).collect()
    };

    let rows = spec.d_s_values.len();
    let cols = spec.d_a_values.len();
    let mut iter = results.into_iter();
    let mut cells = Vec::with_capacity(rows);
    for _ in 0..rows {
        cells.push(iter.by_ref().take(cols).collect());
    }
    let sensor_margin: Vec<CellResult> = iter.by_ref().take(rows).collect();
    let actuator_margin: Vec<CellResult> = iter.by_ref().take(cols).collect();
    let corner = iter.next().expect("corner cell present");

    Ok(SweepOutcome {
        t: spec.t,
        d_s_values: spec.d_s_values.clone(),
        d_a_values: spec.d_a_values.clone(),
        mode: spec.mode,
        normalized: spec.normalize,
        cells,
        sensor_margin,
        actuator_margin,
        corner,
    })
}

impl SweepOutcome {
    /// True when every non-skipped cell's raw (pre-normalization) bound
    /// checks pass.
    pub fn all_bounds_hold(&self) -> bool {
        self.iter_all_cells()
            .filter_map(|c| c.report())
            .all(|r| r.pass)
    }

    fn iter_all_cells(&self) -> impl Iterator<Item = &CellResult> {
        self.cells
            .iter()
            .flatten()
            .chain(self.sensor_margin.iter())
            .chain(self.actuator_margin.iter())
            .chain(std::iter::once(&self.corner))
    }

    fn grid_csv(
        &self,
        interior: impl Fn(&VerificationReport) -> String,
        sensor_margin: impl Fn(&VerificationReport) -> String,
        actuator_margin: impl Fn(&VerificationReport) -> String,
        corner: impl Fn(&VerificationReport) -> String,
    ) -> String {
        let cell_text = |cell: &CellResult, fmt: &dyn Fn(&VerificationReport) -> String| {
            match cell.display_report() {
                Some(r) => fmt(r),
                None => match cell {
                    CellResult::Skip { reason } => reason.clone(),
                    CellResult::Report { .. } => unreachable!(),
                },
            }
        };
        let mut out = String::from("d_s\\d_a");
        for d_a in &self.d_a_values {
            out.push_str(&format!(",{d_a}"));
        }
        out.push_str(",full\n");
        for (row, d_s) in self.d_s_values.iter().enumerate() {
            out.push_str(&format!("{d_s}"));
            for cell in &self.cells[row] {
                out.push(',');
                out.push_str(&cell_text(cell, &interior));
            }
            out.push(',');
            out.push_str(&cell_text(&self.sensor_margin[row], &sensor_margin));
            out.push('\n');
        }
        out.push_str("full");
        for cell in &self.actuator_margin {
            out.push(',');
            out.push_str(&cell_text(cell, &actuator_margin));
        }
        out.push(',');
        out.push_str(&cell_text(&self.corner, &corner));
        out.push('\n');
        out
    }

    /// Approximation-factor table: joint factor in the interior (with the
    /// per-side decomposition in separation mode), single-sided factors on
    /// the margins, zero in the corner.
    pub fn epsilon_csv(&self) -> String {
        let separation = self.mode == SweepMode::Separation;
        self.grid_csv(
            move |r| {
                if separation {
                    format!(
                        "{} ({}+{})",
                        fmt_significant(r.epsilon_joint),
                        fmt_significant(r.epsilon_q),
                        fmt_significant(r.epsilon_p)
                    )
                } else {
                    fmt_significant(r.epsilon_joint)
                }
            },
            |r| fmt_significant(r.epsilon_q),
            |r| fmt_significant(r.epsilon_p),
            |r| fmt_significant(r.epsilon_joint),
        )
    }

    /// Hankel norms of the scheduled systems.
    pub fn hankel_csv(&self) -> String {
        let f = |r: &VerificationReport| fmt_significant(r.hankel_norm_scheduled);
        self.grid_csv(f, f, f, f)
    }

    /// `|log(sigma_max(H_s) / sigma_max(H))|` per cell.
    pub fn log_error_csv(&self) -> String {
        let f = |r: &VerificationReport| fmt_significant(r.hankel_log_error);
        self.grid_csv(f, f, f, f)
    }

    /// Flat aggregation: one full report row per cell, margins included.
    pub fn reports_csv(&self) -> String {
        let mut out = String::from(VerificationReport::csv_header());
        out.push('\n');
        for cell in self.iter_all_cells() {
            match cell {
                CellResult::Report { raw, .. } => {
                    out.push_str(&raw.csv_row());
                    out.push('\n');
                }
                CellResult::Skip { reason } => {
                    out.push_str(reason);
                    out.push('\n');
                }
            }
        }
        out
    }
}
