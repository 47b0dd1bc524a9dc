//! Impact intensity from the filtered-vs-predicted torque residual.
//!
//! `T_diff = max(0, |T_f - T_p| - T_threshold)` per joint, then each joint's
//! excess torque is divided by its lever arm to the foot. A collision latches
//! once any force component stays positive for `debounce_steps` ticks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::legsim::{forward_kinematics, knee_position, LegGeometry};
use crate::types::{FootPoint, JointState, TorqueVector};

/// Lever arms shorter than this (cm) are clamped.
pub const MIN_LEVER_ARM: f64 = 0.1;

pub const EVENT_HEADER: &str = "run_id,step,f_h,f_k,latched";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImpactError {
    #[error("invalid impact config: {0}")]
    InvalidConfig(String),
    #[error("event log line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Threshold replaced by the calibrated no-contact maximum plus a margin.
    #[default]
    Auto,
    /// `t_threshold` used as given.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactConfig {
    /// Per-joint model-error allowance, N·cm.
    pub t_threshold: [f64; 2],
    /// Consecutive positive ticks needed to latch a collision.
    pub debounce_steps: usize,
    pub threshold_mode: ThresholdMode,
    /// Relative margin over the calibrated maximum in `auto` mode.
    pub calibration_margin: f64,
    /// No-contact runs used for calibration in `auto` mode.
    pub calibration_runs: usize,
}

impl Default for ImpactConfig {
    fn default() -> Self {
        Self {
            t_threshold: [1.0, 1.0],
            debounce_steps: 2,
            threshold_mode: ThresholdMode::Auto,
            calibration_margin: 0.2,
            calibration_runs: 20,
        }
    }
}

impl ImpactConfig {
    pub fn validate(&self) -> Result<(), ImpactError> {
        let bad = |m: &str| Err(ImpactError::InvalidConfig(m.into()));
        if !self.t_threshold.iter().all(|t| t.is_finite() && *t >= 0.0) {
            return bad("thresholds must be finite and >= 0");
        }
        if self.debounce_steps < 1 {
            return bad("debounce_steps must be >= 1");
        }
        if !(self.calibration_margin.is_finite() && self.calibration_margin >= 0.0) {
            return bad("calibration_margin must be finite and >= 0");
        }
        if self.threshold_mode == ThresholdMode::Auto && self.calibration_runs < 1 {
            return bad("auto threshold needs calibration_runs >= 1");
        }
        Ok(())
    }

    pub fn threshold(&self) -> TorqueVector {
        TorqueVector::new(self.t_threshold[0], self.t_threshold[1])
    }

    pub fn with_threshold(&self, t: TorqueVector) -> Self {
        Self {
            t_threshold: t.to_array(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactEstimate {
    pub t_diff: TorqueVector,
    /// (F_H, F_K), N.
    pub force: TorqueVector,
    pub collided: bool,
}

/// `max(0, |t_f - t_p| - threshold)` per joint.
pub fn torque_diff(t_f: TorqueVector, t_p: TorqueVector, cfg: &ImpactConfig) -> TorqueVector {
    let d = (t_f - t_p).abs() - cfg.threshold();
    d.map(|v| v.max(0.0))
}

/// Hip-to-foot and knee-to-foot distances at `q`, clamped below.
pub fn lever_arms(q: &JointState, geom: &LegGeometry) -> (f64, f64) {
    let foot = forward_kinematics(geom, q);
    let r_h = foot.distance(FootPoint::default());
    let r_k = foot.distance(knee_position(geom, q));
    (r_h.max(MIN_LEVER_ARM), r_k.max(MIN_LEVER_ARM))
}

/// `F_H = T_H / r_H`, `F_K = T_K / r_K`.
pub fn gamma_force_map(t_diff: TorqueVector, q: &JointState, geom: &LegGeometry) -> TorqueVector {
    let (r_h, r_k) = lever_arms(q, geom);
    TorqueVector::new(t_diff.hip / r_h, t_diff.knee / r_k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    /// First tick of the exceedance run.
    pub step: usize,
    /// Tick at which the debounce condition was met.
    pub latched_step: usize,
    /// Componentwise maximum force over the run so far.
    pub peak: TorqueVector,
}

/// Debounced latch over a stream of force estimates.
///
/// A run of positive ticks that reaches `debounce` produces one event; its
/// peak keeps growing while the run lasts. The first zero tick re-arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    debounce: usize,
    run_len: usize,
    run_start: usize,
    run_peak: TorqueVector,
    latched: bool,
    events: Vec<CollisionEvent>,
}

impl Detector {
    pub fn new(debounce: usize) -> Self {
        Self {
            debounce: debounce.max(1),
            run_len: 0,
            run_start: 0,
            run_peak: TorqueVector::ZERO,
            latched: false,
            events: Vec::new(),
        }
    }

    /// Feeds one tick; returns whether a collision is latched after it.
    pub fn push(&mut self, step: usize, force: TorqueVector) -> bool {
        if !(force.hip > 0.0 || force.knee > 0.0) {
            self.run_len = 0;
            self.latched = false;
            return false;
        }
        if self.run_len == 0 {
            self.run_start = step;
            self.run_peak = force;
        } else {
            self.run_peak = TorqueVector::new(
                self.run_peak.hip.max(force.hip),
                self.run_peak.knee.max(force.knee),
            );
        }
        self.run_len += 1;
        if self.latched {
            if let Some(ev) = self.events.last_mut() {
                ev.peak = self.run_peak;
            }
        } else if self.run_len >= self.debounce {
            self.latched = true;
            self.events.push(CollisionEvent {
                step: self.run_start,
                latched_step: step,
                peak: self.run_peak,
            });
        }
        self.latched
    }

    pub fn latched(&self) -> bool {
        self.latched
    }

    pub fn events(&self) -> &[CollisionEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<CollisionEvent> {
        self.events
    }
}

/// Runs a detector over a whole stream.
pub fn detect(forces: impl IntoIterator<Item = (usize, TorqueVector)>, debounce: usize) -> Vec<CollisionEvent> {
    let mut d = Detector::new(debounce);
    for (step, f) in forces {
        d.push(step, f);
    }
    d.into_events()
}

/// Per-tick estimator: residual, force map and latch.
#[derive(Debug, Clone)]
pub struct ImpactEstimator {
    cfg: ImpactConfig,
    detector: Detector,
}

impl ImpactEstimator {
    pub fn new(cfg: ImpactConfig) -> Result<Self, ImpactError> {
        cfg.validate()?;
        Ok(Self {
            detector: Detector::new(cfg.debounce_steps),
            cfg,
        })
    }

    pub fn config(&self) -> &ImpactConfig {
        &self.cfg
    }

    pub fn step(
        &mut self,
        step: usize,
        t_f: TorqueVector,
        t_p: TorqueVector,
        q: &JointState,
        geom: &LegGeometry,
    ) -> ImpactEstimate {
        let t_diff = torque_diff(t_f, t_p, &self.cfg);
        let force = gamma_force_map(t_diff, q, geom);
        let collided = self.detector.push(step, force);
        ImpactEstimate {
            t_diff,
            force,
            collided,
        }
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }
}

/// One line of the event log: a tick with some positive force component.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub run_id: String,
    pub step: usize,
    pub force: TorqueVector,
    pub latched: bool,
}

pub fn event_rows(run_id: &str, estimates: &[(usize, ImpactEstimate)]) -> Vec<EventRow> {
    estimates
        .iter()
        .filter(|(_, e)| e.force.hip > 0.0 || e.force.knee > 0.0)
        .map(|(step, e)| EventRow {
            run_id: run_id.to_string(),
            step: *step,
            force: e.force,
            latched: e.collided,
        })
        .collect()
}

pub fn events_to_csv(rows: &[EventRow]) -> String {
    let mut out = String::from(EVENT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:?},{:?},{}",
            r.run_id,
            r.step,
            r.force.hip,
            r.force.knee,
            u8::from(r.latched)
        );
    }
    out
}

pub fn events_from_csv(text: &str) -> Result<Vec<EventRow>, ImpactError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == EVENT_HEADER => {}
        _ => {
            return Err(ImpactError::Parse {
                line: 1,
                msg: format!("expected header `{EVENT_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ImpactError::Parse { line: i + 1, msg };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(err(format!("expected 5 columns, found {}", cols.len())));
        }
        let num = |s: &str| -> Result<f64, ImpactError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad number `{s}`")))
        };
        rows.push(EventRow {
            run_id: cols[0].to_string(),
            step: cols[1].parse().map_err(|_| err(format!("bad step `{}`", cols[1])))?,
            force: TorqueVector::new(num(cols[2])?, num(cols[3])?),
            latched: match cols[4] {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("bad latched flag `{other}`"))),
            },
        });
    }
    Ok(rows)
}
