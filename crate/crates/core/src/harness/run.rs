use rayon::prelude::*;

use super::{derive_seed, HarnessError, ScenarioConfig};
use crate::impact::{CollisionEvent, ImpactEstimate, ImpactEstimator, ThresholdMode};
use crate::legsim::{generate_swing_trajectory, inverse_dynamics, Plant, TruthSource};
use crate::types::{JointState, TorqueVector};
use crate::ukf::{TorquePredictor, UkfConfig, UkfState, UnscentedFilter};

const UKF_NOISE_STREAM: u64 = 5;
const CALIBRATION_STREAM: u64 = 0xCA11;

/// The exported per-tick trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub state: JointState,
    pub t_m: TorqueVector,
    pub t_p: TorqueVector,
    pub t_f: TorqueVector,
    pub innovation: TorqueVector,
    /// Updated covariance `[c00, c01, c11]`.
    pub c_p: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRow {
    pub trace: TraceRow,
    pub t_true: TorqueVector,
    pub contact_active: bool,
    pub estimate: ImpactEstimate,
}

impl TickRow {
    /// `|T_f - T_p|`.
    pub fn residual(&self) -> TorqueVector {
        (self.trace.t_f - self.trace.t_p).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub seed: u64,
    pub threshold: TorqueVector,
    pub trigger_step: Option<usize>,
    pub rows: Vec<TickRow>,
    pub events: Vec<CollisionEvent>,
}

impl RunRecord {
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.rows.iter().map(|r| r.trace).collect()
    }

    /// Estimates keyed by tick, for the event log.
    pub fn estimates(&self) -> Vec<(usize, ImpactEstimate)> {
        self.rows.iter().map(|r| (r.trace.step, r.estimate)).collect()
    }

    /// First event at or after the trigger tick.
    pub fn detection(&self) -> Option<&CollisionEvent> {
        let t = self.trigger_step?;
        self.events.iter().find(|e| e.step >= t)
    }

    pub fn latency(&self) -> Option<usize> {
        Some(self.detection()?.step - self.trigger_step?)
    }

    /// Events before the trigger, or any event when there is no contact.
    pub fn false_positives(&self) -> usize {
        match self.trigger_step {
            Some(t) => self.events.iter().filter(|e| e.step < t).count(),
            None => self.events.len(),
        }
    }
}

/// Runs one swing with the configured threshold taken as-is.
///
/// Per tick: the predictor is queried at the tick's joint state, the plant
/// measures around its no-load torque plus contact, the filter consumes the
/// measurement and the estimator updates the latch.
pub fn run_scenario<P>(cfg: &ScenarioConfig, predictor: &P) -> Result<RunRecord, HarnessError>
where
    P: TorquePredictor + ?Sized,
{
    cfg.validate()?;
    let ticks = generate_swing_trajectory(&cfg.trajectory, &cfg.geometry)?;
    let mut plant = Plant::new(cfg.geometry.clone(), cfg.contact.clone(), cfg.noise, cfg.seed)?;
    let ukf_cfg = UkfConfig {
        noise_seed: derive_seed(cfg.seed ^ cfg.ukf.noise_seed, UKF_NOISE_STREAM),
        ..cfg.ukf.clone()
    };
    let t_p0 = predictor.predict_torque(&ticks[0].state).to_dvector();
    let initial = UkfState::initial(&t_p0, &ukf_cfg);
    let mut filter = UnscentedFilter::new(ukf_cfg, initial)?;
    let mut estimator = ImpactEstimator::new(cfg.impact.clone())?;

    let mut rows = Vec::with_capacity(ticks.len());
    for (k, tick) in ticks.iter().enumerate() {
        let q = tick.state;
        let t_p = predictor.predict_torque(&q);
        let base = match cfg.truth_source {
            TruthSource::Predictor => t_p,
            TruthSource::Dynamics => inverse_dynamics(&cfg.geometry, &q, tick.accel),
        };
        let out = plant.step_with_base(k, &q, base);
        let trace = filter
            .step_with_prediction(&t_p.to_dvector(), &out.torque_measured.to_dvector())
            .map_err(|source| HarnessError::Filter { tick: k, source })?;
        let state = filter.state();
        let t_f = state.torque();
        let estimate = estimator.step(k, t_f, t_p, &q, &cfg.geometry);
        rows.push(TickRow {
            trace: TraceRow {
                step: k,
                state: q,
                t_m: out.torque_measured,
                t_p,
                t_f,
                innovation: TorqueVector::from_dvector(&trace.innovation),
                c_p: [state.c_p[(0, 0)], state.c_p[(0, 1)], state.c_p[(1, 1)]],
            },
            t_true: out.torque_true,
            contact_active: out.contact_active,
            estimate,
        });
        if cfg.stop_on_collision && estimate.collided {
            break;
        }
    }
    Ok(RunRecord {
        run_id: format!("seed-{}", cfg.seed),
        seed: cfg.seed,
        threshold: cfg.impact.threshold(),
        trigger_step: cfg.contact.as_ref().map(|c| c.trigger_step),
        rows,
        events: estimator.detector().events().to_vec(),
    })
}

/// Independent runs of the same scenario, in parallel, ordered as `seeds`.
pub fn run_seeds<P>(cfg: &ScenarioConfig, predictor: &P, seeds: &[u64]) -> Result<Vec<RunRecord>, HarnessError>
where
    P: TorquePredictor + Sync + ?Sized,
{
    seeds
        .par_iter()
        .map(|&s| run_scenario(&cfg.with_seed(s), predictor))
        .collect()
}

/// Seeds of the calibration runs; disjoint in practice from small run seeds.
pub fn calibration_seeds(base: u64, n_runs: usize) -> Vec<u64> {
    (0..n_runs as u64)
        .map(|i| derive_seed(base ^ CALIBRATION_STREAM, i))
        .collect()
}

/// Per-joint maximum `|T_f - T_p|` over `n_runs` no-contact runs, times
/// `1 + margin`.
pub fn calibrate_threshold<P>(
    cfg: &ScenarioConfig,
    predictor: &P,
    n_runs: usize,
) -> Result<TorqueVector, HarnessError>
where
    P: TorquePredictor + Sync + ?Sized,
{
    if n_runs == 0 {
        return Err(HarnessError::Config("calibration needs at least one run".into()));
    }
    let mut base = cfg.without_contact();
    base.stop_on_collision = false;
    base.impact.threshold_mode = ThresholdMode::Fixed;
    let records = run_seeds(&base, predictor, &calibration_seeds(cfg.seed, n_runs))?;
    let mut max = TorqueVector::ZERO;
    for r in records.iter().flat_map(|rec| &rec.rows) {
        let d = r.residual();
        max = TorqueVector::new(max.hip.max(d.hip), max.knee.max(d.knee));
    }
    Ok(max * (1.0 + cfg.impact.calibration_margin))
}

/// The config with its threshold fixed: calibrated when the mode is `auto`,
/// unchanged otherwise.
pub fn resolve_threshold<P>(cfg: &ScenarioConfig, predictor: &P) -> Result<ScenarioConfig, HarnessError>
where
    P: TorquePredictor + Sync + ?Sized,
{
    let mut out = cfg.clone();
    if cfg.impact.threshold_mode == ThresholdMode::Auto {
        let t = calibrate_threshold(cfg, predictor, cfg.impact.calibration_runs)?;
        out.impact = cfg.impact.with_threshold(t);
        out.impact.threshold_mode = ThresholdMode::Fixed;
    }
    Ok(out)
}
