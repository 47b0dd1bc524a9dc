use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{report_text, summarize, HarnessError, RunRecord, TraceRow};
use crate::impact::{event_rows, events_to_csv, EventRow};
use crate::types::{JointState, TorqueVector};

pub const TRACE_HEADER: &str =
    "step,theta_h,theta_k,omega_h,omega_k,tm_h,tm_k,tp_h,tp_k,tf_h,tf_k,innov_h,innov_k,cp00,cp01,cp11";
const TRACE_COLUMNS: usize = 16;

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let s = r.state;
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.step,
            s.theta_h,
            s.theta_k,
            s.omega_h,
            s.omega_k,
            r.t_m.hip,
            r.t_m.knee,
            r.t_p.hip,
            r.t_p.knee,
            r.t_f.hip,
            r.t_f.knee,
            r.innovation.hip,
            r.innovation.knee,
            r.c_p[0],
            r.c_p[1],
            r.c_p[2]
        );
    }
    out
}

pub fn trace_from_csv(text: &str) -> Result<Vec<TraceRow>, HarnessError> {
    let err = |line: usize, msg: String| HarnessError::Parse {
        file: "trace".into(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == TRACE_HEADER => {}
        _ => return Err(err(1, "missing trace header".into())),
    }
    let mut rows: Vec<TraceRow> = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != TRACE_COLUMNS {
            return Err(err(i + 1, format!("expected {TRACE_COLUMNS} columns, found {}", cols.len())));
        }
        let step: usize = cols[0]
            .parse()
            .map_err(|_| err(i + 1, format!("bad step `{}`", cols[0])))?;
        if rows.last().is_some_and(|prev| prev.step >= step) {
            return Err(err(i + 1, "steps must be strictly increasing".into()));
        }
        let mut v = [0.0; TRACE_COLUMNS - 1];
        for (slot, tok) in v.iter_mut().zip(&cols[1..]) {
            *slot = tok
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(i + 1, format!("bad number `{tok}`")))?;
        }
        rows.push(TraceRow {
            step,
            state: JointState::new(v[0], v[1], v[2], v[3]),
            t_m: TorqueVector::new(v[4], v[5]),
            t_p: TorqueVector::new(v[6], v[7]),
            t_f: TorqueVector::new(v[8], v[9]),
            innovation: TorqueVector::new(v[10], v[11]),
            c_p: [v[12], v[13], v[14]],
        });
    }
    Ok(rows)
}

pub fn record_events(record: &RunRecord) -> Vec<EventRow> {
    event_rows(&record.run_id, &record.estimates())
}

/// Paths written by [`emit_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub trace: PathBuf,
    pub events: PathBuf,
    pub report: PathBuf,
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, HarnessError> {
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Writes `trace.csv`, `events.csv` and `report.txt` into `dir`.
pub fn emit_run(record: &RunRecord, dir: &Path) -> Result<EmittedFiles, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let stats = summarize(std::slice::from_ref(record));
    Ok(EmittedFiles {
        trace: write(dir.join("trace.csv"), &trace_to_csv(&record.trace_rows()))?,
        events: write(dir.join("events.csv"), &events_to_csv(&record_events(record)))?,
        report: write(dir.join("report.txt"), &report_text(&stats, record.threshold))?,
    })
}

/// Writes the combined `events.csv` and the summary `report.txt` for a set
/// of runs.
pub fn emit_summary(records: &[RunRecord], threshold: TorqueVector, dir: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let events: Vec<EventRow> = records.iter().flat_map(record_events).collect();
    let stats = summarize(records);
    Ok((
        write(dir.join("events.csv"), &events_to_csv(&events))?,
        write(dir.join("report.txt"), &report_text(&stats, threshold))?,
    ))
}
