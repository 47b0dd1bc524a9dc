use std::fmt::Write as _;

use super::RunRecord;
use crate::types::TorqueVector;

/// Componentwise min and max of a residual over a section of ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: TorqueVector,
    pub max: TorqueVector,
}

impl Range {
    fn of(values: impl Iterator<Item = TorqueVector>) -> Option<Self> {
        let mut out: Option<Range> = None;
        for v in values {
            out = Some(match out {
                None => Range { min: v, max: v },
                Some(r) => Range {
                    min: TorqueVector::new(r.min.hip.min(v.hip), r.min.knee.min(v.knee)),
                    max: TorqueVector::new(r.max.hip.max(v.hip), r.max.knee.max(v.knee)),
                },
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub runs: usize,
    /// `|T_f - T_p|` before the trigger tick (every tick without contact).
    pub pre_collision: Option<Range>,
    pub post_collision: Option<Range>,
    /// Runs with a contact scheduled.
    pub contact_runs: usize,
    pub detected: usize,
    /// Per contact run, in input order.
    pub latencies: Vec<Option<usize>>,
    pub false_positives: usize,
}

impl SummaryStats {
    pub fn max_latency(&self) -> Option<usize> {
        self.latencies.iter().flatten().copied().max()
    }

    pub fn mean_latency(&self) -> Option<f64> {
        let l: Vec<usize> = self.latencies.iter().flatten().copied().collect();
        (!l.is_empty()).then(|| l.iter().sum::<usize>() as f64 / l.len() as f64)
    }
}

pub fn summarize(records: &[RunRecord]) -> SummaryStats {
    let pre = records.iter().flat_map(|r| {
        let t = r.trigger_step.unwrap_or(usize::MAX);
        r.rows.iter().filter(move |row| row.trace.step < t).map(|row| row.residual())
    });
    let post = records.iter().flat_map(|r| {
        let t = r.trigger_step.unwrap_or(usize::MAX);
        r.rows.iter().filter(move |row| row.trace.step >= t).map(|row| row.residual())
    });
    let contact: Vec<&RunRecord> = records.iter().filter(|r| r.trigger_step.is_some()).collect();
    SummaryStats {
        runs: records.len(),
        pre_collision: Range::of(pre),
        post_collision: Range::of(post),
        contact_runs: contact.len(),
        detected: contact.iter().filter(|r| r.detection().is_some()).count(),
        latencies: contact.iter().map(|r| r.latency()).collect(),
        false_positives: records.iter().map(|r| r.false_positives()).sum(),
    }
}

/// Plain-text report laid out like a min/max-per-motor table.
pub fn report_text(stats: &SummaryStats, threshold: TorqueVector) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "runs: {}", stats.runs);
    let _ = writeln!(out, "threshold (N.cm): hip {:.4} knee {:.4}", threshold.hip, threshold.knee);
    let _ = writeln!(out);
    let _ = writeln!(out, "|T_f - T_p| (N.cm)   pre-collision            post-collision");
    let _ = writeln!(out, "motor                min         max          min         max");
    let cell = |r: &Option<Range>, hip: bool| match r {
        Some(r) => {
            let (lo, hi) = if hip { (r.min.hip, r.max.hip) } else { (r.min.knee, r.max.knee) };
            format!("{lo:>10.4}  {hi:>10.4}")
        }
        None => format!("{:>10}  {:>10}", "-", "-"),
    };
    for (name, hip) in [("hip", true), ("knee", false)] {
        let _ = writeln!(
            out,
            "{name:<19}{}   {}",
            cell(&stats.pre_collision, hip),
            cell(&stats.post_collision, hip)
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "detected: {}/{}", stats.detected, stats.contact_runs);
    match (stats.mean_latency(), stats.max_latency()) {
        (Some(mean), Some(max)) => {
            let _ = writeln!(out, "latency (ticks): mean {mean:.2} max {max}");
        }
        _ => {
            let _ = writeln!(out, "latency (ticks): -");
        }
    }
    let _ = writeln!(out, "false positives: {}", stats.false_positives);
    out
}
