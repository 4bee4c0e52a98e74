//! Run artifacts: per-cycle JSON lines, run metrics, the aware/naive
//! comparison, and grid dumps for plotting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use awarekit_core::attention::{AttentionGrid, Cell, PolarRequirementMap, SEGMENTS};
use awarekit_core::pipeline::{CycleCounts, CycleResult, RunMetrics, RunMode};
use awarekit_core::situation::Situation;
use awarekit_core::world::{SubSituation, ZoneTag};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationRecord {
    pub location: String,
    pub sub: Vec<String>,
}

impl SituationRecord {
    pub fn from_situation(s: &Situation) -> Self {
        Self {
            location: s.location.as_str().into(),
            sub: s.sub.iter().map(|x| x.as_str().to_string()).collect(),
        }
    }

    pub fn to_situation(&self) -> Option<Situation> {
        let mut s = Situation::new(self.location.parse::<ZoneTag>().ok()?);
        for tag in &self.sub {
            s = s.with(tag.parse::<SubSituation>().ok()?);
        }
        Some(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub emitted: usize,
    pub filtered: usize,
    pub tracked: usize,
}

/// One line of `cycles.jsonl`. Holds only deterministic fields; measured
/// timings go to `timing.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub schema: u32,
    pub cycle: usize,
    pub t: f64,
    pub situation: SituationRecord,
    pub modules: Vec<String>,
    pub module_cost: BTreeMap<String, f64>,
    pub total_cost: f64,
    pub processed: BTreeMap<String, usize>,
    pub counts: CountsRecord,
    pub max_requirement: Option<f64>,
    pub relevant_cells: usize,
    pub degraded: bool,
}

impl CycleRecord {
    pub fn from_result(c: &CycleResult) -> Self {
        Self {
            schema: SCHEMA,
            cycle: c.cycle,
            t: c.timestamp,
            situation: SituationRecord::from_situation(&c.situation),
            modules: c.modules.iter().map(|m| m.0.clone()).collect(),
            module_cost: c.module_cost.iter().map(|(k, v)| (k.0.clone(), *v)).collect(),
            total_cost: c.total_cost,
            processed: c.processed.iter().map(|(k, v)| (k.0.clone(), *v)).collect(),
            counts: CountsRecord {
                emitted: c.counts.emitted,
                filtered: c.counts.filtered,
                tracked: c.counts.tracked,
            },
            max_requirement: c.max_requirement,
            relevant_cells: c.relevant_cells,
            degraded: c.degraded,
        }
    }

    /// Rebuilds the cycle result as far as the log records it.
    pub fn to_result(&self) -> Option<CycleResult> {
        Some(CycleResult {
            cycle: self.cycle,
            timestamp: self.t,
            situation: self.situation.to_situation()?,
            modules: self.modules.iter().map(|m| m.as_str().into()).collect(),
            module_cost: self.module_cost.iter().map(|(k, v)| (k.as_str().into(), *v)).collect(),
            total_cost: self.total_cost,
            processed: self.processed.iter().map(|(k, v)| (k.as_str().into(), *v)).collect(),
            counts: CycleCounts {
                emitted: self.counts.emitted,
                filtered: self.counts.filtered,
                tracked: self.counts.tracked,
            },
            max_requirement: self.max_requirement,
            relevant_cells: self.relevant_cells,
            degraded: self.degraded,
            overhead_ms: 0.0,
            requirement: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub schema: u32,
    pub cycle: usize,
    pub overhead_ms: f64,
}

/// Serializes cycles as JSON lines, one record per line.
pub fn cycles_jsonl(cycles: &[CycleResult]) -> String {
    let mut out = String::new();
    for c in cycles {
        out.push_str(&serde_json::to_string(&CycleRecord::from_result(c)).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn timing_jsonl(cycles: &[CycleResult]) -> String {
    let mut out = String::new();
    for c in cycles {
        let r = TimingRecord {
            schema: SCHEMA,
            cycle: c.cycle,
            overhead_ms: c.overhead_ms,
        };
        out.push_str(&serde_json::to_string(&r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_cycles_jsonl(text: &str) -> Result<Vec<CycleRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadRecord {
    pub total_ms: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub schema: u32,
    pub mode: String,
    pub aggregation: String,
    pub seed: u64,
    pub frames: usize,
    pub uptime: BTreeMap<String, f64>,
    pub avg_active_modules: BTreeMap<String, f64>,
    pub accumulated_cost: f64,
    pub module_cost: BTreeMap<String, f64>,
    /// Accumulated cost of the naive baseline on the same inputs.
    pub naive_cost: f64,
    pub cost_ratio: f64,
    pub degraded_cycles: usize,
    pub overhead: OverheadRecord,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

impl MetricsDoc {
    pub fn new(m: &RunMetrics, aggregation: &str, seed: u64, naive_cost: f64) -> Self {
        Self {
            schema: SCHEMA,
            mode: m.mode.as_str().into(),
            aggregation: aggregation.into(),
            seed,
            frames: m.frames,
            uptime: m.uptime.iter().map(|(k, v)| (k.0.clone(), *v)).collect(),
            avg_active_modules: m.avg_active_modules.iter().map(|(k, v)| (k.as_str().into(), *v)).collect(),
            accumulated_cost: m.accumulated_cost,
            module_cost: m.module_cost.iter().map(|(k, v)| (k.0.clone(), *v)).collect(),
            naive_cost,
            cost_ratio: ratio(m.accumulated_cost, naive_cost),
            degraded_cycles: m.degraded_cycles,
            overhead: OverheadRecord {
                total_ms: m.overhead_ms_total,
                mean_ms: m.overhead_ms_mean(),
                max_ms: m.overhead_ms_max,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleComparison {
    pub aware_cost: f64,
    pub naive_cost: f64,
    /// Aware accumulated cost of this module over the naive total.
    pub normalized: f64,
    pub aware_uptime: f64,
    pub naive_uptime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDoc {
    pub schema: u32,
    pub frames: usize,
    pub aggregation: String,
    pub seed: u64,
    pub aware_cost: f64,
    pub naive_cost: f64,
    pub cost_ratio: f64,
    pub reduction_percent: f64,
    pub modules: BTreeMap<String, ModuleComparison>,
    pub aware_overhead_ms_mean: f64,
}

impl ComparisonDoc {
    pub fn new(aware: &RunMetrics, naive: &RunMetrics, aggregation: &str, seed: u64) -> Self {
        debug_assert_eq!(aware.mode, RunMode::Aware);
        let total = naive.accumulated_cost;
        let modules = naive
            .module_cost
            .keys()
            .chain(aware.module_cost.keys())
            .map(|id| {
                let a = aware.module_cost.get(id).copied().unwrap_or(0.0);
                let n = naive.module_cost.get(id).copied().unwrap_or(0.0);
                (
                    id.0.clone(),
                    ModuleComparison {
                        aware_cost: a,
                        naive_cost: n,
                        normalized: ratio(a, total),
                        aware_uptime: aware.uptime.get(id).copied().unwrap_or(0.0),
                        naive_uptime: naive.uptime.get(id).copied().unwrap_or(0.0),
                    },
                )
            })
            .collect();
        let cost_ratio = ratio(aware.accumulated_cost, total);
        Self {
            schema: SCHEMA,
            frames: aware.frames,
            aggregation: aggregation.into(),
            seed,
            aware_cost: aware.accumulated_cost,
            naive_cost: total,
            cost_ratio,
            reduction_percent: if total > 0.0 { (1.0 - cost_ratio) * 100.0 } else { 0.0 },
            modules,
            aware_overhead_ms_mean: aware.overhead_ms_mean(),
        }
    }
}

/// Grid as rows of integers, north (largest y) first.
pub fn grid_csv(grid: &AttentionGrid) -> String {
    let n = grid.spec().size();
    let mut out = String::with_capacity(n * n * 2);
    for row in (0..n).rev() {
        for col in 0..n {
            if col > 0 {
                out.push(',');
            }
            let v = grid.get(Cell { col, row });
            let _ = write!(out, "{}", v.round() as i64);
        }
        out.push('\n');
    }
    out
}

pub fn polar_csv(polar: &PolarRequirementMap) -> String {
    let mut out = String::from("segment,p_req,d_req\n");
    for s in 0..SEGMENTS {
        let _ = writeln!(out, "{s},{},{}", polar.p_req(s), polar.d_req(s));
    }
    out
}

/// Plain-text summary printed after a run.
pub fn summary_table(doc: &MetricsDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode {}  aggregation {}  frames {}", doc.mode, doc.aggregation, doc.frames);
    let _ = writeln!(out, "{:<14} {:>8} {:>12}", "module", "uptime", "cost");
    for (id, u) in &doc.uptime {
        let c = doc.module_cost.get(id).copied().unwrap_or(0.0);
        let _ = writeln!(out, "{id:<14} {:>7.1}% {c:>12.3}", u * 100.0);
    }
    let _ = writeln!(
        out,
        "accumulated cost {:.3} / naive {:.3}  ratio {:.4}",
        doc.accumulated_cost, doc.naive_cost, doc.cost_ratio
    );
    let _ = writeln!(
        out,
        "overhead mean {:.3} ms  max {:.3} ms  degraded cycles {}",
        doc.overhead.mean_ms, doc.overhead.max_ms, doc.degraded_cycles
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use awarekit_core::attention::{combine, GridSpec, LayerGrid};
    use awarekit_core::geometry::Point2;

    #[test]
    fn grid_csv_is_north_up() {
        let spec = GridSpec::new(3, 1.0).unwrap();
        let origin = Point2::new(0.0, 0.0);
        assert_eq!(grid_csv(&AttentionGrid::filled(spec, origin, 2.0)), "2,2,2\n2,2,2\n2,2,2\n");
        let mut l = LayerGrid::zeros(spec, origin);
        l.mark_offset(Point2::new(-1.0, 1.0));
        let grid = combine(spec, origin, &[l], 0.0).unwrap();
        assert_eq!(grid_csv(&grid), "1,0,0\n0,0,0\n0,0,0\n");
    }

    #[test]
    fn polar_csv_layout() {
        let mut p = PolarRequirementMap::empty();
        p.set(0, 2.0, 10.0);
        let csv = polar_csv(&p);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), SEGMENTS + 1);
        assert_eq!(lines[0], "segment,p_req,d_req");
        assert_eq!(lines[1], "0,2,10");
        assert_eq!(lines[2], "1,0,0");
    }
}
