//! Run reports: per-(query, mode) planning and execution metrics with
//! No-BF-normalized comparison columns, serialized as versioned CSV or a
//! markdown table.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use crate::error::Result;
use crate::executor::{execute, ExecOptions};
use crate::frontend::parse;
use crate::plan::PlanNode;
use crate::planner::{plan_query, PlannerMode};
use crate::workload::Fixture;

/// Versioned CSV schema identifier; emitted as the first line of every CSV.
/// Columns are never reordered within a version.
pub const CSV_VERSION: &str = "bloomqo_report_v1";

pub const CSV_COLUMNS: [&str; 12] = [
    "fixture",
    "query",
    "mode",
    "planning_ms",
    "est_cost",
    "bf_count",
    "subplans_created",
    "subplans_retained",
    "join_input_rows",
    "result_rows",
    "est_actual_mae",
    "norm_join_input",
];

/// One (query, mode) measurement. Execution columns are absent for
/// planner-only runs.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub fixture: String,
    pub query: String,
    pub mode: PlannerMode,
    pub planning_ms: f64,
    pub est_cost: f64,
    pub bf_count: usize,
    pub subplans_created: usize,
    pub subplans_retained: usize,
    /// Total executed rows entering join operators (build + probe).
    pub join_input_rows: Option<u64>,
    pub result_rows: Option<u64>,
    /// Mean absolute error of per-node estimated vs actual rows.
    pub est_actual_mae: Option<f64>,
    /// `join_input_rows` normalized to the same query under No-BF.
    pub norm_join_input: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
}

fn mode_name(m: PlannerMode) -> &'static str {
    match m {
        PlannerMode::NoBf => "nobf",
        PlannerMode::BfPost => "bfpost",
        PlannerMode::BfCbo => "bfcbo",
        PlannerMode::Naive => "naive",
    }
}

/// Parses a mode name as used on the command line and in CSV output.
pub fn parse_mode(s: &str) -> Option<PlannerMode> {
    match s {
        "nobf" => Some(PlannerMode::NoBf),
        "bfpost" => Some(PlannerMode::BfPost),
        "bfcbo" => Some(PlannerMode::BfCbo),
        "naive" => Some(PlannerMode::Naive),
        _ => None,
    }
}

/// Estimated rows of every node in pre-order (node, build, probe) — the same
/// numbering the executor's metrics use.
pub fn node_estimates(plan: &PlanNode) -> Vec<f64> {
    fn walk(n: &PlanNode, out: &mut Vec<f64>) {
        match n {
            PlanNode::Scan { est_rows, .. } => out.push(*est_rows),
            PlanNode::Join(j) => {
                out.push(j.est_rows);
                walk(&j.build, out);
                walk(&j.probe, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(plan, &mut out);
    out
}

/// Mean absolute error between a plan's per-node estimates and the executed
/// actuals, both in pre-order numbering.
pub fn estimate_mae(plan: &PlanNode, actuals: &HashMap<usize, u64>) -> f64 {
    let ests = node_estimates(plan);
    if ests.is_empty() {
        return 0.0;
    }
    let sum: f64 = ests
        .iter()
        .enumerate()
        .map(|(id, est)| (est - actuals.get(&id).copied().unwrap_or(0) as f64).abs())
        .sum();
    sum / ests.len() as f64
}

impl RunReport {
    /// Plans (and, when the fixture carries data, executes) every fixture
    /// query under every requested mode.
    pub fn collect(fx: &Fixture, modes: &[PlannerMode]) -> Result<RunReport> {
        let mut report = RunReport::default();
        for fq in &fx.queries {
            for &mode in modes {
                let q = parse(fq.sql, &fx.catalog)?;
                let t0 = Instant::now();
                let planned = plan_query(&fx.catalog, &q, &fx.config, &fx.cost, mode)?;
                let planning_ms = t0.elapsed().as_secs_f64() * 1e3;
                let mut row = ReportRow {
                    fixture: fx.name.to_string(),
                    query: fq.label.to_string(),
                    mode,
                    planning_ms,
                    est_cost: planned.cost.total,
                    bf_count: planned.plan.bf_count(),
                    subplans_created: planned.metrics.subplans_created,
                    subplans_retained: planned.metrics.subplans_retained,
                    join_input_rows: None,
                    result_rows: None,
                    est_actual_mae: None,
                    norm_join_input: None,
                };
                if let Some(db) = &fx.data {
                    let opts = ExecOptions {
                        dop: fx.config.dop.max(1),
                        bits_per_distinct: fx.config.bits_per_distinct,
                        ..ExecOptions::default()
                    };
                    let (rs, m) = execute(&planned.plan, &q, db, &opts)?;
                    row.join_input_rows = Some(m.join_input_rows());
                    row.result_rows = Some(rs.rows.len() as u64);
                    row.est_actual_mae = Some(estimate_mae(&planned.plan, &m.actual_rows()));
                }
                report.rows.push(row);
            }
        }
        report.normalize();
        Ok(report)
    }

    /// Fills the normalized columns: executed join-input rows divided by the
    /// No-BF measurement of the same (fixture, query).
    pub fn normalize(&mut self) {
        let baselines: HashMap<(String, String), u64> = self
            .rows
            .iter()
            .filter(|r| r.mode == PlannerMode::NoBf)
            .filter_map(|r| {
                r.join_input_rows
                    .map(|v| ((r.fixture.clone(), r.query.clone()), v))
            })
            .collect();
        for r in &mut self.rows {
            r.norm_join_input = match (
                r.join_input_rows,
                baselines.get(&(r.fixture.clone(), r.query.clone())),
            ) {
                (Some(v), Some(&b)) if b > 0 => Some(v as f64 / b as f64),
                _ => None,
            };
        }
    }

    pub fn merge(&mut self, other: RunReport) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_VERSION}");
        let _ = writeln!(out, "{}", CSV_COLUMNS.join(","));
        for r in &self.rows {
            let opt_u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
            let opt_f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{:.1},{},{},{},{},{},{},{}",
                r.fixture,
                r.query,
                mode_name(r.mode),
                r.planning_ms,
                r.est_cost,
                r.bf_count,
                r.subplans_created,
                r.subplans_retained,
                opt_u(r.join_input_rows),
                opt_u(r.result_rows),
                opt_f(r.est_actual_mae),
                opt_f(r.norm_join_input),
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "| fixture | query | mode | plan ms | est cost | BFs | join-input rows | norm |"
        );
        let _ = writeln!(out, "|---|---|---|---:|---:|---:|---:|---:|");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.2} | {:.0} | {} | {} | {} |",
                r.fixture,
                r.query,
                mode_name(r.mode),
                r.planning_ms,
                r.est_cost,
                r.bf_count,
                r.join_input_rows
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "-".into()),
                r.norm_join_input
                    .map(|v| format!("{v:.3}"))
                    .unwrap_or_else(|| "-".into()),
            );
        }
        out
    }
}
