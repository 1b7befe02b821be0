//! Bottom-up cost-based join planner with Bloom-filter awareness.
//!
//! Four modes share one dynamic program over connected relation subsets:
//!
//! * `NoBf` — classical bottom-up optimization, no Bloom filters.
//! * `BfCbo` — two-phase Bloom-filter-aware optimization: phase 1 walks the
//!   join pairs once to collect the Δ sets each filter could be built from,
//!   phase 2 re-runs the dynamic program with Bloom-filtered scan sub-plans
//!   competing in every plan list.
//! * `BfPost` — plans without filters, then decorates the fixed tree with
//!   whatever filters are legal (estimates are NOT updated, mirroring
//!   post-hoc filter injection in production systems).
//! * `Naive` — single-pass variant that carries uncosted, unprunable
//!   pending-filter sub-plans and re-costs on resolution; exists to measure
//!   the search-space blow-up that the two-phase design avoids.

pub mod candidates;
pub mod dp;
pub mod naive;
pub mod post;

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::catalog::Catalog;
use crate::cost::{
    bf_build_cost, hash_join_cost, merge_join_cost, nl_join_cost, scan_cost, stream_cost, Cost,
    CostParams,
};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, EstimatorConfig, RelMask};
use crate::frontend::{ColRef, Query};
use crate::plan::{BfId, JoinAlgo, PlanNode};

pub use candidates::{Candidate, SubplanDecision, SubplanVerdict};

/// Tunables for the planner. Every knob has the documented default; a config
/// file (JSON) may override any subset. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Heuristic 2: only mark candidates whose apply side exceeds this many
    /// estimated rows after local predicates.
    pub apply_row_threshold: f64,
    /// Heuristic 6: drop filter options whose semi-join selectivity
    /// (excluding false positives) exceeds this keep-fraction.
    pub selectivity_threshold: f64,
    /// Heuristic 5: size cap on the number of distinct values a filter may
    /// be built from.
    pub max_build_ndv: f64,
    /// Heuristic 7: when a plan list holds more Bloom-filter sub-plans than
    /// this cap, keep only the fewest-rows one. 0 disables the cap.
    pub max_bf_subplans: usize,
    /// Heuristic 8: skip candidate marking entirely when the phase-1 total
    /// join-input cardinality stays below this threshold. 0 disables.
    pub total_join_input_threshold: f64,
    /// Heuristic 9: also consider filters in the reverse direction of each
    /// eligible clause (smaller-side apply), keeping only Δ sets whose
    /// estimated rows stay below the apply side.
    pub h9: bool,
    /// Degree of parallelism assumed when assigning filter strategies and
    /// stream costs.
    pub dop: usize,
    /// Node budget for the naive planner; exceeded is reported, not fatal.
    pub naive_node_budget: usize,
    /// Cap on the Cartesian Δ combinations materialized per scan
    /// (fewest-rows combinations are kept first).
    pub max_delta_combos: usize,
    /// When set, every filter's false-positive rate is pinned to this value
    /// instead of being derived from the sizing formula.
    pub pinned_fpr: Option<f64>,
    /// Bits allocated per expected distinct value when sizing filters.
    pub bits_per_distinct: f64,
    /// Selectivity assumed for predicates the estimator cannot model.
    pub unknown_selectivity: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            apply_row_threshold: 10_000.0,
            selectivity_threshold: 2.0 / 3.0,
            max_build_ndv: 2_000_000.0,
            max_bf_subplans: 4,
            total_join_input_threshold: 0.0,
            h9: false,
            dop: 1,
            naive_node_budget: 200_000,
            max_delta_combos: 16,
            pinned_fpr: None,
            bits_per_distinct: 10.0,
            unknown_selectivity: 1.0 / 3.0,
        }
    }
}

impl PlannerConfig {
    /// Parse a JSON config document, validating ranges.
    pub fn load(text: &str) -> Result<Self> {
        let cfg: PlannerConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.selectivity_threshold > 0.0 && self.selectivity_threshold <= 1.0) {
            return bad("selectivity_threshold must be in (0, 1]");
        }
        if self.apply_row_threshold < 0.0 {
            return bad("apply_row_threshold must be non-negative");
        }
        if self.max_build_ndv <= 0.0 {
            return bad("max_build_ndv must be positive");
        }
        if self.dop == 0 {
            return bad("dop must be at least 1");
        }
        if self.max_delta_combos == 0 {
            return bad("max_delta_combos must be at least 1");
        }
        if let Some(f) = self.pinned_fpr {
            if !(0.0..1.0).contains(&f) {
                return bad("pinned_fpr must be in [0, 1)");
            }
        }
        if self.bits_per_distinct <= 0.0 {
            return bad("bits_per_distinct must be positive");
        }
        if !(0.0..=1.0).contains(&self.unknown_selectivity) {
            return bad("unknown_selectivity must be in [0, 1]");
        }
        Ok(())
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            unknown_selectivity: self.unknown_selectivity,
            bits_per_distinct: self.bits_per_distinct,
            pinned_fpr: self.pinned_fpr,
        }
    }
}

/// Which planning algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerMode {
    NoBf,
    BfPost,
    BfCbo,
    Naive,
}

impl PlannerMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "no-bf" => Ok(PlannerMode::NoBf),
            "bf-post" => Ok(PlannerMode::BfPost),
            "bf-cbo" => Ok(PlannerMode::BfCbo),
            "naive" => Ok(PlannerMode::Naive),
            other => Err(Error::InvalidConfig(format!(
                "unknown planner mode '{other}' (expected no-bf, bf-post, bf-cbo, naive)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlannerMode::NoBf => "no-bf",
            PlannerMode::BfPost => "bf-post",
            PlannerMode::BfCbo => "bf-cbo",
            PlannerMode::Naive => "naive",
        }
    }
}

/// Search-effort counters, comparable across modes.
#[derive(Debug, Clone, Default)]
pub struct PlannerMetrics {
    /// Sub-plans constructed and offered to a plan list.
    pub subplans_created: usize,
    /// Sub-plans surviving in plan lists when planning finished.
    pub subplans_retained: usize,
    /// Bloom-filtered scan sub-plans materialized (phase 2 leaves).
    pub bf_scan_subplans: usize,
    /// Ordered join pairs costed.
    pub pairs_considered: usize,
    /// Total join-input cardinality accumulated during phase 1.
    pub total_join_input: f64,
    /// Naive mode only: the node budget was hit and pending sub-plan
    /// creation stopped early.
    pub naive_budget_exceeded: bool,
}

/// One unresolved Bloom filter attached to a sub-plan: the property that the
/// dynamic program must discharge before the sub-plan can become a final
/// plan.
#[derive(Debug, Clone)]
pub struct Unres {
    pub id: BfId,
    /// Index into the candidate list.
    pub cand: usize,
    pub apply: ColRef,
    pub build: ColRef,
    pub delta: RelMask,
    /// Semi-join selectivity of the filter (excluding false positives).
    pub s: f64,
    pub fpr: f64,
}

impl Unres {
    /// Fraction of apply-side rows surviving the filter, false positives
    /// included.
    pub fn keep(&self) -> f64 {
        self.s + (1.0 - self.s) * self.fpr
    }
}

/// A memoized sub-plan: physical tree plus the properties the planner prunes
/// on.
#[derive(Debug, Clone)]
pub struct Sub {
    pub rels: RelMask,
    pub node: PlanNode,
    pub rows: f64,
    pub cost: Cost,
    /// Outstanding filters, sorted by id.
    pub unresolved: Vec<Unres>,
}

impl Sub {
    /// Pruning signature: sub-plans compare only against others promising
    /// the same outstanding filters.
    pub fn signature(&self) -> Vec<(usize, RelMask)> {
        let mut sig: Vec<(usize, RelMask)> =
            self.unresolved.iter().map(|u| (u.cand, u.delta)).collect();
        sig.sort_unstable();
        sig
    }

    pub fn coverage(&self) -> RelMask {
        self.node.coverage()
    }
}

/// Result of planning one query.
#[derive(Debug, Clone)]
pub struct Planned {
    pub plan: PlanNode,
    pub cost: Cost,
    pub rows: f64,
    pub metrics: PlannerMetrics,
    /// Candidates after phase 1 (empty for modes that skip marking).
    pub candidates: Vec<Candidate>,
    /// Accept/reject log for Bloom-filtered scan sub-plan creation.
    pub decisions: Vec<SubplanDecision>,
}

/// Recompute the cost of a finished tree from its stored row estimates.
/// The dynamic program costs candidate trees through this same function, so
/// re-costing a plan reproduces the planner's numbers exactly.
pub fn plan_cost(node: &PlanNode, catalog: &Catalog, query: &Query, p: &CostParams, dop: usize) -> Cost {
    match node {
        PlanNode::Scan { rel, bfs, .. } => {
            let table = catalog
                .table_by_name(&query.relations[*rel].table)
                .expect("plan references a cataloged table");
            scan_cost(table.rows as f64, bfs.len(), p)
        }
        PlanNode::Join(j) => {
            let mut c = plan_cost(&j.build, catalog, query, p, dop);
            c = c.add(plan_cost(&j.probe, catalog, query, p, dop));
            let build_rows = j.build.est_rows();
            let probe_rows = j.probe.est_rows();
            let local = match j.algo {
                JoinAlgo::Hash => hash_join_cost(build_rows, probe_rows, p),
                JoinAlgo::NestedLoop => nl_join_cost(probe_rows, build_rows, p),
                JoinAlgo::Merge => merge_join_cost(build_rows, probe_rows, p),
            };
            c = c.add(local);
            for _feed in &j.feeds {
                c = c.add(bf_build_cost(build_rows, p));
            }
            if let Some(kind) = j.build_stream {
                c = c.add(stream_cost(kind, build_rows, dop, p));
            }
            if let Some(kind) = j.probe_stream {
                c = c.add(stream_cost(kind, probe_rows, dop, p));
            }
            c
        }
    }
}

/// Plan `query` in the given mode.
pub fn plan_query(
    catalog: &Catalog,
    query: &Query,
    cfg: &PlannerConfig,
    costp: &CostParams,
    mode: PlannerMode,
) -> Result<Planned> {
    cfg.validate()?;
    costp.validate()?;
    let graph = crate::frontend::build_join_graph(query);
    let est = Estimator::new(catalog, query, cfg.estimator_config());
    let mut metrics = PlannerMetrics::default();

    let planned = match mode {
        PlannerMode::NoBf => {
            let best = dp::optimize(&est, &graph, cfg, costp, &[], &HashMap::new(), &mut metrics)?;
            Planned {
                plan: best.node,
                cost: best.cost,
                rows: best.rows,
                metrics,
                candidates: Vec::new(),
                decisions: Vec::new(),
            }
        }
        PlannerMode::BfCbo => {
            let mut cands = candidates::mark_candidates(&est, &graph, cfg);
            candidates::phase1_collect(&est, &graph, cfg, &mut cands, &mut metrics);
            let mut decisions = Vec::new();
            let mut next_id: BfId = 0;
            let mut scan_subs: HashMap<usize, Vec<Sub>> = HashMap::new();
            for rel in 0..query.relations.len() {
                let subs = candidates::bf_scan_subplans(
                    &est, cfg, costp, &cands, rel, &mut next_id, &mut decisions, &mut metrics,
                )?;
                if !subs.is_empty() {
                    scan_subs.insert(rel, subs);
                }
            }
            let best = dp::optimize(&est, &graph, cfg, costp, &cands, &scan_subs, &mut metrics)?;
            Planned {
                plan: best.node,
                cost: best.cost,
                rows: best.rows,
                metrics,
                candidates: cands,
                decisions,
            }
        }
        PlannerMode::BfPost => {
            let best = dp::optimize(&est, &graph, cfg, costp, &[], &HashMap::new(), &mut metrics)?;
            let decorated = post::decorate(best.node, &est, &graph, cfg)?;
            let cost = plan_cost(&decorated, catalog, query, costp, cfg.dop);
            Planned {
                rows: best.rows,
                plan: decorated,
                cost,
                metrics,
                candidates: Vec::new(),
                decisions: Vec::new(),
            }
        }
        PlannerMode::Naive => naive::plan(&est, &graph, cfg, costp, &mut metrics)?,
    };

    crate::plan::validate(&planned.plan, query)?;
    Ok(planned)
}

#[cfg(test)]
pub(crate) mod tests;
