//! BF-Post: plan without Bloom filters, then decorate the fixed tree.
//!
//! Filters are injected from each hash join's build side to the probe-side
//! scan owning the crossing clause's probe endpoint, when the crossing path
//! is legal, the filter is selective enough, not a foreign key pointing at a
//! lossless primary key, and within the size cap. Row estimates are NOT
//! updated: the join order and build/probe choices stay exactly as the
//! filter-blind planner left them.

use crate::error::Result;
use crate::estimator::{mask_contains, Estimator};
use crate::frontend::{CmpOp, JoinGraph, JoinType};
use crate::plan::{BfApply, BfFeed, BfStrategy, JoinAlgo, PlanNode};

use super::PlannerConfig;

pub fn decorate(
    mut plan: PlanNode,
    est: &Estimator,
    _graph: &JoinGraph,
    cfg: &PlannerConfig,
) -> Result<PlanNode> {
    let mut next_id = 0u32;
    decorate_node(&mut plan, est, cfg, &mut next_id);
    Ok(plan)
}

fn decorate_node(node: &mut PlanNode, est: &Estimator, cfg: &PlannerConfig, next_id: &mut u32) {
    let PlanNode::Join(j) = node else { return };
    decorate_node(&mut j.build, est, cfg, next_id);
    decorate_node(&mut j.probe, est, cfg, next_id);
    if j.algo != JoinAlgo::Hash || !(j.join_type == JoinType::Inner || j.join_type == JoinType::Semi)
    {
        return;
    }
    let delta = j.build.rel_set();
    let build_set = delta;
    let probe_set = j.probe.rel_set();
    let q = est.query();
    let mut new_feeds = Vec::new();
    let clauses = j.clauses.clone();
    for ci in clauses {
        let cl = &q.clauses[ci];
        if !cl.hashable || cl.op != CmpOp::Eq {
            continue;
        }
        let (build_col, apply_col) = if mask_contains(build_set, cl.left.rel) {
            (&cl.left, &cl.right)
        } else {
            (&cl.right, &cl.left)
        };
        debug_assert!(mask_contains(probe_set, apply_col.rel));
        // Same apply-side row threshold as candidate marking.
        if est.rows_local(apply_col.rel) <= cfg.apply_row_threshold {
            continue;
        }
        // Foreign keys into a lossless primary key cannot benefit.
        let cat = est.catalog();
        let apply_table = q.table(apply_col.rel);
        let build_table = q.table(build_col.rel);
        if cat.is_primary_key(build_table, &build_col.column)
            && cat.is_foreign_key_to(
                apply_table,
                &apply_col.column,
                build_table,
                &build_col.column,
            )
        {
            let raw_rows = cat
                .table_by_name(build_table)
                .map(|t| t.rows as f64)
                .unwrap_or(0.0);
            let raw_ndv = est.column(build_col).ndv as f64;
            let lossless = est.rows_local(build_col.rel) >= raw_rows - 1e-9
                && est.ndv_within(delta, build_col) >= raw_ndv - 0.5;
            if lossless {
                continue;
            }
        }
        // Size cap, sized from what the build side may physically produce.
        if est.column(build_col).ndv as f64 > cfg.max_build_ndv {
            continue;
        }
        // Keep-fraction threshold.
        let s = est.semijoin_selectivity(apply_col, delta, build_col);
        if s > cfg.selectivity_threshold {
            continue;
        }
        // The crossing path from the probe root down to the scan must be
        // legal for a Bloom filter.
        if !legal_path(&j.probe, apply_col.rel) {
            continue;
        }
        let Some(scan) = find_scan(&mut j.probe, apply_col.rel) else {
            continue;
        };
        let PlanNode::Scan { bfs, .. } = scan else {
            unreachable!()
        };
        if bfs.iter().any(|b| b.apply == *apply_col && b.delta == delta) {
            continue;
        }
        let fpr = est.fpr_for(est.ndv_upper_bound(delta, build_col));
        let id = *next_id;
        *next_id += 1;
        bfs.push(BfApply {
            id,
            apply: apply_col.clone(),
            build: build_col.clone(),
            delta,
            est_fpr: fpr,
            est_selectivity: s,
        });
        new_feeds.push(BfFeed {
            id,
            column: build_col.clone(),
            strategy: if cfg.dop <= 1 {
                BfStrategy::BroadcastBuild
            } else {
                BfStrategy::PartitionAligned
            },
        });
    }
    j.feeds.extend(new_feeds);
}

/// True when every join between `node`'s root and the scan of `rel` may be
/// crossed by a Bloom filter heading down to that scan.
fn legal_path(node: &PlanNode, rel: usize) -> bool {
    match node {
        PlanNode::Scan { .. } => true,
        PlanNode::Join(j) => {
            let in_build = mask_contains(j.build.rel_set(), rel);
            let ok = match j.join_type {
                JoinType::Inner => true,
                JoinType::Anti | JoinType::FullOuter => false,
                JoinType::Semi => !in_build,
                JoinType::LeftOuter => in_build,
            };
            ok && legal_path(if in_build { &j.build } else { &j.probe }, rel)
        }
    }
}

fn find_scan(node: &mut PlanNode, rel: usize) -> Option<&mut PlanNode> {
    match node {
        PlanNode::Scan { rel: r, .. } if *r == rel => Some(node),
        PlanNode::Scan { .. } => None,
        PlanNode::Join(j) => {
            if mask_contains(j.build.rel_set(), rel) {
                find_scan(&mut j.build, rel)
            } else {
                find_scan(&mut j.probe, rel)
            }
        }
    }
}
