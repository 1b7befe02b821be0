//! Phase 2: bottom-up dynamic programming over relation subsets with
//! property-based plan lists. Sub-plans carrying unresolved Bloom filters
//! compete in the same lists as ordinary plans but are only comparable
//! against sub-plans promising the same outstanding filters.

use std::collections::HashMap;

use crate::cost::{stream_cost, CostParams, StreamKind};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, RelMask};
use crate::frontend::{CmpOp, JoinGraph, JoinType, Query};
use crate::plan::{BfFeed, BfStrategy, JoinAlgo, JoinNode, PlanNode};

use super::{plan_cost, Candidate, PlannerConfig, PlannerMetrics, Sub, Unres};

/// A relation set may only be formed if every pendant right relation of a
/// non-inner clause either stands alone or is accompanied by the clause's
/// left relation (so the non-inner join happens before anything else touches
/// the pendant relation).
pub fn admissible(q: &Query, mask: RelMask) -> bool {
    for cl in &q.clauses {
        if cl.join_type == JoinType::Inner {
            continue;
        }
        let r = 1u64 << cl.right.rel;
        if mask & r != 0 && mask != r && mask & (1u64 << cl.left.rel) == 0 {
            return false;
        }
    }
    true
}

/// Classifies the clauses crossing an (outer, inner) cut and decides whether
/// a join with build side `inner` and probe side `outer` may exist. Phase 1
/// walks exactly the pairs this accepts.
pub fn pair_feasible(q: &Query, _graph: &JoinGraph, outer: RelMask, inner: RelMask) -> bool {
    classify_cut(q, outer, inner).is_some()
}

/// Crossing structure of a cut, when a (probe=outer, build=inner) join is
/// admissible: the clause indices, the join type, and whether a hashable
/// equality clause exists.
pub struct Cut {
    pub clauses: Vec<usize>,
    pub join_type: JoinType,
    pub hashable_eq: bool,
}

pub fn classify_cut(q: &Query, outer: RelMask, inner: RelMask) -> Option<Cut> {
    if !admissible(q, outer) || !admissible(q, inner) || !admissible(q, outer | inner) {
        return None;
    }
    let mut clauses = Vec::new();
    let mut jt = JoinType::Inner;
    let mut hashable_eq = false;
    for (ci, cl) in q.clauses.iter().enumerate() {
        let (l, r) = (1u64 << cl.left.rel, 1u64 << cl.right.rel);
        let crosses = (l & outer != 0 && r & inner != 0) || (l & inner != 0 && r & outer != 0);
        if !crosses {
            continue;
        }
        clauses.push(ci);
        if cl.hashable && cl.op == CmpOp::Eq {
            hashable_eq = true;
        }
        if cl.join_type != JoinType::Inner {
            if jt != JoinType::Inner && jt != cl.join_type {
                return None; // mixed non-inner types cannot share a join
            }
            jt = cl.join_type;
            // Physical convention: the pendant right relation is the build
            // side, alone.
            if inner != r {
                return None;
            }
        }
    }
    Some(Cut {
        clauses,
        join_type: jt,
        hashable_eq,
    })
}

/// Runs the dynamic program. `scan_subs` holds the Bloom-filtered scan
/// sub-plans per relation (empty maps give the classical No-BF planner).
pub fn optimize(
    est: &Estimator,
    _graph: &JoinGraph,
    cfg: &PlannerConfig,
    costp: &CostParams,
    _cands: &[Candidate],
    scan_subs: &HashMap<usize, Vec<Sub>>,
    metrics: &mut PlannerMetrics,
) -> Result<Sub> {
    let q = est.query();
    let n = q.relations.len();
    if n == 0 || n > 63 {
        return Err(Error::NoPlan("empty or oversized relation set".into()));
    }
    let full: RelMask = (1u64 << n) - 1;
    let mut lists: Vec<Vec<Sub>> = vec![Vec::new(); (full + 1) as usize];

    for rel in 0..n {
        let rows = est.rows_local(rel);
        let node = PlanNode::Scan {
            rel,
            bfs: Vec::new(),
            est_rows: rows,
        };
        let cost = plan_cost(&node, est.catalog(), est.query(), costp, cfg.dop);
        let plain = Sub {
            rels: 1u64 << rel,
            node,
            rows,
            cost,
            unresolved: Vec::new(),
        };
        insert(&mut lists[(1u64 << rel) as usize], plain, cfg, metrics);
        if let Some(subs) = scan_subs.get(&rel) {
            for s in subs {
                insert(&mut lists[(1u64 << rel) as usize], s.clone(), cfg, metrics);
            }
        }
    }

    // Submasks are numerically smaller than their supersets, so ascending
    // numeric order is a valid bottom-up order.
    for mask in 1..=full {
        if mask.count_ones() < 2 || !admissible(q, mask) {
            continue;
        }
        let lowest = 1u64 << mask.trailing_zeros();
        let mut news: Vec<Sub> = Vec::new();
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            if sub & lowest != 0 {
                let (a, b) = (sub, mask & !sub);
                for (probe_side, build_side) in [(a, b), (b, a)] {
                    let Some(cut) = classify_cut(q, probe_side, build_side) else {
                        continue;
                    };
                    for bs in &lists[build_side as usize] {
                        for ps in &lists[probe_side as usize] {
                            metrics.pairs_considered += 1;
                            news.extend(combine(est, cfg, costp, &cut, bs, ps));
                        }
                    }
                }
            }
            sub = (sub - 1) & mask;
        }
        for s in news {
            insert(&mut lists[mask as usize], s, cfg, metrics);
        }
    }

    metrics.subplans_retained = lists.iter().map(|l| l.len()).sum();
    lists[full as usize]
        .iter()
        .filter(|s| s.unresolved.is_empty())
        .min_by(|a, b| {
            a.cost
                .total
                .total_cmp(&b.cost.total)
                .then(a.rows.total_cmp(&b.rows))
                .then_with(|| a.node.fingerprint().cmp(&b.node.fingerprint()))
        })
        .cloned()
        .ok_or_else(|| Error::NoPlan("no complete plan".into()))
}

/// Joins two memoized sub-plans across a cut, yielding every legal physical
/// alternative (algorithms × resolution outcomes).
pub(super) fn combine(
    est: &Estimator,
    cfg: &PlannerConfig,
    costp: &CostParams,
    cut: &Cut,
    bs: &Sub,
    ps: &Sub,
) -> Vec<Sub> {
    let carriers = !bs.unresolved.is_empty() || !ps.unresolved.is_empty();
    let mut algos: Vec<JoinAlgo> = Vec::new();
    if cut.hashable_eq {
        algos.push(JoinAlgo::Hash);
    }
    if !carriers {
        algos.push(JoinAlgo::NestedLoop);
        if cut.join_type == JoinType::Inner && cut.hashable_eq {
            algos.push(JoinAlgo::Merge);
        }
    }
    let mut out = Vec::new();
    for algo in algos {
        if let Some(s) = combine_one(est, cfg, costp, cut, bs, ps, algo) {
            out.push(s);
        }
    }
    out
}

fn combine_one(
    est: &Estimator,
    cfg: &PlannerConfig,
    costp: &CostParams,
    cut: &Cut,
    bs: &Sub,
    ps: &Sub,
    algo: JoinAlgo,
) -> Option<Sub> {
    let jt = cut.join_type;
    let build_cov = bs.coverage();
    let mut resolved: Vec<&Unres> = Vec::new();
    let mut retained: Vec<Unres> = Vec::new();
    for u in &ps.unresolved {
        if u.delta & !build_cov == 0 && bs.rels & (1u64 << u.build.rel) != 0 {
            // Resolvable right here — and only here, since δ's relations
            // disappear from every future build side. Resolution needs the
            // build column physically on the build side and a hash join the
            // filter may hang off.
            if algo != JoinAlgo::Hash || !(jt == JoinType::Inner || jt == JoinType::Semi) {
                return None;
            }
            // Heuristic 5 re-checked at resolution: the filter is physically
            // sized from what the build sub-plan may produce, bounded only
            // by the raw column NDV.
            if est.column(&u.build).ndv as f64 > cfg.max_build_ndv {
                return None;
            }
            resolved.push(u);
        } else if u.delta & bs.rels != 0 {
            return None; // δ partially consumed: the filter can never resolve
        } else {
            retained.push(u.clone());
        }
    }
    for u in &bs.unresolved {
        if u.delta & ps.rels != 0 {
            return None; // probe side swallowed the δ relations
        }
    }
    // Crossing legality by join type for the filters that pass through.
    match jt {
        JoinType::Inner => {}
        JoinType::Semi => {
            if !bs.unresolved.is_empty() {
                return None;
            }
        }
        JoinType::LeftOuter => {
            if !retained.is_empty() {
                return None; // probe is the preserved side
            }
        }
        JoinType::Anti | JoinType::FullOuter => {
            if !bs.unresolved.is_empty() || !retained.is_empty() {
                return None;
            }
        }
    }

    let mut unresolved = retained;
    unresolved.extend(bs.unresolved.iter().cloned());
    unresolved.sort_by_key(|u| u.id);

    let mask = bs.rels | ps.rels;
    let rows = est.est_rows(mask)
        * unresolved
            .iter()
            .map(Unres::keep)
            .product::<f64>();

    // Streams and filter strategies under parallelism: broadcast the build
    // side or redistribute both, whichever streams fewer weighted rows.
    let (build_stream, probe_stream, strategy) = if cfg.dop <= 1 {
        (None, None, BfStrategy::BroadcastBuild)
    } else {
        let bc = stream_cost(StreamKind::Broadcast, bs.rows, cfg.dop, costp).total;
        let rd = stream_cost(StreamKind::Redistribute, bs.rows, cfg.dop, costp).total
            + stream_cost(StreamKind::Redistribute, ps.rows, cfg.dop, costp).total;
        if bc <= rd {
            (Some(StreamKind::Broadcast), None, BfStrategy::BroadcastBuild)
        } else {
            (
                Some(StreamKind::Redistribute),
                Some(StreamKind::Redistribute),
                BfStrategy::PartitionAligned,
            )
        }
    };
    let feeds = resolved
        .iter()
        .map(|u| BfFeed {
            id: u.id,
            column: u.build.clone(),
            strategy,
        })
        .collect();

    let node = PlanNode::Join(Box::new(JoinNode {
        algo,
        join_type: jt,
        clauses: cut.clauses.clone(),
        build: bs.node.clone(),
        probe: ps.node.clone(),
        feeds,
        est_rows: rows,
        build_stream,
        probe_stream,
    }));
    let cost = plan_cost(&node, est.catalog(), est.query(), costp, cfg.dop);
    Some(Sub {
        rels: mask,
        node,
        rows,
        cost,
        unresolved,
    })
}

/// Inserts into a plan list with property-based dominance pruning and the
/// Heuristic-7 cap on Bloom-filter sub-plans per list.
pub fn insert(list: &mut Vec<Sub>, new: Sub, cfg: &PlannerConfig, metrics: &mut PlannerMetrics) {
    metrics.subplans_created += 1;
    let sig = new.signature();
    for ex in list.iter() {
        if ex.signature() == sig
            && ex.cost.total <= new.cost.total
            && ex.rows <= new.rows
        {
            return; // dominated (ties keep the incumbent)
        }
    }
    list.retain(|ex| {
        !(ex.signature() == sig && new.cost.total <= ex.cost.total && new.rows <= ex.rows)
    });
    list.push(new);
    if cfg.max_bf_subplans > 0 {
        let nbf = list.iter().filter(|s| !s.unresolved.is_empty()).count();
        if nbf > cfg.max_bf_subplans {
            // Keep only the fewest-rows Bloom-filter sub-plan.
            let best = list
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.unresolved.is_empty())
                .min_by(|(_, a), (_, b)| {
                    a.rows
                        .total_cmp(&b.rows)
                        .then(a.cost.total.total_cmp(&b.cost.total))
                        .then_with(|| a.node.fingerprint().cmp(&b.node.fingerprint()))
                })
                .map(|(i, _)| i)
                .expect("nbf > 0");
            let mut idx = 0;
            list.retain(|s| {
                let keep = s.unresolved.is_empty() || idx == best;
                idx += 1;
                keep
            });
        }
    }
}
