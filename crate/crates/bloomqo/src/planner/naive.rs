//! The naive single-pass alternative the two-phase design replaces.
//!
//! Instead of collecting Δ sets up front, the naive planner injects pending
//! Bloom filters at the leaves with their build side unspecified. A pending
//! sub-plan has no cardinality and no cost, so it cannot be pruned; it rides
//! along until a join finally places the filter's build relation on a build
//! side, at which point δ becomes that build side's coverage, the filter is
//! checked and priced, and the whole subtree is re-costed recursively. The
//! search-space counters this produces are the point of the exercise.

use std::collections::HashMap;

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::estimator::{mask_contains, Estimator, RelMask};
use crate::frontend::{JoinGraph, JoinType};
use crate::plan::{BfApply, BfFeed, BfStrategy, JoinAlgo, JoinNode, PlanNode};

use super::{
    candidates::mark_candidates, dp, plan_cost, Candidate, Planned, PlannerConfig, PlannerMetrics,
    Sub, Unres,
};

/// Symbolic plan tree; pending filters live at the scans by candidate id.
#[derive(Debug, Clone)]
enum NTree {
    Scan {
        rel: usize,
        pendings: Vec<usize>,
    },
    Join {
        jt: JoinType,
        algo: JoinAlgo,
        clauses: Vec<usize>,
        build: Box<NTree>,
        probe: Box<NTree>,
        resolves: Vec<Resolution>,
    },
}

#[derive(Debug, Clone)]
struct Resolution {
    cand: usize,
    delta: RelMask,
    s: f64,
    fpr: f64,
}

/// A costed (complete) naive sub-plan: an ordinary sub-plan plus its
/// symbolic tree so it can keep combining with pending ones.
#[derive(Debug, Clone)]
struct CostedN {
    sub: Sub,
    tree: NTree,
}

/// An uncosted sub-plan still carrying pending filters.
#[derive(Debug, Clone)]
struct PendSub {
    rels: RelMask,
    tree: NTree,
    /// Candidate ids still pending anywhere in the subtree.
    pending: Vec<usize>,
    /// rel_set plus the δ sets of filters already resolved inside the
    /// subtree (what the subtree accounts for when satisfying another δ).
    cov: RelMask,
}

pub fn plan(
    est: &Estimator,
    graph: &JoinGraph,
    cfg: &PlannerConfig,
    costp: &CostParams,
    metrics: &mut PlannerMetrics,
) -> Result<Planned> {
    let q = est.query();
    let n = q.relations.len();
    if n == 0 || n > 63 {
        return Err(Error::NoPlan("empty or oversized relation set".into()));
    }
    let cands = mark_candidates(est, graph, cfg);
    let full: RelMask = (1u64 << n) - 1;
    let mut costed: Vec<Vec<CostedN>> = vec![Vec::new(); (full + 1) as usize];
    let mut pending: Vec<Vec<PendSub>> = vec![Vec::new(); (full + 1) as usize];

    for rel in 0..n {
        let rows = est.rows_local(rel);
        let node = PlanNode::Scan {
            rel,
            bfs: Vec::new(),
            est_rows: rows,
        };
        let cost = plan_cost(&node, est.catalog(), est.query(), costp, cfg.dop);
        let sub = Sub {
            rels: 1u64 << rel,
            node,
            rows,
            cost,
            unresolved: Vec::new(),
        };
        insert_costed(
            &mut costed[(1u64 << rel) as usize],
            CostedN {
                sub,
                tree: NTree::Scan {
                    rel,
                    pendings: Vec::new(),
                },
            },
            cfg,
            metrics,
        );
        // All marked candidates at once, build side unspecified.
        let mine: Vec<usize> = cands
            .iter()
            .filter(|c| c.apply.rel == rel)
            .map(|c| c.id)
            .collect();
        if !mine.is_empty() {
            push_pending(
                &mut pending[(1u64 << rel) as usize],
                PendSub {
                    rels: 1u64 << rel,
                    tree: NTree::Scan {
                        rel,
                        pendings: mine.clone(),
                    },
                    pending: mine,
                    cov: 1u64 << rel,
                },
                cfg,
                metrics,
            );
        }
    }

    for mask in 1..=full {
        if mask.count_ones() < 2 || !dp::admissible(q, mask) {
            continue;
        }
        let lowest = 1u64 << mask.trailing_zeros();
        let mut new_costed: Vec<CostedN> = Vec::new();
        let mut new_pending: Vec<PendSub> = Vec::new();
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            if sub & lowest != 0 {
                let (a, b) = (sub, mask & !sub);
                for (probe_side, build_side) in [(a, b), (b, a)] {
                    let Some(cut) = dp::classify_cut(q, probe_side, build_side) else {
                        continue;
                    };
                    // costed × costed: exactly the classical combine.
                    for bs in &costed[build_side as usize] {
                        for ps in &costed[probe_side as usize] {
                            metrics.pairs_considered += 1;
                            for s in dp::combine(est, cfg, costp, &cut, &bs.sub, &ps.sub) {
                                let tree = NTree::Join {
                                    jt: cut.join_type,
                                    algo: join_algo(&s.node),
                                    clauses: cut.clauses.clone(),
                                    build: Box::new(bs.tree.clone()),
                                    probe: Box::new(ps.tree.clone()),
                                    resolves: Vec::new(),
                                };
                                new_costed.push(CostedN { sub: s, tree });
                            }
                        }
                    }
                    if !cut.hashable_eq {
                        continue; // pending carriers combine via hash only
                    }
                    // pairs with at least one pending side
                    for (bs_tree, bs_rels, bs_pend, bs_cov) in
                        sides(&costed[build_side as usize], &pending[build_side as usize])
                    {
                        for (ps_tree, ps_rels, ps_pend, ps_cov) in
                            sides(&costed[probe_side as usize], &pending[probe_side as usize])
                        {
                            if bs_pend.is_empty() && ps_pend.is_empty() {
                                continue; // handled above
                            }
                            metrics.pairs_considered += 1;
                            for p in combine_pending(
                                est, cfg, &cut, &cands, bs_tree, bs_rels, bs_pend, bs_cov,
                                ps_tree, ps_rels, ps_pend, ps_cov,
                            ) {
                                if p.pending.is_empty() {
                                    if let Some(c) = materialize(est, cfg, costp, &cands, &p) {
                                        new_costed.push(c);
                                    }
                                } else {
                                    new_pending.push(p);
                                }
                            }
                        }
                    }
                }
            }
            sub = (sub - 1) & mask;
        }
        for c in new_costed {
            insert_costed(&mut costed[mask as usize], c, cfg, metrics);
        }
        for p in new_pending {
            push_pending(&mut pending[mask as usize], p, cfg, metrics);
        }
    }

    metrics.subplans_retained = costed.iter().map(|l| l.len()).sum::<usize>()
        + pending.iter().map(|l| l.len()).sum::<usize>();

    let best = costed[full as usize]
        .iter()
        .min_by(|a, b| {
            a.sub
                .cost
                .total
                .total_cmp(&b.sub.cost.total)
                .then(a.sub.rows.total_cmp(&b.sub.rows))
                .then_with(|| a.sub.node.fingerprint().cmp(&b.sub.node.fingerprint()))
        })
        .ok_or_else(|| Error::NoPlan("no complete plan".into()))?;
    Ok(Planned {
        plan: best.sub.node.clone(),
        cost: best.sub.cost,
        rows: best.sub.rows,
        metrics: metrics.clone(),
        candidates: cands,
        decisions: Vec::new(),
    })
}

fn join_algo(node: &PlanNode) -> JoinAlgo {
    match node {
        PlanNode::Join(j) => j.algo,
        PlanNode::Scan { .. } => JoinAlgo::Hash,
    }
}

/// Iterate one side's sub-plans uniformly: costed ones have no pendings.
fn sides<'a>(
    costed: &'a [CostedN],
    pend: &'a [PendSub],
) -> impl Iterator<Item = (&'a NTree, RelMask, &'a [usize], RelMask)> {
    costed
        .iter()
        .map(|c| {
            (
                &c.tree,
                c.sub.rels,
                [].as_slice(),
                c.sub.node.coverage(),
            )
        })
        .chain(
            pend.iter()
                .map(|p| (&p.tree, p.rels, p.pending.as_slice(), p.cov)),
        )
}

/// Joins two sides, branching over which just-resolvable pending filters
/// resolve here versus ride along. Empty when a crossing rule is violated.
#[allow(clippy::too_many_arguments)]
fn combine_pending(
    est: &Estimator,
    cfg: &PlannerConfig,
    cut: &dp::Cut,
    cands: &[Candidate],
    bs_tree: &NTree,
    bs_rels: RelMask,
    bs_pend: &[usize],
    bs_cov: RelMask,
    ps_tree: &NTree,
    ps_rels: RelMask,
    ps_pend: &[usize],
    ps_cov: RelMask,
) -> Vec<PendSub> {
    let jt = cut.join_type;
    // Crossing rules for pendings, as for unresolved filters.
    match jt {
        JoinType::Inner => {}
        JoinType::Semi => {
            if !bs_pend.is_empty() {
                return Vec::new();
            }
        }
        JoinType::LeftOuter => {
            if !ps_pend.is_empty() {
                return Vec::new();
            }
        }
        JoinType::Anti | JoinType::FullOuter => {
            if !bs_pend.is_empty() || !ps_pend.is_empty() {
                return Vec::new();
            }
        }
    }
    for &cid in bs_pend {
        if mask_contains(ps_rels, cands[cid].build.rel) {
            return Vec::new(); // the build relation can never reach a build side
        }
    }
    // A pending filter whose build relation just landed on the build side
    // may resolve here (δ = the build side's coverage) — or ride along, in
    // case a later, larger build side gives a better δ. Without the cost
    // information the two-phase planner has, the naive search cannot rank
    // the two, so it must carry both: this is exactly the branching that
    // blows its sub-plan lists up. Filters that fail the acceptance rules
    // can only ride.
    let mut base_pending: Vec<usize> = bs_pend.to_vec();
    let mut resolvable: Vec<Resolution> = Vec::new();
    for &cid in ps_pend {
        let cand = &cands[cid];
        if mask_contains(bs_rels, cand.build.rel)
            && (jt == JoinType::Inner || jt == JoinType::Semi)
            && est.column(&cand.build).ndv as f64 <= cfg.max_build_ndv
        {
            let delta = bs_cov;
            // Same acceptance rules the two-phase planner applies at
            // creation and resolution.
            if est.ndv_within(delta, &cand.build) > cfg.max_build_ndv
                || super::candidates::fk_lossless(est, cand, delta)
            {
                base_pending.push(cid);
                continue;
            }
            let s = est.semijoin_selectivity(&cand.apply, delta, &cand.build);
            if s > cfg.selectivity_threshold {
                base_pending.push(cid);
                continue;
            }
            let fpr = est.fpr_for(est.ndv_upper_bound(delta, &cand.build));
            resolvable.push(Resolution { cand: cid, delta, s, fpr });
        } else {
            base_pending.push(cid);
        }
    }

    let mut out = Vec::new();
    for pick in 0u32..(1u32 << resolvable.len()) {
        let resolves: Vec<Resolution> = resolvable
            .iter()
            .enumerate()
            .filter(|(i, _)| pick & (1 << i) != 0)
            .map(|(_, r)| r.clone())
            .collect();
        let mut pending = base_pending.clone();
        pending.extend(
            resolvable
                .iter()
                .enumerate()
                .filter(|(i, _)| pick & (1 << i) == 0)
                .map(|(_, r)| r.cand),
        );
        pending.sort_unstable();
        let resolved_now: RelMask = resolves.iter().fold(0, |m, r| m | r.delta);
        let tree = NTree::Join {
            jt,
            algo: JoinAlgo::Hash,
            clauses: cut.clauses.clone(),
            build: Box::new(bs_tree.clone()),
            probe: Box::new(ps_tree.clone()),
            resolves,
        };
        out.push(PendSub {
            rels: bs_rels | ps_rels,
            tree,
            pending,
            cov: bs_cov | ps_cov | resolved_now,
        });
    }
    out
}

/// A complete pending sub-plan (no pendings left) becomes a real plan: walk
/// the symbolic tree, attach filters with their resolved parameters, compute
/// every node's cardinality and the recursive cost from scratch.
fn materialize(
    est: &Estimator,
    cfg: &PlannerConfig,
    costp: &CostParams,
    cands: &[Candidate],
    p: &PendSub,
) -> Option<CostedN> {
    // Gather resolutions: candidate id → parameters.
    let mut res: HashMap<usize, Resolution> = HashMap::new();
    collect_resolutions(&p.tree, &mut res);
    let mut next_id = 0u32;
    let mut ids: HashMap<usize, u32> = HashMap::new();
    let (node, actives) = build_node(est, cfg, cands, &p.tree, &res, &mut next_id, &mut ids)?;
    if !actives.is_empty() {
        return None;
    }
    let rows = node.est_rows();
    let cost = plan_cost(&node, est.catalog(), est.query(), costp, cfg.dop);
    Some(CostedN {
        sub: Sub {
            rels: p.rels,
            node,
            rows,
            cost,
            unresolved: Vec::new(),
        },
        tree: p.tree.clone(),
    })
}

fn collect_resolutions(tree: &NTree, out: &mut HashMap<usize, Resolution>) {
    if let NTree::Join {
        build,
        probe,
        resolves,
        ..
    } = tree
    {
        for r in resolves {
            out.insert(r.cand, r.clone());
        }
        collect_resolutions(build, out);
        collect_resolutions(probe, out);
    }
}

fn build_node(
    est: &Estimator,
    cfg: &PlannerConfig,
    cands: &[Candidate],
    tree: &NTree,
    res: &HashMap<usize, Resolution>,
    next_id: &mut u32,
    ids: &mut HashMap<usize, u32>,
) -> Option<(PlanNode, Vec<Unres>)> {
    match tree {
        NTree::Scan { rel, pendings } => {
            let mut rows = est.rows_local(*rel);
            let mut bfs = Vec::new();
            let mut actives = Vec::new();
            for &cid in pendings {
                let r = res.get(&cid)?;
                let cand = &cands[cid];
                let id = *next_id;
                *next_id += 1;
                ids.insert(cid, id);
                bfs.push(BfApply {
                    id,
                    apply: cand.apply.clone(),
                    build: cand.build.clone(),
                    delta: r.delta,
                    est_fpr: r.fpr,
                    est_selectivity: r.s,
                });
                actives.push(Unres {
                    id,
                    cand: cid,
                    apply: cand.apply.clone(),
                    build: cand.build.clone(),
                    delta: r.delta,
                    s: r.s,
                    fpr: r.fpr,
                });
                rows *= r.s + (1.0 - r.s) * r.fpr;
            }
            Some((
                PlanNode::Scan {
                    rel: *rel,
                    bfs,
                    est_rows: rows,
                },
                actives,
            ))
        }
        NTree::Join {
            jt,
            algo,
            clauses,
            build,
            probe,
            resolves,
        } => {
            let (bnode, bact) = build_node(est, cfg, cands, build, res, next_id, ids)?;
            let (pnode, mut actives) = build_node(est, cfg, cands, probe, res, next_id, ids)?;
            let mut feeds = Vec::new();
            for r in resolves {
                let id = *ids.get(&r.cand)?;
                actives.retain(|u| u.id != id);
                feeds.push(BfFeed {
                    id,
                    column: cands[r.cand].build.clone(),
                    strategy: if cfg.dop <= 1 {
                        BfStrategy::BroadcastBuild
                    } else {
                        BfStrategy::PartitionAligned
                    },
                });
            }
            actives.extend(bact);
            let mask = bnode.rel_set() | pnode.rel_set();
            let rows = est.est_rows(mask) * actives.iter().map(Unres::keep).product::<f64>();
            Some((
                PlanNode::Join(Box::new(JoinNode {
                    algo: *algo,
                    join_type: *jt,
                    clauses: clauses.clone(),
                    build: bnode,
                    probe: pnode,
                    feeds,
                    est_rows: rows,
                    build_stream: None,
                    probe_stream: None,
                })),
                actives,
            ))
        }
    }
}

fn insert_costed(list: &mut Vec<CostedN>, new: CostedN, cfg: &PlannerConfig, metrics: &mut PlannerMetrics) {
    metrics.subplans_created += 1;
    for ex in list.iter() {
        if ex.sub.cost.total <= new.sub.cost.total && ex.sub.rows <= new.sub.rows {
            return;
        }
    }
    list.retain(|ex| {
        !(new.sub.cost.total <= ex.sub.cost.total && new.sub.rows <= ex.sub.rows)
    });
    let _ = cfg;
    list.push(new);
}

/// Pending sub-plans are unprunable: every one is retained, bounded only by
/// the node budget.
fn push_pending(
    list: &mut Vec<PendSub>,
    p: PendSub,
    cfg: &PlannerConfig,
    metrics: &mut PlannerMetrics,
) {
    metrics.subplans_created += 1;
    if cfg.naive_node_budget > 0 && metrics.subplans_created > cfg.naive_node_budget {
        metrics.naive_budget_exceeded = true;
        return;
    }
    list.push(p);
}
