//! Candidate marking (phase 0), Δ collection (phase 1), and creation of the
//! Bloom-filtered scan sub-plans that compete in phase 2.

use std::collections::HashMap;

use crate::cost::CostParams;
use crate::error::Result;
use crate::estimator::{bf_scan_cardinality, mask_contains, Estimator, RelMask};
use crate::frontend::{CmpOp, ColRef, JoinGraph, JoinType};
use crate::plan::{BfApply, BfId, PlanNode};

use super::{plan_cost, PlannerConfig, PlannerMetrics, Sub, Unres};

/// One Bloom filter candidate: "a filter on `apply`, built from `build`".
/// Phase 1 fills `deltas` with every relation set the filter could be built
/// from.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: usize,
    pub apply: ColRef,
    pub build: ColRef,
    /// Clause index supplying the candidate (provenance only).
    pub clause: usize,
    /// Reverse-direction candidate produced under Heuristic 9.
    pub reversed: bool,
    /// Δ sets collected in phase 1, in discovery order, deduplicated.
    pub deltas: Vec<RelMask>,
}

/// What happened to one (candidate, Δ) option or one Δ-combination while
/// building scan sub-plans. Kept for EXPLAIN-style introspection and golden
/// tests.
#[derive(Debug, Clone)]
pub struct SubplanDecision {
    pub rel: usize,
    pub cand: usize,
    pub delta: RelMask,
    pub verdict: SubplanVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubplanVerdict {
    /// The option survived into a materialized scan sub-plan with this
    /// estimated cardinality.
    Accepted { rows: f64, s: f64, fpr: f64 },
    /// Heuristic 5: too many distinct values on the build side within δ.
    RejectedSize { ndv: f64 },
    /// Heuristic 6: the filter would keep too large a fraction of rows.
    RejectedSelectivity { s: f64 },
    /// Heuristic 9 guard: δ's estimated cardinality is not smaller than the
    /// apply side.
    RejectedReverse { delta_rows: f64 },
    /// A sub-plan with subset-or-equal δ sets and no more rows exists.
    PrunedDominated,
    /// The Δ-combination cap cut this combination.
    PrunedComboCap,
}

/// Heuristics 1 and 2 (and 9): decide which clause endpoints may receive a
/// filter at all. Multi-way equivalence classes build from the smallest
/// relation in the class only.
pub fn mark_candidates(est: &Estimator, graph: &JoinGraph, cfg: &PlannerConfig) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut push = |apply: ColRef, build: ColRef, clause: usize, reversed: bool| {
        if apply.rel == build.rel {
            return;
        }
        if out
            .iter()
            .any(|c| c.apply == apply && c.build == build && c.reversed == reversed)
        {
            return;
        }
        out.push(Candidate {
            id: 0,
            apply,
            build,
            clause,
            reversed,
            deltas: Vec::new(),
        });
    };

    for (ci, cl) in est.query().clauses.iter().enumerate() {
        if !cl.hashable || cl.op != CmpOp::Eq {
            continue;
        }
        // The filtered side of a resolving join must be a probe side, which
        // rules every join type except inner and semi out; for semi joins
        // only the probing (left) side is eligible.
        let directions: Vec<(&ColRef, &ColRef)> = match cl.join_type {
            JoinType::Inner => {
                let l_rows = est.rows_local(cl.left.rel);
                let r_rows = est.rows_local(cl.right.rel);
                // Heuristic 1: apply on the larger side (post-predicate rows).
                let main = if l_rows >= r_rows {
                    (&cl.left, &cl.right)
                } else {
                    (&cl.right, &cl.left)
                };
                if cfg.h9 {
                    vec![main, (main.1, main.0)]
                } else {
                    vec![main]
                }
            }
            JoinType::Semi => vec![(&cl.left, &cl.right)],
            _ => continue,
        };
        for (i, (apply, build)) in directions.into_iter().enumerate() {
            let reversed = i == 1;
            // Heuristic 2: small apply sides never pay off.
            if est.rows_local(apply.rel) <= cfg.apply_row_threshold {
                continue;
            }
            // Multi-way classes: a filter keyed on this class is built from
            // the smallest member relation only.
            let mut build = build.clone();
            if let Some(class) = graph.class_of(&build) {
                let members = &graph.classes[class];
                if members.len() >= 3 {
                    let smallest = members
                        .iter()
                        .filter(|c| c.rel != apply.rel)
                        .min_by(|a, b| {
                            est.rows_local(a.rel)
                                .total_cmp(&est.rows_local(b.rel))
                                .then(a.rel.cmp(&b.rel))
                        })
                        .expect("class has a non-apply member");
                    build = smallest.clone();
                }
            }
            push(apply.clone(), build, ci, reversed);
        }
    }
    for (i, c) in out.iter_mut().enumerate() {
        c.id = i;
    }
    out
}

/// Phase 1: walk the same ordered join pairs the dynamic program will visit
/// and record, for every candidate, each inner relation set its filter could
/// be built from. Also accumulates the total join-input cardinality for
/// Heuristic 8.
pub fn phase1_collect(
    est: &Estimator,
    graph: &JoinGraph,
    cfg: &PlannerConfig,
    cands: &mut [Candidate],
    metrics: &mut PlannerMetrics,
) {
    let n = graph.num_rels;
    let full: RelMask = (1u64 << n) - 1;
    for mask in 1..=full {
        if mask.count_ones() < 2 || !super::dp::admissible(est.query(), mask) {
            continue;
        }
        let lowest = 1u64 << mask.trailing_zeros();
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            if sub & lowest != 0 {
                let a = sub;
                let b = mask & !sub;
                for (outer, inner) in [(a, b), (b, a)] {
                    if !super::dp::pair_feasible(est.query(), graph, outer, inner) {
                        continue;
                    }
                    metrics.total_join_input += est.est_rows(outer) + est.est_rows(inner);
                    for cand in cands.iter_mut() {
                        if !mask_contains(outer, cand.apply.rel)
                            || !mask_contains(inner, cand.build.rel)
                        {
                            continue;
                        }
                        let delta = inner;
                        if cand.deltas.contains(&delta) {
                            continue;
                        }
                        // Heuristic 3: a filter built from a lossless primary
                        // key the apply column references cannot remove
                        // anything real.
                        if fk_lossless(est, cand, delta) {
                            continue;
                        }
                        cand.deltas.push(delta);
                    }
                }
            }
            sub = (sub - 1) & mask;
        }
    }
    // Heuristic 8: cheap queries skip filter planning altogether.
    if cfg.total_join_input_threshold > 0.0
        && metrics.total_join_input < cfg.total_join_input_threshold
    {
        for c in cands.iter_mut() {
            c.deltas.clear();
        }
    }
}

/// True when the candidate's apply column is a declared foreign key to the
/// build column, and the build column stays a lossless primary key within δ:
/// no local predicates on its relation and no NDV reduction through
/// δ-internal joins.
pub(super) fn fk_lossless(est: &Estimator, cand: &Candidate, delta: RelMask) -> bool {
    let cat = est.catalog();
    let q = est.query();
    let apply_table = q.table(cand.apply.rel);
    let build_table = q.table(cand.build.rel);
    if !cat.is_primary_key(build_table, &cand.build.column) {
        return false;
    }
    if !cat.is_foreign_key_to(
        apply_table,
        &cand.apply.column,
        build_table,
        &cand.build.column,
    ) {
        return false;
    }
    let raw_rows = cat
        .table_by_name(build_table)
        .map(|t| t.rows as f64)
        .unwrap_or(0.0);
    if est.rows_local(cand.build.rel) < raw_rows - 1e-9 {
        return false; // local predicates make the key lossy
    }
    let raw_ndv = est.column(&cand.build).ndv as f64;
    est.ndv_within(delta, &cand.build) >= raw_ndv - 0.5
}

/// Creates the Bloom-filtered scan sub-plans for one relation. All candidates
/// applying to the relation are applied simultaneously (Heuristic 4); each
/// candidate contributes its surviving Δ options and the Cartesian
/// combinations become sub-plans, capped at `max_delta_combos` keeping the
/// fewest-rows combinations, then pruned by δ-dominance.
#[allow(clippy::too_many_arguments)]
pub fn bf_scan_subplans(
    est: &Estimator,
    cfg: &PlannerConfig,
    costp: &CostParams,
    cands: &[Candidate],
    rel: usize,
    next_id: &mut BfId,
    decisions: &mut Vec<SubplanDecision>,
    metrics: &mut PlannerMetrics,
) -> Result<Vec<Sub>> {
    struct Option_ {
        delta: RelMask,
        s: f64,
        fpr: f64,
    }
    let mut per_cand: Vec<(usize, Vec<Option_>)> = Vec::new();
    let rows_local = est.rows_local(rel);
    for cand in cands.iter().filter(|c| c.apply.rel == rel) {
        let mut opts = Vec::new();
        for &delta in &cand.deltas {
            // Heuristic 9 guard: reversed candidates only make sense when the
            // build side is genuinely smaller than the apply side.
            if cand.reversed {
                let delta_rows = est.est_rows(delta);
                if delta_rows >= rows_local {
                    decisions.push(SubplanDecision {
                        rel,
                        cand: cand.id,
                        delta,
                        verdict: SubplanVerdict::RejectedReverse { delta_rows },
                    });
                    continue;
                }
            }
            // Heuristic 5 at creation: size by the δ-reduced build NDV.
            let ndv = est.ndv_within(delta, &cand.build);
            if ndv > cfg.max_build_ndv {
                decisions.push(SubplanDecision {
                    rel,
                    cand: cand.id,
                    delta,
                    verdict: SubplanVerdict::RejectedSize { ndv },
                });
                continue;
            }
            let s = est.semijoin_selectivity(&cand.apply, delta, &cand.build);
            // Heuristic 6: weak filters are not worth their probe cost.
            if s > cfg.selectivity_threshold {
                decisions.push(SubplanDecision {
                    rel,
                    cand: cand.id,
                    delta,
                    verdict: SubplanVerdict::RejectedSelectivity { s },
                });
                continue;
            }
            let fpr = est.fpr_for(est.ndv_upper_bound(delta, &cand.build));
            opts.push(Option_ { delta, s, fpr });
        }
        if !opts.is_empty() {
            per_cand.push((cand.id, opts));
        }
    }
    if per_cand.is_empty() {
        return Ok(Vec::new());
    }

    // Cartesian product of the per-candidate options.
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for (_, opts) in &per_cand {
        let mut next = Vec::with_capacity(combos.len() * opts.len());
        for combo in &combos {
            for oi in 0..opts.len() {
                let mut c = combo.clone();
                c.push(oi);
                next.push(c);
            }
        }
        combos = next;
    }
    // Stacked filters multiply keep-fractions, matching
    // `bf_scan_cardinality` applied per filter.
    let combo_rows = |combo: &[usize]| -> f64 {
        combo.iter().enumerate().fold(rows_local, |r, (slot, &oi)| {
            let o = &per_cand[slot].1[oi];
            bf_scan_cardinality(r, o.s, o.fpr)
        })
    };
    combos.sort_by(|a, b| {
        combo_rows(a)
            .total_cmp(&combo_rows(b))
            .then_with(|| a.cmp(b))
    });
    if combos.len() > cfg.max_delta_combos {
        for combo in combos.drain(cfg.max_delta_combos..) {
            for (slot, &oi) in combo.iter().enumerate() {
                decisions.push(SubplanDecision {
                    rel,
                    cand: per_cand[slot].0,
                    delta: per_cand[slot].1[oi].delta,
                    verdict: SubplanVerdict::PrunedComboCap,
                });
            }
        }
    }

    // δ-dominance: combination A is dominated by B when B's δ sets are all
    // subsets of A's (per candidate) and B does not estimate more rows.
    let mut keep: Vec<bool> = vec![true; combos.len()];
    for i in 0..combos.len() {
        for j in 0..combos.len() {
            if i == j || !keep[j] {
                continue;
            }
            let sub_deltas = combos[j].iter().enumerate().all(|(slot, &oj)| {
                let dj = per_cand[slot].1[oj].delta;
                let di = per_cand[slot].1[combos[i][slot]].delta;
                dj & !di == 0
            });
            let distinct = combos[i] != combos[j];
            if sub_deltas && distinct && combo_rows(&combos[j]) <= combo_rows(&combos[i]) + 1e-9 {
                keep[i] = false;
                break;
            }
        }
    }

    let mut subs = Vec::new();
    for (ci, combo) in combos.iter().enumerate() {
        metrics.bf_scan_subplans += 1;
        if !keep[ci] {
            for (slot, &oi) in combo.iter().enumerate() {
                decisions.push(SubplanDecision {
                    rel,
                    cand: per_cand[slot].0,
                    delta: per_cand[slot].1[oi].delta,
                    verdict: SubplanVerdict::PrunedDominated,
                });
            }
            continue;
        }
        let mut bfs = Vec::new();
        let mut unresolved = Vec::new();
        let mut rows = rows_local;
        for (slot, &oi) in combo.iter().enumerate() {
            let (cand_id, opts) = &per_cand[slot];
            let o = &opts[oi];
            let cand = &cands[*cand_id];
            let id = *next_id;
            *next_id += 1;
            bfs.push(BfApply {
                id,
                apply: cand.apply.clone(),
                build: cand.build.clone(),
                delta: o.delta,
                est_fpr: o.fpr,
                est_selectivity: o.s,
            });
            unresolved.push(Unres {
                id,
                cand: *cand_id,
                apply: cand.apply.clone(),
                build: cand.build.clone(),
                delta: o.delta,
                s: o.s,
                fpr: o.fpr,
            });
            rows *= o.s + (1.0 - o.s) * o.fpr;
            decisions.push(SubplanDecision {
                rel,
                cand: *cand_id,
                delta: o.delta,
                verdict: SubplanVerdict::Accepted {
                    rows,
                    s: o.s,
                    fpr: o.fpr,
                },
            });
        }
        let node = PlanNode::Scan {
            rel,
            bfs,
            est_rows: rows,
        };
        let cost = plan_cost(&node, est.catalog(), est.query(), costp, cfg.dop);
        subs.push(Sub {
            rels: 1u64 << rel,
            node,
            rows,
            cost,
            unresolved,
        });
    }
    Ok(subs)
}

/// Phase-1 completeness invariant: every δ used by a sub-plan must have been
/// collected for its candidate.
pub fn deltas_cover(cands: &[Candidate], subs: &HashMap<usize, Vec<Sub>>) -> bool {
    subs.values().flatten().all(|s| {
        s.unresolved
            .iter()
            .all(|u| cands[u.cand].deltas.contains(&u.delta))
    })
}
