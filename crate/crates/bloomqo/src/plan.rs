//! Physical plan trees, the EXPLAIN renderer, and the plan validator.
//!
//! A Bloom filter appears in a finished plan twice: as a `BfApply` on the
//! scan it filters, and as a `BfFeed` on the hash join whose build side
//! supplies its keys. The validator ties the two together and enforces the
//! join-type crossing rules.

use std::collections::HashMap;

use crate::cost::StreamKind;
use crate::error::{Error, Result};
use crate::estimator::{mask_contains, mask_rels, RelMask};
use crate::frontend::{ColRef, JoinType, Query};

pub type BfId = u32;

/// A Bloom filter application at a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BfApply {
    pub id: BfId,
    /// Column probed at the scan (the candidate's apply column a).
    pub apply: ColRef,
    /// Column the filter is built from (the candidate's build column b).
    pub build: ColRef,
    /// Relations required on the build side of the resolving join.
    pub delta: RelMask,
    pub est_fpr: f64,
    /// Semi-join selectivity of apply ⋉ δ (without false positives).
    pub est_selectivity: f64,
}

/// §3.7-style application strategy, fixed at plan finalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfStrategy {
    BroadcastBuild,
    BroadcastProbe,
    PartitionUnaligned,
    PartitionAligned,
}

/// The build side of this join feeds the filter with id `id`.
#[derive(Debug, Clone, PartialEq)]
pub struct BfFeed {
    pub id: BfId,
    pub column: ColRef,
    pub strategy: BfStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinAlgo {
    Hash,
    NestedLoop,
    Merge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanNode {
    Scan {
        rel: usize,
        bfs: Vec<BfApply>,
        est_rows: f64,
    },
    Join(Box<JoinNode>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinNode {
    pub algo: JoinAlgo,
    pub join_type: JoinType,
    /// Indices into `Query::clauses` evaluated at this join.
    pub clauses: Vec<usize>,
    pub build: PlanNode,
    pub probe: PlanNode,
    pub feeds: Vec<BfFeed>,
    pub est_rows: f64,
    pub build_stream: Option<StreamKind>,
    pub probe_stream: Option<StreamKind>,
}

impl PlanNode {
    pub fn rel_set(&self) -> RelMask {
        match self {
            PlanNode::Scan { rel, .. } => 1u64 << rel,
            PlanNode::Join(j) => j.build.rel_set() | j.probe.rel_set(),
        }
    }

    /// Relations this subtree accounts for, counting the δ assumptions of
    /// every Bloom filter applied inside it. A filtered scan behaves like a
    /// (approximate) semi-join with its δ relations.
    pub fn coverage(&self) -> RelMask {
        match self {
            PlanNode::Scan { rel, bfs, .. } => bfs
                .iter()
                .fold(1u64 << rel, |m, bf| m | bf.delta),
            PlanNode::Join(j) => j.build.coverage() | j.probe.coverage(),
        }
    }

    pub fn est_rows(&self) -> f64 {
        match self {
            PlanNode::Scan { est_rows, .. } => *est_rows,
            PlanNode::Join(j) => j.est_rows,
        }
    }

    /// Number of Bloom filter applications in the tree.
    pub fn bf_count(&self) -> usize {
        match self {
            PlanNode::Scan { bfs, .. } => bfs.len(),
            PlanNode::Join(j) => j.build.bf_count() + j.probe.bf_count(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            PlanNode::Scan { .. } => 1,
            PlanNode::Join(j) => 1 + j.build.num_nodes() + j.probe.num_nodes(),
        }
    }

    /// Pre-order visit (node first, then build, then probe). Node ids used
    /// by metrics and EXPLAIN follow this order.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a PlanNode)) {
        f(self);
        if let PlanNode::Join(j) = self {
            j.build.visit(f);
            j.probe.visit(f);
        }
    }

    /// Join-order shape, ignoring annotations: used to compare plan trees.
    pub fn shape(&self) -> String {
        match self {
            PlanNode::Scan { rel, .. } => format!("{rel}"),
            PlanNode::Join(j) => format!("(b:{} p:{})", j.build.shape(), j.probe.shape()),
        }
    }

    /// Canonical text identity for deterministic tie-breaking.
    pub fn fingerprint(&self) -> String {
        match self {
            PlanNode::Scan { rel, bfs, .. } => {
                let mut s = format!("s{rel}");
                for bf in bfs {
                    s.push_str(&format!(
                        "[{}.{}<-{}.{}#{:x}]",
                        bf.apply.rel, bf.apply.column, bf.build.rel, bf.build.column, bf.delta
                    ));
                }
                s
            }
            PlanNode::Join(j) => format!(
                "{}{:?}({},{})",
                match j.algo {
                    JoinAlgo::Hash => "h",
                    JoinAlgo::NestedLoop => "n",
                    JoinAlgo::Merge => "m",
                },
                j.join_type,
                j.build.fingerprint(),
                j.probe.fingerprint()
            ),
        }
    }

    /// Renders the indented EXPLAIN tree. `actuals` maps pre-order node id
    /// to observed output rows after execution.
    pub fn explain(&self, query: &Query, actuals: Option<&HashMap<usize, u64>>) -> String {
        let mut out = String::new();
        let mut id = 0usize;
        self.explain_into(query, actuals, 0, &mut id, &mut out);
        out
    }

    fn explain_into(
        &self,
        query: &Query,
        actuals: Option<&HashMap<usize, u64>>,
        depth: usize,
        id: &mut usize,
        out: &mut String,
    ) {
        let my_id = *id;
        *id += 1;
        let indent = "  ".repeat(depth);
        let aliases = |mask: RelMask| -> String {
            mask_rels(mask)
                .filter(|&r| r < query.relations.len())
                .map(|r| query.alias(r).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let actual = actuals
            .and_then(|m| m.get(&my_id))
            .map(|v| format!(" actual_rows={v}"))
            .unwrap_or_default();
        match self {
            PlanNode::Scan { rel, bfs, est_rows } => {
                let mut line = format!("{indent}Scan({})", query.alias(*rel));
                for bf in bfs {
                    line.push_str(&format!(
                        " <- BF({}.{}, delta={{{}}}, est_fpr={:.4})",
                        query.alias(bf.build.rel),
                        bf.build.column,
                        aliases(bf.delta),
                        bf.est_fpr
                    ));
                }
                line.push_str(&format!(" est_rows={}{actual}\n", fmt_rows(*est_rows)));
                out.push_str(&line);
            }
            PlanNode::Join(j) => {
                let algo = match j.algo {
                    JoinAlgo::Hash => "HashJoin",
                    JoinAlgo::NestedLoop => "NestedLoopJoin",
                    JoinAlgo::Merge => "MergeJoin",
                };
                let jt = match j.join_type {
                    JoinType::Inner => String::new(),
                    other => format!("{}, ", other.keyword().to_lowercase().replace(' ', "-")),
                };
                let mut line = format!(
                    "{indent}{algo}({jt}build={{{}}}, probe={{{}}})",
                    aliases(j.build.rel_set()),
                    aliases(j.probe.rel_set())
                );
                for f in &j.feeds {
                    line.push_str(&format!(
                        " builds BF#{}({}.{})",
                        f.id,
                        query.alias(f.column.rel),
                        f.column.column
                    ));
                }
                if let Some(s) = j.build_stream {
                    line.push_str(match s {
                        StreamKind::Broadcast => " build<-BC",
                        StreamKind::Redistribute => " build<-RD",
                    });
                }
                if let Some(s) = j.probe_stream {
                    line.push_str(match s {
                        StreamKind::Broadcast => " probe<-BC",
                        StreamKind::Redistribute => " probe<-RD",
                    });
                }
                line.push_str(&format!(" est_rows={}{actual}\n", fmt_rows(j.est_rows)));
                out.push_str(&line);
                j.build.explain_into(query, actuals, depth + 1, id, out);
                j.probe.explain_into(query, actuals, depth + 1, id, out);
            }
        }
    }
}

fn fmt_rows(rows: f64) -> String {
    format!("{}", rows.round().max(0.0) as u64)
}

/// Checks that a finished plan is internally consistent: every applied
/// Bloom filter is fed by exactly one hash join whose build side covers δ,
/// the filter's path to that join crosses only join types that permit it,
/// and every join clause connects its two inputs.
pub fn validate(plan: &PlanNode, query: &Query) -> Result<()> {
    if plan.rel_set() != (1u64 << query.relations.len()) - 1 {
        return Err(Error::InvalidPlan(format!(
            "plan covers relation set {:#b}, query has {} relations",
            plan.rel_set(),
            query.relations.len()
        )));
    }
    // Collect applications and feeds.
    let mut applies: HashMap<BfId, (usize, BfApply)> = HashMap::new();
    let mut feeds: HashMap<BfId, (&JoinNode, BfFeed)> = HashMap::new();
    let mut dup = None;
    plan.visit(&mut |n| match n {
        PlanNode::Scan { rel, bfs, .. } => {
            for bf in bfs {
                if applies.insert(bf.id, (*rel, bf.clone())).is_some() {
                    dup = Some(bf.id);
                }
            }
        }
        PlanNode::Join(j) => {
            for f in &j.feeds {
                if feeds.insert(f.id, (j, f.clone())).is_some() {
                    dup = Some(f.id);
                }
            }
        }
    });
    if let Some(id) = dup {
        return Err(Error::InvalidPlan(format!("bloom filter {id} defined twice")));
    }
    for (&id, (scan_rel, bf)) in &applies {
        let (join, feed) = feeds
            .get(&id)
            .ok_or(Error::UnresolvedBloomFilter(id))?;
        if join.algo != JoinAlgo::Hash {
            return Err(Error::InvalidPlan(format!(
                "bloom filter {id} fed by a non-hash join"
            )));
        }
        if feed.column != bf.build {
            return Err(Error::InvalidPlan(format!(
                "bloom filter {id} fed from the wrong column"
            )));
        }
        if !mask_contains(join.build.rel_set(), bf.build.rel) {
            return Err(Error::InvalidPlan(format!(
                "bloom filter {id} build relation not under the feeding join's build side"
            )));
        }
        // δ must be satisfied by the build side, counting the δ assumptions
        // of filters applied inside it (the chained-resolution exception).
        if bf.delta & !join.build.coverage() != 0 {
            return Err(Error::InvalidPlan(format!(
                "bloom filter {id}: delta not covered by the resolving join's build side"
            )));
        }
        if !mask_contains(join.probe.rel_set(), *scan_rel) {
            return Err(Error::InvalidPlan(format!(
                "bloom filter {id} applied outside the feeding join's probe side"
            )));
        }
        check_crossings(&join.probe, *scan_rel, id)?;
    }
    for id in feeds.keys() {
        if !applies.contains_key(id) {
            return Err(Error::InvalidPlan(format!(
                "bloom filter {id} is built but never applied"
            )));
        }
    }
    check_clauses(plan, query)?;
    Ok(())
}

/// Walks from the resolving join's probe side down to the filtered scan and
/// rejects join types the filter may not cross: anti and full-outer joins
/// never, semi joins only on the probe side, left-outer joins only on the
/// null-padded (build) side.
fn check_crossings(node: &PlanNode, scan_rel: usize, id: BfId) -> Result<()> {
    match node {
        PlanNode::Scan { .. } => Ok(()),
        PlanNode::Join(j) => {
            let in_build = mask_contains(j.build.rel_set(), scan_rel);
            let side = if in_build { &j.build } else { &j.probe };
            let illegal = match j.join_type {
                JoinType::Inner => false,
                JoinType::Anti | JoinType::FullOuter => true,
                JoinType::Semi => in_build,
                JoinType::LeftOuter => !in_build,
            };
            if illegal {
                return Err(Error::InvalidPlan(format!(
                    "bloom filter {id} crosses a {} join illegally",
                    j.join_type.keyword()
                )));
            }
            check_crossings(side, scan_rel, id)
        }
    }
}

fn check_clauses(plan: &PlanNode, query: &Query) -> Result<()> {
    let mut seen: Vec<usize> = Vec::new();
    let mut err = None;
    plan.visit(&mut |n| {
        if let PlanNode::Join(j) = n {
            let (b, p) = (j.build.rel_set(), j.probe.rel_set());
            for &ci in &j.clauses {
                seen.push(ci);
                let cl = &query.clauses[ci];
                let (l, r) = (1u64 << cl.left.rel, 1u64 << cl.right.rel);
                let split = (l & p != 0 && r & b != 0) || (l & b != 0 && r & p != 0);
                if !split {
                    err = Some(format!("clause {ci} does not connect the join's inputs"));
                }
                if cl.join_type != JoinType::Inner {
                    if j.join_type != cl.join_type {
                        err = Some(format!("clause {ci} evaluated at a {:?} join", j.join_type));
                    }
                    // Physical convention: the pendant right relation of a
                    // non-inner clause is the build side.
                    if !mask_contains(b, cl.right.rel) {
                        err = Some(format!("non-inner clause {ci} build side mismatch"));
                    }
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(Error::InvalidPlan(e));
    }
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != query.clauses.len() {
        return Err(Error::InvalidPlan(format!(
            "{} of {} join clauses evaluated",
            seen.len(),
            query.clauses.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{CmpOp, JoinClause, Projection, RelRef};

    fn col(rel: usize, name: &str) -> ColRef {
        ColRef {
            rel,
            column: name.into(),
        }
    }

    fn two_rel_query(jt: JoinType) -> Query {
        Query {
            relations: vec![
                RelRef {
                    table: "a".into(),
                    alias: "a".into(),
                },
                RelRef {
                    table: "b".into(),
                    alias: "b".into(),
                },
            ],
            clauses: vec![JoinClause {
                left: col(0, "x"),
                right: col(1, "x"),
                join_type: jt,
                op: CmpOp::Eq,
                hashable: true,
            }],
            predicates: vec![],
            residuals: vec![],
            projection: Projection::Star,
        }
    }

    fn scan(rel: usize, bfs: Vec<BfApply>) -> PlanNode {
        PlanNode::Scan {
            rel,
            bfs,
            est_rows: 100.0,
        }
    }

    fn hash_join(jt: JoinType, clauses: Vec<usize>, build: PlanNode, probe: PlanNode, feeds: Vec<BfFeed>) -> PlanNode {
        PlanNode::Join(Box::new(JoinNode {
            algo: JoinAlgo::Hash,
            join_type: jt,
            clauses,
            build,
            probe,
            feeds,
            est_rows: 100.0,
            build_stream: None,
            probe_stream: None,
        }))
    }

    fn bf(id: BfId, apply: ColRef, build: ColRef, delta: RelMask) -> BfApply {
        BfApply {
            id,
            apply,
            build,
            delta,
            est_fpr: 0.03,
            est_selectivity: 0.1,
        }
    }

    #[test]
    fn valid_single_bf_plan() {
        let q = two_rel_query(JoinType::Inner);
        let plan = hash_join(
            JoinType::Inner,
            vec![0],
            scan(1, vec![]),
            scan(0, vec![bf(0, col(0, "x"), col(1, "x"), 0b10)]),
            vec![BfFeed {
                id: 0,
                column: col(1, "x"),
                strategy: BfStrategy::BroadcastBuild,
            }],
        );
        validate(&plan, &q).unwrap();
        let text = plan.explain(&q, None);
        assert!(text.contains("HashJoin(build={b}, probe={a})"), "{text}");
        assert!(text.contains("<- BF(b.x, delta={b}, est_fpr=0.0300)"), "{text}");
    }

    #[test]
    fn unresolved_bf_rejected() {
        let q = two_rel_query(JoinType::Inner);
        let plan = hash_join(
            JoinType::Inner,
            vec![0],
            scan(1, vec![]),
            scan(0, vec![bf(0, col(0, "x"), col(1, "x"), 0b10)]),
            vec![],
        );
        assert!(matches!(
            validate(&plan, &q),
            Err(Error::UnresolvedBloomFilter(0))
        ));
    }

    #[test]
    fn bf_across_anti_join_rejected() {
        // Three relations: c anti-joins b; a BF on scan a crossing the anti
        // join is illegal.
        let mut q = two_rel_query(JoinType::Inner);
        q.relations.push(RelRef {
            table: "c".into(),
            alias: "c".into(),
        });
        q.clauses.push(JoinClause {
            left: col(0, "x"),
            right: col(2, "x"),
            join_type: JoinType::Anti,
            op: CmpOp::Eq,
            hashable: true,
        });
        let inner = hash_join(
            JoinType::Anti,
            vec![1],
            scan(2, vec![]),
            scan(0, vec![bf(0, col(0, "x"), col(1, "x"), 0b010)]),
            vec![],
        );
        let plan = hash_join(
            JoinType::Inner,
            vec![0],
            scan(1, vec![]),
            inner,
            vec![BfFeed {
                id: 0,
                column: col(1, "x"),
                strategy: BfStrategy::BroadcastBuild,
            }],
        );
        match validate(&plan, &q) {
            Err(Error::InvalidPlan(m)) => assert!(m.contains("crosses"), "{m}"),
            other => panic!("expected crossing rejection, got {other:?}"),
        }
    }

    #[test]
    fn chained_delta_coverage() {
        // Fig. 3(c)-style: BF on a with δ={b,c} resolved by joining a with a
        // b-scan that itself carries a BF with δ={c}.
        let mut q = two_rel_query(JoinType::Inner);
        q.relations.push(RelRef {
            table: "c".into(),
            alias: "c".into(),
        });
        q.clauses.push(JoinClause {
            left: col(1, "x"),
            right: col(2, "x"),
            join_type: JoinType::Inner,
            op: CmpOp::Eq,
            hashable: true,
        });
        let b_scan = scan(1, vec![bf(1, col(1, "x"), col(2, "x"), 0b100)]);
        let resolving = hash_join(
            JoinType::Inner,
            vec![0],
            b_scan,
            scan(0, vec![bf(0, col(0, "x"), col(1, "x"), 0b110)]),
            vec![BfFeed {
                id: 0,
                column: col(1, "x"),
                strategy: BfStrategy::BroadcastBuild,
            }],
        );
        let plan = hash_join(
            JoinType::Inner,
            vec![1],
            scan(2, vec![]),
            resolving,
            vec![BfFeed {
                id: 1,
                column: col(2, "x"),
                strategy: BfStrategy::BroadcastBuild,
            }],
        );
        validate(&plan, &q).unwrap();
        // Without b's own filter, δ={b,c} is not covered at the inner join.
        let bad_b = scan(1, vec![]);
        let resolving = hash_join(
            JoinType::Inner,
            vec![0],
            bad_b,
            scan(0, vec![bf(0, col(0, "x"), col(1, "x"), 0b110)]),
            vec![BfFeed {
                id: 0,
                column: col(1, "x"),
                strategy: BfStrategy::BroadcastBuild,
            }],
        );
        let plan = hash_join(JoinType::Inner, vec![1], scan(2, vec![]), resolving, vec![]);
        assert!(validate(&plan, &q).is_err());
    }
}
