//! Cardinality and selectivity estimation.
//!
//! Join cardinality follows the containment-of-values model: one factor per
//! internal equijoin clause, independence across clauses. FK→PK joins with an
//! unfiltered PK side fall out of the formula as |FK side| exactly. Semi-join
//! selectivity over a δ set is NDV-ratio based with an explicit monotonicity
//! clamp so that growing δ never increases the estimate.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::bloom;
use crate::catalog::{Catalog, ColumnDef, TableDef};
use crate::frontend::{ColRef, JoinType, PredicateOp, Query};

/// Relation sets are bitmasks over `Query::relations` indices.
pub type RelMask = u64;

pub fn mask_of(rels: &[usize]) -> RelMask {
    rels.iter().fold(0, |m, r| m | (1u64 << r))
}

pub fn mask_contains(mask: RelMask, rel: usize) -> bool {
    mask & (1u64 << rel) != 0
}

pub fn mask_rels(mask: RelMask) -> impl Iterator<Item = usize> {
    (0..64).filter(move |r| mask & (1u64 << r) != 0)
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Selectivity assumed for predicates we cannot interpolate.
    pub unknown_selectivity: f64,
    /// Bloom sizing constant used when estimating FPR.
    pub bits_per_distinct: f64,
    /// When set, every estimated filter uses this FPR instead of the
    /// analytic figure (fixtures use it to reproduce published cardinalities).
    pub pinned_fpr: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            unknown_selectivity: 1.0 / 3.0,
            bits_per_distinct: 10.0,
            pinned_fpr: None,
        }
    }
}

/// `rows × (s + (1−s)·fpr)`: cardinality of a Bloom-filtered scan.
pub fn bf_scan_cardinality(base_rows: f64, s: f64, fpr: f64) -> f64 {
    base_rows * (s + (1.0 - s) * fpr)
}

/// Selectivity of one local predicate against column stats. Equality is
/// 1/ndv; integer ranges interpolate over the value domain [min, max];
/// anything else falls back to `unknown`. Null rows never pass.
pub fn local_selectivity(col: &ColumnDef, op: &PredicateOp, unknown: f64) -> f64 {
    let notnull = 1.0 - col.null_fraction;
    let sel = match op {
        PredicateOp::Cmp(cmp, lit) => {
            use crate::frontend::{CmpOp, Literal};
            match (cmp, lit, col.min, col.max) {
                (CmpOp::Eq, _, _, _) => {
                    if col.ndv == 0 {
                        0.0
                    } else {
                        1.0 / col.ndv as f64
                    }
                }
                (_, Literal::Int(v), Some(min), Some(max)) if max >= min => {
                    let size = (max - min + 1) as f64;
                    let v = *v;
                    match cmp {
                        CmpOp::Lt => (v - min) as f64 / size,
                        CmpOp::Le => (v - min + 1) as f64 / size,
                        CmpOp::Ge => (max - v + 1) as f64 / size,
                        CmpOp::Gt => (max - v) as f64 / size,
                        CmpOp::Eq => unreachable!(),
                    }
                }
                _ => unknown,
            }
        }
        PredicateOp::Between(a, b) => match (col.min, col.max) {
            (Some(min), Some(max)) if max >= min => {
                let lo = (*a).max(min);
                let hi = (*b).min(max);
                if hi < lo {
                    0.0
                } else {
                    (hi - lo + 1) as f64 / (max - min + 1) as f64
                }
            }
            _ => unknown,
        },
        PredicateOp::AnyOf(lits) => {
            if col.ndv == 0 {
                0.0
            } else {
                lits.len() as f64 / col.ndv as f64
            }
        }
    };
    (sel * notnull).clamp(0.0, 1.0)
}

pub struct Estimator<'a> {
    catalog: &'a Catalog,
    query: &'a Query,
    pub config: EstimatorConfig,
    rows_memo: RefCell<HashMap<RelMask, f64>>,
    semi_memo: RefCell<HashMap<(ColRef, RelMask, ColRef), f64>>,
}

impl<'a> Estimator<'a> {
    pub fn new(catalog: &'a Catalog, query: &'a Query, config: EstimatorConfig) -> Self {
        Estimator {
            catalog,
            query,
            config,
            rows_memo: RefCell::new(HashMap::new()),
            semi_memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn query(&self) -> &Query {
        self.query
    }

    pub fn catalog(&self) -> &Catalog {
        self.catalog
    }

    fn table(&self, rel: usize) -> &TableDef {
        self.catalog
            .table_by_name(self.query.table(rel))
            .expect("query resolved against this catalog")
    }

    pub fn column(&self, c: &ColRef) -> &ColumnDef {
        self.table(c.rel)
            .column(&c.column)
            .expect("query resolved against this catalog")
    }

    /// Base rows of one relation after its local predicates.
    pub fn rows_local(&self, rel: usize) -> f64 {
        let mut rows = self.table(rel).rows as f64;
        for p in &self.query.predicates {
            if p.target.rel == rel {
                rows *= local_selectivity(
                    self.column(&p.target),
                    &p.op,
                    self.config.unknown_selectivity,
                );
            }
        }
        rows
    }

    /// Column NDV after local predicates: the raw NDV capped by the filtered
    /// row count.
    pub fn ndv_local(&self, c: &ColRef) -> f64 {
        (self.column(c).ndv as f64).min(self.rows_local(c.rel))
    }

    /// Canonical cardinality of joining all relations in `mask`. The value
    /// depends only on the set, never on the join order.
    pub fn est_rows(&self, mask: RelMask) -> f64 {
        if let Some(&v) = self.rows_memo.borrow().get(&mask) {
            return v;
        }
        let mut est: f64 = mask_rels(mask).map(|r| self.rows_local(r)).product();
        for cl in &self.query.clauses {
            if !mask_contains(mask, cl.left.rel) || !mask_contains(mask, cl.right.rel) {
                continue;
            }
            est *= self.clause_factor(cl);
        }
        self.rows_memo.borrow_mut().insert(mask, est);
        est
    }

    /// Per-clause multiplicative factor within `est_rows`'s product form.
    fn clause_factor(&self, cl: &crate::frontend::JoinClause) -> f64 {
        let nn_l = 1.0 - self.column(&cl.left).null_fraction;
        let nn_r = 1.0 - self.column(&cl.right).null_fraction;
        let rows_r = self.rows_local(cl.right.rel).max(1.0);
        let eq_factor = if cl.hashable {
            nn_l * nn_r / self.ndv_local(&cl.left).max(self.ndv_local(&cl.right)).max(1.0)
        } else {
            self.config.unknown_selectivity / rows_r
        };
        match cl.join_type {
            JoinType::Inner => eq_factor,
            // Semi/anti produce left-side rows only; divide the right
            // relation's rows back out of the product.
            JoinType::Semi => {
                let s = nn_l * (self.ndv_local(&cl.right) / self.ndv_local(&cl.left).max(1.0)).min(1.0);
                s / rows_r
            }
            JoinType::Anti => {
                let s = nn_l * (self.ndv_local(&cl.right) / self.ndv_local(&cl.left).max(1.0)).min(1.0);
                (1.0 - s) / rows_r
            }
            // Preserve the outer side: at least the left-side cardinality.
            JoinType::LeftOuter | JoinType::FullOuter => eq_factor.max(1.0 / rows_r),
        }
    }

    pub fn join_cardinality(&self, left: RelMask, right: RelMask) -> f64 {
        debug_assert_eq!(left & right, 0);
        self.est_rows(left | right)
    }

    /// NDV of `col` as seen inside the δ-join: the distinct values a filter
    /// built within δ would insert. Bounded by the column's local NDV (joins
    /// never add values) and by the δ-join's cardinality (each surviving row
    /// contributes at most one value). Deriving the bound from `est_rows`
    /// keeps it consistent with the cardinalities the dynamic program costs,
    /// and it detects losslessness: an unfiltered key joined only through
    /// total references keeps its full NDV.
    pub fn ndv_within(&self, delta: RelMask, col: &ColRef) -> f64 {
        debug_assert!(mask_contains(delta, col.rel));
        self.ndv_local(col).min(self.est_rows(delta))
    }

    /// Cheap safe upper bound on build-side distinct values: the raw column
    /// NDV or the δ-join's estimated cardinality, whichever is smaller. Used
    /// for filter sizing and the size cap.
    pub fn ndv_upper_bound(&self, delta: RelMask, build: &ColRef) -> f64 {
        debug_assert!(mask_contains(delta, build.rel));
        (self.column(build).ndv as f64).min(self.est_rows(delta))
    }

    /// Selectivity of `apply ⋉ delta` through the `apply`/`build` columns.
    /// Pinned catalog entries take precedence over the NDV-ratio formula;
    /// either way the result is clamped monotone in δ.
    pub fn semijoin_selectivity(&self, apply: &ColRef, delta: RelMask, build: &ColRef) -> f64 {
        debug_assert!(mask_contains(delta, build.rel));
        let key = (apply.clone(), delta, build.clone());
        if let Some(&v) = self.semi_memo.borrow().get(&key) {
            return v;
        }
        let mut s = self.semijoin_raw(apply, delta, build);
        // Monotone clamp: removing a relation from δ (other than the build
        // relation) can only loosen the reduction.
        for r in mask_rels(delta) {
            if r == build.rel {
                continue;
            }
            let sub = delta & !(1u64 << r);
            s = s.min(self.semijoin_selectivity(apply, sub, build));
        }
        let s = s.clamp(0.0, 1.0);
        self.semi_memo.borrow_mut().insert(key, s);
        s
    }

    fn semijoin_raw(&self, apply: &ColRef, delta: RelMask, build: &ColRef) -> f64 {
        let apply_table = self.query.table(apply.rel);
        let build_table = self.query.table(build.rel);
        let delta_tables: Vec<&str> = mask_rels(delta).map(|r| self.query.table(r)).collect();
        for p in self.catalog.pinned_selectivities() {
            if p.apply_table == apply_table
                && p.apply_column == apply.column
                && p.build_table == build_table
                && p.build_column == build.column
                && p.delta.len() == delta_tables.len()
                && p.delta.iter().all(|t| delta_tables.contains(&t.as_str()))
            {
                return p.selectivity;
            }
        }
        let nn = 1.0 - self.column(apply).null_fraction;
        nn * (self.ndv_within(delta, build) / self.ndv_local(apply).max(1.0)).min(1.0)
    }

    /// FPR used in estimates for a filter sized for `n_upper` distinct keys.
    pub fn fpr_for(&self, n_upper: f64) -> f64 {
        if let Some(f) = self.config.pinned_fpr {
            return f;
        }
        let n = n_upper.max(0.0).round() as u64;
        let m = ((self.config.bits_per_distinct * n as f64).ceil() as u64).max(64);
        bloom::analytic_fpr(n, m, bloom::HASH_COUNT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ConstraintKind, KeyConstraint, TableDef, ValueDomain};
    use crate::frontend::parse;

    fn col(name: &str, ndv: u64, min: i64, max: i64) -> ColumnDef {
        ColumnDef {
            name: name.into(),
            domain: ValueDomain::Int,
            ndv,
            null_fraction: 0.0,
            min: Some(min),
            max: Some(max),
        }
    }

    fn catalog() -> Catalog {
        let mut c = Catalog::new();
        c.define_table(TableDef {
            name: "l".into(),
            rows: 1000,
            columns: vec![col("k", 100, 0, 99), col("v", 1000, 0, 999)],
        })
        .unwrap();
        c.define_table(TableDef {
            name: "r".into(),
            rows: 100,
            columns: vec![col("k", 100, 0, 99)],
        })
        .unwrap();
        c.define_table(TableDef {
            name: "tiny".into(),
            rows: 10,
            columns: vec![col("x", 10, 0, 9)],
        })
        .unwrap();
        c.define_table(TableDef {
            name: "tiny2".into(),
            rows: 10,
            columns: vec![col("y", 10, 0, 9)],
        })
        .unwrap();
        c.register_constraint(KeyConstraint {
            kind: ConstraintKind::PrimaryKey,
            table: "r".into(),
            column: "k".into(),
            ref_table: None,
            ref_column: None,
        })
        .unwrap();
        c.register_constraint(KeyConstraint {
            kind: ConstraintKind::ForeignKey,
            table: "l".into(),
            column: "k".into(),
            ref_table: Some("r".into()),
            ref_column: Some("k".into()),
        })
        .unwrap();
        c
    }

    #[test]
    fn local_selectivities() {
        let c = col("c", 100, 0, 999);
        let eq = PredicateOp::Cmp(crate::frontend::CmpOp::Eq, crate::frontend::Literal::Int(5));
        assert!((local_selectivity(&c, &eq, 0.33) - 0.01).abs() < 1e-12);
        let lt = PredicateOp::Cmp(crate::frontend::CmpOp::Lt, crate::frontend::Literal::Int(100));
        assert!((local_selectivity(&c, &lt, 0.33) - 0.1).abs() < 1e-12);
        let all = PredicateOp::Between(0, 999);
        assert!((local_selectivity(&c, &all, 0.33) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn join_cardinality_basics() {
        let cat = catalog();
        let q = parse("SELECT * FROM l, r WHERE l.k = r.k", &cat).unwrap();
        let e = Estimator::new(&cat, &q, EstimatorConfig::default());
        // |L||R| / max(ndv) = 1000·100/100
        assert!((e.join_cardinality(0b01, 0b10) - 1000.0).abs() < 1e-6);

        let q = parse("SELECT * FROM tiny, tiny2", &cat).unwrap();
        let e = Estimator::new(&cat, &q, EstimatorConfig::default());
        assert!((e.est_rows(0b11) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn fk_to_unfiltered_pk_is_fk_rows() {
        let cat = catalog();
        let q = parse("SELECT * FROM l, r WHERE l.k = r.k", &cat).unwrap();
        let e = Estimator::new(&cat, &q, EstimatorConfig::default());
        assert!((e.est_rows(0b11) - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn semijoin_unfiltered_superset_is_one() {
        let cat = catalog();
        let q = parse("SELECT * FROM l, r WHERE l.k = r.k", &cat).unwrap();
        let e = Estimator::new(&cat, &q, EstimatorConfig::default());
        // l's key domain is covered by r's unfiltered PK.
        let apply = ColRef { rel: 0, column: "k".into() };
        let build = ColRef { rel: 1, column: "k".into() };
        assert!((e.semijoin_selectivity(&apply, 0b10, &build) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn semijoin_monotone_in_delta() {
        let cat = catalog();
        let q = parse(
            "SELECT * FROM l, r, tiny WHERE l.k = r.k AND r.k = tiny.x AND tiny.x < 3",
            &cat,
        )
        .unwrap();
        let e = Estimator::new(&cat, &q, EstimatorConfig::default());
        let apply = ColRef { rel: 0, column: "k".into() };
        let build = ColRef { rel: 1, column: "k".into() };
        let s_small = e.semijoin_selectivity(&apply, 0b010, &build);
        let s_big = e.semijoin_selectivity(&apply, 0b110, &build);
        assert!(s_big <= s_small + 1e-12, "s({{r,tiny}})={s_big} > s({{r}})={s_small}");
        assert!(s_big < s_small, "tiny's filter should reduce the build side");
    }

    #[test]
    fn ndv_upper_bound_min_rule() {
        let cat = catalog();
        let q = parse("SELECT * FROM l, r WHERE l.k = r.k AND l.v < 100", &cat).unwrap();
        let e = Estimator::new(&cat, &q, EstimatorConfig::default());
        let c = ColRef { rel: 0, column: "v".into() };
        // raw ndv 1000 vs est rows of δ={l} = 100 filtered rows.
        assert!((e.ndv_upper_bound(0b01, &c) - 100.0).abs() < 1e-9);
        let k = ColRef { rel: 1, column: "k".into() };
        assert!((e.ndv_upper_bound(0b10, &k) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn bf_scan_cardinality_examples() {
        let v = bf_scan_cardinality(1_000_000.0, 0.006, 0.0302);
        assert!((v - 36_019.0).abs() < 60.0, "v={v}");
        assert_eq!(bf_scan_cardinality(500.0, 0.2, 0.0), 100.0);
        assert_eq!(bf_scan_cardinality(500.0, 1.0, 0.9), 500.0);
        // Bounded: rows·s ≤ result ≤ rows.
        let v = bf_scan_cardinality(100.0, 0.3, 0.5);
        assert!(v >= 30.0 && v <= 100.0);
    }

    #[test]
    fn pinned_selectivity_wins() {
        let mut cat = catalog();
        cat.add_pinned(crate::catalog::PinnedSemijoinSelectivity {
            apply_table: "l".into(),
            apply_column: "k".into(),
            build_table: "r".into(),
            build_column: "k".into(),
            delta: vec!["r".into()],
            selectivity: 0.77,
        });
        let q = parse("SELECT * FROM l, r WHERE l.k = r.k", &cat).unwrap();
        let e = Estimator::new(&cat, &q, EstimatorConfig::default());
        let apply = ColRef { rel: 0, column: "k".into() };
        let build = ColRef { rel: 1, column: "k".into() };
        assert!((e.semijoin_selectivity(&apply, 0b10, &build) - 0.77).abs() < 1e-12);
    }
}
