//! Bundled fixtures: curated catalogs, datasets, queries, and self-verifying
//! assertions over planner and executor observables.

use crate::catalog::{
    Catalog, ColumnDef, ConstraintKind, KeyConstraint, PinnedSemijoinSelectivity, TableDef,
    ValueDomain,
};
use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::executor::{execute, Database, ExecMetrics, ExecOptions, ResultSet};
use crate::frontend::parse;
use crate::planner::{plan_query, Planned, PlannerConfig, PlannerMode};

use super::gen::{generate, ColGen, ColKind, GenSpec, TableGen};

pub struct FixtureQuery {
    pub label: &'static str,
    pub sql: &'static str,
}

/// A named scenario: catalog (possibly with pinned selectivities), optional
/// real data, queries, and an assertion routine that exercises the planner
/// and executor and fails loudly when an expectation breaks.
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub catalog: Catalog,
    pub data: Option<Database>,
    pub queries: Vec<FixtureQuery>,
    pub config: PlannerConfig,
    pub cost: CostParams,
    check_fn: fn(&Fixture) -> Result<()>,
}

impl Fixture {
    /// Runs the fixture's assertions. Errors carry the failed expectation.
    pub fn check(&self) -> Result<()> {
        (self.check_fn)(self)
    }

    pub fn plan(&self, sql: &str, mode: PlannerMode) -> Result<Planned> {
        let q = parse(sql, &self.catalog)?;
        plan_query(&self.catalog, &q, &self.config, &self.cost, mode)
    }

    /// Plans and executes one query; requires data.
    pub fn run(&self, sql: &str, mode: PlannerMode) -> Result<(Planned, ResultSet, ExecMetrics)> {
        let db = self
            .data
            .as_ref()
            .ok_or_else(|| Error::AssertionFailed(format!("{}: fixture has no data", self.name)))?;
        let q = parse(sql, &self.catalog)?;
        let planned = plan_query(&self.catalog, &q, &self.config, &self.cost, mode)?;
        let opts = ExecOptions {
            dop: self.config.dop.max(1),
            bits_per_distinct: self.config.bits_per_distinct,
            ..ExecOptions::default()
        };
        let (rs, m) = execute(&planned.plan, &q, db, &opts)?;
        Ok((planned, rs, m))
    }
}

pub const FIXTURE_NAMES: [&str; 5] = [
    "running_example",
    "running_example_scaled",
    "q12_pattern",
    "q7_pattern",
    "mini_tpch",
];

pub fn bundled_fixtures() -> Vec<Fixture> {
    FIXTURE_NAMES.iter().map(|n| fixture(n).unwrap()).collect()
}

pub fn fixture(name: &str) -> Result<Fixture> {
    match name {
        "running_example" => Ok(running_example()),
        "running_example_scaled" => running_example_scaled(),
        "q12_pattern" => q12_pattern(),
        "q7_pattern" => q7_pattern(),
        "mini_tpch" => mini_tpch(),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::AssertionFailed(msg.into()))
    }
}

fn int_col(name: &str, ndv: u64, nf: f64, min: i64, max: i64) -> ColumnDef {
    ColumnDef {
        name: name.into(),
        domain: ValueDomain::Int,
        ndv,
        null_fraction: nf,
        min: Some(min),
        max: Some(max),
    }
}

// ---------------------------------------------------------------------------
// running_example: the three-table scenario with declared statistics and
// pinned semi-join selectivities. Planner-only; no data.
// ---------------------------------------------------------------------------

pub const RUNNING_SQL: &str =
    "SELECT * FROM t1, t2, t3 WHERE t1.c2 = t2.c1 AND t2.c2 = t3.c1 AND t2.c3 < 100";

/// Catalog and planner configuration for the running example: t1 is a
/// 600M-row fact table, t2 carries a 10% local predicate leaving 807K rows,
/// t3 is a 1M-row dimension referenced by t2.c2. Semi-join selectivities are
/// pinned (0.77, 0.006, and the value yielding 22M filtered t1 rows); the
/// filter FPR is pinned at 3.02%.
pub fn running_example_setup() -> (Catalog, PlannerConfig) {
    let mut c = Catalog::new();
    c.define_table(TableDef {
        name: "t1".into(),
        rows: 600_000_000,
        columns: vec![
            int_col("c1", 600_000_000, 0.0, 0, 599_999_999),
            int_col("c2", 600_000_000, 0.2, 0, 599_999_999),
        ],
    })
    .unwrap();
    c.define_table(TableDef {
        name: "t2".into(),
        rows: 8_070_000,
        columns: vec![
            int_col("c1", 1_000_000, 0.0, 0, 599_999_999),
            int_col("c2", 3_000_000, 0.0, 0, 999_999),
            int_col("c3", 1000, 0.0, 0, 999),
        ],
    })
    .unwrap();
    c.define_table(TableDef {
        name: "t3".into(),
        rows: 1_000_000,
        columns: vec![int_col("c1", 1_000_000, 0.0, 0, 999_999)],
    })
    .unwrap();
    c.register_constraint(KeyConstraint {
        kind: ConstraintKind::PrimaryKey,
        table: "t3".into(),
        column: "c1".into(),
        ref_table: None,
        ref_column: None,
    })
    .unwrap();
    c.register_constraint(KeyConstraint {
        kind: ConstraintKind::ForeignKey,
        table: "t2".into(),
        column: "c2".into(),
        ref_table: Some("t3".into()),
        ref_column: Some("c1".into()),
    })
    .unwrap();
    let pin = |apply: (&str, &str), build: (&str, &str), delta: &[&str], s: f64| {
        PinnedSemijoinSelectivity {
            apply_table: apply.0.into(),
            apply_column: apply.1.into(),
            build_table: build.0.into(),
            build_column: build.1.into(),
            delta: delta.iter().map(|s| s.to_string()).collect(),
            selectivity: s,
        }
    };
    // 600M × (s + (1−s)·0.0302) = 22M  ⇒  s ≈ 0.0066680
    let s_t1 = (22.0 / 600.0 - 0.0302) / (1.0 - 0.0302);
    c.add_pinned(pin(("t1", "c2"), ("t2", "c1"), &["t2"], s_t1));
    c.add_pinned(pin(("t1", "c2"), ("t2", "c1"), &["t2", "t3"], s_t1));
    c.add_pinned(pin(("t3", "c1"), ("t2", "c2"), &["t2"], 0.77));
    c.add_pinned(pin(("t3", "c1"), ("t2", "c2"), &["t1", "t2"], 0.006));
    let cfg = PlannerConfig {
        pinned_fpr: Some(0.0302),
        ..PlannerConfig::default()
    };
    (c, cfg)
}

fn running_example() -> Fixture {
    let (catalog, config) = running_example_setup();
    Fixture {
        name: "running_example",
        description: "three-table pinned-statistics scenario; planner-only assertions",
        catalog,
        data: None,
        queries: vec![FixtureQuery {
            label: "main",
            sql: RUNNING_SQL,
        }],
        config,
        cost: CostParams::default(),
        check_fn: check_running_example,
    }
}

fn check_running_example(fx: &Fixture) -> Result<()> {
    use crate::estimator::mask_of;
    use crate::planner::SubplanVerdict;

    let cbo = fx.plan(RUNNING_SQL, PlannerMode::BfCbo)?;

    // Candidates: t1.c2 against t2.c1, t3.c1 against t2.c2; nothing else.
    ensure(cbo.candidates.len() == 2, "expected exactly 2 candidates")?;
    let t1c = cbo.candidates.iter().find(|c| c.apply.rel == 0);
    let t3c = cbo.candidates.iter().find(|c| c.apply.rel == 2);
    let (t1c, t3c) = match (t1c, t3c) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::AssertionFailed("candidate apply sides wrong".into())),
    };
    ensure(
        t1c.build.rel == 1 && t1c.build.column == "c1",
        "t1 candidate should build from t2.c1",
    )?;
    ensure(
        t3c.build.rel == 1 && t3c.build.column == "c2",
        "t3 candidate should build from t2.c2",
    )?;

    // Phase-1 delta lists: [{t2},{t2,t3}] and [{t2},{t1,t2}].
    let want = |deltas: &[crate::estimator::RelMask], a, b| {
        deltas.len() == 2 && deltas.contains(&a) && deltas.contains(&b)
    };
    ensure(
        want(&t1c.deltas, mask_of(&[1]), mask_of(&[1, 2])),
        format!("t1 deltas {:?} != [{{t2}},{{t2,t3}}]", t1c.deltas),
    )?;
    ensure(
        want(&t3c.deltas, mask_of(&[1]), mask_of(&[0, 1])),
        format!("t3 deltas {:?} != [{{t2}},{{t1,t2}}]", t3c.deltas),
    )?;

    // Sub-plan decisions: t1 accepted at 22M with the redundant δ pruned by
    // dominance; t3 rejected at s=0.77 for δ={t2} and accepted near 36K for
    // δ={t1,t2}.
    let accepted_rows = |rel, delta| {
        cbo.decisions.iter().find_map(|d| match d.verdict {
            SubplanVerdict::Accepted { rows, .. } if d.rel == rel && d.delta == delta => Some(rows),
            _ => None,
        })
    };
    let r = accepted_rows(0, mask_of(&[1]))
        .ok_or_else(|| Error::AssertionFailed("t1 δ={t2} sub-plan missing".into()))?;
    ensure((r - 22_000_000.0).abs() < 22_000_000.0 * 0.001, format!("t1 filtered rows {r} != 22M"))?;
    ensure(
        cbo.decisions.iter().any(|d| d.rel == 0
            && d.delta == mask_of(&[1, 2])
            && d.verdict == SubplanVerdict::PrunedDominated),
        "t1 δ={t2,t3} should be dominance-pruned",
    )?;
    ensure(
        cbo.decisions.iter().any(|d| d.rel == 2
            && d.delta == mask_of(&[1])
            && matches!(d.verdict, SubplanVerdict::RejectedSelectivity { s } if (s - 0.77).abs() < 1e-9)),
        "t3 δ={t2} should be rejected at s=0.77",
    )?;
    let r = accepted_rows(2, mask_of(&[0, 1]))
        .ok_or_else(|| Error::AssertionFailed("t3 δ={t1,t2} sub-plan missing".into()))?;
    ensure(
        (r - 36_000.0).abs() <= 36_000.0 * 0.05,
        format!("t3 filtered rows {r} outside 36K ± 5%"),
    )?;

    // Winning plan: (t1 + BF) probed by t2, the pair probed by t3's build.
    ensure(
        cbo.plan.shape() == "(b:2 p:(b:1 p:0))",
        format!("winning shape {} unexpected", cbo.plan.shape()),
    )?;
    ensure(cbo.plan.bf_count() == 1, "winning plan should carry one filter")?;

    let nobf = fx.plan(RUNNING_SQL, PlannerMode::NoBf)?;
    ensure(nobf.plan.bf_count() == 0, "no-bf plan must be filter-free")?;
    ensure(
        cbo.cost.total < nobf.cost.total,
        "bf-cbo must beat no-bf on estimated cost",
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// running_example_scaled: the same shape at 60K/807/100 rows with real
// generated data; executor assertions.
// ---------------------------------------------------------------------------

const SCALED_SQL: &str =
    "SELECT * FROM t1, t2, t3 WHERE t1.c2 = t2.c1 AND t2.c2 = t3.c1 AND t2.c3 < 100";

fn running_example_scaled() -> Result<Fixture> {
    let spec = GenSpec {
        seed: 0x5CA1ED,
        tables: vec![
            TableGen {
                name: "t3".into(),
                rows: 100,
                columns: vec![col("c1", ColKind::Serial, 0.0)],
            },
            TableGen {
                name: "t2".into(),
                rows: 807,
                columns: vec![
                    col(
                        "c1",
                        ColKind::IntRange {
                            min: 1_000_000,
                            max: 100_000_000,
                        },
                        0.0,
                    ),
                    col(
                        "c2",
                        ColKind::FkRef {
                            table: "t3".into(),
                            column: "c1".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                    col("c3", ColKind::IntRange { min: 0, max: 999 }, 0.0),
                ],
            },
            TableGen {
                name: "t1".into(),
                rows: 60_000,
                columns: vec![
                    col("c1", ColKind::Serial, 0.0),
                    col(
                        "c2",
                        ColKind::FkRef {
                            table: "t2".into(),
                            column: "c1".into(),
                            match_fraction: 0.05,
                            pick_from: None,
                            cycle: false,
                        },
                        0.2,
                    ),
                ],
            },
        ],
    };
    let (catalog, db) = generate(&spec)?;
    Ok(Fixture {
        name: "running_example_scaled",
        description: "running example at 60K/807/100 rows with real data",
        catalog,
        data: Some(db),
        queries: vec![FixtureQuery {
            label: "main",
            sql: SCALED_SQL,
        }],
        config: PlannerConfig::default(),
        cost: CostParams::default(),
        check_fn: check_scaled,
    })
}

fn check_scaled(fx: &Fixture) -> Result<()> {
    let (cbo, cbo_rs, cbo_m) = fx.run(SCALED_SQL, PlannerMode::BfCbo)?;
    ensure(cbo.plan.bf_count() >= 1, "bf-cbo should apply a filter")?;
    let (_, nobf_rs, nobf_m) = fx.run(SCALED_SQL, PlannerMode::NoBf)?;
    ensure(
        cbo_rs.canonical() == nobf_rs.canonical(),
        "bf-cbo and no-bf must return identical rows",
    )?;
    ensure(
        cbo_m.join_input_rows() < nobf_m.join_input_rows(),
        format!(
            "bf-cbo join inputs {} should undercut no-bf {}",
            cbo_m.join_input_rows(),
            nobf_m.join_input_rows()
        ),
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// q12_pattern: unfiltered primary-key side vs a filtered fact side. The
// filter-blind planner builds on orders; a Bloom filter flips the join.
// ---------------------------------------------------------------------------

const Q12_SQL: &str =
    "SELECT * FROM orders o, lineitem l WHERE o.o_orderkey = l.l_orderkey AND l.l_flag = 0";

fn q12_pattern() -> Result<Fixture> {
    let spec = GenSpec {
        seed: 0x012,
        tables: vec![
            TableGen {
                name: "orders".into(),
                rows: 150_000,
                columns: vec![
                    col("o_orderkey", ColKind::Serial, 0.0),
                    col("o_flag", ColKind::IntRange { min: 0, max: 9 }, 0.0),
                ],
            },
            TableGen {
                name: "lineitem".into(),
                rows: 64_500,
                columns: vec![
                    col(
                        "l_orderkey",
                        ColKind::FkRef {
                            table: "orders".into(),
                            column: "o_orderkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                    col("l_flag", ColKind::IntRange { min: 0, max: 9 }, 0.0),
                ],
            },
        ],
    };
    let (catalog, db) = generate(&spec)?;
    Ok(Fixture {
        name: "q12_pattern",
        description: "foreign key into an unfiltered primary key; join flip under BF-CBO",
        catalog,
        data: Some(db),
        queries: vec![FixtureQuery {
            label: "main",
            sql: Q12_SQL,
        }],
        config: PlannerConfig {
            apply_row_threshold: 1_000.0,
            ..PlannerConfig::default()
        },
        cost: CostParams::default(),
        check_fn: check_q12,
    })
}

fn check_q12(fx: &Fixture) -> Result<()> {
    let nobf = fx.plan(Q12_SQL, PlannerMode::NoBf)?;
    let post = fx.plan(Q12_SQL, PlannerMode::BfPost)?;
    let (cbo, cbo_rs, cbo_m) = fx.run(Q12_SQL, PlannerMode::BfCbo)?;

    // BF-Post cannot help: the candidate filter is a foreign key into the
    // unfiltered orders primary key.
    ensure(post.plan.bf_count() == 0, "bf-post should add zero filters")?;
    ensure(post.plan.shape() == nobf.plan.shape(), "bf-post must keep the no-bf shape")?;

    // The filter-blind plan builds on orders; BF-CBO reverses the inputs and
    // filters the orders scan instead.
    let build_rel = |p: &Planned| match &p.plan {
        crate::plan::PlanNode::Join(j) => j.build.rel_set(),
        _ => 0,
    };
    ensure(build_rel(&nobf) == 1 << 0, "no-bf should build on orders")?;
    ensure(build_rel(&cbo) == 1 << 1, "bf-cbo should build on lineitem")?;
    ensure(cbo.plan.bf_count() == 1, "bf-cbo should apply exactly one filter")?;

    // Executed probe rows after the filter: at most 10% of the table.
    let scan0 = cbo_m
        .nodes
        .values()
        .find(|n| n.rows_scanned == 150_000)
        .ok_or_else(|| Error::AssertionFailed("orders scan metrics missing".into()))?;
    ensure(
        (scan0.rows_out as f64) <= 15_000.0,
        format!("filtered orders scan kept {} rows (> 10%)", scan0.rows_out),
    )?;

    let (_, nobf_rs, _) = fx.run(Q12_SQL, PlannerMode::NoBf)?;
    ensure(cbo_rs.canonical() == nobf_rs.canonical(), "results must match no-bf")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// q7_pattern: six relations with a predicate-transfer chain. BF-Post gets a
// single useful filter out of the fixed join order; BF-CBO reorders and
// applies five.
// ---------------------------------------------------------------------------

const Q7_SQL: &str = "SELECT * FROM supplier s, lineitem l, orders o, customer c, nation n1, nation n2 \
     WHERE s.s_suppkey = l.l_suppkey AND o.o_orderkey = l.l_orderkey \
     AND c.c_custkey = o.o_custkey AND s.s_nationkey = n1.n_nationkey \
     AND c.c_nationkey = n2.n_nationkey \
     AND ((n1.n_name = 'FRANCE' AND n2.n_name = 'GERMANY') \
       OR (n1.n_name = 'GERMANY' AND n2.n_name = 'FRANCE')) \
     AND l.l_shipdate BETWEEN 0 AND 949";

fn q7_pattern() -> Result<Fixture> {
    let nations = [
        "FRANCE", "GERMANY", "ALGERIA", "BRAZIL", "CANADA", "EGYPT", "INDIA", "JAPAN",
    ];
    let spec = GenSpec {
        seed: 0x07,
        tables: vec![
            TableGen {
                name: "nation".into(),
                rows: 8,
                columns: vec![
                    col("n_nationkey", ColKind::Serial, 0.0),
                    col(
                        "n_name",
                        ColKind::StrCycle {
                            choices: nations.iter().map(|s| s.to_string()).collect(),
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "supplier".into(),
                rows: 20_000,
                columns: vec![
                    col("s_suppkey", ColKind::Serial, 0.0),
                    col(
                        "s_nationkey",
                        ColKind::FkRef {
                            table: "nation".into(),
                            column: "n_nationkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "customer".into(),
                rows: 6_000,
                columns: vec![
                    col("c_custkey", ColKind::Serial, 0.0),
                    col(
                        "c_nationkey",
                        ColKind::FkRef {
                            table: "nation".into(),
                            column: "n_nationkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "orders".into(),
                rows: 10_000,
                columns: vec![
                    col("o_orderkey", ColKind::Serial, 0.0),
                    col(
                        "o_custkey",
                        ColKind::FkRef {
                            table: "customer".into(),
                            column: "c_custkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "lineitem".into(),
                rows: 64_500,
                columns: vec![
                    col(
                        "l_orderkey",
                        ColKind::FkRef {
                            table: "orders".into(),
                            column: "o_orderkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                    // Only 12K of the 20K suppliers ever ship: the value
                    // overlap with the supplier key space is deliberately
                    // sparse so one post-hoc filter stays worthwhile.
                    col(
                        "l_suppkey",
                        ColKind::FkRef {
                            table: "supplier".into(),
                            column: "s_suppkey".into(),
                            match_fraction: 1.0,
                            pick_from: Some(12_000),
                            cycle: false,
                        },
                        0.0,
                    ),
                    col("l_shipdate", ColKind::IntRange { min: 0, max: 999 }, 0.0),
                ],
            },
        ],
    };
    let (catalog, db) = generate(&spec)?;
    Ok(Fixture {
        name: "q7_pattern",
        description: "six-relation predicate-transfer chain; 5 filters under BF-CBO vs 1 post hoc",
        catalog,
        data: Some(db),
        queries: vec![FixtureQuery {
            label: "main",
            sql: Q7_SQL,
        }],
        config: PlannerConfig {
            apply_row_threshold: 1_000.0,
            ..PlannerConfig::default()
        },
        cost: CostParams {
            bf_apply_cost: 0.2,
            nl_pair_cost: 0.5,
            ..CostParams::default()
        },
        check_fn: check_q7,
    })
}

fn check_q7(fx: &Fixture) -> Result<()> {
    let (post, post_rs, post_m) = fx.run(Q7_SQL, PlannerMode::BfPost)?;
    let (cbo, cbo_rs, cbo_m) = fx.run(Q7_SQL, PlannerMode::BfCbo)?;
    ensure(
        post.plan.bf_count() == 1,
        format!("bf-post applied {} filters, expected 1", post.plan.bf_count()),
    )?;
    ensure(
        cbo.plan.bf_count() == 5,
        format!("bf-cbo applied {} filters, expected 5", cbo.plan.bf_count()),
    )?;
    ensure(
        cbo_m.join_input_rows() < post_m.join_input_rows(),
        format!(
            "bf-cbo join inputs {} should undercut bf-post {}",
            cbo_m.join_input_rows(),
            post_m.join_input_rows()
        ),
    )?;
    ensure(cbo_rs.canonical() == post_rs.canonical(), "results must agree")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// mini_tpch: an eight-table miniature of the familiar star-of-snowflakes
// schema, with exact generated statistics and a mixed query set.
// ---------------------------------------------------------------------------

pub const MINI_TPCH_QUERIES: [(&str, &str); 9] = [
    (
        "q10_custkey_overlap",
        "SELECT * FROM customer c, orders o WHERE c.c_custkey = o.o_custkey",
    ),
    (
        "q3_customer_orders",
        "SELECT * FROM customer c, orders o, lineitem l \
         WHERE c.c_custkey = o.o_custkey AND o.o_orderkey = l.l_orderkey \
         AND c.c_mktsegment = 'BUILDING'",
    ),
    (
        "q5_region_chain",
        "SELECT * FROM region r, nation n, supplier s, lineitem l \
         WHERE r.r_regionkey = n.n_regionkey AND n.n_nationkey = s.s_nationkey \
         AND s.s_suppkey = l.l_suppkey AND r.r_name = 'ASIA'",
    ),
    (
        "q7_nations",
        "SELECT * FROM supplier s, lineitem l, orders o, customer c, nation n1, nation n2 \
         WHERE s.s_suppkey = l.l_suppkey AND o.o_orderkey = l.l_orderkey \
         AND c.c_custkey = o.o_custkey AND s.s_nationkey = n1.n_nationkey \
         AND c.c_nationkey = n2.n_nationkey \
         AND ((n1.n_name = 'FRANCE' AND n2.n_name = 'GERMANY') \
           OR (n1.n_name = 'GERMANY' AND n2.n_name = 'FRANCE'))",
    ),
    (
        "q12_shipmode",
        "SELECT * FROM orders o, lineitem l \
         WHERE o.o_orderkey = l.l_orderkey AND l.l_shipmode = 'MAIL'",
    ),
    (
        "q14_part_promo",
        "SELECT * FROM part p, lineitem l \
         WHERE p.p_partkey = l.l_partkey AND p.p_brand = 'Brand#12'",
    ),
    (
        "q16_partsupp",
        "SELECT * FROM part p, partsupp ps, supplier s \
         WHERE p.p_partkey = ps.ps_partkey AND ps.ps_suppkey = s.s_suppkey \
         AND p.p_brand = 'Brand#23'",
    ),
    (
        "q20_semi",
        "SELECT * FROM supplier s SEMI JOIN lineitem l ON s.s_suppkey = l.l_suppkey",
    ),
    (
        "q21_orders_nation",
        "SELECT * FROM nation n, supplier s, lineitem l, orders o \
         WHERE n.n_nationkey = s.s_nationkey AND s.s_suppkey = l.l_suppkey \
         AND o.o_orderkey = l.l_orderkey AND n.n_name = 'SAUDI ARABIA'",
    ),
];

pub fn mini_tpch() -> Result<Fixture> {
    let nations = [
        "ALGERIA", "ARGENTINA", "BRAZIL", "CANADA", "EGYPT", "ETHIOPIA", "FRANCE", "GERMANY",
        "INDIA", "INDONESIA", "IRAN", "IRAQ", "JAPAN", "JORDAN", "KENYA", "MOROCCO",
        "MOZAMBIQUE", "PERU", "CHINA", "ROMANIA", "SAUDI ARABIA", "VIETNAM", "RUSSIA",
        "UNITED KINGDOM", "UNITED STATES",
    ];
    let spec = GenSpec {
        seed: 0x7C9,
        tables: vec![
            TableGen {
                name: "region".into(),
                rows: 5,
                columns: vec![
                    col("r_regionkey", ColKind::Serial, 0.0),
                    col(
                        "r_name",
                        ColKind::StrCycle {
                            choices: ["AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST"]
                                .iter()
                                .map(|s| s.to_string())
                                .collect(),
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "nation".into(),
                rows: 25,
                columns: vec![
                    col("n_nationkey", ColKind::Serial, 0.0),
                    col(
                        "n_name",
                        ColKind::StrCycle {
                            choices: nations.iter().map(|s| s.to_string()).collect(),
                        },
                        0.0,
                    ),
                    col(
                        "n_regionkey",
                        ColKind::FkRef {
                            table: "region".into(),
                            column: "r_regionkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: true,
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "supplier".into(),
                rows: 1_200,
                columns: vec![
                    col("s_suppkey", ColKind::Serial, 0.0),
                    col(
                        "s_nationkey",
                        ColKind::FkRef {
                            table: "nation".into(),
                            column: "n_nationkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: true,
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "part".into(),
                rows: 2_400,
                columns: vec![
                    col("p_partkey", ColKind::Serial, 0.0),
                    col(
                        "p_brand",
                        ColKind::StrCycle {
                            choices: (1..=25).map(|i| format!("Brand#{i}")).collect(),
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "partsupp".into(),
                rows: 9_600,
                columns: vec![
                    col(
                        "ps_partkey",
                        ColKind::FkRef {
                            table: "part".into(),
                            column: "p_partkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                    col(
                        "ps_suppkey",
                        ColKind::FkRef {
                            table: "supplier".into(),
                            column: "s_suppkey".into(),
                            match_fraction: 1.0,
                            pick_from: Some(720),
                            cycle: false,
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "customer".into(),
                rows: 3_000,
                columns: vec![
                    col("c_custkey", ColKind::Serial, 0.0),
                    col(
                        "c_nationkey",
                        ColKind::FkRef {
                            table: "nation".into(),
                            column: "n_nationkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: true,
                        },
                        0.0,
                    ),
                    col(
                        "c_mktsegment",
                        ColKind::StrCycle {
                            choices: ["AUTOMOBILE", "BUILDING", "FURNITURE", "HOUSEHOLD", "MACHINERY"]
                                .iter()
                                .map(|s| s.to_string())
                                .collect(),
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "orders".into(),
                rows: 15_000,
                columns: vec![
                    col("o_orderkey", ColKind::Serial, 0.0),
                    col(
                        "o_custkey",
                        ColKind::FkRef {
                            table: "customer".into(),
                            column: "c_custkey".into(),
                            match_fraction: 1.0,
                            pick_from: Some(1_800),
                            cycle: false,
                        },
                        0.0,
                    ),
                ],
            },
            TableGen {
                name: "lineitem".into(),
                rows: 60_000,
                columns: vec![
                    col(
                        "l_orderkey",
                        ColKind::FkRef {
                            table: "orders".into(),
                            column: "o_orderkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                    col(
                        "l_partkey",
                        ColKind::FkRef {
                            table: "part".into(),
                            column: "p_partkey".into(),
                            match_fraction: 1.0,
                            pick_from: None,
                            cycle: false,
                        },
                        0.0,
                    ),
                    col(
                        "l_suppkey",
                        ColKind::FkRef {
                            table: "supplier".into(),
                            column: "s_suppkey".into(),
                            match_fraction: 1.0,
                            pick_from: Some(720),
                            cycle: false,
                        },
                        0.0,
                    ),
                    col(
                        "l_shipmode",
                        ColKind::StrCycle {
                            choices: ["AIR", "FOB", "MAIL", "RAIL", "REG AIR", "SHIP", "TRUCK"]
                                .iter()
                                .map(|s| s.to_string())
                                .collect(),
                        },
                        0.0,
                    ),
                ],
            },
        ],
    };
    let (catalog, db) = generate(&spec)?;
    Ok(Fixture {
        name: "mini_tpch",
        description: "eight-table miniature schema with exact stats and a mixed query set",
        catalog,
        data: Some(db),
        queries: MINI_TPCH_QUERIES
            .iter()
            .map(|(label, sql)| FixtureQuery { label, sql })
            .collect(),
        config: PlannerConfig {
            apply_row_threshold: 1_000.0,
            ..PlannerConfig::default()
        },
        cost: CostParams::default(),
        check_fn: check_mini_tpch,
    })
}

fn check_mini_tpch(fx: &Fixture) -> Result<()> {
    let mut post_total = 0.0;
    let mut cbo_total = 0.0;
    let mut strictly_lower = 0;
    for q in &fx.queries {
        let (post_p, post_rs, post_m) = fx.run(q.sql, PlannerMode::BfPost)?;
        let (cbo_p, cbo_rs, cbo_m) = fx.run(q.sql, PlannerMode::BfCbo)?;
        let (_, nobf_rs, _) = fx.run(q.sql, PlannerMode::NoBf)?;
        ensure(
            cbo_rs.canonical() == nobf_rs.canonical()
                && post_rs.canonical() == nobf_rs.canonical(),
            format!("{}: results differ across modes", q.label),
        )?;
        let post_mae = crate::report::estimate_mae(&post_p.plan, &post_m.actual_rows());
        let cbo_mae = crate::report::estimate_mae(&cbo_p.plan, &cbo_m.actual_rows());
        post_total += post_mae;
        cbo_total += cbo_mae;
        if cbo_mae < post_mae {
            strictly_lower += 1;
        }
    }
    // Filter-aware estimation tracks the executed cardinalities more closely
    // than post-hoc placement, whose scan estimates go stale.
    ensure(
        cbo_total <= post_total,
        format!("total estimation MAE: bf-cbo {cbo_total:.1} > bf-post {post_total:.1}"),
    )?;
    ensure(
        strictly_lower >= 3,
        format!("bf-cbo MAE strictly lower on only {strictly_lower} queries"),
    )?;
    Ok(())
}

fn col(name: &str, kind: ColKind, null_fraction: f64) -> ColGen {
    ColGen {
        name: name.into(),
        null_fraction,
        kind,
    }
}
