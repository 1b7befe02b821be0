//! Property-based tests: randomized invariants over the Bloom filter
//! implementation, the estimator, the planner's cost accounting, and the
//! executor, complementing the scenario-driven acceptance suite.

use std::sync::OnceLock;

use proptest::prelude::*;

use bloomqo::bloom::{analytic_fpr, build_partitioned, BloomFilter, BloomParams, Key, PartitionStrategy};
use bloomqo::executor::{execute, ExecOptions};
use bloomqo::frontend::parse;
use bloomqo::planner::{plan_cost, plan_query, PlannerMode};
use bloomqo::workload::{fixture, random_queries, Fixture, RandomQueryOptions};

fn mini_tpch() -> &'static Fixture {
    static FX: OnceLock<Fixture> = OnceLock::new();
    FX.get_or_init(|| fixture("mini_tpch").unwrap())
}

fn arb_key() -> impl Strategy<Value = Key> {
    prop_oneof![
        any::<i64>().prop_map(Key::Int),
        "[a-z0-9]{0,12}".prop_map(Key::Str),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Every inserted key is reported present, whatever the keys, sizing,
    /// or hash seed.
    #[test]
    fn bloom_has_no_false_negatives(
        keys in prop::collection::vec(arb_key(), 1..300),
        bits in 1.0f64..24.0,
        seed in any::<u64>(),
    ) {
        let params = BloomParams::new(keys.len() as u64)
            .with_bits_per_distinct(bits)
            .with_seed(seed);
        let mut f = BloomFilter::create(params);
        for k in &keys {
            f.insert(k).unwrap();
        }
        f.seal();
        for k in &keys {
            prop_assert!(f.maybe_contains(k));
        }
    }

    /// A union reports every key either input filter reports.
    #[test]
    fn bloom_union_is_superset(
        left in prop::collection::vec(arb_key(), 1..200),
        right in prop::collection::vec(arb_key(), 1..200),
        seed in any::<u64>(),
    ) {
        let n = (left.len() + right.len()) as u64;
        let params = BloomParams::new(n).with_seed(seed);
        let mut a = BloomFilter::create(params.clone());
        let mut b = BloomFilter::create(params);
        for k in &left {
            a.insert(k).unwrap();
        }
        for k in &right {
            b.insert(k).unwrap();
        }
        a.seal();
        b.seal();
        let u = a.union(&b).unwrap();
        for k in left.iter().chain(&right) {
            prop_assert!(u.maybe_contains(k));
        }
    }

    /// Partitioned filters route each key to a stable partition and never
    /// miss it there, under every strategy.
    #[test]
    fn partitioned_bloom_routes_consistently(
        keys in prop::collection::vec(arb_key(), 1..200),
        parts in 1usize..8,
        seed in any::<u64>(),
    ) {
        for strategy in [
            PartitionStrategy::BroadcastBuild,
            PartitionStrategy::BroadcastProbe,
            PartitionStrategy::PartitionUnaligned,
            PartitionStrategy::PartitionAligned,
        ] {
            let params = BloomParams::new(keys.len() as u64).with_seed(seed);
            let pf = build_partitioned(&keys, parts, strategy, params).unwrap();
            for k in &keys {
                let p = pf.partition_of(k);
                prop_assert_eq!(p, pf.partition_of(k));
                prop_assert!(pf.maybe_contains(k, p));
            }
        }
    }

    /// The analytic two-hash false-positive model stays a probability and
    /// never worsens when bits are added.
    #[test]
    fn analytic_fpr_is_monotone_in_bits(n in 1u64..1_000_000, m in 8u64..10_000_000) {
        let f1 = analytic_fpr(n, m, 2);
        let f2 = analytic_fpr(n, m * 2, 2);
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!(f2 <= f1 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// Random queries parse, and re-parsing the same text yields the same
    /// structure (the frontend is deterministic).
    #[test]
    fn parser_is_deterministic(seed in any::<u64>()) {
        let fx = mini_tpch();
        let opts = RandomQueryOptions {
            max_relations: 5,
            predicate_probability: 0.7,
            variant_probability: 0.3,
        };
        for sql in random_queries(&fx.catalog, seed, 3, &opts) {
            let a = parse(&sql, &fx.catalog).unwrap();
            let b = parse(&sql, &fx.catalog).unwrap();
            prop_assert_eq!(a.relations.len(), b.relations.len());
            prop_assert_eq!(a.clauses.len(), b.clauses.len());
            prop_assert_eq!(a.predicates.len(), b.predicates.len());
        }
    }

    /// Re-costing a finished plan reproduces the planner's cost exactly, in
    /// every mode: the planner never carries stale numbers.
    #[test]
    fn plan_cost_is_idempotent(seed in any::<u64>()) {
        let fx = mini_tpch();
        let opts = RandomQueryOptions {
            max_relations: 5,
            predicate_probability: 0.7,
            variant_probability: 0.2,
        };
        for sql in random_queries(&fx.catalog, seed, 2, &opts) {
            let q = parse(&sql, &fx.catalog).unwrap();
            for mode in [
                PlannerMode::NoBf,
                PlannerMode::BfPost,
                PlannerMode::BfCbo,
                PlannerMode::Naive,
            ] {
                let planned = plan_query(&fx.catalog, &q, &fx.config, &fx.cost, mode).unwrap();
                let re = plan_cost(&planned.plan, &fx.catalog, &q, &fx.cost, fx.config.dop);
                prop_assert_eq!(re.total, planned.cost.total, "mode {}", mode.name());
                prop_assert_eq!(re.startup, planned.cost.startup, "mode {}", mode.name());
            }
        }
    }

    /// Planning is deterministic: the same query renders the same EXPLAIN
    /// text twice.
    #[test]
    fn planning_is_deterministic(seed in any::<u64>()) {
        let fx = mini_tpch();
        let opts = RandomQueryOptions::default();
        for sql in random_queries(&fx.catalog, seed, 2, &opts) {
            let q = parse(&sql, &fx.catalog).unwrap();
            let a = plan_query(&fx.catalog, &q, &fx.config, &fx.cost, PlannerMode::BfCbo).unwrap();
            let b = plan_query(&fx.catalog, &q, &fx.config, &fx.cost, PlannerMode::BfCbo).unwrap();
            prop_assert_eq!(a.plan.explain(&q, None), b.plan.explain(&q, None));
        }
    }

    /// The degree of parallelism changes filter partitioning, never the
    /// result multiset.
    #[test]
    fn execution_is_dop_independent(seed in any::<u64>()) {
        let fx = mini_tpch();
        let db = fx.data.as_ref().unwrap();
        let opts = RandomQueryOptions {
            max_relations: 3,
            predicate_probability: 1.0,
            variant_probability: 0.3,
        };
        for sql in random_queries(&fx.catalog, seed, 2, &opts) {
            let q = parse(&sql, &fx.catalog).unwrap();
            let planned = plan_query(&fx.catalog, &q, &fx.config, &fx.cost, PlannerMode::BfCbo).unwrap();
            let (r1, _) = execute(&planned.plan, &q, db, &ExecOptions { dop: 1, ..ExecOptions::default() }).unwrap();
            let (r4, _) = execute(&planned.plan, &q, db, &ExecOptions { dop: 4, ..ExecOptions::default() }).unwrap();
            prop_assert_eq!(r1.canonical(), r4.canonical());
        }
    }
}
