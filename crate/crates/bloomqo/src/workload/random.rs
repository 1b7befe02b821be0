//! Seeded random query generation over a catalog's foreign-key graph.
//!
//! Queries are connected equi-join graphs built by walking declared
//! foreign-key edges, optionally decorated with local predicates and, when
//! requested, rewritten as two-relation semi/anti/left-outer variants. The
//! same (catalog, seed, options) triple always yields the same query list.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::catalog::{Catalog, ConstraintKind, ValueDomain};

#[derive(Debug, Clone)]
pub struct RandomQueryOptions {
    /// Upper bound on relations per query (inclusive, ≥ 1).
    pub max_relations: usize,
    /// Chance of attaching a local predicate to each joined relation.
    pub predicate_probability: f64,
    /// Chance that a query is emitted as a two-relation SEMI / ANTI /
    /// LEFT OUTER JOIN variant instead of an inner equi-join graph.
    pub variant_probability: f64,
}

impl Default for RandomQueryOptions {
    fn default() -> Self {
        RandomQueryOptions {
            max_relations: 5,
            predicate_probability: 0.5,
            variant_probability: 0.0,
        }
    }
}

struct FkEdge {
    from_table: String,
    from_column: String,
    to_table: String,
    to_column: String,
}

fn fk_edges(catalog: &Catalog) -> Vec<FkEdge> {
    catalog
        .to_doc()
        .constraints
        .into_iter()
        .filter(|c| c.kind == ConstraintKind::ForeignKey)
        .filter_map(|c| {
            Some(FkEdge {
                from_table: c.table,
                from_column: c.column,
                to_table: c.ref_table?,
                to_column: c.ref_column?,
            })
        })
        .collect()
}

/// Produces `count` SQL strings over `catalog`, deterministically from `seed`.
///
/// Panics if the catalog declares no foreign keys (there would be no join
/// edges to walk).
pub fn random_queries(
    catalog: &Catalog,
    seed: u64,
    count: usize,
    opts: &RandomQueryOptions,
) -> Vec<String> {
    let edges = fk_edges(catalog);
    assert!(
        !edges.is_empty(),
        "random_queries requires a catalog with foreign keys"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| one_query(catalog, &edges, opts, &mut rng)).collect()
}

fn one_query(
    catalog: &Catalog,
    edges: &[FkEdge],
    opts: &RandomQueryOptions,
    rng: &mut ChaCha8Rng,
) -> String {
    if opts.variant_probability > 0.0 && rng.gen_bool(opts.variant_probability) {
        return variant_query(catalog, edges, opts, rng);
    }

    let target = rng.gen_range(2..=opts.max_relations.max(2));
    // Grow a connected table set by repeatedly attaching an FK edge that
    // touches it. Tables joined twice get distinct aliases.
    let first = edges.choose(rng).unwrap();
    let mut tables: Vec<String> = vec![first.from_table.clone(), first.to_table.clone()];
    let mut clauses: Vec<(usize, String, usize, String)> = vec![(
        0,
        first.from_column.clone(),
        1,
        first.to_column.clone(),
    )];
    while tables.len() < target {
        let candidates: Vec<&FkEdge> = edges
            .iter()
            .filter(|e| {
                tables.iter().any(|t| *t == e.from_table) || tables.iter().any(|t| *t == e.to_table)
            })
            .collect();
        let Some(e) = candidates.choose(rng) else { break };
        // Attach the endpoint not yet present; if both are present, attach a
        // fresh alias of the referencing side.
        let from_idx = tables.iter().position(|t| *t == e.from_table);
        let to_idx = tables.iter().position(|t| *t == e.to_table);
        match (from_idx, to_idx) {
            (Some(f), None) => {
                tables.push(e.to_table.clone());
                clauses.push((f, e.from_column.clone(), tables.len() - 1, e.to_column.clone()));
            }
            (None, Some(t)) => {
                tables.push(e.from_table.clone());
                clauses.push((tables.len() - 1, e.from_column.clone(), t, e.to_column.clone()));
            }
            (Some(_), Some(t)) => {
                tables.push(e.from_table.clone());
                clauses.push((tables.len() - 1, e.from_column.clone(), t, e.to_column.clone()));
            }
            (None, None) => unreachable!("candidate edge must touch the table set"),
        }
    }

    let aliases: Vec<String> = (0..tables.len()).map(|i| format!("r{i}")).collect();
    let from: Vec<String> = tables
        .iter()
        .zip(&aliases)
        .map(|(t, a)| format!("{t} {a}"))
        .collect();
    let mut preds: Vec<String> = clauses
        .iter()
        .map(|(li, lc, ri, rc)| format!("{}.{} = {}.{}", aliases[*li], lc, aliases[*ri], rc))
        .collect();
    for (i, t) in tables.iter().enumerate() {
        if rng.gen_bool(opts.predicate_probability) {
            if let Some(p) = local_predicate(catalog, t, &aliases[i], rng) {
                preds.push(p);
            }
        }
    }
    format!("SELECT * FROM {} WHERE {}", from.join(", "), preds.join(" AND "))
}

/// Two-relation SEMI / ANTI / LEFT OUTER JOIN query over a random FK edge.
fn variant_query(
    catalog: &Catalog,
    edges: &[FkEdge],
    opts: &RandomQueryOptions,
    rng: &mut ChaCha8Rng,
) -> String {
    let e = edges.choose(rng).unwrap();
    let kw = *["SEMI JOIN", "ANTI JOIN", "LEFT OUTER JOIN"].choose(rng).unwrap();
    let mut sql = format!(
        "SELECT * FROM {} a {} {} b ON a.{} = b.{}",
        e.from_table, kw, e.to_table, e.from_column, e.to_column
    );
    if rng.gen_bool(opts.predicate_probability) {
        if let Some(p) = local_predicate(catalog, &e.from_table, "a", rng) {
            sql.push_str(" WHERE ");
            sql.push_str(&p);
        }
    }
    sql
}

/// A predicate over one column of `table`: a range comparison for integer
/// columns with known bounds. Returns None when no column qualifies.
fn local_predicate(
    catalog: &Catalog,
    table: &str,
    alias: &str,
    rng: &mut ChaCha8Rng,
) -> Option<String> {
    let def = catalog.table_by_name(table)?;
    let ints: Vec<_> = def
        .columns
        .iter()
        .filter(|c| c.domain == ValueDomain::Int && c.min.is_some() && c.max.is_some())
        .collect();
    let c = ints.choose(rng)?;
    let (lo, hi) = (c.min.unwrap(), c.max.unwrap());
    if lo >= hi {
        return None;
    }
    let cut = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.5) {
        Some(format!("{alias}.{} < {cut}", c.name))
    } else {
        Some(format!("{alias}.{} >= {cut}", c.name))
    }
}
