//! Deterministic data generation with exact emitted statistics.
//!
//! A `GenSpec` describes tables column by column; `generate` materializes the
//! data with a seeded ChaCha stream and builds a catalog whose row counts,
//! NDVs, null fractions, and min/max are computed from the generated values,
//! never estimated. Serial columns become primary keys; fully-matching
//! foreign-key columns register the corresponding constraint.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{
    Catalog, ColumnDef, ConstraintKind, KeyConstraint, TableDef, ValueDomain,
};
use crate::error::{Error, Result};
use crate::executor::{Column, Database, Table, Value};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    pub tables: Vec<TableGen>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableGen {
    pub name: String,
    pub rows: u64,
    pub columns: Vec<ColGen>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColGen {
    pub name: String,
    #[serde(default)]
    pub null_fraction: f64,
    #[serde(flatten)]
    pub kind: ColKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColKind {
    /// 0..rows-1 in order; becomes a primary key.
    Serial,
    /// Uniform integers over an inclusive range.
    IntRange { min: i64, max: i64 },
    /// References values of an earlier table's column. A `match_fraction` of
    /// f draws that share of rows from the parent's values and the rest from
    /// a disjoint pool sized so the NDV ratio also reflects f. `pick_from`
    /// limits the referenced values to the first N distinct parent values.
    FkRef {
        table: String,
        column: String,
        #[serde(default = "one")]
        match_fraction: f64,
        #[serde(default)]
        pick_from: Option<u64>,
        /// Assign pool values round-robin instead of drawing randomly,
        /// giving every referenced value an identical share. Requires
        /// match_fraction = 1.
        #[serde(default)]
        cycle: bool,
    },
    /// Uniform choice among fixed strings.
    StrChoice { choices: Vec<String> },
    /// Round-robin assignment of fixed strings: row i takes choices[i % len].
    /// Guarantees every choice appears when rows >= len.
    StrCycle { choices: Vec<String> },
}

fn one() -> f64 {
    1.0
}

impl GenSpec {
    pub fn load(text: &str) -> Result<GenSpec> {
        let spec: GenSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InconsistentSpec(m));
        let mut seen: Vec<&str> = Vec::new();
        for t in &self.tables {
            if t.columns.is_empty() {
                return bad(format!("table {} has no columns", t.name));
            }
            for c in &t.columns {
                if !(0.0..=1.0).contains(&c.null_fraction) {
                    return bad(format!("{}.{}: null_fraction out of [0,1]", t.name, c.name));
                }
                match &c.kind {
                    ColKind::Serial => {
                        if c.null_fraction != 0.0 {
                            return bad(format!("{}.{}: serial cannot be null", t.name, c.name));
                        }
                    }
                    ColKind::IntRange { min, max } => {
                        if min > max {
                            return bad(format!("{}.{}: empty range", t.name, c.name));
                        }
                    }
                    ColKind::FkRef {
                        table,
                        match_fraction,
                        pick_from,
                        cycle,
                        ..
                    } => {
                        if *cycle && *match_fraction < 1.0 {
                            return bad(format!(
                                "{}.{}: cycle requires match_fraction = 1",
                                t.name, c.name
                            ));
                        }
                        if !(0.0..=1.0).contains(match_fraction) {
                            return bad(format!(
                                "{}.{}: match_fraction out of [0,1]",
                                t.name, c.name
                            ));
                        }
                        if pick_from.is_some_and(|n| n == 0) {
                            return bad(format!("{}.{}: pick_from must be positive", t.name, c.name));
                        }
                        if !seen.contains(&table.as_str()) {
                            return bad(format!(
                                "{}.{}: references {table}, which is not generated earlier",
                                t.name, c.name
                            ));
                        }
                    }
                    ColKind::StrChoice { choices } | ColKind::StrCycle { choices } => {
                        if choices.is_empty() {
                            return bad(format!("{}.{}: no choices", t.name, c.name));
                        }
                    }
                }
            }
            seen.push(&t.name);
        }
        Ok(())
    }
}

/// Generates the data and a catalog with exact statistics.
pub fn generate(spec: &GenSpec) -> Result<(Catalog, Database)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut db = Database::new();
    let mut catalog = Catalog::new();
    let mut constraints: Vec<KeyConstraint> = Vec::new();

    for t in &spec.tables {
        let mut columns: Vec<Column> = Vec::new();
        for c in &t.columns {
            let mut values: Vec<Value> = Vec::with_capacity(t.rows as usize);
            match &c.kind {
                ColKind::Serial => {
                    values.extend((0..t.rows as i64).map(Value::Int));
                    constraints.push(KeyConstraint {
                        kind: ConstraintKind::PrimaryKey,
                        table: t.name.clone(),
                        column: c.name.clone(),
                        ref_table: None,
                        ref_column: None,
                    });
                }
                ColKind::IntRange { min, max } => {
                    for _ in 0..t.rows {
                        values.push(draw(&mut rng, c.null_fraction, |r| {
                            Value::Int(r.gen_range(*min..=*max))
                        }));
                    }
                }
                ColKind::FkRef {
                    table,
                    column,
                    match_fraction,
                    pick_from,
                    cycle,
                } => {
                    let parent = parent_values(&db, table, column)?;
                    let pool: &[i64] = match pick_from {
                        Some(n) => &parent[..(*n as usize).min(parent.len())],
                        None => &parent,
                    };
                    // Unmatched rows draw from a disjoint pool sized so the
                    // value-overlap ratio mirrors match_fraction.
                    let f = *match_fraction;
                    let miss_base = parent.iter().copied().max().unwrap_or(0) + 1;
                    let miss_pool = if f >= 1.0 {
                        0
                    } else if f <= 0.0 {
                        pool.len().max(1) as i64
                    } else {
                        ((pool.len() as f64 * (1.0 - f) / f).round() as i64).max(1)
                    };
                    for i in 0..t.rows as usize {
                        values.push(draw(&mut rng, c.null_fraction, |r| {
                            if *cycle {
                                Value::Int(pool[i % pool.len()])
                            } else if f >= 1.0 || (f > 0.0 && r.gen::<f64>() < f) {
                                Value::Int(pool[r.gen_range(0..pool.len())])
                            } else {
                                Value::Int(miss_base + r.gen_range(0..miss_pool))
                            }
                        }));
                    }
                    if f >= 1.0 && c.null_fraction == 0.0 {
                        constraints.push(KeyConstraint {
                            kind: ConstraintKind::ForeignKey,
                            table: t.name.clone(),
                            column: c.name.clone(),
                            ref_table: Some(table.clone()),
                            ref_column: Some(column.clone()),
                        });
                    }
                }
                ColKind::StrChoice { choices } => {
                    for _ in 0..t.rows {
                        values.push(draw(&mut rng, c.null_fraction, |r| {
                            Value::Str(choices[r.gen_range(0..choices.len())].clone())
                        }));
                    }
                }
                ColKind::StrCycle { choices } => {
                    for i in 0..t.rows as usize {
                        values.push(draw(&mut rng, c.null_fraction, |_| {
                            Value::Str(choices[i % choices.len()].clone())
                        }));
                    }
                }
            }
            columns.push(Column {
                name: c.name.clone(),
                values,
            });
        }
        let table = Table {
            name: t.name.clone(),
            columns,
        };
        catalog.define_table(exact_stats(&table))?;
        db.insert(table);
    }
    for c in constraints {
        catalog.register_constraint(c)?;
    }
    Ok((catalog, db))
}

fn draw(rng: &mut ChaCha8Rng, null_fraction: f64, f: impl FnOnce(&mut ChaCha8Rng) -> Value) -> Value {
    if null_fraction > 0.0 && rng.gen::<f64>() < null_fraction {
        Value::Null
    } else {
        f(rng)
    }
}

fn parent_values(db: &Database, table: &str, column: &str) -> Result<Vec<i64>> {
    let t = db.get(table)?;
    let col = t
        .column(column)
        .ok_or_else(|| Error::UnknownColumn(format!("{table}.{column}")))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for v in &col.values {
        if let Value::Int(i) = v {
            if seen.insert(*i) {
                out.push(*i);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InconsistentSpec(format!(
            "{table}.{column} has no integer values to reference"
        )));
    }
    Ok(out)
}

/// Brute-force statistics of a generated table.
pub fn exact_stats(table: &Table) -> TableDef {
    let rows = table.rows() as u64;
    let columns = table
        .columns
        .iter()
        .map(|c| {
            let mut distinct: HashSet<&Value> = HashSet::new();
            let mut nulls = 0u64;
            let mut min: Option<i64> = None;
            let mut max: Option<i64> = None;
            let mut is_str = false;
            for v in &c.values {
                match v {
                    Value::Null => nulls += 1,
                    Value::Int(i) => {
                        distinct.insert(v);
                        min = Some(min.map_or(*i, |m| m.min(*i)));
                        max = Some(max.map_or(*i, |m| m.max(*i)));
                    }
                    Value::Str(_) => {
                        distinct.insert(v);
                        is_str = true;
                    }
                }
            }
            ColumnDef {
                name: c.name.clone(),
                domain: if is_str {
                    ValueDomain::Str
                } else {
                    ValueDomain::Int
                },
                ndv: distinct.len() as u64,
                null_fraction: if rows == 0 {
                    0.0
                } else {
                    nulls as f64 / rows as f64
                },
                min,
                max,
            }
        })
        .collect();
    TableDef {
        name: table.name.clone(),
        rows,
        columns,
    }
}
