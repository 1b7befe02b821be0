//! In-memory execution of physical plans over generated datasets.
//!
//! Execution is single-process; parallelism is simulated at the Bloom filter
//! layer, where filters are built and probed with the partitioned strategies
//! and `dop` logical streams. Results are therefore identical across `dop`
//! settings by construction, which the test suite asserts.
//!
//! Semantics: join keys compare by value, NULL never matches anything and
//! never enters a Bloom filter; anti joins keep probe rows with no match
//! (so NULL-keyed probe rows survive them); outer joins null-pad the
//! non-preserved side.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::bloom::{build_partitioned, BloomParams, Key, PartitionStrategy, PartitionedBloomFilter};
use crate::error::{Error, Result};
use crate::estimator::mask_contains;
use crate::frontend::{
    CmpOp, ColRef, JoinType, Literal, OrPredicate, Predicate, PredicateOp, Projection, Query,
};
use crate::plan::{BfApply, BfId, BfStrategy, JoinNode, PlanNode};

/// A runtime value. Only the types the catalog models.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Int(i64),
    Str(String),
}

impl Value {
    pub fn as_key(&self) -> Option<Key> {
        match self {
            Value::Null => None,
            Value::Int(v) => Some(Key::Int(*v)),
            Value::Str(s) => Some(Key::Str(s.clone())),
        }
    }

    /// Three-valued comparison collapsed to a boolean: NULL or a type
    /// mismatch is never true.
    fn cmp_op(&self, op: CmpOp, other: &Value) -> bool {
        use std::cmp::Ordering::*;
        let ord = match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            _ => return false,
        };
        matches!(
            (op, ord),
            (CmpOp::Eq, Equal)
                | (CmpOp::Lt, Less)
                | (CmpOp::Le, Less | Equal)
                | (CmpOp::Gt, Greater)
                | (CmpOp::Ge, Greater | Equal)
        )
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("\\N"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

fn literal_value(l: &Literal) -> Value {
    match l {
        Literal::Int(v) => Value::Int(*v),
        Literal::Str(s) => Value::Str(s.clone()),
    }
}

/// One column of stored data.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub values: Vec<Value>,
}

/// A stored table, columnar.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// A named collection of tables, loadable from and savable to a directory of
/// tab-separated `.tbl` files. The header line gives `name:int` / `name:str`
/// per column and `\N` encodes NULL.
#[derive(Debug, Clone, Default)]
pub struct Database {
    tables: HashMap<String, Table>,
}

impl Database {
    pub fn new() -> Self {
        Database::default()
    }

    pub fn insert(&mut self, t: Table) {
        self.tables.insert(t.name.clone(), t);
    }

    pub fn get(&self, name: &str) -> Result<&Table> {
        self.tables
            .get(name)
            .ok_or_else(|| Error::MissingTable(name.to_string()))
    }

    pub fn table_names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.tables.keys().map(|s| s.as_str()).collect();
        v.sort_unstable();
        v
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in self.tables.values() {
            let mut out = String::new();
            let header: Vec<String> = t
                .columns
                .iter()
                .map(|c| {
                    let ty = match c.values.iter().find(|v| **v != Value::Null) {
                        Some(Value::Str(_)) => "str",
                        _ => "int",
                    };
                    format!("{}:{ty}", c.name)
                })
                .collect();
            out.push_str(&header.join("\t"));
            out.push('\n');
            for i in 0..t.rows() {
                let row: Vec<String> = t.columns.iter().map(|c| c.values[i].to_string()).collect();
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
            std::fs::write(dir.join(format!("{}.tbl", t.name)), out)?;
        }
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Database> {
        let mut db = Database::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "tbl"))
            .collect();
        paths.sort();
        for path in paths {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let text = std::fs::read_to_string(&path)?;
            let mut lines = text.lines();
            let header = lines.next().unwrap_or_default();
            let mut columns: Vec<Column> = Vec::new();
            let mut is_str: Vec<bool> = Vec::new();
            for h in header.split('\t') {
                let (cname, ty) = h
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidConfig(format!("bad table header column '{h}'")))?;
                is_str.push(ty == "str");
                columns.push(Column {
                    name: cname.to_string(),
                    values: Vec::new(),
                });
            }
            for line in lines {
                for (i, field) in line.split('\t').enumerate() {
                    let v = if field == "\\N" {
                        Value::Null
                    } else if is_str[i] {
                        Value::Str(field.to_string())
                    } else {
                        Value::Int(field.parse().map_err(|_| {
                            Error::InvalidConfig(format!("bad int '{field}' in {name}.tbl"))
                        })?)
                    };
                    columns[i].values.push(v);
                }
            }
            db.insert(Table { name, columns });
        }
        Ok(db)
    }
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    /// Logical streams for Bloom filter partitioning.
    pub dop: usize,
    /// Sizing constant for filters built at runtime.
    pub bits_per_distinct: f64,
    /// Hash seed for filters.
    pub seed: u64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            dop: 1,
            bits_per_distinct: 10.0,
            seed: 0xB100_F11E,
        }
    }
}

/// Per-node observations, keyed by pre-order node id (the ids EXPLAIN
/// prints).
#[derive(Debug, Clone, Copy, Default)]
pub struct NodeMetrics {
    pub rows_in_build: u64,
    pub rows_in_probe: u64,
    /// Scans: raw table rows read before any predicate.
    pub rows_scanned: u64,
    pub rows_out: u64,
}

/// Runtime behavior of one Bloom filter.
#[derive(Debug, Clone, Default)]
pub struct FilterMetrics {
    pub inserted: u64,
    pub probes: u64,
    pub hits: u64,
    pub analytic_fpr: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExecMetrics {
    pub nodes: HashMap<usize, NodeMetrics>,
    pub filters: HashMap<BfId, FilterMetrics>,
}

impl ExecMetrics {
    /// Total rows entering joins on either side: the figure of merit Bloom
    /// filters exist to reduce.
    pub fn join_input_rows(&self) -> u64 {
        self.nodes
            .values()
            .map(|n| n.rows_in_build + n.rows_in_probe)
            .sum()
    }

    /// Per-node output counts, shaped for `PlanNode::explain` actuals.
    pub fn actual_rows(&self) -> HashMap<usize, u64> {
        self.nodes.iter().map(|(&id, n)| (id, n.rows_out)).collect()
    }
}

/// Executed result: projected rows plus output column headers.
#[derive(Debug, Clone)]
pub struct ResultSet {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultSet {
    /// Order-insensitive canonical form for multiset comparison.
    pub fn canonical(&self) -> Vec<Vec<Value>> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }
}

/// An intermediate relation flowing between operators.
struct Rel {
    schema: Vec<ColRef>,
    rows: Vec<Vec<Value>>,
}

impl Rel {
    fn idx(&self, c: &ColRef) -> Result<usize> {
        self.schema
            .iter()
            .position(|s| s == c)
            .ok_or_else(|| Error::UnknownColumn(format!("rel {}.{}", c.rel, c.column)))
    }
}

struct Ctx<'a> {
    query: &'a Query,
    db: &'a Database,
    opts: &'a ExecOptions,
    filters: HashMap<BfId, PartitionedBloomFilter>,
    metrics: ExecMetrics,
    next_id: usize,
}

/// Executes a validated plan against `db`, returning the projected result
/// and per-node metrics.
pub fn execute(
    plan: &PlanNode,
    query: &Query,
    db: &Database,
    opts: &ExecOptions,
) -> Result<(ResultSet, ExecMetrics)> {
    crate::plan::validate(plan, query)?;
    let mut ctx = Ctx {
        query,
        db,
        opts,
        filters: HashMap::new(),
        metrics: ExecMetrics::default(),
        next_id: 0,
    };
    let rel = exec_node(plan, &mut ctx)?;
    let rel = apply_residuals(rel, &query.residuals)?;
    let rs = project(&rel, query)?;
    Ok((rs, ctx.metrics))
}

fn exec_node(node: &PlanNode, ctx: &mut Ctx) -> Result<Rel> {
    // Ids are assigned in (node, build, probe) pre-order, matching EXPLAIN.
    let my_id = ctx.next_id;
    ctx.next_id += 1;
    match node {
        PlanNode::Scan { rel, bfs, .. } => {
            let raw = ctx.db.get(ctx.query.table(*rel))?.rows() as u64;
            let out = exec_scan(*rel, bfs, ctx)?;
            let m = ctx.metrics.nodes.entry(my_id).or_default();
            m.rows_scanned = raw;
            m.rows_out = out.rows.len() as u64;
            Ok(out)
        }
        PlanNode::Join(j) => {
            // Build side first: its filters must exist before any probe-side
            // scan can consume them.
            let build = exec_node(&j.build, ctx)?;
            for feed in &j.feeds {
                build_filter(feed, &build, ctx)?;
            }
            let probe = exec_node(&j.probe, ctx)?;
            let (b_in, p_in) = (build.rows.len() as u64, probe.rows.len() as u64);
            let out = exec_join(j, build, probe, ctx.query)?;
            let m = ctx.metrics.nodes.entry(my_id).or_default();
            m.rows_in_build = b_in;
            m.rows_in_probe = p_in;
            m.rows_out = out.rows.len() as u64;
            Ok(out)
        }
    }
}

fn build_filter(feed: &crate::plan::BfFeed, build: &Rel, ctx: &mut Ctx) -> Result<()> {
    let col = build.idx(&feed.column)?;
    let distinct: HashSet<Key> = build
        .rows
        .iter()
        .filter_map(|r| r[col].as_key())
        .collect();
    let keys: Vec<Key> = distinct.into_iter().collect();
    let params = BloomParams::new(keys.len() as u64)
        .with_bits_per_distinct(ctx.opts.bits_per_distinct)
        .with_seed(ctx.opts.seed ^ u64::from(feed.id));
    let strategy = match feed.strategy {
        BfStrategy::BroadcastBuild => PartitionStrategy::BroadcastBuild,
        BfStrategy::BroadcastProbe => PartitionStrategy::BroadcastProbe,
        BfStrategy::PartitionUnaligned => PartitionStrategy::PartitionUnaligned,
        BfStrategy::PartitionAligned => PartitionStrategy::PartitionAligned,
    };
    let pf = build_partitioned(&keys, ctx.opts.dop.max(1), strategy, params)?;
    let fm = ctx.metrics.filters.entry(feed.id).or_default();
    fm.inserted = keys.len() as u64;
    fm.analytic_fpr = pf
        .parts()
        .iter()
        .map(|p| p.estimated_fpr())
        .fold(0.0, f64::max);
    ctx.filters.insert(feed.id, pf);
    Ok(())
}

fn exec_scan(rel: usize, bfs: &[BfApply], ctx: &mut Ctx) -> Result<Rel> {
    let table = ctx.db.get(ctx.query.table(rel))?;
    let schema: Vec<ColRef> = table
        .columns
        .iter()
        .map(|c| ColRef {
            rel,
            column: c.name.clone(),
        })
        .collect();
    let preds: Vec<(&Column, &Predicate)> = ctx
        .query
        .predicates
        .iter()
        .filter(|p| p.target.rel == rel)
        .map(|p| {
            table
                .column(&p.target.column)
                .map(|c| (c, p))
                .ok_or_else(|| {
                    Error::UnknownColumn(format!("{}.{}", table.name, p.target.column))
                })
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<Vec<Value>> = Vec::new();
    'row: for i in 0..table.rows() {
        for (col, p) in &preds {
            if !eval_predicate(&col.values[i], &p.op) {
                continue 'row;
            }
        }
        rows.push(table.columns.iter().map(|c| c.values[i].clone()).collect());
    }
    // Bloom filters, in application order.
    for bf in bfs {
        let pf = ctx
            .filters
            .get(&bf.id)
            .ok_or(Error::UnresolvedBloomFilter(bf.id))?;
        let idx = schema
            .iter()
            .position(|c| *c == bf.apply)
            .ok_or_else(|| Error::UnknownColumn(bf.apply.column.clone()))?;
        let mut kept = Vec::with_capacity(rows.len());
        let mut probes = 0u64;
        let mut hits = 0u64;
        for row in rows {
            let Some(key) = row[idx].as_key() else {
                continue; // NULL keys can never match the resolving join
            };
            probes += 1;
            // The logical probe stream is where an aligned exchange would
            // have routed this row.
            let part = pf.partition_of(&key);
            if pf.maybe_contains(&key, part) {
                hits += 1;
                kept.push(row);
            }
        }
        let fm = ctx.metrics.filters.entry(bf.id).or_default();
        fm.probes += probes;
        fm.hits += hits;
        rows = kept;
    }
    Ok(Rel { schema, rows })
}

fn eval_predicate(v: &Value, op: &PredicateOp) -> bool {
    match op {
        PredicateOp::Cmp(cmp, lit) => v.cmp_op(*cmp, &literal_value(lit)),
        PredicateOp::Between(a, b) => match v {
            Value::Int(x) => x >= a && x <= b,
            _ => false,
        },
        PredicateOp::AnyOf(lits) => lits.iter().any(|l| *v == literal_value(l)),
    }
}

fn exec_join(j: &JoinNode, build: Rel, probe: Rel, q: &Query) -> Result<Rel> {
    let build_set = j.build.rel_set();
    // Hashable equalities form the composite lookup key; remaining crossing
    // clauses are evaluated per candidate pair. Merge and nested-loop nodes
    // reuse the same matching: the algorithm changes cost, not results.
    let mut key_build: Vec<usize> = Vec::new();
    let mut key_probe: Vec<usize> = Vec::new();
    let mut residual: Vec<(usize, usize, CmpOp, bool)> = Vec::new();
    for &ci in &j.clauses {
        let cl = &q.clauses[ci];
        let left_on_build = mask_contains(build_set, cl.left.rel);
        let (b, p) = if left_on_build {
            (&cl.left, &cl.right)
        } else {
            (&cl.right, &cl.left)
        };
        let (bi, pi) = (build.idx(b)?, probe.idx(p)?);
        if cl.hashable && cl.op == CmpOp::Eq {
            key_build.push(bi);
            key_probe.push(pi);
        } else {
            // `flipped` marks clauses whose left operand sits on the probe side.
            residual.push((bi, pi, cl.op, !left_on_build));
        }
    }
    let pair_ok = |brow: &[Value], prow: &[Value]| -> bool {
        residual.iter().all(|&(bi, pi, op, flipped)| {
            if flipped {
                prow[pi].cmp_op(op, &brow[bi])
            } else {
                brow[bi].cmp_op(op, &prow[pi])
            }
        })
    };

    // Hash the build side on the composite key; rows with a NULL key can
    // only reappear as unmatched full-outer output.
    let mut index: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
    for (ri, row) in build.rows.iter().enumerate() {
        if key_build.iter().any(|&i| row[i] == Value::Null) {
            continue;
        }
        let key: Vec<Value> = key_build.iter().map(|&i| row[i].clone()).collect();
        index.entry(key).or_default().push(ri);
    }
    let all_build: Vec<usize> = if key_probe.is_empty() {
        (0..build.rows.len()).collect()
    } else {
        Vec::new()
    };

    let build_width = build.schema.len();
    let mut build_matched = vec![false; build.rows.len()];
    let keep_build_cols = !matches!(j.join_type, JoinType::Semi | JoinType::Anti);
    let mut out_schema = probe.schema.clone();
    if keep_build_cols {
        out_schema.extend(build.schema.iter().cloned());
    }
    let mut out: Vec<Vec<Value>> = Vec::new();
    let empty: Vec<usize> = Vec::new();
    for prow in &probe.rows {
        let candidates: &Vec<usize> = if key_probe.is_empty() {
            &all_build
        } else if key_probe.iter().any(|&i| prow[i] == Value::Null) {
            &empty
        } else {
            let key: Vec<Value> = key_probe.iter().map(|&i| prow[i].clone()).collect();
            index.get(&key).unwrap_or(&empty)
        };
        let mut any = false;
        for &bi in candidates {
            if !pair_ok(&build.rows[bi], prow) {
                continue;
            }
            any = true;
            build_matched[bi] = true;
            if keep_build_cols {
                let mut row = prow.clone();
                row.extend(build.rows[bi].iter().cloned());
                out.push(row);
            } else {
                break; // semi/anti only need existence
            }
        }
        match j.join_type {
            JoinType::Semi if any => out.push(prow.clone()),
            JoinType::Anti if !any => out.push(prow.clone()),
            JoinType::LeftOuter | JoinType::FullOuter if !any => {
                let mut row = prow.clone();
                row.extend(std::iter::repeat_n(Value::Null, build_width));
                out.push(row);
            }
            _ => {}
        }
    }
    if j.join_type == JoinType::FullOuter {
        for (bi, brow) in build.rows.iter().enumerate() {
            if !build_matched[bi] {
                let mut row = vec![Value::Null; probe.schema.len()];
                row.extend(brow.iter().cloned());
                out.push(row);
            }
        }
    }
    Ok(Rel {
        schema: out_schema,
        rows: out,
    })
}

fn apply_residuals(mut rel: Rel, residuals: &[OrPredicate]) -> Result<Rel> {
    for orp in residuals {
        let branches: Vec<Vec<(usize, Value)>> = orp
            .branches
            .iter()
            .map(|b| {
                b.iter()
                    .map(|(c, l)| Ok((rel.idx(c)?, literal_value(l))))
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        rel.rows.retain(|row| {
            branches
                .iter()
                .any(|branch| branch.iter().all(|(i, v)| row[*i] == *v))
        });
    }
    Ok(rel)
}

fn project(rel: &Rel, query: &Query) -> Result<ResultSet> {
    match &query.projection {
        Projection::Star => {
            // All relations in index order; within a relation, table order.
            let mut order: Vec<usize> = (0..rel.schema.len()).collect();
            order.sort_by_key(|&i| (rel.schema[i].rel, i));
            let headers = order
                .iter()
                .map(|&i| {
                    format!(
                        "{}.{}",
                        query.alias(rel.schema[i].rel),
                        rel.schema[i].column
                    )
                })
                .collect();
            let rows = rel
                .rows
                .iter()
                .map(|r| order.iter().map(|&i| r[i].clone()).collect())
                .collect();
            Ok(ResultSet { headers, rows })
        }
        Projection::Columns(cols) => {
            let idxs: Vec<usize> = cols
                .iter()
                .map(|(c, _)| rel.idx(c))
                .collect::<Result<_>>()?;
            let headers = cols
                .iter()
                .map(|(c, a)| {
                    a.clone()
                        .unwrap_or_else(|| format!("{}.{}", query.alias(c.rel), c.column))
                })
                .collect();
            let rows = rel
                .rows
                .iter()
                .map(|r| idxs.iter().map(|&i| r[i].clone()).collect())
                .collect();
            Ok(ResultSet { headers, rows })
        }
    }
}
