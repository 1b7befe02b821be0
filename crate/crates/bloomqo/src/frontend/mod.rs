//! SQL subset parser and query IR.
//!
//! The grammar covers SELECT lists, a FROM comma list plus explicit
//! `[INNER|LEFT [OUTER]|FULL [OUTER]|SEMI|ANTI] JOIN ... ON`, and WHERE
//! conjunctions with one optional top-level OR-of-conjunctions. See
//! `docs/grammar.ebnf` in the repository root for the full grammar.

mod graph;
mod lexer;
mod parser;

pub use graph::{build_join_graph, JoinGraph};
pub use parser::parse;

use std::fmt;

/// A literal comparand.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Int(i64),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Str(s) => write!(f, "'{s}'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JoinType {
    Inner,
    LeftOuter,
    FullOuter,
    Semi,
    Anti,
}

impl JoinType {
    pub fn keyword(self) -> &'static str {
        match self {
            JoinType::Inner => "JOIN",
            JoinType::LeftOuter => "LEFT JOIN",
            JoinType::FullOuter => "FULL JOIN",
            JoinType::Semi => "SEMI JOIN",
            JoinType::Anti => "ANTI JOIN",
        }
    }
}

/// A relation in the FROM clause. `alias` equals `table` when no alias is given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelRef {
    pub table: String,
    pub alias: String,
}

/// A column of one relation in scope, identified by relation index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColRef {
    pub rel: usize,
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredicateOp {
    Cmp(CmpOp, Literal),
    Between(i64, i64),
    /// Disjunction of equalities on one column, from distributing an
    /// OR-of-conjunctions to the relations it mentions.
    AnyOf(Vec<Literal>),
}

/// A single-column local predicate with literal comparands.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    pub target: ColRef,
    pub op: PredicateOp,
}

/// An equality clause between two relations. Non-equality comparisons are
/// retained as non-hashable clauses; only hashable equijoins ever produce
/// Bloom filter candidates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JoinClause {
    pub left: ColRef,
    pub right: ColRef,
    pub join_type: JoinType,
    pub op: CmpOp,
    pub hashable: bool,
}

/// A cross-relation OR-of-conjunctions, kept whole for post-join evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrPredicate {
    pub branches: Vec<Vec<(ColRef, Literal)>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    Star,
    Columns(Vec<(ColRef, Option<String>)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub relations: Vec<RelRef>,
    pub clauses: Vec<JoinClause>,
    pub predicates: Vec<Predicate>,
    pub residuals: Vec<OrPredicate>,
    pub projection: Projection,
}

impl Query {
    pub fn relation_index(&self, alias: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.alias == alias)
    }

    pub fn alias(&self, rel: usize) -> &str {
        &self.relations[rel].alias
    }

    pub fn table(&self, rel: usize) -> &str {
        &self.relations[rel].table
    }

    /// Sorted-clause form used by the round-trip property.
    pub fn canonical(mut self) -> Query {
        self.clauses.sort();
        self.predicates.sort();
        self
    }

    /// Canonical SQL text for the supported subset.
    pub fn render(&self) -> String {
        let mut out = String::from("SELECT ");
        match &self.projection {
            Projection::Star => out.push('*'),
            Projection::Columns(cols) => {
                let parts: Vec<String> = cols
                    .iter()
                    .map(|(c, a)| {
                        let base = format!("{}.{}", self.alias(c.rel), c.column);
                        match a {
                            Some(name) => format!("{base} AS {name}"),
                            None => base,
                        }
                    })
                    .collect();
                out.push_str(&parts.join(", "));
            }
        }
        out.push_str(" FROM ");
        // Relations that sit on the right of a non-inner clause are emitted
        // with explicit JOIN syntax; everything else joins via the comma list.
        let mut join_of: Vec<Option<&JoinClause>> = vec![None; self.relations.len()];
        for cl in &self.clauses {
            if cl.join_type != JoinType::Inner {
                join_of[cl.right.rel] = Some(cl);
            }
        }
        let mut first = true;
        for (i, r) in self.relations.iter().enumerate() {
            let name = if r.alias == r.table {
                r.table.clone()
            } else {
                format!("{} {}", r.table, r.alias)
            };
            if let Some(cl) = join_of[i] {
                out.push_str(&format!(
                    " {} {} ON {}.{} = {}.{}",
                    cl.join_type.keyword(),
                    name,
                    self.alias(cl.left.rel),
                    cl.left.column,
                    self.alias(cl.right.rel),
                    cl.right.column
                ));
            } else {
                if !first {
                    out.push_str(", ");
                }
                out.push_str(&name);
            }
            first = false;
        }
        let mut conds: Vec<String> = Vec::new();
        for cl in &self.clauses {
            if cl.join_type == JoinType::Inner {
                conds.push(format!(
                    "{}.{} {} {}.{}",
                    self.alias(cl.left.rel),
                    cl.left.column,
                    cl.op,
                    self.alias(cl.right.rel),
                    cl.right.column
                ));
            }
        }
        for p in &self.predicates {
            // IN-lists derived from a residual OR are re-derived on parse;
            // emitting them too would duplicate the predicate.
            if matches!(p.op, PredicateOp::AnyOf(_))
                && self
                    .residuals
                    .iter()
                    .any(|r| r.branches.iter().flatten().any(|(c, _)| *c == p.target))
            {
                continue;
            }
            let lhs = format!("{}.{}", self.alias(p.target.rel), p.target.column);
            conds.push(match &p.op {
                PredicateOp::Cmp(op, lit) => format!("{lhs} {op} {lit}"),
                PredicateOp::Between(a, b) => format!("{lhs} BETWEEN {a} AND {b}"),
                PredicateOp::AnyOf(lits) => {
                    let parts: Vec<String> =
                        lits.iter().map(|l| format!("{lhs} = {l}")).collect();
                    format!("({})", parts.join(" OR "))
                }
            });
        }
        for orp in &self.residuals {
            let branches: Vec<String> = orp
                .branches
                .iter()
                .map(|b| {
                    let atoms: Vec<String> = b
                        .iter()
                        .map(|(c, l)| format!("{}.{} = {}", self.alias(c.rel), c.column, l))
                        .collect();
                    format!("({})", atoms.join(" AND "))
                })
                .collect();
            conds.push(format!("({})", branches.join(" OR ")));
        }
        if !conds.is_empty() {
            out.push_str(" WHERE ");
            out.push_str(&conds.join(" AND "));
        }
        out
    }
}
