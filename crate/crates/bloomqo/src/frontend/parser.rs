//! Recursive-descent parser for the supported SELECT subset.

use super::lexer::{lex, TokKind, Token};
use super::{
    CmpOp, ColRef, JoinClause, JoinType, Literal, OrPredicate, Predicate, PredicateOp, Projection,
    Query, RelRef,
};
use crate::catalog::Catalog;
use crate::error::{Error, Result};

/// Parses one SELECT statement, resolving table and column names against the
/// catalog. Aliases introduced in FROM shadow nothing: each must be unique.
pub fn parse(sql: &str, catalog: &Catalog) -> Result<Query> {
    let toks = lex(sql)?;
    let mut p = Parser {
        toks,
        pos: 0,
        catalog,
        relations: Vec::new(),
    };
    p.query()
}

/// A column reference before FROM-scope resolution.
struct RawCol {
    qualifier: Option<String>,
    column: String,
    line: usize,
    col: usize,
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    catalog: &'a Catalog,
    relations: Vec<RelRef>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek2(&self) -> &Token {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, tok: &Token, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: tok.line,
            column: tok.col,
            message: msg.into(),
        })
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.peek().is_kw(kw) {
            self.next();
            Ok(())
        } else {
            let t = self.peek().clone();
            self.err(&t, format!("expected {kw}, found {}", t.kind.describe()))
        }
    }

    fn expect(&mut self, kind: TokKind) -> Result<Token> {
        if self.peek().kind == kind {
            Ok(self.next())
        } else {
            let t = self.peek().clone();
            self.err(
                &t,
                format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            )
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek().is_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize)> {
        let t = self.peek().clone();
        match &t.kind {
            TokKind::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok((s, t.line, t.col))
            }
            ref other => self.err(&t, format!("expected identifier, found {}", other.describe())),
        }
    }

    fn query(&mut self) -> Result<Query> {
        self.expect_kw("SELECT")?;
        let raw_proj = self.projection_list()?;
        self.expect_kw("FROM")?;
        let mut clauses = Vec::new();
        self.from_list(&mut clauses)?;
        let mut predicates = Vec::new();
        let mut residuals = Vec::new();
        if self.eat_kw("WHERE") {
            loop {
                self.condition(&mut clauses, &mut predicates, &mut residuals)?;
                if !self.eat_kw("AND") {
                    break;
                }
            }
        }
        if self.peek().kind == TokKind::Semi {
            self.next();
        }
        let t = self.peek().clone();
        if t.kind != TokKind::Eof {
            return self.err(&t, format!("trailing input: {}", t.kind.describe()));
        }
        let projection = match raw_proj {
            None => Projection::Star,
            Some(items) => {
                let mut cols = Vec::new();
                for (raw, alias) in items {
                    cols.push((self.resolve(&raw)?, alias));
                }
                Projection::Columns(cols)
            }
        };
        Ok(Query {
            relations: std::mem::take(&mut self.relations),
            clauses,
            predicates,
            residuals,
            projection,
        })
    }

    /// `*` or a comma list of (qualified) columns with optional AS aliases.
    /// Resolution is deferred until FROM has been parsed.
    fn projection_list(&mut self) -> Result<Option<Vec<(RawCol, Option<String>)>>> {
        if self.peek().kind == TokKind::Star {
            self.next();
            return Ok(None);
        }
        let mut items = Vec::new();
        loop {
            let raw = self.raw_col()?;
            let alias = if self.eat_kw("AS") {
                Some(self.ident()?.0)
            } else {
                None
            };
            items.push((raw, alias));
            if self.peek().kind == TokKind::Comma {
                self.next();
            } else {
                break;
            }
        }
        Ok(Some(items))
    }

    fn raw_col(&mut self) -> Result<RawCol> {
        let (first, line, col) = self.ident()?;
        if self.peek().kind == TokKind::Dot {
            self.next();
            let (column, _, _) = self.ident()?;
            Ok(RawCol {
                qualifier: Some(first),
                column,
                line,
                col,
            })
        } else {
            Ok(RawCol {
                qualifier: None,
                column: first,
                line,
                col,
            })
        }
    }

    fn resolve(&self, raw: &RawCol) -> Result<ColRef> {
        match &raw.qualifier {
            Some(q) => {
                let rel = self
                    .relations
                    .iter()
                    .position(|r| r.alias == *q)
                    .ok_or_else(|| Error::UnknownTable(q.clone()))?;
                let table = self
                    .catalog
                    .table_by_name(&self.relations[rel].table)
                    .expect("relation table checked at FROM time");
                if table.column(&raw.column).is_none() {
                    return Err(Error::UnknownColumn(format!("{q}.{}", raw.column)));
                }
                Ok(ColRef {
                    rel,
                    column: raw.column.clone(),
                })
            }
            None => {
                let mut hits = Vec::new();
                for (i, r) in self.relations.iter().enumerate() {
                    let table = self.catalog.table_by_name(&r.table).unwrap();
                    if table.column(&raw.column).is_some() {
                        hits.push(i);
                    }
                }
                match hits.len() {
                    0 => Err(Error::UnknownColumn(raw.column.clone())),
                    1 => Ok(ColRef {
                        rel: hits[0],
                        column: raw.column.clone(),
                    }),
                    _ => Err(Error::AmbiguousColumn(raw.column.clone())),
                }
            }
        }
    }

    fn add_relation(&mut self) -> Result<usize> {
        let (table, line, col) = self.ident()?;
        if self.catalog.table_by_name(&table).is_none() {
            return Err(Error::UnknownTable(table));
        }
        // A bare identifier that is not a clause keyword is an alias.
        let alias = match &self.peek().kind {
            TokKind::Ident(_)
                if !KEYWORDS.iter().any(|k| self.peek().is_kw(k)) =>
            {
                self.ident()?.0
            }
            _ => table.clone(),
        };
        if self.relations.iter().any(|r| r.alias == alias) {
            return Err(Error::Syntax {
                line,
                column: col,
                message: format!("duplicate relation alias `{alias}`"),
            });
        }
        self.relations.push(RelRef { table, alias });
        Ok(self.relations.len() - 1)
    }

    fn from_list(&mut self, clauses: &mut Vec<JoinClause>) -> Result<()> {
        loop {
            self.from_item(clauses)?;
            if self.peek().kind == TokKind::Comma {
                self.next();
            } else {
                break;
            }
        }
        Ok(())
    }

    fn from_item(&mut self, clauses: &mut Vec<JoinClause>) -> Result<()> {
        self.add_relation()?;
        loop {
            let jt = if self.eat_kw("JOIN") {
                JoinType::Inner
            } else if self.eat_kw("INNER") {
                self.expect_kw("JOIN")?;
                JoinType::Inner
            } else if self.eat_kw("LEFT") {
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                JoinType::LeftOuter
            } else if self.eat_kw("FULL") {
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                JoinType::FullOuter
            } else if self.eat_kw("SEMI") {
                self.expect_kw("JOIN")?;
                JoinType::Semi
            } else if self.eat_kw("ANTI") {
                self.expect_kw("JOIN")?;
                JoinType::Anti
            } else {
                return Ok(());
            };
            let joined = self.add_relation()?;
            self.expect_kw("ON")?;
            let lraw = self.raw_col()?;
            let op = self.cmp_op()?;
            let rraw = self.raw_col()?;
            let (mut left, mut right) = (self.resolve(&lraw)?, self.resolve(&rraw)?);
            let mut op = op;
            if left.rel == right.rel {
                return Err(Error::Syntax {
                    line: lraw.line,
                    column: lraw.col,
                    message: "join condition must reference two distinct relations".into(),
                });
            }
            // Keep the newly joined relation on the right of the clause.
            if left.rel == joined {
                std::mem::swap(&mut left, &mut right);
                op = flip(op);
            } else if right.rel != joined {
                return Err(Error::Syntax {
                    line: rraw.line,
                    column: rraw.col,
                    message: "ON condition must reference the joined relation".into(),
                });
            }
            clauses.push(JoinClause {
                left,
                right,
                join_type: jt,
                op,
                hashable: op == CmpOp::Eq,
            });
        }
    }

    fn cmp_op(&mut self) -> Result<CmpOp> {
        let t = self.next();
        match t.kind {
            TokKind::Lt => Ok(CmpOp::Lt),
            TokKind::Le => Ok(CmpOp::Le),
            TokKind::Eq => Ok(CmpOp::Eq),
            TokKind::Ge => Ok(CmpOp::Ge),
            TokKind::Gt => Ok(CmpOp::Gt),
            ref other => self.err(&t, format!("expected comparison, found {}", other.describe())),
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let t = self.next();
        match t.kind {
            TokKind::Int(v) => Ok(Literal::Int(v)),
            TokKind::Minus => {
                let t2 = self.next();
                match t2.kind {
                    TokKind::Int(v) => Ok(Literal::Int(-v)),
                    ref other => self.err(&t2, format!("expected integer, found {}", other.describe())),
                }
            }
            TokKind::Str(s) => Ok(Literal::Str(s)),
            TokKind::Ident(ref s) if s.eq_ignore_ascii_case("DATE") => {
                let t2 = self.next();
                match t2.kind {
                    TokKind::Str(d) => parse_date(&d)
                        .ok_or_else(|| Error::Syntax {
                            line: t2.line,
                            column: t2.col,
                            message: format!("malformed date literal '{d}'"),
                        })
                        .map(Literal::Int),
                    ref other => self.err(&t2, format!("expected date string, found {}", other.describe())),
                }
            }
            ref other => self.err(&t, format!("expected literal, found {}", other.describe())),
        }
    }

    fn is_literal_start(&self) -> bool {
        match &self.peek().kind {
            TokKind::Int(_) | TokKind::Str(_) | TokKind::Minus => true,
            TokKind::Ident(s) => {
                s.eq_ignore_ascii_case("DATE") && matches!(self.peek2().kind, TokKind::Str(_))
            }
            _ => false,
        }
    }

    /// One WHERE conjunct: a comparison, a BETWEEN, or a parenthesized
    /// OR-of-conjunctions.
    fn condition(
        &mut self,
        clauses: &mut Vec<JoinClause>,
        predicates: &mut Vec<Predicate>,
        residuals: &mut Vec<OrPredicate>,
    ) -> Result<()> {
        if self.peek().kind == TokKind::LParen {
            return self.or_group(clauses, predicates, residuals);
        }
        if self.is_literal_start() {
            // literal cmp column: flip into column-first form.
            let lit = self.literal()?;
            let op = flip(self.cmp_op()?);
            let raw = self.raw_col()?;
            let target = self.resolve(&raw)?;
            predicates.push(Predicate {
                target,
                op: PredicateOp::Cmp(op, lit),
            });
            return Ok(());
        }
        let lraw = self.raw_col()?;
        if self.eat_kw("BETWEEN") {
            let lo = self.int_literal()?;
            self.expect_kw("AND")?;
            let hi = self.int_literal()?;
            let target = self.resolve(&lraw)?;
            predicates.push(Predicate {
                target,
                op: PredicateOp::Between(lo, hi),
            });
            return Ok(());
        }
        let op = self.cmp_op()?;
        if self.is_literal_start() {
            let lit = self.literal()?;
            let target = self.resolve(&lraw)?;
            predicates.push(Predicate {
                target,
                op: PredicateOp::Cmp(op, lit),
            });
        } else {
            let rraw = self.raw_col()?;
            let (left, right) = (self.resolve(&lraw)?, self.resolve(&rraw)?);
            if left.rel == right.rel {
                return Err(Error::Syntax {
                    line: lraw.line,
                    column: lraw.col,
                    message: "join condition must reference two distinct relations".into(),
                });
            }
            clauses.push(JoinClause {
                left,
                right,
                join_type: JoinType::Inner,
                op,
                hashable: op == CmpOp::Eq,
            });
        }
        Ok(())
    }

    fn int_literal(&mut self) -> Result<i64> {
        let t = self.peek().clone();
        match self.literal()? {
            Literal::Int(v) => Ok(v),
            Literal::Str(_) => self.err(&t, "BETWEEN requires integer or date bounds"),
        }
    }

    /// `( branch [OR branch]* )`. A single branch is re-dispatched as plain
    /// conjuncts; multiple branches become AnyOf predicates plus (when the
    /// disjunction spans several relations) a residual OR kept for post-join
    /// evaluation.
    fn or_group(
        &mut self,
        clauses: &mut Vec<JoinClause>,
        predicates: &mut Vec<Predicate>,
        residuals: &mut Vec<OrPredicate>,
    ) -> Result<()> {
        self.expect(TokKind::LParen)?;
        let mut branches: Vec<Vec<(ColRef, Literal)>> = Vec::new();
        let mut plain = true;
        loop {
            let branch = self.or_branch(clauses, predicates, residuals, plain && branches.is_empty())?;
            match branch {
                Some(b) => branches.push(b),
                None => plain = false,
            }
            if !self.eat_kw("OR") {
                break;
            }
            if !plain && branches.is_empty() {
                let t = self.peek().clone();
                return self.err(&t, "OR branches must be conjunctions of equality predicates");
            }
        }
        self.expect(TokKind::RParen)?;
        if branches.len() <= 1 {
            if !branches.is_empty() {
                // Parenthesized conjunction with no OR: plain predicates.
                for (target, lit) in branches.pop().unwrap() {
                    predicates.push(Predicate {
                        target,
                        op: PredicateOp::Cmp(CmpOp::Eq, lit),
                    });
                }
            }
            return Ok(());
        }
        // Columns constrained in every branch get an implied IN-list predicate.
        let mut by_col: Vec<(ColRef, Vec<Literal>)> = Vec::new();
        for b in &branches {
            for (c, l) in b {
                match by_col.iter_mut().find(|(bc, _)| bc == c) {
                    Some((_, lits)) => lits.push(l.clone()),
                    None => by_col.push((c.clone(), vec![l.clone()])),
                }
            }
        }
        let single_column = by_col.len() == 1
            && branches.iter().all(|b| b.len() == 1);
        for (target, mut lits) in by_col {
            let in_all = branches
                .iter()
                .all(|b| b.iter().any(|(c, _)| *c == target));
            if !in_all {
                continue;
            }
            lits.sort();
            lits.dedup();
            predicates.push(Predicate {
                target,
                op: PredicateOp::AnyOf(lits),
            });
        }
        if !single_column {
            residuals.push(OrPredicate { branches });
        }
        Ok(())
    }

    /// One OR branch: either `( eq AND eq ... )` or a bare equality. Returns
    /// None when `allow_plain` and the content is not an equality conjunction
    /// (the caller then treats the group as an ordinary parenthesized
    /// condition).
    fn or_branch(
        &mut self,
        clauses: &mut Vec<JoinClause>,
        predicates: &mut Vec<Predicate>,
        residuals: &mut Vec<OrPredicate>,
        allow_plain: bool,
    ) -> Result<Option<Vec<(ColRef, Literal)>>> {
        if self.peek().kind == TokKind::LParen {
            self.next();
            let mut atoms = Vec::new();
            loop {
                atoms.push(self.eq_atom()?);
                if !self.eat_kw("AND") {
                    break;
                }
            }
            self.expect(TokKind::RParen)?;
            return Ok(Some(atoms));
        }
        // A bare atom. If it is not `col = literal` it can only be a plain
        // parenthesized condition.
        let save = self.pos;
        match self.eq_atom() {
            Ok(atom) => Ok(Some(vec![atom])),
            Err(e) => {
                if allow_plain && !self.peek().is_kw("OR") {
                    self.pos = save;
                    self.condition(clauses, predicates, residuals)?;
                    if self.peek().kind != TokKind::RParen {
                        let t = self.peek().clone();
                        return self.err(&t, "expected `)`");
                    }
                    Ok(None)
                } else {
                    Err(e)
                }
            }
        }
    }

    fn eq_atom(&mut self) -> Result<(ColRef, Literal)> {
        let raw = self.raw_col()?;
        let t = self.peek().clone();
        if t.kind != TokKind::Eq {
            return self.err(&t, "OR branches support only equality predicates");
        }
        self.next();
        let lit = self.literal()?;
        let target = self.resolve(&raw)?;
        Ok((target, lit))
    }
}

const KEYWORDS: &[&str] = &[
    "SELECT", "FROM", "WHERE", "AND", "OR", "AS", "JOIN", "INNER", "LEFT", "FULL", "OUTER",
    "SEMI", "ANTI", "ON", "BETWEEN",
];

fn flip(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Gt,
        CmpOp::Le => CmpOp::Ge,
        CmpOp::Eq => CmpOp::Eq,
        CmpOp::Ge => CmpOp::Le,
        CmpOp::Gt => CmpOp::Lt,
    }
}

/// `yyyy-mm-dd` → yyyymmdd as an integer; comparisons stay order-preserving.
fn parse_date(s: &str) -> Option<i64> {
    let parts: Vec<&str> = s.split('-').collect();
    if parts.len() != 3 || parts[0].len() != 4 || parts[1].len() != 2 || parts[2].len() != 2 {
        return None;
    }
    let y: i64 = parts[0].parse().ok()?;
    let m: i64 = parts[1].parse().ok()?;
    let d: i64 = parts[2].parse().ok()?;
    if !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return None;
    }
    Some(y * 10000 + m * 100 + d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ColumnDef, TableDef, ValueDomain};
    use crate::frontend::{JoinType, Projection};

    fn int_col(name: &str, ndv: u64) -> ColumnDef {
        ColumnDef {
            name: name.into(),
            domain: ValueDomain::Int,
            ndv,
            null_fraction: 0.0,
            min: Some(0),
            max: Some(ndv.saturating_sub(1) as i64),
        }
    }

    fn str_col(name: &str, ndv: u64) -> ColumnDef {
        ColumnDef {
            name: name.into(),
            domain: ValueDomain::Str,
            ndv,
            null_fraction: 0.0,
            min: None,
            max: None,
        }
    }

    fn test_catalog() -> Catalog {
        let mut c = Catalog::new();
        for (name, cols) in [
            ("t1", vec![int_col("c1", 100), int_col("c2", 100)]),
            ("t2", vec![int_col("c1", 100), int_col("c2", 100), int_col("c3", 100)]),
            ("t3", vec![int_col("c1", 100)]),
            ("nation", vec![int_col("n_nationkey", 25), str_col("n_name", 25)]),
            ("supplier", vec![int_col("s_suppkey", 100), int_col("s_nationkey", 25)]),
            (
                "lineitem",
                vec![int_col("l_suppkey", 100), int_col("l_orderkey", 100), int_col("l_shipdate", 900)],
            ),
            ("orders", vec![int_col("o_orderkey", 100), int_col("o_custkey", 100)]),
            ("customer", vec![int_col("c_custkey", 100), int_col("c_nationkey", 25)]),
        ] {
            c.define_table(TableDef {
                name: name.into(),
                rows: 1000,
                columns: cols,
            })
            .unwrap();
        }
        c
    }

    #[test]
    fn three_relation_chain() {
        let cat = test_catalog();
        let q = parse(
            "SELECT * FROM t1, t2, t3 WHERE t1.c2 = t2.c1 AND t2.c2 = t3.c1 AND t2.c3 < 100",
            &cat,
        )
        .unwrap();
        assert_eq!(q.relations.len(), 3);
        assert_eq!(q.clauses.len(), 2);
        assert!(q.clauses.iter().all(|c| c.hashable));
        assert_eq!(q.predicates.len(), 1);
        assert_eq!(
            q.predicates[0].op,
            PredicateOp::Cmp(CmpOp::Lt, Literal::Int(100))
        );
    }

    #[test]
    fn trivial_single_relation() {
        let q = parse("SELECT * FROM t1", &test_catalog()).unwrap();
        assert_eq!(q.relations.len(), 1);
        assert!(q.clauses.is_empty());
        assert_eq!(q.projection, Projection::Star);
    }

    #[test]
    fn q7_shape() {
        let cat = test_catalog();
        let q = parse(
            "SELECT n1.n_name AS supp_nation, n2.n_name AS cust_nation \
             FROM supplier, lineitem, orders, customer, nation n1, nation n2 \
             WHERE s_suppkey = l_suppkey AND o_orderkey = l_orderkey \
             AND c_custkey = o_custkey AND s_nationkey = n1.n_nationkey \
             AND c_nationkey = n2.n_nationkey \
             AND ((n1.n_name = 'FRANCE' AND n2.n_name = 'GERMANY') \
               OR (n1.n_name = 'GERMANY' AND n2.n_name = 'FRANCE')) \
             AND l_shipdate BETWEEN DATE '1995-01-01' AND DATE '1996-12-31'",
            &cat,
        )
        .unwrap();
        assert_eq!(q.relations.len(), 6);
        assert_eq!(q.relations[4].alias, "n1");
        assert_eq!(q.relations[5].alias, "n2");
        assert_eq!(q.clauses.len(), 5);
        // BETWEEN plus one derived IN-list per nation alias.
        let anyofs: Vec<_> = q
            .predicates
            .iter()
            .filter(|p| matches!(p.op, PredicateOp::AnyOf(_)))
            .collect();
        assert_eq!(anyofs.len(), 2);
        for p in &anyofs {
            match &p.op {
                PredicateOp::AnyOf(lits) => assert_eq!(
                    lits,
                    &vec![Literal::Str("FRANCE".into()), Literal::Str("GERMANY".into())]
                ),
                _ => unreachable!(),
            }
        }
        assert!(q
            .predicates
            .iter()
            .any(|p| p.op == PredicateOp::Between(19950101, 19961231)));
        assert_eq!(q.residuals.len(), 1);
        assert_eq!(q.residuals[0].branches.len(), 2);
    }

    #[test]
    fn explicit_join_types() {
        let cat = test_catalog();
        let q = parse(
            "SELECT * FROM t1 LEFT OUTER JOIN t2 ON t1.c1 = t2.c1 SEMI JOIN t3 ON t2.c2 = t3.c1",
            &cat,
        )
        .unwrap();
        assert_eq!(q.clauses[0].join_type, JoinType::LeftOuter);
        assert_eq!(q.clauses[1].join_type, JoinType::Semi);
        // The joined relation always lands on the right of the clause.
        let q2 = parse("SELECT * FROM t1 ANTI JOIN t2 ON t2.c1 = t1.c1", &cat).unwrap();
        assert_eq!(q2.clauses[0].right.rel, 1);
    }

    #[test]
    fn single_column_or_becomes_anyof_without_residual() {
        let cat = test_catalog();
        let q = parse(
            "SELECT * FROM nation WHERE (n_name = 'FRANCE' OR n_name = 'GERMANY')",
            &cat,
        )
        .unwrap();
        assert_eq!(q.predicates.len(), 1);
        assert!(matches!(q.predicates[0].op, PredicateOp::AnyOf(_)));
        assert!(q.residuals.is_empty());
    }

    #[test]
    fn name_resolution_errors() {
        let cat = test_catalog();
        assert!(matches!(
            parse("SELECT * FROM nope", &cat),
            Err(Error::UnknownTable(_))
        ));
        assert!(matches!(
            parse("SELECT * FROM t1 WHERE t1.zz = 1", &cat),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(
            parse("SELECT * FROM t1, t2 WHERE c1 = 1", &cat),
            Err(Error::AmbiguousColumn(_))
        ));
        match parse("SELECT *\nFROM t1 WHERE", &cat) {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn render_round_trip() {
        let cat = test_catalog();
        for sql in [
            "SELECT * FROM t1, t2, t3 WHERE t1.c2 = t2.c1 AND t2.c2 = t3.c1 AND t2.c3 < 100",
            "SELECT t1.c1 AS a FROM t1 LEFT JOIN t2 ON t1.c1 = t2.c1 WHERE t1.c2 BETWEEN 3 AND 9",
            "SELECT * FROM nation n1, nation n2 \
             WHERE n1.n_nationkey = n2.n_nationkey \
             AND ((n1.n_name = 'A' AND n2.n_name = 'B') OR (n1.n_name = 'B' AND n2.n_name = 'A'))",
        ] {
            let q = parse(sql, &cat).unwrap().canonical();
            let again = parse(&q.render(), &cat).unwrap().canonical();
            assert_eq!(q, again);
        }
    }
}
