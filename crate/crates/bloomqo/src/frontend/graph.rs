//! Join graph: relations as nodes, equijoin clauses as edges, plus the
//! multi-way column equivalence classes the candidate-marking pass needs.

use super::{CmpOp, ColRef, Query};

#[derive(Debug, Clone)]
pub struct GraphEdge {
    /// Index into `Query::clauses`.
    pub clause: usize,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone)]
pub struct JoinGraph {
    pub num_rels: usize,
    pub edges: Vec<GraphEdge>,
    adj: Vec<Vec<usize>>,
    /// Transitive closure of hashable equality clauses. Columns joined only
    /// by non-equality or non-hashable clauses form singleton classes, so the
    /// classes partition the full set of join columns.
    pub classes: Vec<Vec<ColRef>>,
}

impl JoinGraph {
    /// Edge indices incident to `rel`.
    pub fn edges_of(&self, rel: usize) -> &[usize] {
        &self.adj[rel]
    }

    /// True when the relations in `mask` (bit i = relation i) induce a
    /// connected subgraph. Empty and singleton sets count as connected.
    pub fn is_connected(&self, mask: u64) -> bool {
        if mask == 0 {
            return true;
        }
        let start = mask.trailing_zeros() as usize;
        let mut seen = 1u64 << start;
        let mut stack = vec![start];
        while let Some(r) = stack.pop() {
            for &ei in &self.adj[r] {
                let e = &self.edges[ei];
                let other = if e.left == r { e.right } else { e.left };
                let bit = 1u64 << other;
                if mask & bit != 0 && seen & bit == 0 {
                    seen |= bit;
                    stack.push(other);
                }
            }
        }
        seen == mask
    }

    pub fn class_of(&self, col: &ColRef) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(col))
    }
}

pub fn build_join_graph(q: &Query) -> JoinGraph {
    let n = q.relations.len();
    let mut edges = Vec::new();
    let mut adj = vec![Vec::new(); n];
    let mut cols: Vec<ColRef> = Vec::new();
    let col_idx = |cols: &mut Vec<ColRef>, c: &ColRef| match cols.iter().position(|x| x == c) {
        Some(i) => i,
        None => {
            cols.push(c.clone());
            cols.len() - 1
        }
    };
    let mut unions: Vec<(usize, usize)> = Vec::new();
    for (ci, cl) in q.clauses.iter().enumerate() {
        let ei = edges.len();
        edges.push(GraphEdge {
            clause: ci,
            left: cl.left.rel,
            right: cl.right.rel,
        });
        adj[cl.left.rel].push(ei);
        adj[cl.right.rel].push(ei);
        let li = col_idx(&mut cols, &cl.left);
        let ri = col_idx(&mut cols, &cl.right);
        if cl.hashable && cl.op == CmpOp::Eq {
            unions.push((li, ri));
        }
    }
    // Union-find over the collected join columns.
    let mut parent: Vec<usize> = (0..cols.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in unions {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut classes: Vec<Vec<ColRef>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..cols.len() {
        let r = find(&mut parent, i);
        let slot = match roots.iter().position(|&x| x == r) {
            Some(s) => s,
            None => {
                roots.push(r);
                classes.push(Vec::new());
                classes.len() - 1
            }
        };
        classes[slot].push(cols[i].clone());
    }
    JoinGraph {
        num_rels: n,
        edges,
        adj,
        classes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{JoinClause, JoinType, Projection, RelRef};

    fn col(rel: usize, name: &str) -> ColRef {
        ColRef {
            rel,
            column: name.into(),
        }
    }

    fn eq(l: ColRef, r: ColRef) -> JoinClause {
        JoinClause {
            left: l,
            right: r,
            join_type: JoinType::Inner,
            op: CmpOp::Eq,
            hashable: true,
        }
    }

    fn query(n: usize, clauses: Vec<JoinClause>) -> Query {
        Query {
            relations: (0..n)
                .map(|i| RelRef {
                    table: format!("t{i}"),
                    alias: format!("t{i}"),
                })
                .collect(),
            clauses,
            predicates: vec![],
            residuals: vec![],
            projection: Projection::Star,
        }
    }

    #[test]
    fn path_graph_connectivity() {
        let q = query(
            3,
            vec![
                eq(col(0, "c2"), col(1, "c1")),
                eq(col(1, "c2"), col(2, "c1")),
            ],
        );
        let g = build_join_graph(&q);
        assert!(g.is_connected(0b111));
        assert!(g.is_connected(0b011));
        assert!(!g.is_connected(0b101)); // t0 and t2 only touch via t1
        assert!(g.is_connected(0b001));
        assert!(g.is_connected(0));
    }

    #[test]
    fn single_relation() {
        let g = build_join_graph(&query(1, vec![]));
        assert_eq!(g.num_rels, 1);
        assert!(g.edges.is_empty());
        assert!(g.classes.is_empty());
    }

    #[test]
    fn transitive_equivalence_class() {
        // a.x = b.x and b.x = c.x → one 3-column class.
        let q = query(
            3,
            vec![eq(col(0, "x"), col(1, "x")), eq(col(1, "x"), col(2, "x"))],
        );
        let g = build_join_graph(&q);
        assert_eq!(g.classes.len(), 1);
        assert_eq!(g.classes[0].len(), 3);
        assert_eq!(g.class_of(&col(0, "x")), g.class_of(&col(2, "x")));
    }

    #[test]
    fn classes_partition_join_columns() {
        let mut ne = eq(col(1, "y"), col(2, "y"));
        ne.op = CmpOp::Lt;
        ne.hashable = false;
        let q = query(3, vec![eq(col(0, "x"), col(1, "x")), ne]);
        let g = build_join_graph(&q);
        // Four join columns, one merged pair: 3 classes, each column once.
        assert_eq!(g.classes.len(), 3);
        let total: usize = g.classes.iter().map(|c| c.len()).sum();
        assert_eq!(total, 4);
    }
}
