//! Table schemas, declared statistics and key constraints.
//!
//! Statistics are declared rather than computed from data so that the planner
//! can be driven by hand-built fixtures without materializing large tables.
//! The catalog is immutable once loaded and safe to share across threads.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueDomain {
    Int,
    Str,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub domain: ValueDomain,
    pub ndv: u64,
    #[serde(default)]
    pub null_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub rows: u64,
    pub columns: Vec<ColumnDef>,
}

impl TableDef {
    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    PrimaryKey,
    ForeignKey,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyConstraint {
    pub kind: ConstraintKind,
    pub table: String,
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_table: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_column: Option<String>,
}

/// A selectivity pinned by a fixture for one (apply, build, delta) triple,
/// overriding the model-derived semi-join estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PinnedSemijoinSelectivity {
    pub apply_table: String,
    pub apply_column: String,
    pub build_table: String,
    pub build_column: String,
    /// Build-side table names, order-insensitive.
    pub delta: Vec<String>,
    pub selectivity: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CatalogDoc {
    #[serde(default)]
    pub tables: Vec<TableDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<KeyConstraint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pinned_semijoin_selectivity: Vec<PinnedSemijoinSelectivity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TableId(pub usize);

#[derive(Debug, Default)]
pub struct Catalog {
    tables: Vec<TableDef>,
    by_name: HashMap<String, TableId>,
    constraints: Vec<KeyConstraint>,
    pinned: Vec<PinnedSemijoinSelectivity>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define_table(&mut self, def: TableDef) -> Result<TableId> {
        if self.by_name.contains_key(&def.name) {
            return Err(Error::DuplicateName(def.name));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &def.columns {
            if !seen.insert(c.name.clone()) {
                return Err(Error::InvalidStats {
                    table: def.name.clone(),
                    column: c.name.clone(),
                    reason: "duplicate column name".into(),
                });
            }
            if def.rows > 0 && c.ndv > def.rows {
                return Err(Error::InvalidStats {
                    table: def.name.clone(),
                    column: c.name.clone(),
                    reason: format!("ndv {} exceeds row count {}", c.ndv, def.rows),
                });
            }
            if !(0.0..=1.0).contains(&c.null_fraction) {
                return Err(Error::InvalidStats {
                    table: def.name.clone(),
                    column: c.name.clone(),
                    reason: format!("null_fraction {} outside [0,1]", c.null_fraction),
                });
            }
        }
        let id = TableId(self.tables.len());
        self.by_name.insert(def.name.clone(), id);
        self.tables.push(def);
        Ok(id)
    }

    pub fn register_constraint(&mut self, c: KeyConstraint) -> Result<()> {
        let table = self
            .table_by_name(&c.table)
            .ok_or_else(|| Error::DanglingReference(format!("table `{}`", c.table)))?;
        if table.column(&c.column).is_none() {
            return Err(Error::DanglingReference(format!(
                "column `{}.{}`",
                c.table, c.column
            )));
        }
        if c.kind == ConstraintKind::ForeignKey {
            let rt = c
                .ref_table
                .as_deref()
                .ok_or_else(|| Error::DanglingReference("foreign key without ref_table".into()))?;
            let rc = c
                .ref_column
                .as_deref()
                .ok_or_else(|| Error::DanglingReference("foreign key without ref_column".into()))?;
            let reft = self
                .table_by_name(rt)
                .ok_or_else(|| Error::DanglingReference(format!("table `{rt}`")))?;
            if reft.column(rc).is_none() {
                return Err(Error::DanglingReference(format!("column `{rt}.{rc}`")));
            }
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn add_pinned(&mut self, p: PinnedSemijoinSelectivity) {
        self.pinned.push(p);
    }

    pub fn from_doc(doc: CatalogDoc) -> Result<Self> {
        let mut cat = Catalog::new();
        for t in doc.tables {
            cat.define_table(t)?;
        }
        for c in doc.constraints {
            cat.register_constraint(c)?;
        }
        cat.pinned = doc.pinned_semijoin_selectivity;
        Ok(cat)
    }

    /// Parse a catalog document from JSON text.
    pub fn load(text: &str) -> Result<Self> {
        let doc: CatalogDoc = serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_doc(doc)
    }

    pub fn to_doc(&self) -> CatalogDoc {
        CatalogDoc {
            tables: self.tables.clone(),
            constraints: self.constraints.clone(),
            pinned_semijoin_selectivity: self.pinned.clone(),
        }
    }

    pub fn save(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("catalog serializes")
    }

    pub fn tables(&self) -> &[TableDef] {
        &self.tables
    }

    pub fn table(&self, id: TableId) -> &TableDef {
        &self.tables[id.0]
    }

    pub fn table_id(&self, name: &str) -> Option<TableId> {
        self.by_name.get(name).copied()
    }

    pub fn table_by_name(&self, name: &str) -> Option<&TableDef> {
        self.table_id(name).map(|id| self.table(id))
    }

    /// All constraints registered for a (table, column) pair. Total: an
    /// unknown pair simply yields an empty set.
    pub fn constraints_for(&self, table: &str, column: &str) -> Vec<&KeyConstraint> {
        self.constraints
            .iter()
            .filter(|c| c.table == table && c.column == column)
            .collect()
    }

    pub fn is_primary_key(&self, table: &str, column: &str) -> bool {
        self.constraints_for(table, column)
            .iter()
            .any(|c| c.kind == ConstraintKind::PrimaryKey)
    }

    /// True when `table.column` is a foreign key referencing `ref_table.ref_column`.
    pub fn is_foreign_key_to(
        &self,
        table: &str,
        column: &str,
        ref_table: &str,
        ref_column: &str,
    ) -> bool {
        self.constraints_for(table, column).iter().any(|c| {
            c.kind == ConstraintKind::ForeignKey
                && c.ref_table.as_deref() == Some(ref_table)
                && c.ref_column.as_deref() == Some(ref_column)
        })
    }

    pub fn pinned_selectivities(&self) -> &[PinnedSemijoinSelectivity] {
        &self.pinned
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(name: &str, ndv: u64) -> ColumnDef {
        ColumnDef {
            name: name.into(),
            domain: ValueDomain::Int,
            ndv,
            null_fraction: 0.0,
            min: None,
            max: None,
        }
    }

    #[test]
    fn define_and_lookup() {
        let mut cat = Catalog::new();
        let id = cat
            .define_table(TableDef {
                name: "t1".into(),
                rows: 600_000_000,
                columns: vec![col("c1", 600_000_000), col("c2", 22_000_000)],
            })
            .unwrap();
        assert_eq!(cat.table(id).rows, 600_000_000);
        assert_eq!(cat.table_id("t1"), Some(id));
    }

    #[test]
    fn empty_table_accepted() {
        let mut cat = Catalog::new();
        cat.define_table(TableDef {
            name: "empty".into(),
            rows: 0,
            columns: vec![col("c1", 0)],
        })
        .unwrap();
    }

    #[test]
    fn ndv_above_rows_rejected() {
        let mut cat = Catalog::new();
        let err = cat
            .define_table(TableDef {
                name: "bad".into(),
                rows: 5,
                columns: vec![col("c1", 10)],
            })
            .unwrap_err();
        assert!(matches!(err, Error::InvalidStats { .. }));
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut cat = Catalog::new();
        cat.define_table(TableDef {
            name: "t".into(),
            rows: 1,
            columns: vec![col("c", 1)],
        })
        .unwrap();
        let err = cat
            .define_table(TableDef {
                name: "t".into(),
                rows: 1,
                columns: vec![col("c", 1)],
            })
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateName(_)));
    }

    #[test]
    fn constraints_round_trip() {
        let mut cat = Catalog::new();
        cat.define_table(TableDef {
            name: "t2".into(),
            rows: 100,
            columns: vec![col("c2", 100)],
        })
        .unwrap();
        cat.define_table(TableDef {
            name: "t3".into(),
            rows: 100,
            columns: vec![col("c1", 100)],
        })
        .unwrap();
        cat.register_constraint(KeyConstraint {
            kind: ConstraintKind::PrimaryKey,
            table: "t3".into(),
            column: "c1".into(),
            ref_table: None,
            ref_column: None,
        })
        .unwrap();
        cat.register_constraint(KeyConstraint {
            kind: ConstraintKind::ForeignKey,
            table: "t2".into(),
            column: "c2".into(),
            ref_table: Some("t3".into()),
            ref_column: Some("c1".into()),
        })
        .unwrap();
        assert!(cat.is_primary_key("t3", "c1"));
        assert!(cat.is_foreign_key_to("t2", "c2", "t3", "c1"));
        assert!(cat.constraints_for("t2", "nope").is_empty());
    }

    #[test]
    fn dangling_fk_rejected() {
        let mut cat = Catalog::new();
        cat.define_table(TableDef {
            name: "t".into(),
            rows: 1,
            columns: vec![col("c", 1)],
        })
        .unwrap();
        let err = cat
            .register_constraint(KeyConstraint {
                kind: ConstraintKind::ForeignKey,
                table: "t".into(),
                column: "c".into(),
                ref_table: Some("missing".into()),
                ref_column: Some("x".into()),
            })
            .unwrap_err();
        assert!(matches!(err, Error::DanglingReference(_)));
    }

    #[test]
    fn save_load_identical_stats() {
        let mut cat = Catalog::new();
        cat.define_table(TableDef {
            name: "t1".into(),
            rows: 600_000_000,
            columns: vec![col("c2", 22_000_000)],
        })
        .unwrap();
        let text = cat.save();
        let cat2 = Catalog::load(&text).unwrap();
        assert_eq!(cat2.table_by_name("t1").unwrap().rows, 600_000_000);
        assert_eq!(cat2.table_by_name("t1").unwrap().columns[0].ndv, 22_000_000);
        assert_eq!(cat2.save(), text);
    }

    #[test]
    fn malformed_doc_positioned_error() {
        let err = Catalog::load("{ \"tables\": [ { \"name\": 3 } ] }").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert!(line >= 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn empty_doc_is_empty_catalog() {
        let cat = Catalog::load("{}").unwrap();
        assert!(cat.tables().is_empty());
    }
}
