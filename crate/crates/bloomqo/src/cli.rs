//! Command-line entry points: EXPLAIN, execute, benchmark, and data
//! generation. The binary in `src/bin/bloomqo.rs` is a thin wrapper around
//! [`run_cli`].
//!
//! Exit codes are a stable contract: 0 success, 1 assertion or acceptance
//! failure, 2 usage or parse errors.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::executor::{execute, Database, ExecOptions};
use crate::frontend::parse;
use crate::planner::{plan_query, PlannerConfig, PlannerMode};
use crate::report::{parse_mode, RunReport};
use crate::workload::{bundled_fixtures, fixture, generate, GenSpec};

/// Optional JSON configuration: any subset of planner and cost parameters.
/// Looked up from `--config` or the `BLOOMQO_CONFIG` environment variable.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub planner: PlannerConfig,
    pub cost: CostParams,
}

#[derive(Parser, Debug)]
#[command(name = "bloomqo", version, about = "Bloom-filter-aware query planning laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Plan a query and print the EXPLAIN tree with filter annotations.
    Explain(ExplainArgs),
    /// Plan and execute a query against a data directory.
    Run(RunArgs),
    /// Benchmark bundled fixtures across planner modes.
    Bench(BenchArgs),
    /// Generate a dataset and catalog from a generation spec.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    /// SQL text; mutually exclusive with --query.
    #[arg(long, conflicts_with = "query")]
    pub sql: Option<String>,
    /// File containing the SQL text.
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// Catalog JSON file.
    #[arg(long)]
    pub catalog: PathBuf,
    /// Planner mode.
    #[arg(long, default_value = "bfcbo")]
    pub mode: String,
    /// Configuration JSON (defaults to $BLOOMQO_CONFIG when set).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, conflicts_with = "query")]
    pub sql: Option<String>,
    #[arg(long)]
    pub query: Option<PathBuf>,
    #[arg(long)]
    pub catalog: PathBuf,
    /// Directory of .tbl data files.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "bfcbo")]
    pub mode: String,
    /// Degree of parallelism (affects filter partitioning, not threads).
    #[arg(long, default_value_t = 1)]
    pub dop: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Fixture name; repeatable. Mutually exclusive with --all.
    #[arg(long, conflicts_with = "all")]
    pub fixture: Vec<String>,
    /// Benchmark every bundled fixture.
    #[arg(long)]
    pub all: bool,
    /// Comma-separated planner modes (nobf,bfpost,bfcbo,naive).
    #[arg(long, value_delimiter = ',', default_value = "nobf,bfpost,bfcbo")]
    pub modes: Vec<String>,
    /// Write the versioned CSV here; markdown always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Generation spec JSON file.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory for catalog.json and .tbl files.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // Help/version are successful exits; real usage errors are 2.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Error::AssertionFailed(msg)) => {
            eprintln!("assertion failed: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Explain(a) => cmd_explain(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Gen(a) => cmd_gen(a),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<CliConfig> {
    let path = match path {
        Some(p) => Some(p.clone()),
        None => std::env::var_os("BLOOMQO_CONFIG").map(PathBuf::from),
    };
    let cfg = match path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => CliConfig::default(),
    };
    cfg.cost.validate()?;
    Ok(cfg)
}

fn load_catalog(path: &Path) -> Result<Catalog> {
    Catalog::load(&std::fs::read_to_string(path)?)
}

fn load_sql(sql: &Option<String>, query: &Option<PathBuf>) -> Result<String> {
    match (sql, query) {
        (Some(s), _) => Ok(s.clone()),
        (None, Some(p)) => Ok(std::fs::read_to_string(p)?),
        (None, None) => Err(Error::InconsistentSpec(
            "one of --sql or --query is required".into(),
        )),
    }
}

fn mode_arg(s: &str) -> Result<PlannerMode> {
    parse_mode(s).ok_or_else(|| Error::InconsistentSpec(format!("unknown mode {s:?}")))
}

fn cmd_explain(a: ExplainArgs) -> Result<()> {
    let catalog = load_catalog(&a.catalog)?;
    let cfg = load_config(&a.config)?;
    let sql = load_sql(&a.sql, &a.query)?;
    let q = parse(&sql, &catalog)?;
    let planned = plan_query(&catalog, &q, &cfg.planner, &cfg.cost, mode_arg(&a.mode)?)?;
    println!("{}", planned.plan.explain(&q, None));
    println!(
        "cost={:.1} est_rows={:.0} bf_count={}",
        planned.cost.total,
        planned.rows,
        planned.plan.bf_count()
    );
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let catalog = load_catalog(&a.catalog)?;
    let cfg = load_config(&a.config)?;
    let sql = load_sql(&a.sql, &a.query)?;
    let db = Database::load_dir(&a.data)?;
    let q = parse(&sql, &catalog)?;
    let planned = plan_query(&catalog, &q, &cfg.planner, &cfg.cost, mode_arg(&a.mode)?)?;
    let opts = ExecOptions {
        dop: a.dop.max(1),
        bits_per_distinct: cfg.planner.bits_per_distinct,
        ..ExecOptions::default()
    };
    let (rs, m) = execute(&planned.plan, &q, &db, &opts)?;
    println!("{}", rs.headers.join("\t"));
    for row in &rs.rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        println!("{}", cells.join("\t"));
    }
    let actuals: HashMap<usize, u64> = m.actual_rows();
    eprintln!("{}", planned.plan.explain(&q, Some(&actuals)));
    eprintln!(
        "rows={} join_input_rows={} bf_count={}",
        rs.rows.len(),
        m.join_input_rows(),
        planned.plan.bf_count()
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    if a.modes.is_empty() {
        return Err(Error::InconsistentSpec("no planner modes given".into()));
    }
    let modes: Vec<PlannerMode> = a
        .modes
        .iter()
        .map(|m| mode_arg(m))
        .collect::<Result<_>>()?;
    let fixtures = if a.all || a.fixture.is_empty() {
        bundled_fixtures()
    } else {
        a.fixture
            .iter()
            .map(|n| fixture(n))
            .collect::<Result<Vec<_>>>()?
    };
    let mut report = RunReport::default();
    for fx in &fixtures {
        fx.check()?;
        report.merge(RunReport::collect(fx, &modes)?);
    }
    report.normalize();
    if let Some(out) = &a.out {
        std::fs::write(out, report.to_csv())?;
    }
    print!("{}", report.to_markdown());
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let spec = GenSpec::load(&std::fs::read_to_string(&a.spec)?)?;
    let (catalog, db) = generate(&spec)?;
    std::fs::create_dir_all(&a.out)?;
    std::fs::write(a.out.join("catalog.json"), catalog.save())?;
    db.save_dir(&a.out)?;
    println!(
        "wrote catalog.json and {} tables to {}",
        db.table_names().len(),
        a.out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("bloomqo".to_string())
            .chain(s.split_whitespace().map(String::from))
            .collect()
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_cli(args("explain")), 2);
        assert_eq!(run_cli(args("frobnicate")), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run_cli(args("--help")), 0);
    }

    #[test]
    fn gen_explain_run_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = dir.path().join("spec.json");
        std::fs::write(
            &spec,
            r#"{
  "seed": 7,
  "tables": [
    {"name": "d", "rows": 50, "columns": [
      {"name": "id", "kind": "serial", "null_fraction": 0.0},
      {"name": "v", "kind": "int_range", "min": 0, "max": 9, "null_fraction": 0.0}
    ]},
    {"name": "f", "rows": 20000, "columns": [
      {"name": "d_id", "kind": "fk_ref", "table": "d", "column": "id", "null_fraction": 0.0}
    ]}
  ]
}"#,
        )
        .unwrap();
        let out = dir.path().join("data");
        let g = format!("gen --spec {} --out {}", spec.display(), out.display());
        assert_eq!(run_cli(args(&g)), 0);
        assert!(out.join("catalog.json").exists());
        assert!(out.join("f.tbl").exists());

        let cat = out.join("catalog.json");
        let e = format!(
            "explain --sql {} --catalog {} --mode bfcbo",
            "SELECT_PLACEHOLDER", // replaced below; spaces disallowed in args()
            cat.display()
        );
        // Build args manually because the SQL contains spaces.
        let mut ev: Vec<String> = args(&e);
        let sql_pos = ev.iter().position(|a| a == "SELECT_PLACEHOLDER").unwrap();
        ev[sql_pos] = "SELECT * FROM d, f WHERE d.id = f.d_id AND d.v = 3".into();
        assert_eq!(run_cli(ev.clone()), 0);

        ev[sql_pos] = "SELECT * FROM".into();
        assert_eq!(run_cli(ev.clone()), 2);

        let mut rv: Vec<String> = args(&format!(
            "run --sql X --catalog {} --data {} --mode bfcbo --dop 2",
            cat.display(),
            out.display()
        ));
        let x = rv.iter().position(|a| a == "X").unwrap();
        rv[x] = "SELECT * FROM d, f WHERE d.id = f.d_id AND d.v = 3".into();
        assert_eq!(run_cli(rv), 0);
    }

    #[test]
    fn bench_single_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("report.csv");
        let b = format!(
            "bench --fixture q12_pattern --modes nobf,bfcbo --out {}",
            csv.display()
        );
        assert_eq!(run_cli(args(&b)), 0);
        let text = std::fs::read_to_string(csv).unwrap();
        assert!(text.starts_with(crate::report::CSV_VERSION));
    }
}
