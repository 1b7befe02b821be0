//! Executes the scaled-down three-table scenario under each mode against
//! generated data and compares executed join-input rows. All modes return
//! the same rows; the filter-aware plan feeds far fewer of them into joins.

use bloomqo::planner::PlannerMode;
use bloomqo::workload::fixture;

fn main() {
    let fx = fixture("running_example_scaled").unwrap();
    let sql = fx.queries[0].sql;
    println!("{sql}\n");
    let mut baseline: Option<u64> = None;
    for mode in [PlannerMode::NoBf, PlannerMode::BfPost, PlannerMode::BfCbo] {
        let (planned, rs, m) = fx.run(sql, mode).unwrap();
        let ji = m.join_input_rows();
        let base = *baseline.get_or_insert(ji.max(1));
        println!(
            "{mode:?}: result_rows={} join_input_rows={ji} (norm {:.3}) filters={}",
            rs.rows.len(),
            ji as f64 / base as f64,
            planned.plan.bf_count()
        );
        for (bf, fm) in &m.filters {
            println!(
                "  BF#{bf}: inserted={} probes={} hits={} analytic_fpr={:.4}",
                fm.inserted, fm.probes, fm.hits, fm.analytic_fpr
            );
        }
    }
}
