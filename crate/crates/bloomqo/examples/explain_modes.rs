//! Plans the bundled three-table scenario under every planner mode and
//! prints the EXPLAIN trees side by side. The filter-blind and post-hoc
//! modes keep one join order; cost-based filter planning changes it and
//! carries the filter annotation on the large scan.

use bloomqo::frontend::parse;
use bloomqo::planner::PlannerMode;
use bloomqo::workload::fixture;

fn main() {
    let fx = fixture("running_example").unwrap();
    let sql = fx.queries[0].sql;
    let q = parse(sql, &fx.catalog).unwrap();
    println!("{sql}\n");
    for mode in [
        PlannerMode::NoBf,
        PlannerMode::BfPost,
        PlannerMode::BfCbo,
        PlannerMode::Naive,
    ] {
        let p = fx.plan(sql, mode).unwrap();
        println!(
            "=== {mode:?}: cost={:.0} est_rows={:.0} filters={}",
            p.cost.total,
            p.rows,
            p.plan.bf_count()
        );
        println!("{}", p.plan.explain(&q, None));
        if mode == PlannerMode::BfCbo {
            println!("sub-plan decisions:");
            for d in &p.decisions {
                println!("  rel={} delta={:#b} {:?}", d.rel, d.delta, d.verdict);
            }
            println!();
        }
    }
}
