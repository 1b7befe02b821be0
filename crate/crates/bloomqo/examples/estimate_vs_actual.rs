//! Compares per-node cardinality estimation error (mean absolute error of
//! estimated vs executed rows) between post-hoc filter placement and
//! cost-based filter planning over the miniature warehouse fixture. Plans
//! that account for filters while estimating are consistently closer to the
//! truth.

use bloomqo::planner::PlannerMode;
use bloomqo::report::estimate_mae;
use bloomqo::workload::fixture;

fn main() {
    let fx = fixture("mini_tpch").unwrap();
    println!("{:<22} {:>12} {:>12}", "query", "bfpost MAE", "bfcbo MAE");
    let mut post_total = 0.0;
    let mut cbo_total = 0.0;
    for q in &fx.queries {
        let (post_p, _, post_m) = fx.run(q.sql, PlannerMode::BfPost).unwrap();
        let (cbo_p, _, cbo_m) = fx.run(q.sql, PlannerMode::BfCbo).unwrap();
        let post = estimate_mae(&post_p.plan, &post_m.actual_rows());
        let cbo = estimate_mae(&cbo_p.plan, &cbo_m.actual_rows());
        post_total += post;
        cbo_total += cbo;
        println!("{:<22} {post:>12.1} {cbo:>12.1}", q.label);
    }
    println!("{:<22} {post_total:>12.1} {cbo_total:>12.1}", "TOTAL");
}
