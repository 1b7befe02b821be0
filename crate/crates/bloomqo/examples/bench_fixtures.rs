//! Runs every bundled fixture's self-checks and prints a cross-mode report
//! (markdown to stdout). Pass a path argument to also write the versioned
//! CSV there.

use bloomqo::planner::PlannerMode;
use bloomqo::report::RunReport;
use bloomqo::workload::bundled_fixtures;

fn main() {
    let modes = [PlannerMode::NoBf, PlannerMode::BfPost, PlannerMode::BfCbo];
    let mut report = RunReport::default();
    for fx in bundled_fixtures() {
        eprint!("checking {} ... ", fx.name);
        fx.check().unwrap();
        eprintln!("ok");
        report.merge(RunReport::collect(&fx, &modes).unwrap());
    }
    report.normalize();
    print!("{}", report.to_markdown());
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, report.to_csv()).unwrap();
        eprintln!("csv written to {path}");
    }
}
