use opsteen::cli::DEFAULT_BUDGET;
use opsteen::suite::{limit_of, run_suite, DEFAULT_SEED};

fn main() {
    let budget = std::env::var("OPSTEEN_BUDGET").ok().and_then(|b| b.parse().ok()).unwrap_or(DEFAULT_BUDGET);
    let run = run_suite(DEFAULT_SEED, budget, None, true);
    let mut failed = Vec::new();
    for c in &run.report.criteria {
        let t = run.elapsed[&c.id];
        let in_time = limit_of(c.id).is_some_and(|l| t <= l);
        let pass = c.pass && in_time;
        println!("criterion {}: {}", c.id, if pass { "PASS" } else { "FAIL" });
        if !pass {
            eprintln!("  {} ({:.1}s): {:?} {:?}", c.name, t.as_secs_f64(), c.error, c.failures);
            failed.push(c.id);
        }
    }
    if run.report.criteria.len() != 17 {
        eprintln!("expected 17 criteria, got {}", run.report.criteria.len());
        std::process::exit(1);
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
