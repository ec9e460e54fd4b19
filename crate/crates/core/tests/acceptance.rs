//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fail.

use scfred_core::suite::{run_criterion, CRITERIA};

fn main() {
    let seed = std::env::var("SCFRED_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(42);
    println!("acceptance suite, seed {seed}");
    let mut failed = vec![];
    for &(id, _, _) in CRITERIA.iter() {
        let r = run_criterion(id, seed);
        println!("{}", r.line());
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all {} criteria passed", CRITERIA.len());
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
