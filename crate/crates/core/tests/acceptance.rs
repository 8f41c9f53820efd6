//! Runs the twelve acceptance criteria and prints one line per criterion.

use calderon_core::suite::{Suite, SuiteConfig};
use std::time::Instant;

fn main() {
    let start = Instant::now();
    let suite = Suite::new(SuiteConfig::default());
    let mut failed = 0;
    for id in 1..=12 {
        let t = Instant::now();
        let o = suite.run(id);
        println!("{o} ({:.1}s)", t.elapsed().as_secs_f64());
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", 12 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
