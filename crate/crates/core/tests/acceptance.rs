//! Acceptance run: one pass/fail line per criterion.
//!
//! `ACCEPTANCE_SEED` overrides the default seed; `ACCEPTANCE_ONLY=2,4`
//! restricts the run to the listed criteria.

use lame_geom::verify::run_criterion;

fn main() {
    let seed = std::env::var("ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_240_601u64);
    let only: Option<Vec<u8>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    println!("acceptance seed {seed}");
    let mut failed = Vec::new();
    for c in 1..=8u8 {
        if only.as_ref().is_some_and(|o| !o.contains(&c)) {
            continue;
        }
        let check = run_criterion(c, seed, true);
        println!("{}", check.line());
        if !check.passed {
            failed.push(c);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
