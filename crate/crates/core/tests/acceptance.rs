//! Runs every acceptance criterion and prints one line per criterion.
//! Exits nonzero if any criterion fails. `ACCEPTANCE_ONLY=A3,A7` restricts
//! the run.

use lbfilm_core::acceptance;

fn main() {
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.split(',').map(|x| x.trim().to_uppercase()).collect());
    let mut failed = 0;
    for c in acceptance::criteria() {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == c.id)) {
            continue;
        }
        let out = c.run();
        println!("{}", out.line());
        if !out.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
