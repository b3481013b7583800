//! Run every check with the default configuration and summarize.

use gl3tame::cli::{verify_all, RunConfig};

fn main() {
    let b = verify_all(&RunConfig::default(), &[]);
    for c in &b.checks {
        println!("{} {:<50} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.summary);
    }
    println!("{} passed, {} failed in {:.1}s", b.passed, b.failed, b.seconds);
}
