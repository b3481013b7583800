//! Acceptance run: one PASS/FAIL line per criterion, with timings.
//!
//! Two criteria compare against printed data that the computation does not
//! reproduce (two monodromy rows and the tabulated id-shape Gröbner basis).
//! Those lines print FAIL together with the checks that do pass; the test
//! asserts only on the computed statements, never on the printed data.

use std::time::{Duration, Instant};

use gl3tame::cli::{self, Bundle, Mutation, RunConfig};

struct Line {
    n: usize,
    passed: bool,
    elapsed: Duration,
    budget: Duration,
    note: String,
}

fn report(l: &Line) {
    let within = l.elapsed <= l.budget;
    println!(
        "{} criterion {:>2}  {:>7.2}s (budget {:>4}s{})  {}",
        if l.passed && within { "PASS" } else { "FAIL" },
        l.n,
        l.elapsed.as_secs_f64(),
        l.budget.as_secs(),
        if within { "" } else { ", over budget" },
        l.note
    );
}

fn only(prefixes: &[&str]) -> Vec<String> {
    prefixes.iter().map(|s| s.to_string()).collect()
}

fn failing(b: &Bundle) -> Vec<String> {
    b.failures().into_iter().map(String::from).collect()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let x = f();
    (x, t.elapsed())
}

#[test]
fn acceptance() {
    let cfg = RunConfig::default();
    cfg.validate().unwrap();
    let mut lines = Vec::new();

    // 1. Admissible set and Bruhat order.
    let (b, t) = timed(|| cli::verify_all(&cfg, &only(&["adm/"])));
    assert!(b.all_passed(), "{:?}", failing(&b));
    lines.push(Line { n: 1, passed: b.all_passed(), elapsed: t, budget: Duration::from_secs(1), note: summaries(&b) });

    // 2. Double-coset recovery over F_5 and F_7.
    let (b, t) = timed(|| cli::verify_all(&cfg, &only(&["coset/"])));
    assert!(b.all_passed(), "{:?}", failing(&b));
    lines.push(Line { n: 2, passed: true, elapsed: t, budget: Duration::from_secs(10), note: summaries(&b) });

    // 3. Height and determinant conditions at both specializations.
    let (b, t) = timed(|| cli::verify_all(&cfg, &only(&["height-det/"])));
    assert!(b.all_passed(), "{:?}", failing(&b));
    lines.push(Line { n: 3, passed: true, elapsed: t, budget: Duration::from_secs(30), note: format!("{} shape/specialization pairs", b.passed) });

    // 4. Gauge algorithm.
    let (b, t) = timed(|| cli::verify_all(&cfg, &only(&["gauge/"])));
    assert!(b.all_passed(), "{:?}", failing(&b));
    lines.push(Line { n: 4, passed: true, elapsed: t, budget: Duration::from_secs(60), note: summaries(&b) });

    // 5. Monodromy rows and the id identity. The stored rows carry two
    //    corrections; the printed forms are checked separately.
    let (b, t) = timed(|| cli::verify_all(&cfg, &only(&["monodromy/", "monodromy-printed/"])));
    let b5: Vec<_> = b.checks.iter().filter(|c| !c.name.starts_with("monodromy/iteration")).collect();
    let corrected_ok = b5.iter().filter(|c| !c.name.starts_with("monodromy-printed/")).all(|c| c.passed);
    let printed_failures: Vec<&str> = b5.iter().filter(|c| c.name.starts_with("monodromy-printed/") && !c.passed).map(|c| c.name.as_str()).collect();
    assert!(corrected_ok, "{:?}", failing(&b));
    lines.push(Line {
        n: 5,
        passed: corrected_ok && printed_failures.is_empty(),
        elapsed: t,
        budget: Duration::from_secs(120),
        note: format!(
            "corrected rows and id identity hold at both specializations; printed rows fail: {}",
            printed_failures.join(", ")
        ),
    });

    // 6. Presentations.
    let (b, t) = timed(|| cli::verify_all(&cfg, &only(&["presentation/"])));
    assert!(b.all_passed(), "{:?}", failing(&b));
    lines.push(Line { n: 6, passed: true, elapsed: t, budget: Duration::from_secs(60), note: format!("{} presentations at two specializations", b.passed) });

    // 7. Special fibers.
    let (b, t) = timed(|| cli::verify_all(&cfg, &only(&["fiber/"])));
    let structural_ok = b.checks.iter().filter(|c| !c.name.starts_with("fiber/id-printed-basis")).all(|c| c.passed);
    let printed_basis: Vec<&str> = b.checks.iter().filter(|c| c.name.starts_with("fiber/id-printed-basis") && !c.passed).map(|c| c.name.as_str()).collect();
    assert!(structural_ok, "{:?}", failing(&b));
    lines.push(Line {
        n: 7,
        passed: structural_ok && printed_basis.is_empty(),
        elapsed: t,
        budget: Duration::from_secs(120),
        note: format!(
            "squarefree initial ideal, dim 3, 6 + 6 smooth primes, 5 through the nss point hold; reduced basis differs from the tabulated one: {}",
            printed_basis.join(", ")
        ),
    });

    // 8. Serre weight tables for three (a, b, c) at p = 101.
    let (b, t) = timed(|| cli::verify_all(&cfg, &only(&["weights/"])));
    assert!(b.all_passed(), "{:?}", failing(&b));
    lines.push(Line { n: 8, passed: true, elapsed: t, budget: Duration::from_secs(10), note: summaries(&b) });

    // 9. Monodromy iteration at D = 3e, and at a truncation where the first
    //    difference is visible.
    let (res, t) = timed(|| {
        let at_3e = cli::verify_all(&cfg, &only(&["monodromy/iteration"]));
        let mut deep = cfg.clone();
        deep.trunc = Some(60);
        let at_60 = cli::verify_all(&deep, &only(&["monodromy/iteration"]));
        (at_3e, at_60)
    });
    assert!(res.0.all_passed() && res.1.all_passed());
    lines.push(Line {
        n: 9,
        passed: true,
        elapsed: t,
        budget: Duration::from_secs(120),
        note: format!("D=30: {}; D=60: {}", res.0.checks[0].summary, res.1.checks[0].summary),
    });

    // 10. Mutation sensitivity.
    let (m, t) = timed(|| mutation_run(&cfg));
    assert!(m.0, "{}", m.1);
    lines.push(Line { n: 10, passed: m.0, elapsed: t, budget: Duration::from_secs(60), note: m.1 });

    println!();
    for l in &lines {
        report(l);
    }
}

fn summaries(b: &Bundle) -> String {
    b.checks.iter().map(|c| format!("{}: {}", c.name, c.summary)).collect::<Vec<_>>().join("; ")
}

/// Flip every sign of every stored monodromy row and presentation in turn.
/// Each mutant must fail its own check while every other check of the same
/// table keeps passing (at the first specialization; the second reads the
/// same stored expression).
fn mutation_run(cfg: &RunConfig) -> (bool, String) {
    let sites = cli::mutation_sites(cfg);
    let tag = format!("p={}", cfg.specializations[0].p);
    let family = |m: &Mutation| -> Vec<String> {
        cli::checks(cfg)
            .into_iter()
            .map(|c| c.name)
            .filter(|n| n.ends_with(&tag))
            .filter(|n| match m {
                Mutation::MonodromyRow { .. } => n.starts_with("monodromy/") && !n.starts_with("monodromy/id") && !n.starts_with("monodromy/iteration"),
                Mutation::Presentation { .. } => n.starts_with("presentation/"),
            })
            .collect()
    };
    let base5 = family(&Mutation::MonodromyRow { row: 0, site: 0 });
    let base6 = family(&Mutation::Presentation { case: 0, site: (0, 0) });
    let mut bad = Vec::new();
    for (mutation, targets) in &sites {
        let target: Vec<String> = targets.iter().filter(|n| n.ends_with(&tag)).cloned().collect();
        let mut c = cfg.clone();
        c.mutation = Some(*mutation);
        let names = match mutation {
            Mutation::MonodromyRow { .. } => &base5,
            Mutation::Presentation { .. } => &base6,
        };
        let b = cli::run_named(&c, names);
        let fails = failing(&b);
        if fails != target {
            bad.push(format!("{mutation:?} → {fails:?}"));
        }
    }
    let ok = bad.is_empty();
    let note = if ok {
        format!("{} single-sign mutants, each failing exactly its own check", sites.len())
    } else {
        format!("{} of {} mutants misbehave: {}", bad.len(), sites.len(), bad.join("; "))
    };
    (ok, note)
}
