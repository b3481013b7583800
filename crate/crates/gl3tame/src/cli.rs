//! Run configuration, the named verification checks, and the JSON reports
//! behind the command-line tool.
//!
//! Every check is a pure function of the [`RunConfig`]; randomized checks
//! draw from generators seeded by the configured seed, so a run is
//! reproducible. Checks run on the rayon pool and are reported in their
//! definition order.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::defring::{self, FiberParams, FiberReport};
use crate::kisin::{self, check_bounds, fp_to_zpn, gauge_normalize, random_lift, support, universal_matrix, verify_height_det};
use crate::monodromy::{self, MonoParams, TABLE5};
use crate::polyring::parse::{flip_sign, sign_positions};
use crate::serreweights::{self, Family};
use crate::tametype::TameType;
use crate::weyl::{self, adm_210, bruhat_leq, subword_oracle_leq, AffineWeylElt};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("p = {0} must be a prime greater than 3")]
    BadPrime(u64),
    #[error("precision N = {0} must be at least 2")]
    BadPrecision(u32),
    #[error("the two specializations must differ")]
    SameSpecializations,
    #[error("(a, b, c) = {0:?} must satisfy a > b > c")]
    BadTriple([i64; 3]),
}

/// A single sign flipped in one stored expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mutation {
    /// Sign number `site` of the monodromy row with this index.
    MonodromyRow { row: usize, site: usize },
    /// Sign site (expression, offset) of the presentation with this index.
    Presentation { case: usize, site: (usize, usize) },
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    /// Numeric specializations for the symbolic checks (p, e = p - 1, a, b, c).
    pub specializations: [MonoParams; 2],
    /// p and (a, b, c) for the Serre weight tables; two further triples at
    /// the same p are checked alongside.
    pub weights_p: u64,
    pub weights_abc: Vec<[i64; 3]>,
    /// p-adic precision N of the gauge computations.
    pub precision: u32,
    /// u-adic truncation D of the monodromy iteration; `None` means 3e.
    pub trunc: Option<usize>,
    pub seed: u64,
    /// Random lifts per shape for the gauge check.
    pub gauge_lifts: usize,
    /// Random Iwahori sandwiches per shape and prime for coset recovery.
    pub sandwiches: usize,
    /// Residue points per presentation for the unit/non-unit dichotomy.
    pub dichotomy_samples: usize,
    pub mutation: Option<Mutation>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            specializations: monodromy::default_specializations(),
            weights_p: 101,
            weights_abc: vec![[71, 40, 13], [50, 30, 10], [90, 60, 20]],
            precision: 3,
            trunc: None,
            seed: 1,
            gauge_lifts: 20,
            sandwiches: 50,
            dichotomy_samples: 4,
            mutation: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let [s0, s1] = self.specializations;
        for s in [s0, s1] {
            if s.p <= 3 || !crate::polyring::field::is_prime(s.p) {
                return Err(ConfigError::BadPrime(s.p));
            }
            if !(s.a > s.b && s.b > s.c) {
                return Err(ConfigError::BadTriple(s.diag()));
            }
        }
        if s0 == s1 {
            return Err(ConfigError::SameSpecializations);
        }
        if self.weights_p <= 3 || !crate::polyring::field::is_prime(self.weights_p) {
            return Err(ConfigError::BadPrime(self.weights_p));
        }
        if self.precision < 2 {
            return Err(ConfigError::BadPrecision(self.precision));
        }
        Ok(())
    }

    /// Replace the first specialization (and the weights parameters).
    pub fn with_parameters(mut self, p: u64, abc: [i64; 3]) -> Self {
        self.specializations[0] = MonoParams::principal(p, abc);
        self.weights_p = p;
        self.weights_abc[0] = abc;
        self
    }

    pub fn fiber_params(&self) -> [FiberParams; 2] {
        self.specializations.map(|s| FiberParams::new(s.p, s.diag()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub group: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub summary: String,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bundle {
    pub config: RunConfig,
    pub checks: Vec<CheckResult>,
    pub passed: usize,
    pub failed: usize,
    pub seconds: f64,
}

impl Bundle {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

struct Outcome {
    passed: bool,
    summary: String,
    detail: Value,
}

impl Outcome {
    fn new(passed: bool, summary: impl Into<String>, detail: impl Serialize) -> Self {
        Outcome { passed, summary: summary.into(), detail: serde_json::to_value(detail).unwrap_or(Value::Null) }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Outcome { passed: false, summary: format!("error: {e}"), detail: Value::Null }
    }
}

type Runner = Box<dyn Fn(&RunConfig) -> Outcome + Send + Sync>;

pub struct Check {
    pub name: String,
    pub group: &'static str,
    run: Runner,
}

pub const GROUPS: [&str; 5] = ["weyl", "kisin", "monodromy", "defring", "serreweights"];

fn check(name: impl Into<String>, group: &'static str, run: impl Fn(&RunConfig) -> Outcome + Send + Sync + 'static) -> Check {
    Check { name: name.into(), group, run: Box::new(run) }
}

fn spec_tag(par: &MonoParams) -> String {
    format!("p={}", par.p)
}

/// Every check, in reporting order, for the given configuration.
pub fn checks(cfg: &RunConfig) -> Vec<Check> {
    let mut out = vec![
        check("adm/structure", "weyl", |_| adm_structure()),
        check("adm/bruhat-vs-subwords", "weyl", |_| adm_bruhat()),
    ];
    for p in [5u64, 7] {
        out.push(check(format!("coset/recovery p={p}"), "kisin", move |c| coset_recovery(p, c)));
    }
    for (si, par) in cfg.specializations.iter().enumerate() {
        for rep in weyl::ORBIT_REPS {
            out.push(check(format!("height-det/{rep} {}", spec_tag(par)), "kisin", move |c| {
                height_det(rep, c.specializations[si].p)
            }));
        }
    }
    out.push(check("gauge/lifts", "kisin", gauge_lifts));
    for (si, par) in cfg.specializations.iter().enumerate() {
        for (ri, row) in TABLE5.iter().enumerate() {
            out.push(check(format!("monodromy/{} {}", row.label, spec_tag(par)), "monodromy", move |c| {
                monodromy_row(ri, &c.specializations[si], c.mutation)
            }));
            if row.printed.is_some() {
                out.push(check(format!("monodromy-printed/{} {}", row.label, spec_tag(par)), "monodromy", move |c| {
                    monodromy_printed(ri, &c.specializations[si])
                }));
            }
        }
        out.push(check(format!("monodromy/id-identity {}", spec_tag(par)), "monodromy", move |c| {
            identity_shape(&c.specializations[si])
        }));
    }
    out.push(check("monodromy/iteration βα p=11", "monodromy", iteration));
    let cases = defring::table6();
    for (si, par) in cfg.specializations.iter().enumerate() {
        for (ci, case) in cases.iter().enumerate() {
            out.push(check(format!("presentation/{} {}", case.name(), spec_tag(par)), "defring", move |c| {
                presentation(ci, si, c)
            }));
        }
    }
    for (si, fp) in cfg.fiber_params().iter().enumerate() {
        let tag = format!("p={}", fp.p);
        out.push(check(format!("fiber/id {tag}"), "defring", move |c| fiber_id(&c.fiber_params()[si], false)));
        out.push(check(format!("fiber/id-printed-basis {tag}"), "defring", move |c| fiber_id(&c.fiber_params()[si], true)));
        out.push(check(format!("fiber/alpha_ss {tag}"), "defring", move |c| fiber("alpha_ss", &c.fiber_params()[si])));
        out.push(check(format!("fiber/alpha_nss {tag}"), "defring", move |c| fiber("alpha_nss", &c.fiber_params()[si])));
        out.push(check(format!("fiber/alpha-relations {tag}"), "defring", move |c| alpha_relations(&c.fiber_params()[si])));
    }
    out.push(check("weights/tables", "serreweights", weight_tables));
    out.push(check("weights/nss-alpha", "serreweights", nss_alpha));
    out
}

/// Run the checks whose group or name starts with one of `only` (all when
/// empty). Failures are collected; nothing aborts the run.
pub fn verify_all(cfg: &RunConfig, only: &[String]) -> Bundle {
    run_selected(cfg, |c| only.is_empty() || only.iter().any(|o| c.group == o || c.name.starts_with(o.as_str())))
}

/// Run exactly the named checks.
pub fn run_named(cfg: &RunConfig, names: &[String]) -> Bundle {
    run_selected(cfg, |c| names.contains(&c.name))
}

fn run_selected(cfg: &RunConfig, keep: impl Fn(&Check) -> bool) -> Bundle {
    let start = Instant::now();
    let selected: Vec<Check> = checks(cfg).into_iter().filter(|c| keep(c)).collect();
    let results: Vec<CheckResult> = selected
        .par_iter()
        .map(|c| {
            let t = Instant::now();
            let o = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (c.run)(cfg)))
                .unwrap_or_else(|_| Outcome::error("check panicked"));
            CheckResult {
                name: c.name.clone(),
                group: c.group,
                passed: o.passed,
                seconds: t.elapsed().as_secs_f64(),
                summary: o.summary,
                detail: o.detail,
            }
        })
        .collect();
    let passed = results.iter().filter(|r| r.passed).count();
    Bundle {
        config: cfg.clone(),
        failed: results.len() - passed,
        passed,
        checks: results,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Every single-sign mutation of the stored monodromy rows and
/// presentations, with the names of the checks (one per specialization)
/// that read the mutated expression.
pub fn mutation_sites(cfg: &RunConfig) -> Vec<(Mutation, Vec<String>)> {
    let tags: Vec<String> = cfg.specializations.iter().map(spec_tag).collect();
    let names = |stem: String| tags.iter().map(|t| format!("{stem} {t}")).collect::<Vec<_>>();
    let mut out = Vec::new();
    for (row, r) in TABLE5.iter().enumerate() {
        for site in 0..sign_positions(r.expr).len() {
            out.push((Mutation::MonodromyRow { row, site }, names(format!("monodromy/{}", r.label))));
        }
    }
    for (case, c) in defring::table6().iter().enumerate() {
        for site in c.sign_sites() {
            out.push((Mutation::Presentation { case, site }, names(format!("presentation/{}", c.name()))));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Individual checks

fn adm_structure() -> Outcome {
    let adm = adm_210();
    let dist = adm.length_distribution();
    let shadows = adm.entries.iter().filter(|e| e.shadow).count();
    let closed = adm.entries.iter().all(|e| adm.contains(&e.element.delta_conjugate()));
    let rows = [dist[4], dist[3] - shadows, shadows, dist[2], dist[1], dist[0]];
    let passed = adm.len() == 25 && rows == [6, 6, 3, 6, 3, 1] && adm.orbit_count() == 9 && closed;
    Outcome::new(
        passed,
        format!("{} elements, rows {:?}, {} δ-orbits, δ-stable {}", adm.len(), rows, adm.orbit_count(), closed),
        json!({ "elements": adm.len(), "rows": rows, "orbits": adm.orbit_count(), "delta_stable": closed }),
    )
}

fn adm_bruhat() -> Outcome {
    let adm = adm_210();
    let mut mismatches = Vec::new();
    let mut n = 0;
    for x in &adm.entries {
        for y in &adm.entries {
            n += 1;
            match bruhat_leq(&x.element, &y.element) {
                Ok(b) if b == subword_oracle_leq(&x.element, &y.element) => {}
                _ => mismatches.push(format!("{} ≤ {}", x.label, y.label)),
            }
        }
    }
    Outcome::new(mismatches.is_empty(), format!("{n} pairs, {} mismatches", mismatches.len()), json!({ "pairs": n, "mismatches": mismatches }))
}

fn coset_recovery(p: u64, cfg: &RunConfig) -> Outcome {
    let mut rng = crate::rng(cfg.seed ^ p);
    let mut failures = Vec::new();
    let mut total = 0;
    for e in adm_210().entries {
        for _ in 0..cfg.sandwiches {
            total += 1;
            match kisin::sandwich_round_trip(&e.element, p, &mut rng) {
                Ok(w) if w == e.element => {}
                other => failures.push(format!("{}: {:?}", e.label, other.map(|w| kisin::shape_label(&w)))),
            }
        }
    }
    Outcome::new(failures.is_empty(), format!("{total} sandwiches, {} wrong", failures.len()), json!({ "total": total, "failures": failures }))
}

fn height_det(label: &str, p: u64) -> Outcome {
    match universal_matrix(label, p) {
        Ok(rep) => {
            let r = verify_height_det(&rep);
            let bad = r.minors.iter().filter(|m| !m.member).count();
            Outcome::new(r.passed, format!("{bad} minors outside the ideal, det unit residue {}", r.det_unit_residue), r)
        }
        Err(e) => Outcome::error(e),
    }
}

/// The total defect strictly increases from pass to pass; a final `None`
/// stands for a vanished error term.
fn strictly_increasing(h: &[Option<u32>]) -> bool {
    h.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => b > a,
        (Some(_), None) => true,
        (None, _) => false,
    })
}

#[derive(Serialize)]
struct GaugeRow {
    shape: String,
    lifts: usize,
    bounds_ok: usize,
    increasing: usize,
    replay_ok: usize,
    max_passes: usize,
    errors: Vec<String>,
}

/// Gauge type for the normalization check: (7, 4, 1) at p = 11, which is
/// 3-generic.
pub fn gauge_type() -> TameType {
    TameType::principal(11, [7, 4, 1]).expect("valid type")
}

const GAUGE_TRUNC: usize = 12;

fn gauge_lifts(cfg: &RunConfig) -> Outcome {
    let ty = gauge_type();
    let entries: Vec<_> = adm_210().entries.into_iter().filter(|e| e.length >= 2).collect();
    let rows: Vec<GaugeRow> = entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut rng = crate::rng(cfg.seed.wrapping_mul(1000).wrapping_add(i as u64));
            let mut row = GaugeRow { shape: e.label.clone(), lifts: 0, bounds_ok: 0, increasing: 0, replay_ok: 0, max_passes: 0, errors: vec![] };
            let rep = match universal_matrix(&e.label, ty.p) {
                Ok(r) => r,
                Err(err) => {
                    row.errors.push(err.to_string());
                    return row;
                }
            };
            for _ in 0..cfg.gauge_lifts {
                row.lifts += 1;
                let abar = rep.table2_rep(&mut rng);
                let a = random_lift(&abar, cfg.precision, 4, &mut rng);
                match gauge_normalize(std::slice::from_ref(&a), &[e.element], &ty, cfg.precision, GAUGE_TRUNC) {
                    Ok((out, ctx)) => {
                        let reference = support(&fp_to_zpn(&abar, 1));
                        row.bounds_ok += check_bounds(&out.matrices[0], &ctx.bounds[0], Some(&reference)).ok as usize;
                        row.increasing += strictly_increasing(&out.defect_history) as usize;
                        row.max_passes = row.max_passes.max(out.passes);
                        match ctx.replay(&[a], &out.log, &out.matrices) {
                            Ok(r) if r.reproduces && r.in_iwahori => row.replay_ok += 1,
                            Ok(_) => {}
                            Err(err) => row.errors.push(err.to_string()),
                        }
                    }
                    Err(err) => row.errors.push(err.to_string()),
                }
            }
            row
        })
        .collect();
    let passed = rows.iter().all(|r| r.errors.is_empty() && r.bounds_ok == r.lifts && r.increasing == r.lifts && r.replay_ok == r.lifts);
    let total: usize = rows.iter().map(|r| r.lifts).sum();
    let good: usize = rows.iter().map(|r| r.bounds_ok.min(r.increasing).min(r.replay_ok)).sum();
    Outcome::new(passed, format!("{good}/{total} lifts normalized over Z/{}^{}", ty.p, cfg.precision), rows)
}

/// The stored expression of a monodromy row, with a sign flipped when the
/// mutation targets it.
pub fn monodromy_expression(row: usize, mutation: Option<Mutation>) -> String {
    let expr = TABLE5[row].expr;
    match mutation {
        Some(Mutation::MonodromyRow { row: r, site }) if r == row => match sign_positions(expr).get(site) {
            Some(&pos) => flip_sign(expr, pos),
            None => expr.to_string(),
        },
        _ => expr.to_string(),
    }
}

fn monodromy_row(row: usize, par: &MonoParams, mutation: Option<Mutation>) -> Outcome {
    let r = &TABLE5[row];
    let expr = monodromy_expression(row, mutation);
    match monodromy::verify_monodromy_expr(r.label, r.entry, &expr, r.sign, par) {
        Ok(rep) => Outcome::new(rep.passed, format!("residual {}", rep.residual_normal_form), rep),
        Err(e) => Outcome::error(e),
    }
}

fn monodromy_printed(row: usize, par: &MonoParams) -> Outcome {
    let r = &TABLE5[row];
    let printed = r.printed.expect("row has a printed variant");
    match monodromy::verify_monodromy_expr(r.label, r.entry, printed, r.sign, par) {
        Ok(rep) => Outcome::new(rep.passed, format!("printed expression, residual {}", rep.residual_normal_form), rep),
        Err(e) => Outcome::error(e),
    }
}

fn identity_shape(par: &MonoParams) -> Outcome {
    match monodromy::verify_identity_shape(par, &monodromy::ID_MON) {
        Ok(r) => Outcome::new(r.passed, format!("constant {}, failing entries {:?}", r.constant, r.failing_entries), r),
        Err(e) => Outcome::error(e),
    }
}

fn iteration(cfg: &RunConfig) -> Outcome {
    let ty = gauge_type();
    let e = ty.p as usize - 1;
    let d = cfg.trunc.unwrap_or(3 * e);
    let run = || -> Result<monodromy::IterationReport, monodromy::MonodromyError> {
        let (rep, pt) = monodromy::beta_alpha_point(ty.p, [2, 3, 5], [1, 2], [4, 0])?;
        let a = monodromy::numeric_matrix(&rep, &pt);
        monodromy::iterate_monodromy(&a, &ty, d, 4)
    };
    match run() {
        Ok(r) => Outcome::new(
            r.divisibility_ok && r.residual_ok,
            format!(
                "u-valuations {:?} (need {:?}), residual valuation {} (need ≥ {})",
                r.difference_u_valuations,
                r.required,
                r.residual_valuation.map_or("∞".to_string(), |v| v.to_string()),
                r.genericity as i64 - 1
            ),
            r,
        ),
        Err(e) => Outcome::error(e),
    }
}

/// The presentation with the configured mutation applied, if it targets it.
pub fn presentation_case(index: usize, mutation: Option<Mutation>) -> defring::PresentationCase {
    let case = defring::table6().swap_remove(index);
    match mutation {
        Some(Mutation::Presentation { case: c, site }) if c == index => case.with_flip(site),
        _ => case,
    }
}

fn presentation(index: usize, spec: usize, cfg: &RunConfig) -> Outcome {
    let case = presentation_case(index, cfg.mutation);
    let mut rng = crate::rng(cfg.seed.wrapping_add(100 + index as u64));
    match defring::verify_presentation(&case, &cfg.specializations[spec], cfg.dichotomy_samples, &mut rng) {
        Ok(r) => Outcome::new(
            r.passed,
            format!("{} forward and {} reverse failures, variables match {}", r.forward_failures.len(), r.reverse_failures.len(), r.variables_match),
            r,
        ),
        Err(e) => Outcome::error(e),
    }
}

fn fiber_id(fp: &FiberParams, printed_basis: bool) -> Outcome {
    let r: FiberReport = match defring::analyze_id_fiber(fp) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    if printed_basis {
        return Outcome::new(
            r.groebner_matches,
            format!("computed basis has {} elements, {} not tabulated", r.groebner_basis.len(), r.basis_not_listed.len()),
            json!({ "groebner_basis": r.groebner_basis, "basis_not_listed": r.basis_not_listed, "listed_outside_ideal": r.listed_outside_ideal }),
        );
    }
    let smooth = r.components.iter().all(|c| c.formally_smooth && c.contains_ideal && c.dimension == 3);
    let passed = r.squarefree_initial && r.dimension == 3 && r.intersection_equals_ideal && r.components.len() == 6 && smooth && r.multiplicity == 6;
    Outcome::new(
        passed,
        format!("squarefree {}, dim {}, {} smooth components, multiplicity {}", r.squarefree_initial, r.dimension, r.components.len(), r.multiplicity),
        r,
    )
}

fn fiber(which: &str, fp: &FiberParams) -> Outcome {
    match defring::analyze_special_fiber(which, fp) {
        Ok(r) => Outcome::new(r.passed, format!("dim {}, {} components, multiplicity {}", r.dimension, r.components.len(), r.multiplicity), r),
        Err(e) => Outcome::error(e),
    }
}

fn alpha_relations(fp: &FiberParams) -> Outcome {
    match defring::derive_alpha_relations(fp, [2, 3, 5]) {
        Ok(r) => Outcome::new(r.passed, format!("{} relations re-derived", r.relations.len()), r),
        Err(e) => Outcome::error(e),
    }
}

fn weight_tables(cfg: &RunConfig) -> Outcome {
    match serreweights::verify_serre_tables(cfg.weights_p, &cfg.weights_abc) {
        Ok(r) => Outcome::new(
            r.passed,
            format!(
                "weight rows {}, JH rows {}, type rows {}, census {}",
                r.weight_rows_ok, r.jh_rows_ok, r.type_rows_ok, r.census_ok
            ),
            r,
        ),
        Err(e) => Outcome::error(e),
    }
}

fn nss_alpha(cfg: &RunConfig) -> Outcome {
    let mut rng = crate::rng(cfg.seed);
    match serreweights::verify_nss_alpha_identity(cfg.weights_p, cfg.weights_abc[0], &mut rng) {
        Ok(r) => Outcome::new(
            r.passed,
            format!("shape {:?}, printed intersection reproduced {}", r.shape_of_a, r.type_intersection_matches_printed),
            r,
        ),
        Err(e) => Outcome::error(e),
    }
}

// ---------------------------------------------------------------------------
// Single-purpose commands

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Weyl(#[from] weyl::WeylError),
    #[error(transparent)]
    Type(#[from] crate::tametype::TypeError),
    #[error(transparent)]
    Kisin(#[from] kisin::KisinError),
    #[error(transparent)]
    Serre(#[from] serreweights::SerreError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `adm list`: every admissible element with its word and orbit.
pub fn adm_list() -> Value {
    let adm = adm_210();
    Value::Array(
        adm.entries
            .iter()
            .map(|e| {
                json!({
                    "word": e.label,
                    "length": e.length,
                    "perm": e.element.perm,
                    "exps": e.element.exps,
                    "orbit": e.orbit,
                    "shadow": e.shadow,
                })
            })
            .collect(),
    )
}

/// `adm orbits`: the δ-orbits as lists of words.
pub fn adm_orbits() -> Value {
    let adm = adm_210();
    let mut orbits: Vec<Vec<String>> = vec![Vec::new(); adm.orbit_count()];
    for e in &adm.entries {
        orbits[e.orbit].push(e.label.clone());
    }
    json!(orbits)
}

/// `type info`: genericity, orientation and base change.
pub fn type_info(p: u64, f: usize, niveau: u32, a: [Vec<u64>; 3]) -> Result<Value, CommandError> {
    if a.iter().any(|x| x.len() != f) {
        return Err(CommandError::Usage(format!("each of --a1 --a2 --a3 needs {f} entries")));
    }
    let t = TameType::new(p, niveau, a)?;
    let orientation = t.orientation().ok().map(|o| o.s.iter().map(|s| crate::perms::cycle_string(*s)).collect::<Vec<_>>());
    let bc = t.base_change();
    Ok(json!({
        "type": t,
        "genericity": t.genericity_level(),
        "weakly_generic": t.is_weakly_generic(),
        "orientation": orientation,
        "base_change": bc,
    }))
}

#[derive(serde::Deserialize)]
struct MatrixFile {
    p: u64,
    #[serde(default)]
    shift: i32,
    /// entries[r][c] lists the coefficients of v^0, v^1, ...
    entries: Vec<Vec<Vec<i64>>>,
}

/// `shape coset`: the double coset of a matrix over F_p((v)).
pub fn shape_coset(json_text: &str) -> Result<Value, CommandError> {
    use crate::polyring::Fp;
    use crate::seriesalg::{VMatrix, VPoly};
    let m: MatrixFile = serde_json::from_str(json_text)?;
    if m.entries.len() != 3 || m.entries.iter().any(|r| r.len() != 3) {
        return Err(CommandError::Usage("entries must be a 3×3 array of coefficient lists".into()));
    }
    let z = Fp::new(0, m.p);
    let mat = VMatrix::from_fn(|r, c| VPoly::new(m.entries[r][c].iter().map(|&x| Fp::from_signed(x, m.p)).collect(), &z));
    let w = kisin::double_coset_of(&mat, m.shift)?;
    Ok(json!({ "shape": kisin::shape_label(&w), "perm": w.perm, "exps": w.exps }))
}

/// `weights wq`: obvious and shadow weights of a family at (p, a, b, c).
pub fn weights_wq(family: &str, p: u64, abc: [i64; 3]) -> Result<Value, CommandError> {
    let fam = parse_family(family)?;
    let rho = fam.rho(p, abc);
    let ws = serreweights::w_question(&rho)?;
    Ok(json!({
        "rho": rho.inertial_label(),
        "obvious": ws.obvious.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "shadow": ws.shadow.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
    }))
}

/// Command-line names of the families, in the order of `Family::ALL`.
pub const FAMILY_NAMES: [&str; 4] = ["split", "mixed-a", "irreducible", "mixed-b"];

pub fn parse_family(s: &str) -> Result<Family, CommandError> {
    FAMILY_NAMES
        .iter()
        .position(|&n| n == s)
        .map(|i| Family::ALL[i])
        .ok_or_else(|| CommandError::Usage(format!("family must be one of {FAMILY_NAMES:?}")))
}

/// The Deligne–Lusztig parameter of the niveau-n type with digits (a, b, c).
pub fn dl_parameter(p: u64, niveau: u32, abc: [i64; 3]) -> Result<serreweights::TorusData, CommandError> {
    if abc.iter().any(|&x| x < 0) {
        return Err(CommandError::Usage("type digits must be non-negative".into()));
    }
    let t = TameType::with_niveau(p, niveau, abc.map(|x| x as u64))?;
    Ok(serreweights::TorusData::of_type(&t)?)
}

/// `weights jh`: Jordan–Hölder constituents of σ(τ).
pub fn weights_jh(p: u64, niveau: u32, abc: [i64; 3]) -> Result<Value, CommandError> {
    let sigma = dl_parameter(p, niveau, abc)?;
    let jh = serreweights::jh_factors(&sigma)?;
    Ok(json!({
        "sigma": sigma.dl_label(),
        "via_dual": jh.via_dual,
        "weights": jh.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
    }))
}

/// `weights intersect`: JH(σ(τ)) ∩ W?(ρ̄) for a family.
pub fn weights_intersect(family: &str, p: u64, abc: [i64; 3], niveau: u32, type_abc: [i64; 3]) -> Result<Value, CommandError> {
    let rho = parse_family(family)?.rho(p, abc);
    let sigma = dl_parameter(p, niveau, type_abc)?;
    let inter = serreweights::intersect_weights(&rho, &sigma)?;
    let shape = serreweights::unique_shape(&rho, &sigma).ok().and_then(|w| kisin::shape_label(&w));
    Ok(json!({
        "rho": rho.inertial_label(),
        "sigma": sigma.dl_label(),
        "intersection": inter.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "shape": shape,
    }))
}

/// `weights shape-of`: the shape w(ρ̄, τ), or an error when there is none.
pub fn weights_shape_of(family: &str, p: u64, abc: [i64; 3], niveau: u32, type_abc: [i64; 3]) -> Result<Value, CommandError> {
    let rho = parse_family(family)?.rho(p, abc);
    let sigma = dl_parameter(p, niveau, type_abc)?;
    let w: AffineWeylElt = serreweights::unique_shape(&rho, &sigma)?;
    Ok(json!({ "rho": rho.inertial_label(), "sigma": sigma.dl_label(), "shape": kisin::shape_label(&w) }))
}

/// `monodromy verify --shape`: one row at both specializations.
pub fn monodromy_verify(shape: &str, cfg: &RunConfig) -> Result<Value, CommandError> {
    if shape == "id" {
        let reps: Vec<Value> = cfg.specializations.iter().map(|p| identity_shape(p).detail).collect();
        return Ok(json!(reps));
    }
    let row = TABLE5
        .iter()
        .position(|r| r.label == shape)
        .ok_or_else(|| CommandError::Usage(format!("no monodromy row for {shape}")))?;
    Ok(json!(cfg.specializations.iter().map(|p| monodromy_row(row, p, None).detail).collect::<Vec<_>>()))
}

/// `monodromy iterate`: the βα iteration.
pub fn monodromy_iterate(cfg: &RunConfig) -> Value {
    let o = iteration(cfg);
    json!({ "passed": o.passed, "summary": o.summary, "report": o.detail })
}

/// `defring verify --shape`: the presentations of one shape.
pub fn defring_verify(shape: &str, cfg: &RunConfig) -> Result<Value, CommandError> {
    let cases = defring::table6();
    let idx: Vec<usize> = (0..cases.len()).filter(|&i| cases[i].shape == shape).collect();
    if idx.is_empty() {
        return Err(CommandError::Usage(format!("no presentation for {shape}")));
    }
    let mut out = Vec::new();
    for &i in &idx {
        for s in 0..2 {
            out.push(presentation(i, s, cfg).detail);
        }
    }
    Ok(json!(out))
}

/// `defring fiber --which`: one special fiber at the first specialization.
pub fn defring_fiber(which: &str, cfg: &RunConfig) -> Result<Value, CommandError> {
    let fp = cfg.fiber_params()[0];
    if !["id", "alpha_ss", "alpha_nss"].contains(&which) {
        return Err(CommandError::Usage("--which must be id, alpha_ss or alpha_nss".into()));
    }
    let o = fiber(which, &fp);
    Ok(json!({ "passed": o.passed, "summary": o.summary, "report": o.detail }))
}
