//! The monodromy condition through its leading term.
//!
//! For a Frobenius matrix A with the height and determinant conditions,
//! A† = -e·v·dA/dv - Diag(a)·A + A·Diag(a) and the leading term is
//! P_N(A) = A†·P(v)²·A⁻¹ with P(v) = v + p. Since det A = x*·P(v)³, this is
//! A†·(adj A / P(v)) / x*, and the division by P(v) is exact modulo the
//! height relations. The one-equation generators of the monodromy ideal are
//! single entries of P_N(A) at v = -p.
//!
//! `iterate_monodromy` runs the successive approximation of the monodromy
//! operator on u-series over Q(ϖ) at a numeric point and compares its value
//! at u = π with the leading term.

use std::collections::HashMap;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::kisin::{universal_matrix, KisinError, ShapeRep};
use crate::perms::Perm;
use crate::polyring::{parse_poly, Field, MPoly, ParseError, PolyIdeal, Q};
use crate::seriesalg::{ad_conjugate, ad_conjugate_inv, lambda_truncated, u_to_v, v_to_u, Coeff, QuadQ, VMatrix, VPoly};
use crate::tametype::TameType;

#[derive(Debug, Error)]
pub enum MonodromyError {
    #[error(transparent)]
    Kisin(#[from] KisinError),
    #[error("expression does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error("no Table 5 row for shape {0:?}")]
    NoRow(String),
    #[error("adj(A) is not divisible by v + p")]
    NotDivisible,
    #[error("x* vanishes at v = 0 at this point")]
    DegenerateUnit,
    #[error("the series left the descent-compatible form at truncation {0}")]
    Precision(usize),
    #[error("the point does not satisfy the relations of {0}")]
    OffVariety(String),
}

/// Numeric values of p and of the exponent data e, a > b > c.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MonoParams {
    pub p: u64,
    pub e: i64,
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl MonoParams {
    /// f = 1 specialization: e = p - 1.
    pub fn principal(p: u64, abc: [i64; 3]) -> Self {
        MonoParams { p, e: p as i64 - 1, a: abc[0], b: abc[1], c: abc[2] }
    }

    /// The exponents a^{(j)}_{s_j(k)} of a type at embedding j.
    pub fn from_type(ty: &TameType, j: usize) -> Result<Self, KisinError> {
        let t = ty.principal_triple();
        let s = t.orientation()?.s[j % t.f];
        let ex: Vec<i64> = (0..3).map(|k| t.exponent(s[k] as usize, j).try_into().expect("exponent fits")).collect();
        let e: i64 = t.e().try_into().expect("e fits");
        Ok(MonoParams { p: t.p, e, a: ex[0], b: ex[1], c: ex[2] })
    }

    pub fn diag(&self) -> [i64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn names(&self) -> HashMap<String, Q> {
        let mut m = HashMap::new();
        m.insert("p".to_string(), Q::int(self.p as i64));
        m.insert("e".to_string(), Q::int(self.e));
        m.insert("a".to_string(), Q::int(self.a));
        m.insert("b".to_string(), Q::int(self.b));
        m.insert("c".to_string(), Q::int(self.c));
        m
    }
}

/// The two specializations used by the table checks.
pub fn default_specializations() -> [MonoParams; 2] {
    [MonoParams::principal(101, [71, 40, 13]), MonoParams::principal(211, [150, 88, 31])]
}

/// A† = -e·v·dA/dv - Diag(a)·A + A·Diag(a).
pub fn a_dagger<C: Coeff>(a: &VMatrix<C>, par: &MonoParams) -> VMatrix<C> {
    let d = par.diag();
    let z = a.zero_coeff();
    VMatrix::from_fn(|r, k| {
        let x = &a.e[r][k];
        x.euler().scale(&z.cint(-par.e)).sub(&x.scale(&z.cint(d[r] - d[k])))
    })
}

fn const_matrix<C: Coeff>(m: &VMatrix<C>, at: &C) -> [[C; 3]; 3] {
    m.eval(at)
}

fn mat_mul<C: Coeff>(x: &[[C; 3]; 3], y: &[[C; 3]; 3]) -> [[C; 3]; 3] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = x[0][0].czero();
            for k in 0..3 {
                acc = acc.cadd(&x[i][k].cmul(&y[k][j]));
            }
            acc
        })
    })
}

/// The leading term at v = -p, kept as numerator and denominator:
/// P_N(A)|_{v=-p} = numerator / x*(-p).
#[derive(Clone, Debug)]
pub struct LeadingTerm {
    pub numerator: [[MPoly<Q>; 3]; 3],
    pub xstar: MPoly<Q>,
    /// A†|_{v=-p}.
    pub a_dagger: [[MPoly<Q>; 3]; 3],
    /// (adj A / P(v))|_{v=-p}.
    pub adj_quotient: [[MPoly<Q>; 3]; 3],
    /// adj(A)|_{v=-p} lies in the ideal, so the division by P(v) is exact.
    pub division_exact: bool,
    /// The congruence form (-e·v·dA/dv + A·Diag(a))·(adj A / P(v)) agrees
    /// with the numerator modulo the ideal.
    pub congruence_form_agrees: bool,
}

pub fn leading_term(rep: &ShapeRep, par: &MonoParams) -> LeadingTerm {
    let ideal = rep.ideal();
    let a = &rep.template;
    let mp = MPoly::from_i64(&rep.ring, -(par.p as i64));
    let adj = a.adj();
    let mut division_exact = true;
    let adj_quotient: [[MPoly<Q>; 3]; 3] = std::array::from_fn(|r| {
        std::array::from_fn(|c| {
            let t = adj.e[r][c].taylor_at(&mp);
            let t0 = t.first().cloned().unwrap_or_else(|| MPoly::zero(&rep.ring));
            if !ideal.contains(&t0) {
                division_exact = false;
            }
            t.get(1).cloned().unwrap_or_else(|| MPoly::zero(&rep.ring))
        })
    });
    let dag = const_matrix(&a_dagger(a, par), &mp);
    let numerator = mat_mul(&dag, &adj_quotient);
    let mut det_t = a.det().taylor_at(&mp);
    det_t.resize(4, MPoly::zero(&rep.ring));
    let xstar = det_t[3].clone();
    // Congruence form: replace A† by -e·v·dA/dv + A·Diag(a).
    let d = par.diag();
    let alt = VMatrix::from_fn(|r, k| {
        let x = &a.e[r][k];
        x.euler().scale(&MPoly::from_i64(&rep.ring, -par.e)).add(&x.scale(&MPoly::from_i64(&rep.ring, d[k])))
    });
    let alt_num = mat_mul(&const_matrix(&alt, &mp), &adj_quotient);
    let congruence_form_agrees =
        (0..3).all(|r| (0..3).all(|c| ideal.contains(&alt_num[r][c].sub(&numerator[r][c]))));
    LeadingTerm { numerator, xstar, a_dagger: dag, adj_quotient, division_exact, congruence_form_agrees }
}

// ---------------------------------------------------------------------------
// Table 5

/// One row of the monodromy table: the entry of the leading term used and
/// the polynomial generating the monodromy ideal up to a unit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonodromyRow {
    pub label: &'static str,
    /// One-based (row, column) of the entry.
    pub entry: (usize, usize),
    pub expr: &'static str,
    /// The constant part of the unit relating the entry to `expr`.
    pub sign: i64,
    /// The expression as it appears in the printed table, when it differs
    /// from `expr` by a misprint.
    pub printed: Option<&'static str>,
}

pub const TABLE5: [MonodromyRow; 8] = [
    MonodromyRow {
        label: "αβαγ",
        entry: (3, 1),
        expr: "p*c33s*((e-(a-c))*c22s*c31 + p*(e-(b-c))*c21*c32 - p*e*c22s*c31p)",
        sign: 1,
        printed: Some("p*c33s*((e-(a-c))*c22s*c31 + p*(e-(b-c))*c21*c32*c33s - p*e*c22s*c31p)"),
    },
    MonodromyRow {
        label: "βγαγ",
        entry: (3, 2),
        expr: "p*c33s*((e-(b-c))*c32*c11s - (e-(a-c))*c12*c31 - p*e*c11s*c32p)",
        sign: 1,
        printed: Some("p*c33s*((e-(b-c))*c32*c11s - (e-(a-c))*c12*c31 + p*e*c11s*c32p)"),
    },
    MonodromyRow {
        label: "βαγ",
        entry: (3, 2),
        expr: "p*c33s*((e-(a-c))*c12s*c31 - p*e*c12s*c31p - (e-(b-c))*c32*c11)",
        sign: 1,
        printed: None,
    },
    MonodromyRow {
        label: "αβγ",
        entry: (2, 1),
        expr: "p*c23s*((e-(a-c))*c32s*c21 + (b-c)*c22*c31p - p*(e-(b-c))*c32s*c21p)",
        sign: 1,
        printed: None,
    },
    MonodromyRow {
        label: "αβα",
        entry: (3, 1),
        expr: "-p*c31s*((e-(a-c))*c33*c22s - p*(a-b)*c23*c32 + p*e*c22s*c33p)",
        sign: 1,
        printed: None,
    },
    MonodromyRow {
        label: "αβ",
        entry: (3, 1),
        expr: "p*c32s*((e-(a-c))*c31*c23 + p*(e-(a-b))*c21s*c33p + p*(a-b)*c31*c23p)",
        sign: -1,
        printed: None,
    },
    MonodromyRow {
        label: "βα",
        entry: (3, 1),
        expr: "p*c31s*(-(e-(a-c))*c33*c22p + p*(a-b)*c32*c23s - p*e*c22p*c33p)",
        sign: -1,
        printed: None,
    },
    MonodromyRow {
        label: "α",
        entry: (2, 1),
        expr: "p*((e-a+c)*(c23*c32*c21s - c22p*c23*c31) - (e-a+b)*c22*c33s*c21s - e*p*c22p*c33s*c21s)",
        sign: 1,
        printed: None,
    },
];

pub fn table5_row(label: &str) -> Option<&'static MonodromyRow> {
    TABLE5.iter().find(|r| r.label == label)
}

/// A unit found by matching: κ·Π stars^{exps}, κ a p-adic unit.
#[derive(Clone, Debug, Serialize)]
pub struct MatchedUnit {
    pub constant: String,
    pub star_exponents: Vec<(String, i32)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonodromyReport {
    pub shape: String,
    pub p: u64,
    pub entry: (usize, usize),
    pub table_expression: String,
    /// Normal form of the numerator entry of P_N(A)|_{v=-p}.
    pub computed_entry: String,
    pub matched_unit: Option<MatchedUnit>,
    /// Normal form of numerator - unit·x*·expression for the matched unit,
    /// or of the numerator when no unit matched.
    pub residual_normal_form: String,
    pub division_exact: bool,
    pub congruence_form_agrees: bool,
    pub passed: bool,
}

fn star_monomial(rep: &ShapeRep, exps: &[i32]) -> MPoly<Q> {
    let mut m = MPoly::one(&rep.ring);
    for (&(s, si), &k) in rep.inverses.iter().zip(exps) {
        let v = if k >= 0 { s } else { si };
        for _ in 0..k.unsigned_abs() {
            m = m.mul(&MPoly::var(&rep.ring, v));
        }
    }
    m
}

fn exponent_vectors(n: usize, bound: i32) -> Vec<Vec<i32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for v in &out {
            for k in -bound..=bound {
                let mut w = v.clone();
                w.push(k);
                next.push(w);
            }
        }
        out = next;
    }
    out.sort_by_key(|v| v.iter().map(|x| x.unsigned_abs()).sum::<u32>());
    out
}

/// Find κ·m with m a monomial in the stars and their inverses such that
/// lhs ≡ κ·m·rhs modulo the ideal. κ is read off one distinguished
/// monomial of the normal form of lhs and must be a p-adic unit.
pub fn match_unit(rep: &ShapeRep, ideal: &PolyIdeal<Q>, lhs: &MPoly<Q>, rhs: &MPoly<Q>) -> Option<(Q, Vec<i32>)> {
    let nl = ideal.normal_form(lhs);
    let (mono, coef) = nl.terms.first()?.clone();
    for exps in exponent_vectors(rep.inverses.len(), 2) {
        let cand = ideal.normal_form(&star_monomial(rep, &exps).mul(rhs));
        let cc = cand.coeff(&mono);
        if cc.is_zero() {
            continue;
        }
        let kappa = coef.div(&cc).unwrap();
        if kappa.valuation(rep.p) != Some(0) {
            continue;
        }
        if cand.scale(&kappa) == nl {
            return Some((kappa, exps));
        }
    }
    None
}

/// Verify a Table 5 row: the designated entry of P_N(A)|_{v=-p} equals the
/// table polynomial times a unit in the stars, modulo the relations.
pub fn verify_monodromy_row(row: &MonodromyRow, par: &MonoParams) -> Result<MonodromyReport, MonodromyError> {
    verify_monodromy_expr(row.label, row.entry, row.expr, row.sign, par)
}

pub fn verify_monodromy_expr(
    label: &str,
    entry: (usize, usize),
    expr: &str,
    sign: i64,
    par: &MonoParams,
) -> Result<MonodromyReport, MonodromyError> {
    let rep = universal_matrix(label, par.p)?;
    let ideal = rep.ideal();
    let lt = leading_term(&rep, par);
    let target = parse_poly(expr, &rep.ring, &par.names())?;
    let lhs = lt.numerator[entry.0 - 1][entry.1 - 1].clone();
    let rhs = lt.xstar.mul(&target);
    let matched = match_unit(&rep, &ideal, &lhs, &rhs);
    let residual = match &matched {
        Some((k, exps)) => ideal.normal_form(&lhs.sub(&star_monomial(&rep, exps).mul(&rhs).scale(k))),
        None => ideal.normal_form(&lhs),
    };
    let matched_unit = matched.as_ref().map(|(k, exps)| MatchedUnit {
        constant: k.to_string(),
        star_exponents: rep
            .inverses
            .iter()
            .zip(exps)
            .filter(|(_, &x)| x != 0)
            .map(|(&(s, _), &x)| (rep.ring.names[s].clone(), x))
            .collect(),
    });
    let sign_ok = matched.as_ref().is_some_and(|(k, _)| *k == Q::int(sign));
    let passed = sign_ok && residual.is_zero() && lt.division_exact;
    Ok(MonodromyReport {
        shape: rep.label.clone(),
        p: par.p,
        entry,
        table_expression: expr.to_string(),
        computed_entry: format!("{}", ideal.normal_form(&lhs)),
        matched_unit,
        residual_normal_form: format!("{residual}"),
        division_exact: lt.division_exact,
        congruence_form_agrees: lt.congruence_form_agrees,
        passed,
    })
}

pub fn verify_monodromy_table(par: &MonoParams) -> Vec<Result<MonodromyReport, MonodromyError>> {
    use rayon::prelude::*;
    TABLE5.par_iter().map(|row| verify_monodromy_row(row, par)).collect()
}

// ---------------------------------------------------------------------------
// The identity shape

/// The three diagonal factors of the id-shape leading term.
/// The constant κ in numerator ≡ κ·A|_{v=-p}·Diag(Mon) for the id shape.
pub const ID_SIGN: i64 = -1;

pub const ID_MON: [&str; 3] = [
    "(e-a+c)*c22s*c33 + (e-a+b)*c22*c33s - (e-a+c)*c23*c32 + p*e*c22s*c33s",
    "(a-b)*c33s*c11 + (e-b+c)*c33*c11s - (a-b)*c13*c31 + p*e*c33s*c11s",
    "(b-c)*c11s*c22 + (a-c)*c11*c22s - (b-c)*c12*c21 + p*e*c11s*c22s",
];

#[derive(Clone, Debug, Serialize)]
pub struct IdentityShapeReport {
    pub p: u64,
    /// Entries (r, c) where numerator - κ·(A|_{v=-p}·Diag(Mon))_{rc}
    /// is not in the ideal.
    pub failing_entries: Vec<(usize, usize)>,
    /// The constant κ relating the two sides.
    pub constant: String,
    pub passed: bool,
    /// All 2×2 minors of A|_{v=-p} and of (P(v)²A⁻¹)|_{v=-p} vanish.
    pub rank_one: bool,
}

/// The identity P_N(A)|_{v=-p} = A|_{v=-p}·Diag(Mon₁, Mon₂, Mon₃) for the
/// id shape, in the same normalization as the other shapes:
/// numerator ≡ κ·A|_{v=-p}·Diag(Mon) with a single constant κ.
pub fn verify_identity_shape(par: &MonoParams, mons: &[&str; 3]) -> Result<IdentityShapeReport, MonodromyError> {
    let rep = universal_matrix("id", par.p)?;
    let ideal = rep.ideal();
    let lt = leading_term(&rep, par);
    let mp = MPoly::from_i64(&rep.ring, -(par.p as i64));
    let u = rep.template.eval(&mp);
    let names = par.names();
    let mon: Vec<MPoly<Q>> = mons.iter().map(|s| parse_poly(s, &rep.ring, &names)).collect::<Result<_, _>>()?;
    let rhs: [[MPoly<Q>; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|c| u[r][c].mul(&mon[c])));
    // Read κ off the diagonal entry (1,1).
    let nl = ideal.normal_form(&lt.numerator[0][0]);
    let nr = ideal.normal_form(&rhs[0][0]);
    let kappa = match (nl.terms.first(), nr.is_zero()) {
        (Some((m, c)), false) => {
            let cr = nr.coeff(m);
            if cr.is_zero() {
                Q::int(1)
            } else {
                c.div(&cr).unwrap()
            }
        }
        _ => Q::int(1),
    };
    let mut failing = Vec::new();
    for r in 0..3 {
        for c in 0..3 {
            if !ideal.contains(&lt.numerator[r][c].sub(&rhs[r][c].scale(&kappa))) {
                failing.push((r + 1, c + 1));
            }
        }
    }
    let rank_one = rank_one_modulo(&ideal, &u) && rank_one_modulo(&ideal, &lt.adj_quotient);
    Ok(IdentityShapeReport {
        p: par.p,
        passed: failing.is_empty() && kappa == Q::int(ID_SIGN),
        failing_entries: failing,
        constant: kappa.to_string(),
        rank_one,
    })
}

/// All 2×2 minors of a constant matrix lie in the ideal.
pub fn rank_one_modulo(ideal: &PolyIdeal<Q>, m: &[[MPoly<Q>; 3]; 3]) -> bool {
    for r1 in 0..3 {
        for r2 in r1 + 1..3 {
            for c1 in 0..3 {
                for c2 in c1 + 1..3 {
                    let d = m[r1][c1].mul(&m[r2][c2]).sub(&m[r1][c2].mul(&m[r2][c1]));
                    if !ideal.contains(&d) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// The leading term row check of the one-equation argument: for shapes
/// other than id, A|_{v=-p} and (P(v)²A⁻¹)|_{v=-p} have rank ≤ 1 modulo the
/// relations.
pub fn rank_one_check(label: &str, par: &MonoParams) -> Result<bool, MonodromyError> {
    let rep = universal_matrix(label, par.p)?;
    let ideal = rep.ideal();
    let lt = leading_term(&rep, par);
    let mp = MPoly::from_i64(&rep.ring, -(par.p as i64));
    let u = rep.template.eval(&mp);
    Ok(rank_one_modulo(&ideal, &u) && rank_one_modulo(&ideal, &lt.adj_quotient))
}

// ---------------------------------------------------------------------------
// Numeric points and the leading term by rational-function arithmetic

/// Evaluate a polynomial over Q at a point of Q(ϖ).
pub fn eval_quad(f: &MPoly<Q>, point: &[QuadQ], p: u64) -> QuadQ {
    let mut acc = QuadQ::rational(Q::int(0), p);
    for (m, c) in &f.terms {
        let mut t = QuadQ::rational(c.clone(), p);
        for (i, x) in point.iter().enumerate() {
            for _ in 0..m.e[i] {
                t = Field::mul(&t, x);
            }
        }
        acc = Field::add(&acc, &t);
    }
    acc
}

/// The template of a shape evaluated at a numeric point.
pub fn numeric_matrix(rep: &ShapeRep, point: &[QuadQ]) -> VMatrix<QuadQ> {
    let z = QuadQ::rational(Q::int(0), rep.p);
    VMatrix::from_fn(|r, c| {
        let cs = rep.template.e[r][c].c.iter().map(|f| eval_quad(f, point, rep.p)).collect();
        VPoly::new(cs, &z)
    })
}

/// Whether every relation of the shape vanishes at the point.
pub fn on_variety(rep: &ShapeRep, point: &[QuadQ]) -> bool {
    rep.ideal().gens.iter().all(|g| Field::is_zero(&eval_quad(g, point, rep.p)))
}

/// A point of the βα variety over Q(ϖ): stars and the free variables are
/// the given integers, c₁₁ = ϖu₁, c₁₃ = ϖu₂, and c₃₃, c′₂₂ solve the two
/// relations.
pub fn beta_alpha_point(p: u64, stars: [i64; 3], u: [i64; 2], free: [i64; 2]) -> Result<(ShapeRep, Vec<QuadQ>), MonodromyError> {
    let rep = universal_matrix("βα", p)?;
    let q = |x: i64| QuadQ::rational(Q::int(x), p);
    let w = QuadQ::uniformizer(p);
    let mut pt = vec![q(0); rep.ring.nvars()];
    let set = |pt: &mut Vec<QuadQ>, name: &str, x: QuadQ| pt[rep.ring.index(name).unwrap()] = x;
    let [c31s, c12s, c23s] = stars;
    set(&mut pt, "c31s", q(c31s));
    set(&mut pt, "c31si", q(c31s).inv().unwrap());
    set(&mut pt, "c12s", q(c12s));
    set(&mut pt, "c12si", q(c12s).inv().unwrap());
    set(&mut pt, "c23s", q(c23s));
    set(&mut pt, "c23si", q(c23s).inv().unwrap());
    set(&mut pt, "c32", q(free[0]));
    set(&mut pt, "c33p", q(free[1]));
    let c11 = Field::mul(&w, &q(u[0]));
    let c13 = Field::mul(&w, &q(u[1]));
    let c33 = Field::mul(&q(-(p as i64) * c31s * u[1]), &q(u[0]).inv().unwrap());
    let denom = Field::mul(&w, &q(u[0] * free[1] - u[1] * c31s));
    let c22p = Field::mul(&q(p as i64 * c23s * c12s * c31s), &denom.inv().ok_or(MonodromyError::OffVariety("βα".into()))?);
    set(&mut pt, "c11", c11);
    set(&mut pt, "c13", c13);
    set(&mut pt, "c33", c33);
    set(&mut pt, "c22p", c22p);
    if !on_variety(&rep, &pt) {
        return Err(MonodromyError::OffVariety(rep.label.clone()));
    }
    Ok((rep, pt))
}

/// P_N(A)|_{v=-p} at a numeric point, by exact polynomial division of
/// adj(A) and det(A) by v + p.
pub fn numeric_leading_term(a: &VMatrix<QuadQ>, par: &MonoParams) -> Result<[[QuadQ; 3]; 3], MonodromyError> {
    let p = par.p;
    let mp = QuadQ::rational(Q::int(-(p as i64)), p);
    let pq = QuadQ::rational(Q::int(p as i64), p);
    let adj_q = a.adj().div_linear_exact(&pq).ok_or(MonodromyError::NotDivisible)?;
    let mut det = a.det();
    for _ in 0..3 {
        let (q, r) = det.div_linear(&mp);
        if !Field::is_zero(&r) {
            return Err(MonodromyError::NotDivisible);
        }
        det = q;
    }
    let xs = det.eval(&mp).inv().ok_or(MonodromyError::DegenerateUnit)?;
    let dag = a_dagger(a, par).eval(&mp);
    let qm = adj_q.eval(&mp);
    let n = mat_mul(&dag, &qm);
    Ok(std::array::from_fn(|r| std::array::from_fn(|c| Field::mul(&n[r][c], &xs))))
}

// ---------------------------------------------------------------------------
// The iteration

#[derive(Clone, Debug, Serialize)]
pub struct IterationReport {
    pub p: u64,
    pub e: usize,
    pub truncation: usize,
    pub iterations: usize,
    /// u-adic valuation of λ(N_{i+1} - N_i) for i = 1, 2, ...; `None` when
    /// the difference vanishes at this truncation.
    pub difference_u_valuations: Vec<Option<usize>>,
    /// Required divisibility u^{p^{i-1}}, capped at the truncation.
    pub required: Vec<usize>,
    pub divisibility_ok: bool,
    /// p-adic valuation of z⁻¹·Ad⁻¹(λN_last)|_{u=π} - P_N(A)|_{v=-p}.
    pub residual_valuation: Option<Ratio<i64>>,
    /// The genericity n of the exponents, and the bound n - 1.
    pub genericity: u64,
    pub residual_ok: bool,
}

fn matrix_u_order(m: &VMatrix<QuadQ>) -> Option<usize> {
    m.e.iter().flatten().filter_map(|x| x.order()).min()
}

fn series_inverse(x: &VPoly<QuadQ>, deg: usize) -> Result<VPoly<QuadQ>, MonodromyError> {
    let inv0 = Field::inv(&x.coeff(0)).ok_or(MonodromyError::DegenerateUnit)?;
    Ok(x.inverse_series(&inv0, deg))
}

/// Run λN_1 = (φ(λ)/p)²·u·dC/du·C*, λN_{i+1} = p⁻¹·C·φ(λN_i)·C* + λN_1,
/// with C = Ad_s(u^a)(A) and C* = E(u)²C⁻¹, on u-series truncated at
/// degree `d`, and compare the last iterate at u = π with the leading term.
pub fn iterate_monodromy(
    a: &VMatrix<QuadQ>,
    ty: &TameType,
    d: usize,
    iterations: usize,
) -> Result<IterationReport, MonodromyError> {
    let par = MonoParams::from_type(ty, 0)?;
    let p = par.p;
    let e = par.e as usize;
    let s: Perm = ty.orientation().map_err(KisinError::from)?.s[0];
    let shifts = [par.a, par.b, par.c];
    let pq = QuadQ::rational(Q::int(p as i64), p);
    let inv_p = QuadQ::rational(Q::new(1, p as i64), p);
    let mp = QuadQ::rational(Q::int(-(p as i64)), p);

    // C and C* = Ad_s(u^a)(adj(A)/P(v) · x*⁻¹).
    let c = ad_conjugate(&v_to_u(a, e), s, shifts).ok_or(MonodromyError::Precision(d))?.truncate(d);
    let adj_q = a.adj().div_linear_exact(&pq).ok_or(MonodromyError::NotDivisible)?;
    let mut det = a.det();
    for _ in 0..3 {
        let (q, r) = det.div_linear(&mp);
        if !Field::is_zero(&r) {
            return Err(MonodromyError::NotDivisible);
        }
        det = q;
    }
    let vdeg = d / e + 2;
    let xinv = series_inverse(&det, vdeg)?;
    let pa_inv = adj_q.scale_trunc(&xinv, vdeg);
    let cstar = ad_conjugate(&v_to_u(&pa_inv, e), s, shifts).ok_or(MonodromyError::Precision(d))?.truncate(d);

    let lam = lambda_truncated(p, e, d + e * p as usize, 0).poly;
    let phi_lam = lam.compose_power(p as usize, d);
    let w = phi_lam.scale(&inv_p).mul_trunc(&phi_lam.scale(&inv_p), d);
    let udc = c.euler();
    let ln1 = udc.mul_trunc(&cstar, d).scale_trunc(&w, d);

    let mut iterates = vec![ln1.clone()];
    for _ in 1..iterations {
        let prev = iterates.last().unwrap();
        let next = c.mul_trunc(&prev.compose_power(p as usize, d), d).mul_trunc(&cstar, d).scale_coeff(&inv_p).add(&ln1);
        iterates.push(next);
    }
    let mut vals = Vec::new();
    let mut required = Vec::new();
    let mut ok = true;
    for i in 1..iterates.len() {
        let diff = iterates[i].sub(&iterates[i - 1]);
        let v = matrix_u_order(&diff);
        let req = (p as usize).pow(i as u32 - 1).min(d + 1);
        ok &= v.is_none_or(|v| v >= req);
        vals.push(v);
        required.push(req);
    }

    // z = -φ(λ)(π)²/p², using φ(λ)(π) = ∏_{n≥1} (1 + (-p)^{pⁿ}/p).
    let mut phl = Q::int(1);
    let mut k = p as u32;
    for _ in 0..2 {
        let term = Q(num_rational::BigRational::new(num_bigint::BigInt::from(-(p as i64)).pow(k), num_bigint::BigInt::from(p)));
        phl = Field::mul(&phl, &Field::add(&Q::int(1), &term));
        k = k.saturating_mul(p as u32);
    }
    let zval = Field::neg(&Field::mul(&Field::mul(&phl, &phl), &Q::new(1, (p * p) as i64)));
    let zinv = QuadQ::rational(zval.inv().unwrap(), p);

    let last = iterates.last().unwrap();
    let back = ad_conjugate_inv(last, s, shifts).ok_or(MonodromyError::Precision(d))?;
    // Entries were truncated at u-degree d before the shift; keep the
    // multiples of e that are complete in every entry.
    let keep = (d - (par.a - par.c) as usize) / e * e;
    let back = u_to_v(&back.truncate(keep), e).ok_or(MonodromyError::Precision(d))?;
    let at_pi = back.eval(&mp);
    let pn = numeric_leading_term(a, &par)?;
    let mut resid: Option<Ratio<i64>> = None;
    for r in 0..3 {
        for cc in 0..3 {
            let x = Field::sub(&Field::mul(&at_pi[r][cc], &zinv), &pn[r][cc]);
            if let Some(v) = x.valuation() {
                resid = Some(resid.map_or(v, |r0: Ratio<i64>| r0.min(v)));
            }
        }
    }
    let n = ty.genericity_level();
    let residual_ok = resid.is_none_or(|v| v >= Ratio::from_integer(n as i64 - 1));
    Ok(IterationReport {
        p,
        e,
        truncation: d,
        iterations,
        difference_u_valuations: vals,
        required,
        divisibility_ok: ok,
        residual_valuation: resid,
        genericity: n,
        residual_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_dagger_is_nilpotent_mod_v() {
        let par = default_specializations()[0];
        for rep in crate::weyl::ORBIT_REPS {
            let r = universal_matrix(rep, par.p).unwrap();
            let d = a_dagger(&r.template, &par);
            for i in 0..3 {
                for j in 0..=i {
                    assert!(d.e[i][j].coeff(0).is_zero(), "{rep} ({i},{j})");
                }
            }
        }
    }
}
