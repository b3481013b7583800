//! Sparse multivariate polynomials over a `Field`, attached to a ring that
//! fixes the variable names and the monomial order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::field::Field;

/// Maximum number of variables in a ring.
pub const MAXV: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mono {
    pub e: [u16; MAXV],
    pub deg: u32,
}

impl Mono {
    pub const ONE: Mono = Mono { e: [0; MAXV], deg: 0 };

    pub fn var(i: usize) -> Mono {
        let mut m = Mono::ONE;
        m.e[i] = 1;
        m.deg = 1;
        m
    }

    pub fn from_exps(exps: &[u16]) -> Mono {
        let mut m = Mono::ONE;
        for (i, &x) in exps.iter().enumerate() {
            m.e[i] = x;
            m.deg += x as u32;
        }
        m
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let mut r = *self;
        for i in 0..MAXV {
            r.e[i] = r.e[i].checked_add(o.e[i]).expect("exponent overflow");
        }
        r.deg += o.deg;
        r
    }

    pub fn divides(&self, o: &Mono) -> bool {
        self.deg <= o.deg && (0..MAXV).all(|i| self.e[i] <= o.e[i])
    }

    /// `o / self`, assuming divisibility.
    pub fn quotient_of(&self, o: &Mono) -> Mono {
        let mut r = *o;
        for i in 0..MAXV {
            r.e[i] -= self.e[i];
        }
        r.deg -= self.deg;
        r
    }

    pub fn lcm(&self, o: &Mono) -> Mono {
        let mut r = Mono::ONE;
        for i in 0..MAXV {
            r.e[i] = self.e[i].max(o.e[i]);
            r.deg += r.e[i] as u32;
        }
        r
    }

    pub fn coprime(&self, o: &Mono) -> bool {
        (0..MAXV).all(|i| self.e[i] == 0 || o.e[i] == 0)
    }

    pub fn is_squarefree(&self) -> bool {
        self.e.iter().all(|&x| x <= 1)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..MAXV).filter(|&i| self.e[i] > 0).collect()
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nz: Vec<(usize, u16)> = (0..MAXV).filter(|&i| self.e[i] > 0).map(|i| (i, self.e[i])).collect();
        write!(f, "{:?}", nz)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonoOrder {
    Lex,
    GrLex,
    GrevLex,
    /// Elimination order: grevlex on the first `k` variables, ties broken by
    /// grevlex on the rest.
    Block(usize),
}

fn grevlex_range(a: &Mono, b: &Mono, lo: usize, hi: usize) -> Ordering {
    let da: u32 = (lo..hi).map(|i| a.e[i] as u32).sum();
    let db: u32 = (lo..hi).map(|i| b.e[i] as u32).sum();
    if da != db {
        return da.cmp(&db);
    }
    for i in (lo..hi).rev() {
        if a.e[i] != b.e[i] {
            return b.e[i].cmp(&a.e[i]);
        }
    }
    Ordering::Equal
}

impl MonoOrder {
    pub fn cmp(&self, a: &Mono, b: &Mono) -> Ordering {
        match self {
            MonoOrder::Lex => a.e.cmp(&b.e),
            MonoOrder::GrLex => a.deg.cmp(&b.deg).then_with(|| a.e.cmp(&b.e)),
            MonoOrder::GrevLex => {
                if a.deg != b.deg {
                    return a.deg.cmp(&b.deg);
                }
                for i in (0..MAXV).rev() {
                    if a.e[i] != b.e[i] {
                        return b.e[i].cmp(&a.e[i]);
                    }
                }
                Ordering::Equal
            }
            MonoOrder::Block(k) => grevlex_range(a, b, 0, *k).then_with(|| grevlex_range(a, b, *k, MAXV)),
        }
    }
}

/// Variable names, monomial order and coefficient context.
#[derive(Debug)]
pub struct Ring<F: Field> {
    pub names: Vec<String>,
    pub order: MonoOrder,
    pub ctx: F::Ctx,
}

impl<F: Field> Ring<F> {
    pub fn new(names: &[&str], order: MonoOrder, ctx: F::Ctx) -> Arc<Ring<F>> {
        Self::from_names(names.iter().map(|s| s.to_string()).collect(), order, ctx)
    }

    pub fn from_names(names: Vec<String>, order: MonoOrder, ctx: F::Ctx) -> Arc<Ring<F>> {
        assert!(names.len() <= MAXV, "too many variables: {}", names.len());
        for (i, n) in names.iter().enumerate() {
            assert!(!names[..i].contains(n), "duplicate variable {n}");
        }
        Arc::new(Ring { names, order, ctx })
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn same(&self, o: &Ring<F>) -> bool {
        self.names == o.names && self.order == o.order && self.ctx == o.ctx
    }
}

/// A polynomial; terms are kept sorted in strictly decreasing monomial
/// order with no zero coefficients.
#[derive(Clone)]
pub struct MPoly<F: Field> {
    pub ring: Arc<Ring<F>>,
    pub terms: Vec<(Mono, F)>,
}

impl<F: Field> PartialEq for MPoly<F> {
    fn eq(&self, o: &Self) -> bool {
        self.terms.len() == o.terms.len() && self.terms.iter().zip(o.terms.iter()).all(|(a, b)| a.0 == b.0 && a.1 == b.1)
    }
}

impl<F: Field> MPoly<F> {
    pub fn zero(ring: &Arc<Ring<F>>) -> Self {
        MPoly { ring: ring.clone(), terms: Vec::new() }
    }

    pub fn constant(ring: &Arc<Ring<F>>, c: F) -> Self {
        if c.is_zero() {
            Self::zero(ring)
        } else {
            MPoly { ring: ring.clone(), terms: vec![(Mono::ONE, c)] }
        }
    }

    pub fn from_i64(ring: &Arc<Ring<F>>, n: i64) -> Self {
        Self::constant(ring, F::from_i64(&ring.ctx, n))
    }

    pub fn one(ring: &Arc<Ring<F>>) -> Self {
        Self::from_i64(ring, 1)
    }

    pub fn var(ring: &Arc<Ring<F>>, i: usize) -> Self {
        assert!(i < ring.nvars());
        MPoly { ring: ring.clone(), terms: vec![(Mono::var(i), F::one(&ring.ctx))] }
    }

    pub fn var_named(ring: &Arc<Ring<F>>, name: &str) -> Self {
        let i = ring.index(name).unwrap_or_else(|| panic!("unknown variable {name}"));
        Self::var(ring, i)
    }

    pub fn monomial(ring: &Arc<Ring<F>>, m: Mono, c: F) -> Self {
        if c.is_zero() {
            Self::zero(ring)
        } else {
            MPoly { ring: ring.clone(), terms: vec![(m, c)] }
        }
    }

    /// Build from arbitrary terms, merging duplicates.
    pub fn from_terms(ring: &Arc<Ring<F>>, terms: Vec<(Mono, F)>) -> Self {
        let ord = ring.order;
        let mut t = terms;
        t.sort_by(|a, b| ord.cmp(&b.0, &a.0));
        let mut out: Vec<(Mono, F)> = Vec::with_capacity(t.len());
        for (m, c) in t {
            if let Some(last) = out.last_mut() {
                if last.0 == m {
                    last.1 = last.1.add(&c);
                    continue;
                }
            }
            out.push((m, c));
        }
        out.retain(|(_, c)| !c.is_zero());
        MPoly { ring: ring.clone(), terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.deg == 0)
    }

    pub fn constant_term(&self) -> F {
        self.terms
            .iter()
            .find(|(m, _)| m.deg == 0)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(|| F::zero(&self.ring.ctx))
    }

    pub fn lm(&self) -> Option<&Mono> {
        self.terms.first().map(|t| &t.0)
    }

    pub fn lc(&self) -> Option<&F> {
        self.terms.first().map(|t| &t.1)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0.deg).max().unwrap_or(0)
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    fn check(&self, o: &Self) {
        debug_assert!(Arc::ptr_eq(&self.ring, &o.ring) || self.ring.same(&o.ring), "ring mismatch");
    }

    fn merge(&self, o: &Self, negate: bool) -> Self {
        self.check(o);
        let ord = self.ring.order;
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &o.terms;
        while i < a.len() && j < b.len() {
            match ord.cmp(&a[i].0, &b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate { b[j].1.neg() } else { b[j].1.clone() };
                    out.push((b[j].0, c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { a[i].1.sub(&b[j].1) } else { a[i].1.add(&b[j].1) };
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        for t in &b[j..] {
            let c = if negate { t.1.neg() } else { t.1.clone() };
            out.push((t.0, c));
        }
        MPoly { ring: self.ring.clone(), terms: out }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.merge(o, false)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.merge(o, true)
    }

    pub fn neg(&self) -> Self {
        MPoly { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, c)| (*m, c.neg())).collect() }
    }

    pub fn scale(&self, c: &F) -> Self {
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        MPoly { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, x)| (*m, x.mul(c))).collect() }
    }

    /// Multiply by `c · m`.
    pub fn mul_term(&self, m: &Mono, c: &F) -> Self {
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        MPoly { ring: self.ring.clone(), terms: self.terms.iter().map(|(x, y)| (x.mul(m), y.mul(c))).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        if self.is_zero() || o.is_zero() {
            return Self::zero(&self.ring);
        }
        let (small, big) = if self.terms.len() <= o.terms.len() { (self, o) } else { (o, self) };
        if small.terms.len() == 1 {
            return big.mul_term(&small.terms[0].0, &small.terms[0].1);
        }
        let mut acc: Vec<(Mono, F)> = Vec::with_capacity(small.terms.len() * big.terms.len());
        for (m1, c1) in &small.terms {
            for (m2, c2) in &big.terms {
                acc.push((m1.mul(m2), c1.mul(c2)));
            }
        }
        Self::from_terms(&self.ring, acc)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(&self.ring);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn make_monic(&self) -> Self {
        match self.lc() {
            None => self.clone(),
            Some(c) if c.is_one() => self.clone(),
            Some(c) => self.scale(&c.inv().expect("nonzero leading coefficient")),
        }
    }

    /// Coefficient of an exact monomial.
    pub fn coeff(&self, m: &Mono) -> F {
        self.terms
            .iter()
            .find(|(x, _)| x == m)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(|| F::zero(&self.ring.ctx))
    }

    pub fn degree_in(&self, var: usize) -> u16 {
        self.terms.iter().map(|(m, _)| m.e[var]).max().unwrap_or(0)
    }

    pub fn uses_var(&self, var: usize) -> bool {
        self.terms.iter().any(|(m, _)| m.e[var] > 0)
    }

    /// Evaluate at a point given by one value per variable.
    pub fn eval(&self, point: &[F]) -> F {
        let ctx = &self.ring.ctx;
        let mut acc = F::zero(ctx);
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for i in 0..self.ring.nvars() {
                for _ in 0..m.e[i] {
                    t = t.mul(&point[i]);
                }
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Substitute polynomials (in a possibly different ring) for every
    /// variable.
    pub fn substitute(&self, images: &[MPoly<F>], target: &Arc<Ring<F>>) -> MPoly<F> {
        assert_eq!(images.len(), self.ring.nvars());
        let mut acc = MPoly::zero(target);
        let mut powers: Vec<Vec<MPoly<F>>> = images.iter().map(|x| vec![MPoly::one(target), x.clone()]).collect();
        for (m, c) in &self.terms {
            let mut t = MPoly::constant(target, c.clone());
            for i in 0..self.ring.nvars() {
                let k = m.e[i] as usize;
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k {
                    let next = powers[i].last().unwrap().mul(&images[i]);
                    powers[i].push(next);
                }
                t = t.mul(&powers[i][k]);
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Substitute a single variable, keeping the ring.
    pub fn subst_var(&self, var: usize, image: &MPoly<F>) -> MPoly<F> {
        let imgs: Vec<MPoly<F>> = (0..self.ring.nvars())
            .map(|i| if i == var { image.clone() } else { MPoly::var(&self.ring, i) })
            .collect();
        self.substitute(&imgs, &self.ring)
    }

    /// Re-express in another ring, sending variables by name. Panics when a
    /// used variable is absent from the target.
    pub fn to_ring(&self, target: &Arc<Ring<F>>) -> MPoly<F> {
        let map: Vec<Option<usize>> = self.ring.names.iter().map(|n| target.index(n)).collect();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut nm = Mono::ONE;
            for i in 0..self.ring.nvars() {
                if m.e[i] > 0 {
                    let j = map[i].unwrap_or_else(|| panic!("variable {} missing in target ring", self.ring.names[i]));
                    nm.e[j] += m.e[i];
                    nm.deg += m.e[i] as u32;
                }
            }
            terms.push((nm, c.clone()));
        }
        MPoly::from_terms(target, terms)
    }

    /// All variables occurring.
    pub fn vars(&self) -> Vec<usize> {
        (0..self.ring.nvars()).filter(|&i| self.uses_var(i)).collect()
    }

    /// Linear part at the origin, as a coefficient vector.
    pub fn linear_part(&self) -> Vec<F> {
        let mut v = vec![F::zero(&self.ring.ctx); self.ring.nvars()];
        for (m, c) in &self.terms {
            if m.deg == 1 {
                let i = m.support()[0];
                v[i] = c.clone();
            }
        }
        v
    }

    /// Formal partial derivative.
    pub fn derivative(&self, var: usize) -> MPoly<F> {
        let ctx = &self.ring.ctx;
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let k = m.e[var];
            if k == 0 {
                continue;
            }
            let mut nm = *m;
            nm.e[var] -= 1;
            nm.deg -= 1;
            terms.push((nm, c.mul(&F::from_i64(ctx, k as i64))));
        }
        MPoly::from_terms(&self.ring, terms)
    }

    /// Split by powers of one variable: coefficient polynomials indexed by
    /// exponent.
    pub fn coefficients_in(&self, var: usize) -> BTreeMap<u16, MPoly<F>> {
        let mut out: BTreeMap<u16, Vec<(Mono, F)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let k = m.e[var];
            let mut nm = *m;
            nm.e[var] = 0;
            nm.deg -= k as u32;
            out.entry(k).or_default().push((nm, c.clone()));
        }
        out.into_iter().map(|(k, t)| (k, MPoly::from_terms(&self.ring, t))).collect()
    }

    pub fn monomial_string(ring: &Ring<F>, m: &Mono) -> String {
        let mut parts = Vec::new();
        for i in 0..ring.nvars() {
            match m.e[i] {
                0 => {}
                1 => parts.push(ring.names[i].clone()),
                k => parts.push(format!("{}^{}", ring.names[i], k)),
            }
        }
        parts.join("*")
    }
}

impl<F: Field> fmt::Display for MPoly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let abs = if neg { c.neg() } else { c.clone() };
            let ms = Self::monomial_string(&self.ring, m);
            let body = if ms.is_empty() {
                format!("{}", abs)
            } else if abs.is_one() {
                ms
            } else {
                format!("{}*{}", abs, ms)
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                write!(f, "{}", body)?;
            } else {
                write!(f, " {} {}", if neg { "-" } else { "+" }, body)?;
            }
            first = false;
        }
        Ok(())
    }
}

impl<F: Field> fmt::Debug for MPoly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
