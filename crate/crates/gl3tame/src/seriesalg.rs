//! Polynomials in the series variable (v or u) with coefficients in a field,
//! in a polynomial ring, or in Z/p^N; 3×3 matrices over them; conjugation by
//! diagonal powers of u with an orientation; truncated u-adic series with
//! tracked p-adic valuations, and the truncated λ = ∏ φⁿ(E(u)/p).

use std::fmt::{self, Debug};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive};

use crate::perms::{self, Perm};
use crate::polyring::{Field, MPoly, Q};

/// Minimal commutative-ring interface needed by `VPoly` and `VMatrix`.
/// Every value can produce zero and one of its own ring, which lets
/// polynomial coefficients carry their ring handle along.
pub trait Coeff: Clone + PartialEq + Debug + Send + Sync {
    fn cadd(&self, o: &Self) -> Self;
    fn csub(&self, o: &Self) -> Self;
    fn cmul(&self, o: &Self) -> Self;
    fn cneg(&self) -> Self;
    fn cis_zero(&self) -> bool;
    fn czero(&self) -> Self;
    fn cint(&self, n: i64) -> Self;
    fn cone(&self) -> Self {
        self.cint(1)
    }
}

macro_rules! field_coeff {
    ($t:ty) => {
        impl Coeff for $t {
            fn cadd(&self, o: &Self) -> Self {
                Field::add(self, o)
            }
            fn csub(&self, o: &Self) -> Self {
                Field::sub(self, o)
            }
            fn cmul(&self, o: &Self) -> Self {
                Field::mul(self, o)
            }
            fn cneg(&self) -> Self {
                Field::neg(self)
            }
            fn cis_zero(&self) -> bool {
                Field::is_zero(self)
            }
            fn czero(&self) -> Self {
                self.cint(0)
            }
            fn cint(&self, n: i64) -> Self {
                <$t as Field>::from_i64(&self.ctx(), n)
            }
        }
    };
}

trait HasCtx: Field {
    fn ctx(&self) -> Self::Ctx;
}

impl HasCtx for Q {
    fn ctx(&self) {}
}

impl HasCtx for crate::polyring::Fp {
    fn ctx(&self) -> u64 {
        self.p
    }
}

impl HasCtx for QuadQ {
    fn ctx(&self) -> u64 {
        self.p
    }
}

field_coeff!(Q);
field_coeff!(crate::polyring::Fp);
field_coeff!(QuadQ);

impl<F: Field> Coeff for MPoly<F> {
    fn cadd(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn csub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn cmul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn cneg(&self) -> Self {
        self.neg()
    }
    fn cis_zero(&self) -> bool {
        self.is_zero()
    }
    fn czero(&self) -> Self {
        MPoly::zero(&self.ring)
    }
    fn cint(&self, n: i64) -> Self {
        MPoly::from_i64(&self.ring, n)
    }
}

// ---------------------------------------------------------------------------
// Z/p^N

/// An element of Z/p^N, stored as a residue in [0, p^N).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Zpn {
    pub v: u128,
    pub p: u64,
    pub n: u32,
}

impl Zpn {
    pub fn modulus(p: u64, n: u32) -> u128 {
        (p as u128).pow(n)
    }

    pub fn new(x: i128, p: u64, n: u32) -> Zpn {
        let m = Self::modulus(p, n) as i128;
        Zpn { v: x.rem_euclid(m) as u128, p, n }
    }

    pub fn is_unit(&self) -> bool {
        self.v % self.p as u128 != 0
    }

    /// p-adic valuation, or `None` for zero.
    pub fn valuation(&self) -> Option<u32> {
        if self.v == 0 {
            return None;
        }
        let mut x = self.v;
        let mut k = 0;
        while x % self.p as u128 == 0 {
            x /= self.p as u128;
            k += 1;
        }
        Some(k)
    }

    pub fn inv(&self) -> Option<Zpn> {
        if !self.is_unit() {
            return None;
        }
        let m = Self::modulus(self.p, self.n) as i128;
        let (mut a, mut b) = (self.v as i128, m);
        let (mut x0, mut x1) = (0i128, 1i128);
        while b != 0 {
            let q = a / b;
            (a, b) = (b, a - q * b);
            (x1, x0) = (x0, x1 - q * x0);
        }
        Some(Zpn::new(x1, self.p, self.n))
    }

    /// Exact division by p^k of an element divisible by p^k; the result is
    /// only meaningful modulo p^{N-k} and is returned as such (lifted by 0).
    pub fn div_p_pow(&self, k: u32) -> Zpn {
        let d = (self.p as u128).pow(k);
        debug_assert_eq!(self.v % d, 0);
        Zpn { v: self.v / d, p: self.p, n: self.n }
    }

    /// Symmetric representative in (-p^N/2, p^N/2].
    pub fn signed(&self) -> i128 {
        let m = Self::modulus(self.p, self.n);
        if self.v > m / 2 {
            self.v as i128 - m as i128
        } else {
            self.v as i128
        }
    }
}

impl Debug for Zpn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signed())
    }
}

impl Coeff for Zpn {
    fn cadd(&self, o: &Self) -> Self {
        let m = Self::modulus(self.p, self.n);
        Zpn { v: (self.v + o.v) % m, ..*self }
    }
    fn csub(&self, o: &Self) -> Self {
        let m = Self::modulus(self.p, self.n);
        Zpn { v: (self.v + m - o.v) % m, ..*self }
    }
    fn cmul(&self, o: &Self) -> Self {
        let m = Self::modulus(self.p, self.n);
        Zpn { v: (self.v * o.v) % m, ..*self }
    }
    fn cneg(&self) -> Self {
        let m = Self::modulus(self.p, self.n);
        Zpn { v: (m - self.v) % m, ..*self }
    }
    fn cis_zero(&self) -> bool {
        self.v == 0
    }
    fn czero(&self) -> Self {
        Zpn { v: 0, ..*self }
    }
    fn cint(&self, n: i64) -> Self {
        Zpn::new(n as i128, self.p, self.n)
    }
}

// ---------------------------------------------------------------------------
// Q(ϖ), ϖ² = p

/// An element a + bϖ of the ramified quadratic extension Q(ϖ), ϖ² = p.
/// Valuations are normalized so that v(p) = 1 and v(ϖ) = 1/2.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadQ {
    pub a: Q,
    pub b: Q,
    pub p: u64,
}

impl QuadQ {
    pub fn rational(a: Q, p: u64) -> QuadQ {
        QuadQ { a, b: Field::zero(&()), p }
    }

    pub fn uniformizer(p: u64) -> QuadQ {
        QuadQ { a: Field::zero(&()), b: Field::one(&()), p }
    }

    /// Valuation as an exact rational with denominator dividing 2.
    pub fn valuation(&self) -> Option<Ratio<i64>> {
        let va = self.a.valuation(self.p).map(|x| 2 * x);
        let vb = self.b.valuation(self.p).map(|x| 2 * x + 1);
        let m = match (va, vb) {
            (None, None) => return None,
            (Some(x), None) | (None, Some(x)) => x,
            (Some(x), Some(y)) => x.min(y),
        };
        Some(Ratio::new(m, 2))
    }
}

impl Debug for QuadQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for QuadQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if Field::is_zero(&self.b) {
            write!(f, "{}", self.a)
        } else {
            write!(f, "({} + {}·ϖ)", self.a, self.b)
        }
    }
}

impl Field for QuadQ {
    type Ctx = u64;

    fn zero(p: &u64) -> Self {
        QuadQ::rational(Field::zero(&()), *p)
    }
    fn one(p: &u64) -> Self {
        QuadQ::rational(Field::one(&()), *p)
    }
    fn from_i64(p: &u64, n: i64) -> Self {
        QuadQ::rational(Q::int(n), *p)
    }
    fn from_bigint(p: &u64, n: &BigInt) -> Self {
        QuadQ::rational(Q::from_bigint(&(), n), *p)
    }
    fn is_zero(&self) -> bool {
        Field::is_zero(&self.a) && Field::is_zero(&self.b)
    }
    fn is_one(&self) -> bool {
        self.a.is_one() && Field::is_zero(&self.b)
    }
    fn add(&self, o: &Self) -> Self {
        QuadQ { a: Field::add(&self.a, &o.a), b: Field::add(&self.b, &o.b), p: self.p }
    }
    fn sub(&self, o: &Self) -> Self {
        QuadQ { a: Field::sub(&self.a, &o.a), b: Field::sub(&self.b, &o.b), p: self.p }
    }
    fn mul(&self, o: &Self) -> Self {
        let p = Q::int(self.p as i64);
        let a = Field::add(&Field::mul(&self.a, &o.a), &Field::mul(&p, &Field::mul(&self.b, &o.b)));
        let b = Field::add(&Field::mul(&self.a, &o.b), &Field::mul(&self.b, &o.a));
        QuadQ { a, b, p: self.p }
    }
    fn neg(&self) -> Self {
        QuadQ { a: Field::neg(&self.a), b: Field::neg(&self.b), p: self.p }
    }
    fn inv(&self) -> Option<Self> {
        let p = Q::int(self.p as i64);
        let norm = Field::sub(&Field::mul(&self.a, &self.a), &Field::mul(&p, &Field::mul(&self.b, &self.b)));
        let ni = norm.inv()?;
        Some(QuadQ { a: Field::mul(&self.a, &ni), b: Field::neg(&Field::mul(&self.b, &ni)), p: self.p })
    }
    fn is_compound(&self) -> bool {
        !Field::is_zero(&self.b)
    }
}

/// p-adic valuation shared by the coefficient types used in the series
/// computations; `None` means the value is zero.
pub trait PadicVal {
    fn pval(&self) -> Option<Ratio<i64>>;
}

impl PadicVal for QuadQ {
    fn pval(&self) -> Option<Ratio<i64>> {
        self.valuation()
    }
}

impl PadicVal for Zpn {
    fn pval(&self) -> Option<Ratio<i64>> {
        self.valuation().map(|k| Ratio::from_integer(k as i64))
    }
}

// ---------------------------------------------------------------------------
// VPoly

/// A polynomial Σ c_k X^k in the series variable with coefficients in `C`.
/// The `zero` field is a representative of the coefficient ring, so a zero
/// polynomial still knows where its coefficients live.
#[derive(Clone, PartialEq)]
pub struct VPoly<C: Coeff> {
    pub c: Vec<C>,
    pub zero: C,
}

impl<C: Coeff> Debug for VPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.cis_zero())
            .map(|(k, x)| match k {
                0 => format!("({x:?})"),
                1 => format!("({x:?})·v"),
                _ => format!("({x:?})·v^{k}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<C: Coeff> VPoly<C> {
    pub fn new(c: Vec<C>, zero: &C) -> Self {
        let mut p = VPoly { c, zero: zero.czero() };
        p.trim();
        p
    }

    pub fn zero(zero: &C) -> Self {
        VPoly { c: Vec::new(), zero: zero.czero() }
    }

    pub fn constant(x: C) -> Self {
        let z = x.czero();
        VPoly::new(vec![x], &z)
    }

    pub fn one(zero: &C) -> Self {
        VPoly::constant(zero.cone())
    }

    /// x · X^k.
    pub fn monomial(x: C, k: usize) -> Self {
        let z = x.czero();
        let mut c = vec![z.clone(); k];
        c.push(x);
        VPoly::new(c, &z)
    }

    /// X + a, the linear polynomial whose root is -a.
    pub fn linear(a: C) -> Self {
        let one = a.cone();
        let z = one.czero();
        VPoly::new(vec![a, one], &z)
    }

    fn trim(&mut self) {
        while self.c.last().is_some_and(|x| x.cis_zero()) {
            self.c.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    /// X-adic valuation.
    pub fn order(&self) -> Option<usize> {
        self.c.iter().position(|x| !x.cis_zero())
    }

    pub fn coeff(&self, k: usize) -> C {
        self.c.get(k).cloned().unwrap_or_else(|| self.zero.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let c = (0..n).map(|k| self.coeff(k).cadd(&o.coeff(k))).collect();
        VPoly::new(c, &self.zero)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let c = (0..n).map(|k| self.coeff(k).csub(&o.coeff(k))).collect();
        VPoly::new(c, &self.zero)
    }

    pub fn neg(&self) -> Self {
        VPoly { c: self.c.iter().map(|x| x.cneg()).collect(), zero: self.zero.clone() }
    }

    pub fn scale(&self, x: &C) -> Self {
        VPoly::new(self.c.iter().map(|y| y.cmul(x)).collect(), &self.zero)
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.mul_trunc(o, usize::MAX)
    }

    /// Product keeping only degrees ≤ `max_deg`.
    pub fn mul_trunc(&self, o: &Self, max_deg: usize) -> Self {
        if self.is_zero() || o.is_zero() {
            return VPoly::zero(&self.zero);
        }
        let n = (self.c.len() + o.c.len() - 1).min(max_deg.saturating_add(1));
        let mut c = vec![self.zero.clone(); n];
        for (i, x) in self.c.iter().enumerate() {
            if x.cis_zero() || i >= n {
                continue;
            }
            for (j, y) in o.c.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if !y.cis_zero() {
                    c[i + j] = c[i + j].cadd(&x.cmul(y));
                }
            }
        }
        VPoly::new(c, &self.zero)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = VPoly::one(&self.zero);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn truncate(&self, max_deg: usize) -> Self {
        VPoly::new(self.c.iter().take(max_deg.saturating_add(1)).cloned().collect(), &self.zero)
    }

    /// Multiply by X^k for k ≥ 0, or divide exactly by X^{-k} for k < 0.
    /// Returns `None` if the division is not exact.
    pub fn shift(&self, k: i64) -> Option<Self> {
        if k >= 0 {
            let mut c = vec![self.zero.clone(); k as usize];
            c.extend(self.c.iter().cloned());
            Some(VPoly::new(c, &self.zero))
        } else {
            let d = (-k) as usize;
            if self.c.iter().take(d).any(|x| !x.cis_zero()) {
                return None;
            }
            Some(VPoly::new(self.c.iter().skip(d).cloned().collect(), &self.zero))
        }
    }

    pub fn eval(&self, x: &C) -> C {
        let mut acc = self.zero.clone();
        for y in self.c.iter().rev() {
            acc = acc.cmul(x).cadd(y);
        }
        acc
    }

    /// Formal derivative d/dX.
    pub fn derivative(&self) -> Self {
        let c = self.c.iter().enumerate().skip(1).map(|(k, x)| x.cmul(&x.cint(k as i64))).collect();
        VPoly::new(c, &self.zero)
    }

    /// X · d/dX, the Euler operator.
    pub fn euler(&self) -> Self {
        let c = self.c.iter().enumerate().map(|(k, x)| x.cmul(&x.cint(k as i64))).collect();
        VPoly::new(c, &self.zero)
    }

    /// Synthetic division by (X - r): returns (quotient, remainder).
    pub fn div_linear(&self, r: &C) -> (Self, C) {
        if self.c.is_empty() {
            return (self.clone(), self.zero.clone());
        }
        let n = self.c.len();
        let mut q = vec![self.zero.clone(); n - 1];
        let mut acc = self.zero.clone();
        for k in (0..n).rev() {
            acc = acc.cmul(r).cadd(&self.c[k]);
            if k > 0 {
                q[k - 1] = acc.clone();
            }
        }
        (VPoly::new(q, &self.zero), acc)
    }

    /// Taylor coefficients around X = r: the values d_k with
    /// self = Σ d_k (X - r)^k.
    pub fn taylor_at(&self, r: &C) -> Vec<C> {
        let mut out = Vec::new();
        let mut cur = self.clone();
        while !cur.is_zero() {
            let (q, rem) = cur.div_linear(r);
            out.push(rem);
            cur = q;
        }
        out
    }

    /// Substitute X ↦ X^k (the Frobenius u ↦ u^p on series acting trivially
    /// on coefficients), truncated at `max_deg`.
    pub fn compose_power(&self, k: usize, max_deg: usize) -> Self {
        let mut c = vec![self.zero.clone(); 0];
        for (i, x) in self.c.iter().enumerate() {
            let d = i * k;
            if d > max_deg {
                break;
            }
            if c.len() <= d {
                c.resize(d + 1, self.zero.clone());
            }
            c[d] = x.clone();
        }
        VPoly::new(c, &self.zero)
    }

    /// Substitute X ↦ X^k exactly (no truncation).
    pub fn inflate(&self, k: usize) -> Self {
        self.compose_power(k, usize::MAX)
    }

    /// If every exponent with a nonzero coefficient is divisible by k,
    /// return the polynomial in X^k.
    pub fn deflate(&self, k: usize) -> Option<Self> {
        let mut c = Vec::new();
        for (i, x) in self.c.iter().enumerate() {
            if x.cis_zero() {
                continue;
            }
            if i % k != 0 {
                return None;
            }
            let j = i / k;
            if c.len() <= j {
                c.resize(j + 1, self.zero.clone());
            }
            c[j] = x.clone();
        }
        Some(VPoly::new(c, &self.zero))
    }

    pub fn map<D: Coeff>(&self, zero: &D, f: impl Fn(&C) -> D) -> VPoly<D> {
        VPoly::new(self.c.iter().map(f).collect(), zero)
    }

    /// Inverse as a power series up to degree `max_deg`, given an inverse
    /// `inv0` of the constant term.
    pub fn inverse_series(&self, inv0: &C, max_deg: usize) -> Self {
        let mut b: Vec<C> = Vec::with_capacity(max_deg + 1);
        b.push(inv0.clone());
        for n in 1..=max_deg {
            let mut acc = self.zero.clone();
            for k in 1..=n.min(self.c.len().saturating_sub(1)) {
                acc = acc.cadd(&self.c[k].cmul(&b[n - k]));
            }
            b.push(acc.cmul(inv0).cneg());
        }
        VPoly::new(b, &self.zero)
    }

    /// Delete the terms of degree ≤ `l`.
    pub fn drop_low(&self, l: usize) -> Self {
        let c = self.c.iter().enumerate().map(|(k, x)| if k <= l { self.zero.clone() } else { x.clone() }).collect();
        VPoly::new(c, &self.zero)
    }
}

impl VPoly<Zpn> {
    /// The defect d_R(P) = min_i (3·v_p(r_i) + i); `None` stands for +∞
    /// (the zero polynomial).
    pub fn defect(&self) -> Option<u32> {
        self.c.iter().enumerate().filter_map(|(i, x)| x.valuation().map(|k| 3 * k + i as u32)).min()
    }
}

impl<C: Coeff + PadicVal> VPoly<C> {
    /// Minimum p-adic valuation of the coefficients, or `None` for zero.
    pub fn pval(&self) -> Option<Ratio<i64>> {
        self.c.iter().filter_map(|x| x.pval()).min()
    }
}

// ---------------------------------------------------------------------------
// VMatrix

/// A 3×3 matrix with `VPoly` entries.
#[derive(Clone, PartialEq, Debug)]
pub struct VMatrix<C: Coeff> {
    pub e: [[VPoly<C>; 3]; 3],
}

impl<C: Coeff> VMatrix<C> {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> VPoly<C>) -> Self {
        VMatrix { e: std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))) }
    }

    pub fn zero(zero: &C) -> Self {
        Self::from_fn(|_, _| VPoly::zero(zero))
    }

    pub fn identity(zero: &C) -> Self {
        Self::from_fn(|i, j| if i == j { VPoly::one(zero) } else { VPoly::zero(zero) })
    }

    pub fn diag(d: [VPoly<C>; 3]) -> Self {
        let z = d[0].zero.clone();
        let [a, b, c] = d;
        let mut m = Self::zero(&z);
        m.e[0][0] = a;
        m.e[1][1] = b;
        m.e[2][2] = c;
        m
    }

    pub fn zero_coeff(&self) -> C {
        self.e[0][0].zero.clone()
    }

    pub fn get(&self, i: usize, j: usize) -> &VPoly<C> {
        &self.e[i][j]
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_fn(|i, j| self.e[i][j].add(&o.e[i][j]))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_fn(|i, j| self.e[i][j].sub(&o.e[i][j]))
    }

    pub fn neg(&self) -> Self {
        Self::from_fn(|i, j| self.e[i][j].neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.mul_trunc(o, usize::MAX)
    }

    pub fn mul_trunc(&self, o: &Self, max_deg: usize) -> Self {
        Self::from_fn(|i, j| {
            let mut acc = VPoly::zero(&self.zero_coeff());
            for k in 0..3 {
                acc = acc.add(&self.e[i][k].mul_trunc(&o.e[k][j], max_deg));
            }
            acc
        })
    }

    pub fn scale(&self, x: &VPoly<C>) -> Self {
        Self::from_fn(|i, j| self.e[i][j].mul(x))
    }

    pub fn scale_trunc(&self, x: &VPoly<C>, max_deg: usize) -> Self {
        Self::from_fn(|i, j| self.e[i][j].mul_trunc(x, max_deg))
    }

    pub fn scale_coeff(&self, x: &C) -> Self {
        Self::from_fn(|i, j| self.e[i][j].scale(x))
    }

    pub fn truncate(&self, max_deg: usize) -> Self {
        Self::from_fn(|i, j| self.e[i][j].truncate(max_deg))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.e[j][i].clone())
    }

    pub fn map_entries(&self, f: impl Fn(&VPoly<C>) -> VPoly<C>) -> Self {
        Self::from_fn(|i, j| f(&self.e[i][j]))
    }

    pub fn map<D: Coeff>(&self, zero: &D, f: impl Fn(&C) -> D) -> VMatrix<D> {
        VMatrix::from_fn(|i, j| self.e[i][j].map(zero, &f))
    }

    /// The 2×2 minor obtained by deleting row `r` and column `c`.
    pub fn minor(&self, r: usize, c: usize) -> VPoly<C> {
        let rows: Vec<usize> = (0..3).filter(|&x| x != r).collect();
        let cols: Vec<usize> = (0..3).filter(|&x| x != c).collect();
        let a = &self.e[rows[0]][cols[0]];
        let b = &self.e[rows[0]][cols[1]];
        let cc = &self.e[rows[1]][cols[0]];
        let d = &self.e[rows[1]][cols[1]];
        a.mul(d).sub(&b.mul(cc))
    }

    /// Adjugate: adj(M)·M = M·adj(M) = det(M)·Id.
    pub fn adj(&self) -> Self {
        Self::from_fn(|i, j| {
            let m = self.minor(j, i);
            if (i + j) % 2 == 0 {
                m
            } else {
                m.neg()
            }
        })
    }

    pub fn det(&self) -> VPoly<C> {
        let mut acc = VPoly::zero(&self.zero_coeff());
        for j in 0..3 {
            let t = self.e[0][j].mul(&self.minor(0, j));
            acc = if j % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
        }
        acc
    }

    pub fn eval(&self, x: &C) -> [[C; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.e[i][j].eval(x)))
    }

    /// Entrywise X·d/dX.
    pub fn euler(&self) -> Self {
        self.map_entries(|p| p.euler())
    }

    /// Entrywise X ↦ X^k, truncated at `max_deg`.
    pub fn compose_power(&self, k: usize, max_deg: usize) -> Self {
        self.map_entries(|p| p.compose_power(k, max_deg))
    }

    /// Conjugation by a monomial matrix `w` whose column m has X^{exps[m]}
    /// at row perm[m]: returns w·M·w⁻¹, or `None` if a negative power of X
    /// would be needed.
    pub fn monomial_conjugate(&self, perm: Perm, exps: [i32; 3]) -> Option<Self> {
        // (w M w⁻¹)[perm[k]][perm[l]] = X^{exps[k] - exps[l]} M[k][l]
        let mut out = Self::zero(&self.zero_coeff());
        for k in 0..3 {
            for l in 0..3 {
                out.e[perm[k] as usize][perm[l] as usize] = self.e[k][l].shift((exps[k] - exps[l]) as i64)?;
            }
        }
        Some(out)
    }

    /// s · M · s⁻¹ for a permutation s (column m of s has its 1 at row s(m)).
    pub fn permute(&self, s: Perm) -> Self {
        self.monomial_conjugate(s, [0, 0, 0]).expect("permutation conjugation is exact")
    }

    /// Divide every entry exactly by X + a; `None` if some entry leaves a
    /// nonzero remainder.
    pub fn div_linear_exact(&self, a: &C) -> Option<Self> {
        let r = a.cneg();
        let mut out = Self::zero(&self.zero_coeff());
        for i in 0..3 {
            for j in 0..3 {
                let (q, rem) = self.e[i][j].div_linear(&r);
                if !rem.cis_zero() {
                    return None;
                }
                out.e[i][j] = q;
            }
        }
        Some(out)
    }

    /// Left multiplication by a coefficient matrix applied as row
    /// operations.
    pub fn from_constants(m: &[[C; 3]; 3]) -> Self {
        Self::from_fn(|i, j| VPoly::constant(m[i][j].clone()))
    }
}

/// Ad_s(u^{b})(M) = s · Ad(u^{b_1}, u^{b_2}, u^{b_3})(M) · s⁻¹ with
/// Ad(u^b)(M)_{kl} = u^{b_k - b_l} M_{kl}. Returns `None` if a negative
/// power of u would be required.
pub fn ad_conjugate<C: Coeff>(m: &VMatrix<C>, s: Perm, b: [i64; 3]) -> Option<VMatrix<C>> {
    let mut out = VMatrix::zero(&m.zero_coeff());
    for k in 0..3 {
        for l in 0..3 {
            out.e[s[k] as usize][s[l] as usize] = m.e[k][l].shift(b[k] - b[l])?;
        }
    }
    Some(out)
}

/// The inverse operation Ad_s^{-1}(u^{b})(M) = Ad(u^{-b})(s⁻¹ M s).
pub fn ad_conjugate_inv<C: Coeff>(m: &VMatrix<C>, s: Perm, b: [i64; 3]) -> Option<VMatrix<C>> {
    let si = perms::inverse(s);
    let t = m.permute(si);
    ad_conjugate(&t, perms::ID, [-b[0], -b[1], -b[2]])
}

/// Integrality criterion for D = Ad(u^{b})(I) with e > b_1 - b_3 > b_2 - b_3 > 0:
/// D has no negative powers of u exactly when I is integral and upper
/// triangular modulo v = u^e. Here `i_in_v` is I written in v.
pub fn ad_integral_predicate<C: Coeff>(i_in_v: &VMatrix<C>) -> bool {
    (0..3).all(|r| (0..r).all(|c| i_in_v.e[r][c].coeff(0).cis_zero()))
}

/// Rewrite a matrix in v as a matrix in u via v = u^e.
pub fn v_to_u<C: Coeff>(m: &VMatrix<C>, e: usize) -> VMatrix<C> {
    m.map_entries(|p| p.inflate(e))
}

/// Rewrite a matrix in u whose entries only involve powers of u^e as a
/// matrix in v.
pub fn u_to_v<C: Coeff>(m: &VMatrix<C>, e: usize) -> Option<VMatrix<C>> {
    let mut out = VMatrix::zero(&m.zero_coeff());
    for i in 0..3 {
        for j in 0..3 {
            out.e[i][j] = m.e[i][j].deflate(e)?;
        }
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// Truncated p-adic u-series

/// A power series in u truncated at degree `deg_bound`, with coefficients
/// carrying exact p-adic valuations. `precision` is the p-adic precision at
/// which valuations are reported: a valuation ≥ precision is shown as the
/// cap.
#[derive(Clone, Debug, PartialEq)]
pub struct PadicUSeries<C: Coeff + PadicVal> {
    pub poly: VPoly<C>,
    pub deg_bound: usize,
    pub precision: i64,
}

impl<C: Coeff + PadicVal> PadicUSeries<C> {
    pub fn new(poly: VPoly<C>, deg_bound: usize, precision: i64) -> Self {
        PadicUSeries { poly: poly.truncate(deg_bound), deg_bound, precision }
    }

    pub fn mul(&self, o: &Self) -> Self {
        PadicUSeries {
            poly: self.poly.mul_trunc(&o.poly, self.deg_bound.min(o.deg_bound)),
            deg_bound: self.deg_bound.min(o.deg_bound),
            precision: self.precision.min(o.precision),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        PadicUSeries {
            poly: self.poly.add(&o.poly).truncate(self.deg_bound.min(o.deg_bound)),
            deg_bound: self.deg_bound.min(o.deg_bound),
            precision: self.precision.min(o.precision),
        }
    }

    /// Frobenius u ↦ u^p.
    pub fn phi(&self, p: usize) -> Self {
        PadicUSeries { poly: self.poly.compose_power(p, self.deg_bound), ..self.clone() }
    }

    /// p-adic valuation, capped at the precision; `None` for zero.
    pub fn valuation(&self) -> Option<Ratio<i64>> {
        self.poly.pval().map(|v| v.min(Ratio::from_integer(self.precision)))
    }

    /// u-adic valuation within the truncation; `None` when zero at this
    /// truncation.
    pub fn u_valuation(&self) -> Option<usize> {
        self.poly.order()
    }

    pub fn coeff(&self, k: usize) -> C {
        self.poly.coeff(k)
    }
}

/// λ = ∏_{n ≥ 0} φⁿ(E(u)/p) with E(u) = u^e + p, truncated at u-degree `d`:
/// only the factors with e·pⁿ ≤ d contribute.
pub fn lambda_truncated(p: u64, e: usize, d: usize, n: i64) -> PadicUSeries<QuadQ> {
    let z = QuadQ::rational(Field::zero(&()), p);
    let mut acc = PadicUSeries::new(VPoly::one(&z), d, n);
    let inv_p = QuadQ::rational(Q::new(1, p as i64), p);
    let mut deg = e;
    while deg <= d {
        let factor = VPoly::new(
            {
                let mut c = vec![z.clone(); deg + 1];
                c[0] = z.cone();
                c[deg] = inv_p.clone();
                c
            },
            &z,
        );
        acc = acc.mul(&PadicUSeries::new(factor, d, n));
        deg = match deg.checked_mul(p as usize) {
            Some(x) => x,
            None => break,
        };
    }
    acc
}

/// Convert a rational with p-integral image in Z/p^N.
pub fn q_to_zpn(x: &Q, p: u64, n: u32) -> Option<Zpn> {
    let m = BigInt::from(Zpn::modulus(p, n));
    let num = x.0.numer().mod_floor(&m);
    let den = x.0.denom().mod_floor(&m);
    let d = Zpn::new(den.to_i128()?, p, n).inv()?;
    Some(Zpn::new(num.to_i128()?, p, n).cmul(&d))
}

/// Valuation helper: BigRational with p-adic valuation ≥ `k`.
pub fn q_divisible(x: &Q, p: u64, k: i64) -> bool {
    match x.valuation(p) {
        None => true,
        Some(v) => v >= k,
    }
}

/// Whether a rational is a p-adic unit.
pub fn q_is_unit(x: &Q, p: u64) -> bool {
    x.valuation(p) == Some(0)
}

/// Render a valuation for reports.
pub fn ratio_to_string(r: &Ratio<i64>) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::{parse_poly, MonoOrder, Ring};
    use std::collections::HashMap;

    fn q(n: i64) -> Q {
        Q::int(n)
    }

    fn qpoly(c: &[i64]) -> VPoly<Q> {
        VPoly::new(c.iter().map(|&x| q(x)).collect(), &q(0))
    }

    #[test]
    fn linear_division_and_taylor() {
        // (v + 3)^2 (v - 1)
        let p = qpoly(&[3, 1]).pow(2).mul(&qpoly(&[-1, 1]));
        let (quo, rem) = p.div_linear(&q(-3));
        assert!(rem.is_zero());
        assert_eq!(quo, qpoly(&[3, 1]).mul(&qpoly(&[-1, 1])));
        let t = p.taylor_at(&q(-3));
        assert!(t[0].is_zero() && t[1].is_zero());
        assert_eq!(t[2], q(-4));
        assert_eq!(t[3], q(1));
    }

    #[test]
    fn adjugate_identity() {
        let r = Ring::<Q>::new(&["x", "y", "z"], MonoOrder::GrevLex, ());
        let params = HashMap::new();
        let e = |s: &str| parse_poly(s, &r, &params).unwrap();
        let z = MPoly::zero(&r);
        let m = VMatrix::from_fn(|i, j| {
            let base = [["x", "y", "1"], ["0", "x*y", "z"], ["y", "z", "x"]][i][j];
            VPoly::new(vec![e(base), e(&format!("{}*{}", i + 1, j + 1))], &z)
        });
        let lhs = m.adj().mul(&m);
        let rhs = VMatrix::identity(&z).scale(&m.det());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn ad_conjugate_round_trip() {
        let m = VMatrix::from_fn(|i, j| if i <= j { qpoly(&[1 + i as i64, j as i64]) } else { qpoly(&[0, 2]) });
        let s = [1, 2, 0];
        let b = [7, 4, 1];
        let c = ad_conjugate(&m.map_entries(|p| p.inflate(10)), s, b).unwrap();
        let back = ad_conjugate_inv(&c, s, b).unwrap();
        assert_eq!(back, m.map_entries(|p| p.inflate(10)));
        let id = VMatrix::identity(&q(0));
        assert_eq!(ad_conjugate(&id, s, b).unwrap(), id);
    }

    #[test]
    fn integrality_criterion() {
        let e = 10;
        let b = [7i64, 4, 1];
        let upper = VMatrix::from_fn(|i, j| if i <= j { qpoly(&[1, 1]) } else { qpoly(&[0, 1]) });
        assert!(ad_integral_predicate(&upper));
        assert!(ad_conjugate(&v_to_u(&upper, e), perms::ID, b).is_some());
        let mut bad = upper.clone();
        bad.e[2][0] = qpoly(&[1]);
        assert!(!ad_integral_predicate(&bad));
        assert!(ad_conjugate(&v_to_u(&bad, e), perms::ID, b).is_none());
    }

    #[test]
    fn zpn_inverse() {
        let x = Zpn::new(12, 7, 3);
        let y = x.inv().unwrap();
        assert_eq!(x.cmul(&y).v, 1);
        assert!(Zpn::new(14, 7, 3).inv().is_none());
        assert_eq!(Zpn::new(98, 7, 3).valuation(), Some(2));
    }

    #[test]
    fn quad_valuation() {
        let w = QuadQ::uniformizer(11);
        assert_eq!(w.valuation(), Some(Ratio::new(1, 2)));
        assert_eq!(Field::mul(&w, &w), QuadQ::from_i64(&11, 11));
        let x = Field::add(&QuadQ::from_i64(&11, 3), &w);
        assert_eq!(Field::mul(&x, &x.inv().unwrap()), QuadQ::from_i64(&11, 1));
    }

    #[test]
    fn lambda_first_terms() {
        let l = lambda_truncated(11, 10, 30, 10);
        assert!(l.coeff(0).is_one());
        assert_eq!(l.coeff(10), QuadQ::rational(Q::new(1, 11), 11));
        assert!(Field::is_zero(&l.coeff(5)));
        assert_eq!(l.poly.eval(&QuadQ::from_i64(&11, 0)), QuadQ::from_i64(&11, 1));
    }

    #[test]
    fn defect_of_polynomial() {
        let z = Zpn::new(0, 7, 3);
        let p = VPoly::new(vec![Zpn::new(49, 7, 3), Zpn::new(7, 7, 3), Zpn::new(1, 7, 3)], &z);
        assert_eq!(p.defect(), Some(2));
        let p = VPoly::new(vec![Zpn::new(49, 7, 3)], &z);
        assert_eq!(p.defect(), Some(6));
        assert_eq!(VPoly::zero(&z).defect(), None);
    }
}
