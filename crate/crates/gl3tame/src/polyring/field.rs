//! Coefficient fields: exact rationals and prime fields with a runtime
//! modulus.

use std::fmt::{self, Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Field: Clone + PartialEq + Debug + Display + Send + Sync + 'static {
    type Ctx: Clone + Debug + PartialEq + Send + Sync + 'static;

    fn zero(ctx: &Self::Ctx) -> Self;
    fn one(ctx: &Self::Ctx) -> Self;
    fn from_i64(ctx: &Self::Ctx, n: i64) -> Self;
    fn from_bigint(ctx: &Self::Ctx, n: &BigInt) -> Self;
    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;

    /// Image of a rational number, or `None` when its denominator is not
    /// invertible.
    fn from_ratio(ctx: &Self::Ctx, r: &BigRational) -> Option<Self> {
        let n = Self::from_bigint(ctx, r.numer());
        let d = Self::from_bigint(ctx, r.denom());
        d.inv().map(|di| n.mul(&di))
    }

    fn div(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul(&i))
    }

    /// Whether the printed form needs parentheses as a coefficient.
    fn is_compound(&self) -> bool {
        false
    }

    fn is_negative(&self) -> bool {
        false
    }
}

/// Rational coefficients; the context carries nothing.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Q(pub BigRational);

impl Q {
    pub fn new(n: i64, d: i64) -> Self {
        Q(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn int(n: i64) -> Self {
        Q(BigRational::from_integer(BigInt::from(n)))
    }

    /// p-adic valuation of a nonzero rational.
    pub fn valuation(&self, p: u64) -> Option<i64> {
        if self.0.is_zero() {
            return None;
        }
        let pb = BigInt::from(p);
        let mut v = 0i64;
        let mut n = self.0.numer().clone();
        while (&n % &pb).is_zero() {
            n /= &pb;
            v += 1;
        }
        let mut d = self.0.denom().clone();
        while (&d % &pb).is_zero() {
            d /= &pb;
            v -= 1;
        }
        Some(v)
    }

    /// Reduction modulo p of a p-integral rational.
    pub fn residue(&self, p: u64) -> Option<u64> {
        let pb = BigInt::from(p);
        let d = self.0.denom().mod_floor(&pb);
        if d.is_zero() {
            return None;
        }
        let n = self.0.numer().mod_floor(&pb).to_u64()?;
        let di = Fp::new(d.to_u64()?, p).inv()?;
        Some(Fp::new(n, p).mul(&di).v)
    }
}

impl Debug for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Field for Q {
    type Ctx = ();

    fn zero(_: &()) -> Self {
        Q(BigRational::zero())
    }
    fn one(_: &()) -> Self {
        Q(BigRational::one())
    }
    fn from_i64(_: &(), n: i64) -> Self {
        Q::int(n)
    }
    fn from_bigint(_: &(), n: &BigInt) -> Self {
        Q(BigRational::from_integer(n.clone()))
    }
    fn from_ratio(_: &(), r: &BigRational) -> Option<Self> {
        Some(Q(r.clone()))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn is_one(&self) -> bool {
        self.0.is_one()
    }
    fn add(&self, o: &Self) -> Self {
        Q(&self.0 + &o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Q(&self.0 - &o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Q(&self.0 * &o.0)
    }
    fn neg(&self) -> Self {
        Q(-&self.0)
    }
    fn inv(&self) -> Option<Self> {
        (!self.0.is_zero()).then(|| Q(self.0.recip()))
    }
    fn is_negative(&self) -> bool {
        self.0.is_negative()
    }
}

/// Element of F_p for a word-sized prime p.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    pub v: u64,
    pub p: u64,
}

impl Fp {
    pub fn new(v: u64, p: u64) -> Self {
        Fp { v: v % p, p }
    }

    pub fn from_signed(n: i64, p: u64) -> Self {
        Fp { v: n.rem_euclid(p as i64) as u64, p }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = *self;
        let mut acc = Fp::new(1, self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Symmetric representative in (-p/2, p/2].
    pub fn signed(&self) -> i64 {
        if self.v > self.p / 2 {
            self.v as i64 - self.p as i64
        } else {
            self.v as i64
        }
    }
}

impl Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signed())
    }
}

impl Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signed())
    }
}

impl Field for Fp {
    type Ctx = u64;

    fn zero(p: &u64) -> Self {
        Fp { v: 0, p: *p }
    }
    fn one(p: &u64) -> Self {
        Fp::new(1, *p)
    }
    fn from_i64(p: &u64, n: i64) -> Self {
        Fp::from_signed(n, *p)
    }
    fn from_bigint(p: &u64, n: &BigInt) -> Self {
        let r = n.mod_floor(&BigInt::from(*p));
        Fp { v: r.to_u64().unwrap(), p: *p }
    }
    fn is_zero(&self) -> bool {
        self.v == 0
    }
    fn is_one(&self) -> bool {
        self.v == 1 % self.p
    }
    fn add(&self, o: &Self) -> Self {
        let s = self.v + o.v;
        Fp { v: if s >= self.p { s - self.p } else { s }, p: self.p }
    }
    fn sub(&self, o: &Self) -> Self {
        Fp { v: if self.v >= o.v { self.v - o.v } else { self.v + self.p - o.v }, p: self.p }
    }
    fn mul(&self, o: &Self) -> Self {
        Fp { v: ((self.v as u128 * o.v as u128) % self.p as u128) as u64, p: self.p }
    }
    fn neg(&self) -> Self {
        Fp { v: if self.v == 0 { 0 } else { self.p - self.v }, p: self.p }
    }
    fn inv(&self) -> Option<Self> {
        if self.v == 0 {
            return None;
        }
        let (mut a, mut m) = (self.v as i128, self.p as i128);
        let (mut x0, mut x1) = (0i128, 1i128);
        let m0 = m;
        while a > 1 {
            if m == 0 {
                return None;
            }
            let q = a / m;
            let t = m;
            m = a % m;
            a = t;
            let t = x0;
            x0 = x1 - q * x0;
            x1 = t;
        }
        if a != 1 {
            return None;
        }
        Some(Fp { v: x1.rem_euclid(m0) as u64, p: self.p })
    }
    fn is_negative(&self) -> bool {
        self.signed() < 0
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp_inverse() {
        for v in 1..101 {
            let x = Fp::new(v, 101);
            assert!(x.mul(&x.inv().unwrap()).is_one());
        }
    }

    #[test]
    fn q_valuation_and_residue() {
        assert_eq!(Q::new(101 * 3, 7).valuation(101), Some(1));
        assert_eq!(Q::new(2, 101 * 101).valuation(101), Some(-2));
        assert_eq!(Q::new(1, 2).residue(7), Some(4));
        assert_eq!(Q::new(1, 7).residue(7), None);
    }
}
