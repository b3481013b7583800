//! Serre weights of GL3(F_p) in the generic range.
//!
//! A Deligne–Lusztig representation and the restriction to inertia of a
//! semisimple ρ̄ are both described by a [`TorusData`]: a direct sum of
//! pieces Ind ω_d^n. The Jordan–Hölder factors of a generic Deligne–Lusztig
//! representation come from stored linear formulas in a parameter (a, b, c)
//! found by search. The predicted set W?(ρ̄) is computed as the reflection
//! of JH(σ(ρ̄|_I ⊗ ω⁻¹)), and its obvious part by the exponent criterion.
//! Shapes w(ρ̄, τ) are computed from the Frobenius product of monomial
//! Kisin modules of each admissible shape.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::kisin::{self, KisinError};
use crate::perms::{self, Perm};
use crate::polyring::Fp;
use crate::seriesalg::{VMatrix, VPoly};
use crate::tametype::{TameType, TypeError};
use crate::weyl::{self, AffineWeylElt};

#[derive(Debug, Error)]
pub enum SerreError {
    #[error("cannot parse {0:?}")]
    Parse(String),
    #[error("F{0:?} is not p-restricted")]
    NotRestricted([i64; 3]),
    #[error("{0} admits no weakly generic parametrization")]
    NotGeneric(String),
    #[error("parameters {0:?} violate 1 < a-b, b-c and a-c < p-2")]
    BadParameters([i64; 3]),
    #[error("no admissible shape gives {0}")]
    NoShape(String),
    #[error("several admissible shapes give {0}: {1:?}")]
    AmbiguousShape(String, Vec<String>),
    #[error("only types over Q_p (f = 1) have a Deligne–Lusztig parameter here")]
    NotOverQp,
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Kisin(#[from] KisinError),
}

// ---------------------------------------------------------------------------
// Linear forms in a, b, c, p

/// An integer linear form `a·A + b·B + c·C + p·P + k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LinForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub p: i64,
    pub k: i64,
}

impl LinForm {
    /// Parse sums like `c+p-1`, `a-p+2` or `p-2+c`.
    pub fn parse(s: &str) -> Result<Self, SerreError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().replace('−', "-");
        let err = || SerreError::Parse(s.to_string());
        let mut f = LinForm { a: 0, b: 0, c: 0, p: 0, k: 0 };
        let chars: Vec<char> = t.chars().collect();
        if chars.is_empty() {
            return Err(err());
        }
        let mut i = 0;
        while i < chars.len() {
            let mut sign = 1;
            if chars[i] == '+' || chars[i] == '-' {
                if chars[i] == '-' {
                    sign = -1;
                }
                i += 1;
            }
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let coef: Option<i64> = if i > start { Some(t[start..i].parse().map_err(|_| err())?) } else { None };
            let var = if i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
                Some(chars[i - 1])
            } else {
                None
            };
            let slot = match var {
                None => &mut f.k,
                Some('a') => &mut f.a,
                Some('b') => &mut f.b,
                Some('c') => &mut f.c,
                Some('p') => &mut f.p,
                Some(_) => return Err(err()),
            };
            if coef.is_none() && var.is_none() {
                return Err(err());
            }
            *slot += sign * coef.unwrap_or(1);
        }
        Ok(f)
    }

    pub fn eval(&self, abc: [i64; 3], p: i64) -> i64 {
        self.a * abc[0] + self.b * abc[1] + self.c * abc[2] + self.p * p + self.k
    }

    /// The variable coefficients (a, b, c).
    fn linear_part(&self) -> [i64; 3] {
        [self.a, self.b, self.c]
    }
}

/// A weight `F(x, y, z)` with each coordinate a linear form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightForm {
    pub label: String,
    pub coords: [LinForm; 3],
}

impl WeightForm {
    pub fn parse(s: &str) -> Result<Self, SerreError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = t
            .strip_prefix("F(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| SerreError::Parse(s.to_string()))?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 3 {
            return Err(SerreError::Parse(s.to_string()));
        }
        Ok(WeightForm {
            label: t.clone(),
            coords: [LinForm::parse(parts[0])?, LinForm::parse(parts[1])?, LinForm::parse(parts[2])?],
        })
    }

    pub fn eval(&self, abc: [i64; 3], p: u64) -> Result<SerreWeight, SerreError> {
        let pi = p as i64;
        SerreWeight::new(p, [self.coords[0].eval(abc, pi), self.coords[1].eval(abc, pi), self.coords[2].eval(abc, pi)])
    }

    /// Solve `self(a, b, c) = target` for (a, b, c), when every coordinate
    /// involves exactly one variable with coefficient 1, each variable once.
    fn invert(&self, target: [i64; 3], p: i64) -> Option<[i64; 3]> {
        let mut abc = [0i64; 3];
        let mut used = [false; 3];
        for (i, f) in self.coords.iter().enumerate() {
            let lin = f.linear_part();
            let var = lin.iter().position(|&x| x != 0)?;
            if lin[var] != 1 || lin.iter().filter(|&&x| x != 0).count() != 1 || used[var] {
                return None;
            }
            used[var] = true;
            abc[var] = target[i] - f.p * p - f.k;
        }
        Some(abc)
    }
}

// ---------------------------------------------------------------------------
// Serre weights

/// An irreducible F_p-representation F(x, y, z) of GL3(F_p), with (x, y, z)
/// p-restricted. Stored with z reduced to [0, p-2], since twisting all three
/// coordinates by p - 1 gives the same representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SerreWeight {
    pub p: u64,
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl SerreWeight {
    pub fn new(p: u64, xyz: [i64; 3]) -> Result<Self, SerreError> {
        let pi = p as i64;
        let [x, y, z] = xyz;
        if !(0..pi).contains(&(x - y)) || !(0..pi).contains(&(y - z)) {
            return Err(SerreError::NotRestricted(xyz));
        }
        let z0 = z.rem_euclid(pi - 1);
        let s = z0 - z;
        Ok(SerreWeight { p, x: x + s, y: y + s, z: z0 })
    }

    pub fn triple(&self) -> [i64; 3] {
        [self.x, self.y, self.z]
    }

    fn pi(&self) -> i64 {
        self.p as i64
    }

    pub fn is_lower(&self) -> bool {
        self.x - self.z < self.pi() - 2
    }

    pub fn is_upper(&self) -> bool {
        self.x - self.z > self.pi() - 2
    }

    pub fn is_reachable(&self) -> bool {
        let p = self.pi();
        let (ab, bc, ac) = (self.x - self.y, self.y - self.z, self.x - self.z);
        ac <= p - 4 || (ab <= p - 6 && bc <= p - 6 && ac >= p + 2)
    }

    /// The reflection F(x, y, z) ↦ F(z + p - 2, y, x - p + 2). It exchanges
    /// the two alcoves and sends a lower alcove weight to its shadow.
    pub fn reflect(&self) -> Result<SerreWeight, SerreError> {
        let p = self.pi();
        SerreWeight::new(self.p, [self.z + p - 2, self.y, self.x - p + 2])
    }

    /// The contragredient F(-z, -y, -x).
    pub fn dual(&self) -> SerreWeight {
        SerreWeight::new(self.p, [-self.z, -self.y, -self.x]).expect("duality keeps restrictedness")
    }

    /// Twist by det^k.
    pub fn twist(&self, k: i64) -> SerreWeight {
        SerreWeight::new(self.p, [self.x + k, self.y + k, self.z + k]).expect("twisting keeps restrictedness")
    }

    /// Dimension: the Weyl dimension in the lower alcove, and the difference
    /// of two Weyl dimensions in the upper alcove.
    pub fn dimension(&self) -> i64 {
        let p = self.pi();
        if self.is_upper() {
            weyl_dimension([self.x, self.y, self.z]) - weyl_dimension([self.z + p - 2, self.y, self.x - p + 2])
        } else {
            weyl_dimension([self.x, self.y, self.z])
        }
    }
}

impl fmt::Display for SerreWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F({},{},{})", self.x, self.y, self.z)
    }
}

/// The Weyl dimension polynomial of GL3, signed outside the dominant cone.
pub fn weyl_dimension(l: [i64; 3]) -> i64 {
    (l[0] - l[1] + 1) * (l[1] - l[2] + 1) * (l[0] - l[2] + 2) / 2
}

// ---------------------------------------------------------------------------
// Sums of induced characters

fn pow_i128(p: u64, e: u32) -> i128 {
    (p as i128).pow(e)
}

/// One summand Ind ω_d^n (a d-dimensional piece).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Piece {
    pub d: u32,
    pub n: u64,
}

/// The three kinds of Deligne–Lusztig representations of GL3(F_p).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DLKind {
    /// Ind_B(ω̃^a ⊗ ω̃^b ⊗ ω̃^c).
    PrincipalSeries,
    /// Ind_{P2}(ω̃^a ⊗ Θ(ω̃_2^{b+pc})).
    Parabolic,
    /// Θ(ω̃_3^{a+pb+p²c}).
    Cuspidal,
}

impl DLKind {
    pub const ALL: [DLKind; 3] = [DLKind::PrincipalSeries, DLKind::Parabolic, DLKind::Cuspidal];

    pub fn niveau(self) -> u32 {
        match self {
            DLKind::PrincipalSeries => 1,
            DLKind::Parabolic => 2,
            DLKind::Cuspidal => 3,
        }
    }

    /// Dimension of the Deligne–Lusztig representation.
    pub fn dimension(self, p: u64) -> i64 {
        let p = p as i64;
        match self {
            DLKind::PrincipalSeries => (p + 1) * (p * p + p + 1),
            DLKind::Parabolic => (p * p + p + 1) * (p - 1),
            DLKind::Cuspidal => (p - 1) * (p - 1) * (p + 1),
        }
    }
}

/// A direct sum of pieces Ind ω_d^n with total dimension 3, up to
/// isomorphism. It describes either a semisimple ρ̄|_I or the parameter of
/// a Deligne–Lusztig representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TorusData {
    pub p: u64,
    pub pieces: Vec<Piece>,
}

impl TorusData {
    /// Build from pieces (d, n) with n any integer; n is reduced modulo
    /// p^d - 1 to the smallest element of its Frobenius orbit.
    pub fn new(p: u64, pieces: &[(u32, i128)]) -> TorusData {
        let mut out: Vec<Piece> = pieces
            .iter()
            .map(|&(d, n)| {
                let q = pow_i128(p, d) - 1;
                let mut best = n.rem_euclid(q);
                let mut m = best;
                for _ in 1..d {
                    m = (m * p as i128).rem_euclid(q);
                    best = best.min(m);
                }
                Piece { d, n: best as u64 }
            })
            .collect();
        out.sort();
        TorusData { p, pieces: out }
    }

    /// The Deligne–Lusztig parameter of the given kind at integers (a, b, c).
    pub fn from_kind(kind: DLKind, p: u64, abc: [i64; 3]) -> TorusData {
        let [a, b, c] = abc.map(|x| x as i128);
        let pi = p as i128;
        match kind {
            DLKind::PrincipalSeries => TorusData::new(p, &[(1, a), (1, b), (1, c)]),
            DLKind::Parabolic => TorusData::new(p, &[(1, a), (2, b + pi * c)]),
            DLKind::Cuspidal => TorusData::new(p, &[(3, a + pi * b + pi * pi * c)]),
        }
    }

    pub fn kind(&self) -> Option<DLKind> {
        let ds: Vec<u32> = self.pieces.iter().map(|x| x.d).collect();
        match ds.as_slice() {
            [1, 1, 1] => Some(DLKind::PrincipalSeries),
            [1, 2] => Some(DLKind::Parabolic),
            [3] => Some(DLKind::Cuspidal),
            _ => None,
        }
    }

    /// The three characters of inertia, as a sorted multiset of exponents
    /// of ω_6 in Z/(p^6 - 1).
    pub fn signature(&self) -> Vec<i128> {
        let q6 = pow_i128(self.p, 6) - 1;
        let mut out = Vec::new();
        for pc in &self.pieces {
            let qd = pow_i128(self.p, pc.d) - 1;
            let scale = q6 / qd;
            let mut m = pc.n as i128;
            for _ in 0..pc.d {
                out.push((m * scale).rem_euclid(q6));
                m = (m * self.p as i128).rem_euclid(qd);
            }
        }
        out.sort();
        out
    }

    /// The contragredient: every exponent negated.
    pub fn dual(&self) -> TorusData {
        let pieces: Vec<(u32, i128)> = self.pieces.iter().map(|pc| (pc.d, -(pc.n as i128))).collect();
        TorusData::new(self.p, &pieces)
    }

    /// Tensor with ω^k.
    pub fn twist(&self, k: i64) -> TorusData {
        let pieces: Vec<(u32, i128)> = self
            .pieces
            .iter()
            .map(|pc| {
                let qd = pow_i128(self.p, pc.d) - 1;
                (pc.d, pc.n as i128 + k as i128 * (qd / (self.p as i128 - 1)))
            })
            .collect();
        TorusData::new(self.p, &pieces)
    }

    /// Human-readable form as a sum of induced characters.
    pub fn inertial_label(&self) -> String {
        let parts: Vec<String> = self
            .pieces
            .iter()
            .map(|pc| match pc.d {
                1 => format!("ω^{}", pc.n),
                d => format!("Ind ω_{}^{}", d, pc.n),
            })
            .collect();
        parts.join(" ⊕ ")
    }

    /// Human-readable form as a Deligne–Lusztig representation.
    pub fn dl_label(&self) -> String {
        match self.kind() {
            Some(DLKind::PrincipalSeries) => {
                format!("PS({},{},{})", self.pieces[0].n, self.pieces[1].n, self.pieces[2].n)
            }
            Some(DLKind::Parabolic) => {
                format!("Ind_P2(ω^{} ⊗ Θ(ω_2^{}))", self.pieces[0].n, self.pieces[1].n)
            }
            Some(DLKind::Cuspidal) => format!("Θ(ω_3^{})", self.pieces[0].n),
            None => self.inertial_label(),
        }
    }

    /// The Deligne–Lusztig parameter of σ(τ) for a type over Q_p.
    pub fn of_type(t: &TameType) -> Result<TorusData, SerreError> {
        if t.f != 1 {
            return Err(SerreError::NotOverQp);
        }
        let abc = [t.a[0][0] as i64, t.a[1][0] as i64, t.a[2][0] as i64];
        let kind = match t.niveau {
            1 => DLKind::PrincipalSeries,
            2 => DLKind::Parabolic,
            _ => DLKind::Cuspidal,
        };
        Ok(TorusData::from_kind(kind, t.p, abc))
    }

    /// The tame type τ with σ(τ) the Deligne–Lusztig representation with
    /// this parameter: all exponents negated, read as digit tuples.
    pub fn tame_type(&self) -> Result<TameType, SerreError> {
        let p = self.p;
        let digits = |n: u64, d: u32| -> Vec<u64> {
            let mut v = Vec::new();
            let mut m = n;
            for _ in 0..d {
                v.push(m % p);
                m /= p;
            }
            v
        };
        let kind = self.kind().ok_or_else(|| SerreError::NotGeneric(self.inertial_label()))?;
        let abc: [u64; 3] = match kind {
            DLKind::PrincipalSeries => [self.pieces[0].n, self.pieces[1].n, self.pieces[2].n],
            DLKind::Parabolic => {
                let d = digits(self.pieces[1].n, 2);
                [self.pieces[0].n, d[0], d[1]]
            }
            DLKind::Cuspidal => {
                let d = digits(self.pieces[0].n, 3);
                [d[0], d[1], d[2]]
            }
        };
        Ok(TameType::with_niveau(p, kind.niveau(), abc)?)
    }
}

// ---------------------------------------------------------------------------
// Stored tables

/// Jordan–Hölder constituents of the three kinds, as functions of the
/// parameter (a, b, c) with a > b > c, gaps at least 3 and a - c ≤ p - 4.
pub const JH_TABLE: [(DLKind, [&str; 9]); 3] = [
    (
        DLKind::PrincipalSeries,
        [
            "F(a,b,c)",
            "F(c+p-1,a,b)",
            "F(b,c,a-p+1)",
            "F(a,c,b-p+1)",
            "F(c+p-1,b,a-p+1)",
            "F(b+p-1,a,c)",
            "F(a-1,b,c+1)",
            "F(c+p-2,a,b+1)",
            "F(b-1,c,a-p+2)",
        ],
    ),
    (
        DLKind::Parabolic,
        [
            "F(a,b-1,c+1)",
            "F(c+p-2,a,b+1)",
            "F(b-1,c+1,a-p+1)",
            "F(a,c,b-p+1)",
            "F(c+p-1,b,a-p+1)",
            "F(b+p-2,a,c+1)",
            "F(a-1,b,c+1)",
            "F(c+p-1,a,b)",
            "F(b-1,c,a-p+2)",
        ],
    ),
    (
        DLKind::Cuspidal,
        [
            "F(a-2,b+1,c+1)",
            "F(c+p-2,a,b+1)",
            "F(b-1,c+1,a-p+1)",
            "F(a-1,c,b-p+2)",
            "F(c+p-1,b,a-p+1)",
            "F(b+p-1,a-1,c+1)",
            "F(a-1,b,c+1)",
            "F(c+p-1,a-1,b+1)",
            "F(b,c,a-p+1)",
        ],
    ),
];

/// The four families of semisimple ρ̄, each twisted by ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Family {
    /// (ω^a ⊕ ω^b ⊕ ω^c) ⊗ ω.
    Split,
    /// (ω^a ⊕ Ind ω_2^{b+pc}) ⊗ ω.
    MixedA,
    /// Ind ω_3^{a+pb+p²c} ⊗ ω.
    Irreducible,
    /// (ω^b ⊕ Ind ω_2^{a+pc}) ⊗ ω.
    MixedB,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Split, Family::MixedA, Family::Irreducible, Family::MixedB];

    pub fn label(self) -> &'static str {
        match self {
            Family::Split => "(ω^a ⊕ ω^b ⊕ ω^c)⊗ω",
            Family::MixedA => "(ω^a ⊕ Ind ω_2^{b+pc})⊗ω",
            Family::Irreducible => "Ind ω_3^{a+pb+p²c} ⊗ω",
            Family::MixedB => "(ω^b ⊕ Ind ω_2^{a+pc})⊗ω",
        }
    }

    /// ρ̄|_I for the parameters (a, b, c).
    pub fn rho(self, p: u64, abc: [i64; 3]) -> TorusData {
        let [a, b, c] = abc.map(|x| x as i128);
        let pi = p as i128;
        let base = match self {
            Family::Split => TorusData::new(p, &[(1, a), (1, b), (1, c)]),
            Family::MixedA => TorusData::new(p, &[(1, a), (2, b + pi * c)]),
            Family::Irreducible => TorusData::new(p, &[(3, a + pi * b + pi * pi * c)]),
            Family::MixedB => TorusData::new(p, &[(1, b), (2, a + pi * c)]),
        };
        base.twist(1)
    }
}

/// Obvious and shadow weights of the four families.
pub const W_TABLE: [(Family, [&str; 6], [&str; 3]); 4] = [
    (
        Family::Split,
        [
            "F(a-1,b,c+1)",
            "F(b-1,c,a-p+2)",
            "F(c+p-2,a,b+1)",
            "F(a-1,c,b-p+2)",
            "F(b+p-2,a,c+1)",
            "F(c+p-2,b,a-p+2)",
        ],
        ["F(c+p-1,b,a-p+1)", "F(b+p-1,a,c)", "F(a,c,b-p+1)"],
    ),
    (
        Family::MixedA,
        [
            "F(a-1,b,c+1)",
            "F(b-1,c,a-p+2)",
            "F(c+p-1,a,b)",
            "F(a-1,c+1,b-p+1)",
            "F(c+p-1,b-1,a-p+2)",
            "F(b+p-1,a,c)",
        ],
        ["F(c+p-1,b,a-p+1)", "F(a,c,b-p+1)", "F(b+p-2,a,c+1)"],
    ),
    (
        Family::Irreducible,
        [
            "F(a-1,b,c+1)",
            "F(c+p-1,a-1,b+1)",
            "F(b,c,a-p+1)",
            "F(a-1,c+1,b-p+1)",
            "F(c+p-1,b+1,a-p)",
            "F(b+p-1,a,c)",
        ],
        ["F(c+p-1,b,a-p+1)", "F(b+p-1,a-1,c+1)", "F(a-1,c,b-p+2)"],
    ),
    (
        Family::MixedB,
        [
            "F(a-1,b,c+1)",
            "F(b-1,c+1,a-p+1)",
            "F(c+p-1,a-1,b+1)",
            "F(a-1,c,b-p+2)",
            "F(c+p,b,a-p)",
            "F(b+p-2,a,c+1)",
        ],
        ["F(c+p-1,b,a-p+1)", "F(b+p-1,a-1,c+1)", "F(a-1,c+1,b-p+1)"],
    ),
];

/// One row of the table of types with Weyl intersection: the family of ρ̄,
/// the kind of σ(τ) with its parameter forms, the two weights of the
/// intersection and the shape.
pub struct TypeRow {
    pub family: Family,
    pub kind: DLKind,
    pub params: [&'static str; 3],
    pub intersection: [&'static str; 2],
    pub shape: &'static str,
}

pub const TYPE_TABLE: [TypeRow; 12] = [
    TypeRow {
        family: Family::Split,
        kind: DLKind::Parabolic,
        params: ["b", "c", "a"],
        intersection: ["F(a-1,b,c+1)", "F(c+p-1,b,a-p+1)"],
        shape: "αβα",
    },
    TypeRow {
        family: Family::Split,
        kind: DLKind::Parabolic,
        params: ["c", "a+1", "b-1"],
        intersection: ["F(b-1,c,a-p+2)", "F(a,c,b-p+1)"],
        shape: "βγβ",
    },
    TypeRow {
        family: Family::Split,
        kind: DLKind::Parabolic,
        params: ["a", "b+1", "c-1"],
        intersection: ["F(c+p-2,a,b+1)", "F(b+p-1,a,c)"],
        shape: "γαγ",
    },
    TypeRow {
        family: Family::MixedA,
        kind: DLKind::Cuspidal,
        params: ["a", "b", "c"],
        intersection: ["F(a-1,b,c+1)", "F(c+p-1,b,a-p+1)"],
        shape: "αβα",
    },
    TypeRow {
        family: Family::MixedA,
        kind: DLKind::Cuspidal,
        params: ["c-1", "b", "a+1"],
        intersection: ["F(b-1,c,a-p+2)", "F(a,c,b-p+1)"],
        shape: "βγβ",
    },
    TypeRow {
        family: Family::MixedA,
        kind: DLKind::PrincipalSeries,
        params: ["a", "b-1", "c+1"],
        intersection: ["F(c+p-1,a,b)", "F(b+p-2,a,c+1)"],
        shape: "γαγ",
    },
    TypeRow {
        family: Family::Irreducible,
        kind: DLKind::Parabolic,
        params: ["a", "b", "c"],
        intersection: ["F(a-1,b,c+1)", "F(c+p-1,b,a-p+1)"],
        shape: "αβα",
    },
    TypeRow {
        family: Family::Irreducible,
        kind: DLKind::Parabolic,
        params: ["c+1", "a-1", "b"],
        intersection: ["F(c+p-1,a-1,b+1)", "F(b+p-1,a-1,c+1)"],
        shape: "γαγ",
    },
    TypeRow {
        family: Family::Irreducible,
        kind: DLKind::Parabolic,
        params: ["b+1", "c-1", "a"],
        intersection: ["F(b,c,a-p+1)", "F(a-1,c,b-p+2)"],
        shape: "βγβ",
    },
    TypeRow {
        family: Family::MixedB,
        kind: DLKind::PrincipalSeries,
        params: ["a", "b", "c"],
        intersection: ["F(a-1,b,c+1)", "F(c+p-1,b,a-p+1)"],
        shape: "αβα",
    },
    TypeRow {
        family: Family::MixedB,
        kind: DLKind::Cuspidal,
        params: ["c", "b+1", "a-1"],
        intersection: ["F(c+p-1,a-1,b+1)", "F(b+p-1,a-1,c+1)"],
        shape: "γαγ",
    },
    TypeRow {
        family: Family::MixedB,
        kind: DLKind::Cuspidal,
        params: ["a", "b-1", "c+1"],
        intersection: ["F(b-1,c+1,a-p+1)", "F(a-1,c+1,b-p+1)"],
        shape: "βγβ",
    },
];

/// W?(ρ̄) for the non-semisimple ρ̄ of shape α with ρ̄^ss in the split family.
pub const NSS_ALPHA_WEIGHTS: [&str; 6] = [
    "F(a-1,b,c+1)",
    "F(p-2+c,a,b+1)",
    "F(a-1,c,b-p+2)",
    "F(p-1+b,a,c)",
    "F(c+p-1,b,a-p+1)",
    "F(a,c,b-p+1)",
];

fn eval_forms(forms: &[&str], abc: [i64; 3], p: u64) -> Result<Vec<SerreWeight>, SerreError> {
    forms.iter().map(|s| WeightForm::parse(s)?.eval(abc, p)).collect()
}

fn sorted(mut v: Vec<SerreWeight>) -> Vec<SerreWeight> {
    v.sort();
    v.dedup();
    v
}

fn strings(v: &[SerreWeight]) -> Vec<String> {
    v.iter().map(|w| w.to_string()).collect()
}

/// Check the standing assumption 1 < a-b, b-c and a-c < p-2.
pub fn check_parameters(p: u64, abc: [i64; 3]) -> Result<(), SerreError> {
    let p = p as i64;
    let [a, b, c] = abc;
    if a - b > 1 && b - c > 1 && a - c < p - 2 {
        Ok(())
    } else {
        Err(SerreError::BadParameters(abc))
    }
}

// ---------------------------------------------------------------------------
// Jordan–Hölder factors

#[derive(Clone, Debug, Serialize)]
pub struct JhFactors {
    pub sigma: TorusData,
    pub kind: DLKind,
    /// The first parametrization found, with c in [0, p-2].
    pub parameter: [i64; 3],
    /// The parameter belongs to the contragredient.
    pub via_dual: bool,
    pub parametrizations: usize,
    /// All parametrizations give the same nine weights.
    pub consistent: bool,
    pub weights: Vec<SerreWeight>,
}

/// All (a, b, c) with c in [0, p-2], a > b > c, gaps ≥ 3, a - c ≤ p - 4,
/// whose Deligne–Lusztig parameter of kind `sigma.kind()` is `sigma`.
pub fn parametrizations(sigma: &TorusData) -> Vec<[i64; 3]> {
    let Some(kind) = sigma.kind() else { return Vec::new() };
    let p = sigma.p as i64;
    let mut out = Vec::new();
    for c in 0..p - 1 {
        for b in c + 3..=c + p - 7 {
            let lo = b + 3;
            let hi = c + p - 4;
            if lo > hi {
                continue;
            }
            let a = match kind {
                DLKind::PrincipalSeries => {
                    let m = p - 1;
                    let mut res: Vec<i64> = sigma.pieces.iter().map(|x| x.n as i64).collect();
                    let remove = |res: &mut Vec<i64>, r: i64| -> bool {
                        match res.iter().position(|&x| x == r) {
                            Some(i) => {
                                res.remove(i);
                                true
                            }
                            None => false,
                        }
                    };
                    if !remove(&mut res, b.rem_euclid(m)) || !remove(&mut res, c.rem_euclid(m)) {
                        continue;
                    }
                    lo + (res[0] - lo).rem_euclid(m)
                }
                DLKind::Parabolic => {
                    let m = p - 1;
                    let x = sigma.pieces[0].n as i64;
                    let cand = TorusData::new(sigma.p, &[(2, (b + p * c) as i128)]);
                    if cand.pieces[0].n != sigma.pieces[1].n {
                        continue;
                    }
                    lo + (x - lo).rem_euclid(m)
                }
                DLKind::Cuspidal => {
                    let q = pow_i128(sigma.p, 3) - 1;
                    let n = sigma.pieces[0].n as i128;
                    let mut found = None;
                    let mut m = n;
                    for _ in 0..3 {
                        let r = (m - p as i128 * b as i128 - (p * p) as i128 * c as i128).rem_euclid(q);
                        let a = lo as i128 + (r - lo as i128).rem_euclid(q);
                        if a <= hi as i128 {
                            found = Some(a as i64);
                        }
                        m = (m * p as i128).rem_euclid(q);
                    }
                    match found {
                        Some(a) => a,
                        None => continue,
                    }
                }
            };
            if a <= hi && TorusData::from_kind(kind, sigma.p, [a, b, c]) == *sigma {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// The nine Jordan–Hölder factors of a weakly generic Deligne–Lusztig
/// representation. The stored formulas cover one of the two classes of
/// cuspidal parameters; the other class is handled through the
/// contragredient, since F(x, y, z)^∨ = F(-z, -y, -x).
pub fn jh_factors(sigma: &TorusData) -> Result<JhFactors, SerreError> {
    let kind = sigma.kind().ok_or_else(|| SerreError::NotGeneric(sigma.inertial_label()))?;
    let row = &JH_TABLE.iter().find(|(k, _)| *k == kind).unwrap().1;
    let mut via_dual = false;
    let mut params = parametrizations(sigma);
    if params.is_empty() {
        params = parametrizations(&sigma.dual());
        via_dual = true;
    }
    let first = *params.first().ok_or_else(|| SerreError::NotGeneric(sigma.dl_label()))?;
    let eval = |prm: [i64; 3]| -> Result<Vec<SerreWeight>, SerreError> {
        let ws = eval_forms(row, prm, sigma.p)?;
        Ok(sorted(if via_dual { ws.iter().map(|w| w.dual()).collect() } else { ws }))
    };
    let weights = eval(first)?;
    let mut consistent = weights.len() == 9;
    for prm in &params[1..] {
        if eval(*prm)? != weights {
            consistent = false;
        }
    }
    Ok(JhFactors {
        sigma: sigma.clone(),
        kind,
        parameter: first,
        via_dual,
        parametrizations: params.len(),
        consistent,
        weights,
    })
}

// ---------------------------------------------------------------------------
// Predicted weights

#[derive(Clone, Debug, Serialize)]
pub struct WeightSet {
    pub rho: TorusData,
    pub obvious: Vec<SerreWeight>,
    pub shadow: Vec<SerreWeight>,
}

impl WeightSet {
    pub fn all(&self) -> Vec<SerreWeight> {
        sorted(self.obvious.iter().chain(self.shadow.iter()).copied().collect())
    }
}

/// Whether F(x, y, z) is obvious for ρ̄: ρ̄|_I has the shape of a
/// crystalline lift with Hodge–Tate weights a permutation of
/// (x + 2, y + 1, z) inducing the pieces.
pub fn is_obvious(w: &SerreWeight, rho: &TorusData) -> bool {
    let h = [w.x + 2, w.y + 1, w.z].map(|x| x as i128);
    let p = w.p as i128;
    let target = rho.signature();
    perms::all().into_iter().any(|s| {
        let [h0, h1, h2] = [h[s[0] as usize], h[s[1] as usize], h[s[2] as usize]];
        let cands = [
            TorusData::new(w.p, &[(1, h0), (1, h1), (1, h2)]),
            TorusData::new(w.p, &[(1, h0), (2, h1 + p * h2)]),
            TorusData::new(w.p, &[(3, h0 + p * h1 + p * p * h2)]),
        ];
        cands.iter().any(|c| c.signature() == target)
    })
}

/// W?(ρ̄) for semisimple ρ̄ given by ρ̄|_I: the reflection of
/// JH(σ(ρ̄|_I ⊗ ω⁻¹)), split into obvious weights and the rest.
pub fn w_question(rho: &TorusData) -> Result<WeightSet, SerreError> {
    let sigma = rho.twist(-1);
    let jh = jh_factors(&sigma)?;
    let mut obvious = Vec::new();
    let mut shadow = Vec::new();
    for w in &jh.weights {
        let r = w.reflect()?;
        if is_obvious(&r, rho) {
            obvious.push(r);
        } else {
            shadow.push(r);
        }
    }
    Ok(WeightSet { rho: rho.clone(), obvious: sorted(obvious), shadow: sorted(shadow) })
}

/// JH(σ) ∩ W?(ρ̄).
pub fn intersect_weights(rho: &TorusData, sigma: &TorusData) -> Result<Vec<SerreWeight>, SerreError> {
    let w = w_question(rho)?.all();
    let jh = jh_factors(sigma)?;
    Ok(jh.weights.into_iter().filter(|x| w.contains(x)).collect())
}

// ---------------------------------------------------------------------------
// Sparse Laurent matrices over F_p

/// A Laurent polynomial in v over F_p: exponent ↦ nonzero coefficient.
pub type LPoly = BTreeMap<i64, u64>;

/// A 3×3 matrix of Laurent polynomials over F_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LMatrix {
    pub p: u64,
    pub e: [[LPoly; 3]; 3],
}

impl LMatrix {
    pub fn zero(p: u64) -> Self {
        LMatrix { p, e: Default::default() }
    }

    /// Monomial matrix of an affine Weyl element with unit coefficients.
    pub fn from_weyl(p: u64, w: &AffineWeylElt) -> Self {
        let mut m = LMatrix::zero(p);
        for col in 0..3 {
            m.e[w.perm[col] as usize][col].insert(w.exps[col] as i64, 1);
        }
        m
    }

    pub fn from_perm(p: u64, s: Perm) -> Self {
        LMatrix::from_weyl(p, &AffineWeylElt::from_perm(s))
    }

    pub fn diag(p: u64, exps: [i64; 3]) -> Self {
        let mut m = LMatrix::zero(p);
        for k in 0..3 {
            m.e[k][k].insert(exps[k], 1);
        }
        m
    }

    /// v^shift · M for a polynomial matrix M.
    pub fn from_vmatrix(m: &VMatrix<Fp>, shift: i64) -> Self {
        let mut out = LMatrix::zero(m.e[0][0].zero.p);
        for r in 0..3 {
            for c in 0..3 {
                for (d, x) in m.e[r][c].c.iter().enumerate() {
                    if x.v != 0 {
                        out.e[r][c].insert(d as i64 + shift, x.v);
                    }
                }
            }
        }
        out
    }

    /// The polynomial matrix v^{-shift} · self, with the smallest such shift.
    pub fn to_vmatrix(&self) -> (VMatrix<Fp>, i64) {
        let shift = self.e.iter().flatten().filter_map(|x| x.keys().next().copied()).min().unwrap_or(0);
        let z = Fp::new(0, self.p);
        let m = VMatrix::from_fn(|r, c| {
            let x = &self.e[r][c];
            let top = x.keys().next_back().map(|&d| d - shift).unwrap_or(-1);
            let mut cs = vec![z; (top + 1).max(0) as usize];
            for (&d, &v) in x {
                cs[(d - shift) as usize] = Fp::new(v, self.p);
            }
            VPoly::new(cs, &z)
        });
        (m, shift)
    }

    pub fn mul(&self, o: &LMatrix) -> LMatrix {
        let p = self.p;
        let mut out = LMatrix::zero(p);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc: LPoly = BTreeMap::new();
                for k in 0..3 {
                    for (&d1, &c1) in &self.e[i][k] {
                        for (&d2, &c2) in &o.e[k][j] {
                            let slot = acc.entry(d1 + d2).or_insert(0);
                            *slot = (*slot + (c1 as u128 * c2 as u128 % p as u128) as u64) % p;
                        }
                    }
                }
                acc.retain(|_, c| *c != 0);
                out.e[i][j] = acc;
            }
        }
        out
    }

    /// Frobenius twist: v ↦ v^{p^k} (coefficients lie in F_p).
    pub fn phi(&self, k: u32) -> LMatrix {
        let q = (self.p as i64).pow(k);
        let mut out = LMatrix::zero(self.p);
        for i in 0..3 {
            for j in 0..3 {
                out.e[i][j] = self.e[i][j].iter().map(|(&d, &c)| (d * q, c)).collect();
            }
        }
        out
    }

    /// Column structure of a monomial matrix: (perm, exps) with column m
    /// holding v^{exps[m]} in row perm[m].
    pub fn monomial_structure(&self) -> Option<([u8; 3], [i64; 3])> {
        let mut perm = [0u8; 3];
        let mut exps = [0i64; 3];
        for col in 0..3 {
            let nz: Vec<usize> = (0..3).filter(|&r| !self.e[r][col].is_empty()).collect();
            if nz.len() != 1 || self.e[nz[0]][col].len() != 1 {
                return None;
            }
            perm[col] = nz[0] as u8;
            exps[col] = *self.e[nz[0]][col].keys().next().unwrap();
        }
        Some((perm, exps))
    }
}

/// The matrix of φ^{f} on the isotypic piece of an étale φ-module,
/// `∏_{j=0}^{f-1} s_{f-j} · φ^j(A^{(f-1-j)} · D_j) · s_{f-j}^{-1}` with
/// D_j = diag(v^{a_{s_{f-j}(k), j}}), for the principal triple of `ty`
/// (indices of s taken mod f, so s_f = s_0).
pub fn frobenius_product(ty: &TameType, a: &[LMatrix]) -> Result<LMatrix, SerreError> {
    let t = ty.principal_triple();
    let o = ty.orientation()?;
    let f = t.f;
    if a.len() != f {
        return Err(KisinError::Arity { expected: f, got: a.len() }.into());
    }
    let p = t.p;
    let mut acc = LMatrix::diag(p, [0, 0, 0]);
    for j in 0..f {
        let s = o.s[(f - j) % f];
        let d = LMatrix::diag(p, std::array::from_fn(|k| t.a[s[k] as usize][j] as i64));
        let sm = LMatrix::from_perm(p, s);
        let si = LMatrix::from_perm(p, perms::inverse(s));
        let factor = sm.mul(&a[f - 1 - j].mul(&d).phi(j as u32)).mul(&si);
        acc = acc.mul(&factor);
    }
    Ok(acc)
}

/// ρ̄|_I for the étale φ^{f}-module e_i ↦ v^{n_i} e_{π(i)}: a cycle of
/// length ℓ through i gives the character ω_{fℓ}^{N_i} with
/// N_i = Σ_t q^{ℓ-1-t} n_{π^t(i)}, q = p^f. `None` if the three characters
/// do not come from a representation of G_{Q_p} of niveau dividing 6.
pub fn inertial_of_monomial(p: u64, f: usize, perm: [u8; 3], exps: [i64; 3]) -> Option<TorusData> {
    let q = pow_i128(p, f as u32);
    let q6 = pow_i128(p, 6) - 1;
    let mut chars: Vec<i128> = Vec::new();
    for i in 0..3 {
        let mut cyc = vec![i];
        let mut k = perm[i] as usize;
        while k != i {
            cyc.push(k);
            k = perm[k] as usize;
        }
        let big_f = (f * cyc.len()) as u32;
        let qf = pow_i128(p, big_f) - 1;
        let mut n: i128 = 0;
        for &j in &cyc {
            n = (n * q + exps[j] as i128).rem_euclid(qf);
        }
        let d = (1..=big_f).find(|&d| big_f % d == 0 && n % (qf / (pow_i128(p, d) - 1)) == 0)?;
        if 6 % d != 0 {
            return None;
        }
        let m = n / (qf / (pow_i128(p, d) - 1));
        chars.push((m * (q6 / (pow_i128(p, d) - 1))).rem_euclid(q6));
    }
    let mut pieces = Vec::new();
    while let Some(&x) = chars.first() {
        let mut orbit = vec![x];
        let mut y = (x * p as i128).rem_euclid(q6);
        while y != x {
            orbit.push(y);
            y = (y * p as i128).rem_euclid(q6);
        }
        for o in &orbit {
            let pos = chars.iter().position(|c| c == o)?;
            chars.remove(pos);
        }
        let d = orbit.len() as u32;
        if d > 3 {
            return None;
        }
        pieces.push((d, x / (q6 / (pow_i128(p, d) - 1))));
    }
    Some(TorusData::new(p, &pieces))
}

/// ρ̄|_I for the monomial Kisin module of shape `w` (constants 1, parallel
/// in every embedding) with type the one attached to `sigma`.
pub fn monomial_rho(sigma: &TorusData, w: &AffineWeylElt) -> Result<Option<TorusData>, SerreError> {
    let ty = sigma.tame_type()?;
    let t = ty.principal_triple();
    let a = vec![LMatrix::from_weyl(sigma.p, w); t.f];
    let m = frobenius_product(&ty, &a)?;
    let (perm, exps) = m.monomial_structure().expect("products of monomial matrices are monomial");
    Ok(inertial_of_monomial(sigma.p, t.f, perm, exps))
}

/// All admissible shapes whose monomial Kisin module with type σ has
/// restriction to inertia ρ̄|_I.
pub fn shape_of(rho: &TorusData, sigma: &TorusData) -> Result<Vec<String>, SerreError> {
    let target = rho.signature();
    let mut out = Vec::new();
    for e in weyl::adm_210().entries {
        if let Some(r) = monomial_rho(sigma, &e.element)? {
            if r.signature() == target {
                out.push(e.label.clone());
            }
        }
    }
    Ok(out)
}

/// The unique admissible shape w(ρ̄, τ), with τ the type of σ.
pub fn unique_shape(rho: &TorusData, sigma: &TorusData) -> Result<AffineWeylElt, SerreError> {
    let shapes = shape_of(rho, sigma)?;
    match shapes.as_slice() {
        [] => Err(SerreError::NoShape(rho.inertial_label())),
        [s] => Ok(AffineWeylElt::parse_shape(s).expect("admissible label")),
        _ => Err(SerreError::AmbiguousShape(rho.inertial_label(), shapes)),
    }
}

// ---------------------------------------------------------------------------
// Table checks

#[derive(Clone, Debug, Serialize)]
pub struct WeightRowReport {
    pub family: Family,
    pub rho: String,
    pub stored_obvious: Vec<String>,
    pub stored_shadow: Vec<String>,
    pub computed_obvious: Vec<String>,
    pub computed_shadow: Vec<String>,
    /// Every shadow is the reflection of a lower alcove obvious weight.
    pub shadows_are_reflections: bool,
    pub passed: bool,
}

/// Compare the stored obvious and shadow weights of a family with the
/// computed W?(ρ̄).
pub fn verify_weight_row(family: Family, p: u64, abc: [i64; 3]) -> Result<WeightRowReport, SerreError> {
    check_parameters(p, abc)?;
    let row = W_TABLE.iter().find(|r| r.0 == family).unwrap();
    let stored_o = sorted(eval_forms(&row.1, abc, p)?);
    let stored_s = sorted(eval_forms(&row.2, abc, p)?);
    let rho = family.rho(p, abc);
    let ws = w_question(&rho)?;
    let mut refl = true;
    for s in &ws.shadow {
        let pre = s.reflect()?;
        if !(pre.is_lower() && ws.obvious.contains(&pre)) {
            refl = false;
        }
    }
    let passed = stored_o == ws.obvious && stored_s == ws.shadow && stored_o.len() == 6 && stored_s.len() == 3 && refl;
    Ok(WeightRowReport {
        family,
        rho: rho.inertial_label(),
        stored_obvious: strings(&stored_o),
        stored_shadow: strings(&stored_s),
        computed_obvious: strings(&ws.obvious),
        computed_shadow: strings(&ws.shadow),
        shadows_are_reflections: refl,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct JhRowReport {
    pub kind: DLKind,
    pub sigma: String,
    pub weights: Vec<String>,
    pub parametrizations: usize,
    pub consistent: bool,
    pub all_reachable: bool,
    pub dimension_sum: i64,
    pub dl_dimension: i64,
    pub passed: bool,
}

/// The stored constituents of one kind at (a, b, c), with the dimension
/// count and the independence of the chosen parametrization.
pub fn verify_jh_row(kind: DLKind, p: u64, abc: [i64; 3]) -> Result<JhRowReport, SerreError> {
    let sigma = TorusData::from_kind(kind, p, abc);
    let jh = jh_factors(&sigma)?;
    let dimension_sum: i64 = jh.weights.iter().map(|w| w.dimension()).sum();
    let dl_dimension = kind.dimension(p);
    let all_reachable = jh.weights.iter().all(|w| w.is_reachable());
    let passed = jh.consistent && jh.weights.len() == 9 && dimension_sum == dl_dimension;
    Ok(JhRowReport {
        kind,
        sigma: sigma.dl_label(),
        weights: strings(&jh.weights),
        parametrizations: jh.parametrizations,
        consistent: jh.consistent,
        all_reachable,
        dimension_sum,
        dl_dimension,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TypeRowReport {
    pub index: usize,
    pub family: Family,
    pub sigma: String,
    pub stored_intersection: Vec<String>,
    pub computed_intersection: Vec<String>,
    pub stored_shape: String,
    pub computed_shapes: Vec<String>,
    pub intersection_ok: bool,
    pub shape_ok: bool,
}

fn type_row_sigma(row: &TypeRow, p: u64, abc: [i64; 3]) -> Result<TorusData, SerreError> {
    let mut prm = [0i64; 3];
    for (i, s) in row.params.iter().enumerate() {
        prm[i] = LinForm::parse(s)?.eval(abc, p as i64);
    }
    Ok(TorusData::from_kind(row.kind, p, prm))
}

fn same_shape(labels: &[String], want: &str) -> bool {
    let w = AffineWeylElt::parse_shape(want).ok();
    labels.len() == 1 && w.is_some() && AffineWeylElt::parse_shape(&labels[0]).ok() == w
}

/// Check one row of the table of types with Weyl intersection.
pub fn verify_type_row(index: usize, p: u64, abc: [i64; 3]) -> Result<TypeRowReport, SerreError> {
    check_parameters(p, abc)?;
    let row = &TYPE_TABLE[index];
    let sigma = type_row_sigma(row, p, abc)?;
    let rho = row.family.rho(p, abc);
    let stored = sorted(eval_forms(&row.intersection, abc, p)?);
    let computed = sorted(intersect_weights(&rho, &sigma)?);
    let shapes = shape_of(&rho, &sigma)?;
    Ok(TypeRowReport {
        index,
        family: row.family,
        sigma: sigma.dl_label(),
        intersection_ok: stored == computed,
        shape_ok: same_shape(&shapes, row.shape),
        stored_intersection: strings(&stored),
        computed_intersection: strings(&computed),
        stored_shape: row.shape.to_string(),
        computed_shapes: shapes,
    })
}

// ---------------------------------------------------------------------------
// Census of types meeting W?(ρ̄)

/// Classes of shapes: by length, with the length 3 shadows separate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ShapeClass {
    Length4,
    Length3Shadow,
    Length3,
    Length2,
    Length1,
    Length0,
    /// No monomial module of any admissible shape gives ρ̄.
    NoShape,
    /// More than one admissible shape gives ρ̄.
    Ambiguous,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusEntry {
    pub sigma: String,
    pub shape: Option<String>,
    pub class: ShapeClass,
    pub intersection: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassSummary {
    pub class: ShapeClass,
    pub types: usize,
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub family: Family,
    pub p: u64,
    pub abc: [i64; 3],
    pub types: usize,
    pub classes: Vec<ClassSummary>,
    /// Length 4: intersection one obvious weight, every obvious weight met.
    pub claim_length4: bool,
    /// Length 3 shadow: a lower obvious weight and its shadow, every
    /// shadow met.
    pub claim_shadow: bool,
    /// Length 3 non-shadow: one upper and one lower obvious weight, every
    /// obvious weight met.
    pub claim_length3: bool,
    /// Length 2: a shadow and three obvious weights, every shadow met.
    pub claim_length2: bool,
    /// Intersection sizes 1, 2, 2, 4 in the four classes.
    pub cardinalities_ok: bool,
    /// Every admissible shape occurs for exactly one type.
    pub one_type_per_shape: bool,
    pub entries: Vec<CensusEntry>,
}

/// Every (n-2)-generic type whose Deligne–Lusztig representation has a
/// constituent in W?(ρ̄), with its shape and intersection. Candidates are
/// produced by solving slot(a, b, c) = F for each weight F, kind and slot.
pub fn intersection_census(family: Family, p: u64, abc: [i64; 3], min_genericity: u64) -> Result<CensusReport, SerreError> {
    check_parameters(p, abc)?;
    let rho = family.rho(p, abc);
    let ws = w_question(&rho)?;
    let all = ws.all();
    let pi = p as i64;
    let mut types: BTreeSet<TorusData> = BTreeSet::new();
    for w in &all {
        for (kind, row) in JH_TABLE.iter() {
            for slot in row.iter() {
                let form = WeightForm::parse(slot)?;
                for target in [w.triple(), w.dual().triple()] {
                    let Some(prm) = form.invert(target, pi) else { continue };
                    let mut sigma = TorusData::from_kind(*kind, p, prm);
                    if target != w.triple() {
                        sigma = sigma.dual();
                    }
                    types.insert(sigma);
                }
            }
        }
    }
    let adm = weyl::adm_210();
    let mut entries = Vec::new();
    for sigma in types {
        let Ok(ty) = sigma.tame_type() else { continue };
        if ty.genericity_level() < min_genericity {
            continue;
        }
        let Ok(jh) = jh_factors(&sigma) else { continue };
        let inter: Vec<SerreWeight> = jh.weights.iter().filter(|x| all.contains(x)).copied().collect();
        if inter.is_empty() {
            continue;
        }
        let shapes = shape_of(&rho, &sigma)?;
        let (shape, class) = match shapes.as_slice() {
            [] => (None, ShapeClass::NoShape),
            [s] => {
                let e = adm.by_label(s).unwrap();
                let class = match (e.length, e.shadow) {
                    (4, _) => ShapeClass::Length4,
                    (3, true) => ShapeClass::Length3Shadow,
                    (3, false) => ShapeClass::Length3,
                    (2, _) => ShapeClass::Length2,
                    (1, _) => ShapeClass::Length1,
                    _ => ShapeClass::Length0,
                };
                (Some(s.clone()), class)
            }
            _ => (None, ShapeClass::Ambiguous),
        };
        entries.push((sigma, shape, class, inter));
    }

    let obv = &ws.obvious;
    let sh = &ws.shadow;
    let in_class = |c: ShapeClass| entries.iter().filter(move |e| e.2 == c);
    let claim_length4 = {
        let mut met = BTreeSet::new();
        let ok = in_class(ShapeClass::Length4).all(|e| {
            met.extend(e.3.iter().copied());
            e.3.len() == 1 && obv.contains(&e.3[0])
        });
        ok && met.len() == obv.len() && in_class(ShapeClass::Length4).count() > 0
    };
    let claim_shadow = {
        let mut met = BTreeSet::new();
        let ok = in_class(ShapeClass::Length3Shadow).all(|e| {
            let s: Vec<&SerreWeight> = e.3.iter().filter(|x| sh.contains(x)).collect();
            let o: Vec<&SerreWeight> = e.3.iter().filter(|x| obv.contains(x)).collect();
            if let [s0] = s.as_slice() {
                met.insert(**s0);
            }
            e.3.len() == 2
                && s.len() == 1
                && o.len() == 1
                && o[0].is_lower()
                && o[0].reflect().ok().as_ref() == Some(s[0])
        });
        ok && met.len() == sh.len()
    };
    let claim_length3 = {
        let mut met = BTreeSet::new();
        let ok = in_class(ShapeClass::Length3).all(|e| {
            met.extend(e.3.iter().copied());
            e.3.len() == 2
                && e.3.iter().all(|x| obv.contains(x))
                && e.3.iter().filter(|x| x.is_lower()).count() == 1
                && e.3.iter().filter(|x| x.is_upper()).count() == 1
        });
        ok && met.len() == obv.len()
    };
    let claim_length2 = {
        let mut met = BTreeSet::new();
        let ok = in_class(ShapeClass::Length2).all(|e| {
            let s: Vec<&SerreWeight> = e.3.iter().filter(|x| sh.contains(x)).collect();
            if let [s0] = s.as_slice() {
                met.insert(**s0);
            }
            e.3.len() == 4 && s.len() == 1
        });
        ok && met.len() == sh.len()
    };
    let mut classes: BTreeMap<ShapeClass, Vec<usize>> = BTreeMap::new();
    for e in &entries {
        classes.entry(e.2).or_default().push(e.3.len());
    }
    let size_is = |c: ShapeClass, n: usize| classes.get(&c).map(|v| !v.is_empty() && v.iter().all(|&x| x == n)).unwrap_or(false);
    let cardinalities_ok = size_is(ShapeClass::Length4, 1)
        && size_is(ShapeClass::Length3Shadow, 2)
        && size_is(ShapeClass::Length3, 2)
        && size_is(ShapeClass::Length2, 4);
    let mut shape_counts: BTreeMap<AffineWeylElt, usize> = BTreeMap::new();
    for e in &entries {
        if let Some(s) = &e.1 {
            *shape_counts.entry(AffineWeylElt::parse_shape(s).expect("admissible label")).or_default() += 1;
        }
    }
    let one_type_per_shape = shape_counts.len() == adm.len() && shape_counts.values().all(|&n| n == 1);
    Ok(CensusReport {
        family,
        p,
        abc,
        types: entries.len(),
        one_type_per_shape,
        classes: classes
            .into_iter()
            .map(|(class, mut sizes)| {
                sizes.sort();
                ClassSummary { class, types: sizes.len(), sizes }
            })
            .collect(),
        claim_length4,
        claim_shadow,
        claim_length3,
        claim_length2,
        cardinalities_ok,
        entries: entries
            .into_iter()
            .map(|(sigma, shape, class, inter)| CensusEntry {
                sigma: sigma.dl_label(),
                shape,
                class,
                intersection: strings(&inter),
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// The non-semisimple ρ̄ of shape α

#[derive(Clone, Debug, Serialize)]
pub struct NssAlphaReport {
    pub p: u64,
    pub abc: [i64; 3],
    /// The six stored weights lie in W?(ρ̄^ss): three obvious, three
    /// shadows.
    pub subset_of_semisimple: bool,
    /// JH(σ(τ')) ∩ W?(ρ̄) for the cuspidal type τ'.
    pub type_intersection: Vec<String>,
    pub printed_type_intersection: Vec<String>,
    pub type_intersection_matches_printed: bool,
    /// The intersection has two elements, one of them F(a, c, b-p+1).
    pub type_intersection_isolates_shadow: bool,
    /// Orientation of the base change of τ', in cycle notation.
    pub orientation: Vec<String>,
    pub orientation_ok: bool,
    /// Shape of A_α·diag(v⁻¹, v, 1)·s'_1⁻¹·s'_0, read literally.
    pub printed_a_shape: Option<String>,
    /// The displayed products satisfy M(τ') = s'_0·M(ρ̄)·s'_0⁻¹ literally.
    pub displayed_products_conjugate: bool,
    /// Shape of A = A_α·diag(v⁻¹, v, 1)·s'_2⁻¹·s'_0, the factor that the
    /// general Frobenius product places after s'_0.
    pub shape_of_a: Option<String>,
    pub shape_ok: bool,
    pub shape_is_length3_non_shadow: bool,
    /// The Frobenius products for τ' with A and for ρ̄ with A_α are
    /// conjugate by s'_0.
    pub formula_products_conjugate: bool,
    /// The displayed product for ρ̄ equals its Frobenius product.
    pub rho_product_matches_formula: bool,
    pub passed: bool,
}

/// Check the construction of a type τ' of shape αβγ for the
/// non-semisimple ρ̄ whose Kisin module with principal series type
/// (a, b, c) has shape α, at a random point of the α family.
pub fn verify_nss_alpha_identity<R: Rng>(p: u64, abc: [i64; 3], rng: &mut R) -> Result<NssAlphaReport, SerreError> {
    check_parameters(p, abc)?;
    let [a, b, c] = abc;
    let weights = sorted(eval_forms(&NSS_ALPHA_WEIGHTS, abc, p)?);
    let ss = w_question(&Family::Split.rho(p, abc))?;
    let subset_of_semisimple = weights.len() == 6
        && weights.iter().filter(|w| ss.obvious.contains(w)).count() == 3
        && weights.iter().filter(|w| ss.shadow.contains(w)).count() == 3;

    let sigma_t = TorusData::from_kind(DLKind::Cuspidal, p, [a + 1, b - 1, c]);
    let jh = jh_factors(&sigma_t)?;
    let inter = sorted(jh.weights.iter().filter(|w| weights.contains(w)).copied().collect());
    let printed = sorted(eval_forms(&["F(c+p-2,a,b+1)", "F(a,c,b-p+1)"], abc, p)?);
    let target = WeightForm::parse("F(a,c,b-p+1)")?.eval(abc, p)?;
    let type_intersection_isolates_shadow = inter.len() == 2 && inter.contains(&target);

    let tau_t = TameType::with_niveau(p, 3, [(a + 1) as u64, (b - 1) as u64, c as u64])?;
    let o = tau_t.orientation()?;
    let s0 = perms::parse_cycle("(123)").unwrap();
    let s1 = perms::compose(s0, s0);
    let s2 = perms::ID;
    let orientation_ok = o.s == vec![s0, s1, s2];

    let adm = weyl::adm_210();
    let pm = |s: Perm| LMatrix::from_perm(p, s);
    let pinv = |s: Perm| LMatrix::from_perm(p, perms::inverse(s));
    let shape = |m: &LMatrix| -> Result<Option<(String, usize, bool)>, SerreError> {
        let (v, shift) = m.to_vmatrix();
        let w = kisin::double_coset_of(&v, shift as i32)?;
        Ok(adm.get(&w).map(|e| (e.label.clone(), e.length, e.shadow)))
    };

    let a_alpha = LMatrix::from_vmatrix(&kisin::universal_matrix("α", p)?.table2_rep(rng), 0);
    let twist = LMatrix::diag(p, [-1, 1, 0]);
    let printed_a = a_alpha.mul(&twist).mul(&pinv(s1)).mul(&pm(s0));
    let big_a = a_alpha.mul(&twist).mul(&pinv(o.s[2])).mul(&pm(o.s[0]));

    let pi = p as i64;
    let d = |e: [i64; 3]| LMatrix::diag(p, e);
    let displayed_t = pm(s0)
        .mul(&printed_a)
        .mul(&pinv(s0))
        .mul(&pm(s1))
        .mul(&d([a + 1, b - 1, c]))
        .mul(&printed_a.phi(1))
        .mul(&pinv(s1))
        .mul(&pm(s2))
        .mul(&d([pi * (a + 1), pi * (b - 1), pi * c]))
        .mul(&printed_a.phi(2))
        .mul(&pinv(s2))
        .mul(&d([pi * pi * c, pi * pi * (a + 1), pi * pi * (b - 1)]));
    let displayed_rho = a_alpha
        .mul(&d([a, b, c]))
        .mul(&a_alpha.phi(1))
        .mul(&d([pi * a, pi * b, pi * c]))
        .mul(&a_alpha.phi(2))
        .mul(&d([pi * pi * a, pi * pi * b, pi * pi * c]));
    let conj = |x: &LMatrix| pm(s0).mul(x).mul(&pinv(s0));
    let displayed_products_conjugate = displayed_t == conj(&displayed_rho);

    let tau_rho = TameType::new(p, 1, [vec![a as u64; 3], vec![b as u64; 3], vec![c as u64; 3]])?;
    let formula_rho = frobenius_product(&tau_rho, &vec![a_alpha.clone(); 3])?;
    let formula_t = frobenius_product(&tau_t, &vec![big_a.clone(); 3])?;
    let formula_products_conjugate = formula_t == conj(&formula_rho);
    let rho_product_matches_formula = formula_rho == displayed_rho;

    let got = shape(&big_a)?;
    let shape_ok = got.as_ref().map(|g| AffineWeylElt::parse_shape(&g.0).ok() == AffineWeylElt::parse_shape("αβγ").ok()).unwrap_or(false);
    let shape_is_length3_non_shadow = got.as_ref().map(|g| g.1 == 3 && !g.2).unwrap_or(false);
    let passed = subset_of_semisimple
        && type_intersection_isolates_shadow
        && orientation_ok
        && shape_ok
        && shape_is_length3_non_shadow
        && formula_products_conjugate
        && rho_product_matches_formula;
    Ok(NssAlphaReport {
        p,
        abc,
        subset_of_semisimple,
        type_intersection_matches_printed: inter == printed,
        type_intersection: strings(&inter),
        printed_type_intersection: strings(&printed),
        type_intersection_isolates_shadow,
        orientation: o.s.iter().map(|&s| perms::cycle_string(s)).collect(),
        orientation_ok,
        printed_a_shape: shape(&printed_a)?.map(|g| g.0),
        displayed_products_conjugate,
        shape_of_a: got.map(|g| g.0),
        shape_ok,
        shape_is_length3_non_shadow,
        formula_products_conjugate,
        rho_product_matches_formula,
        passed,
    })
}

// ---------------------------------------------------------------------------
// All tables at once

#[derive(Clone, Debug, Serialize)]
pub struct SerreTablesReport {
    pub p: u64,
    pub abcs: Vec<[i64; 3]>,
    pub weight_rows: Vec<WeightRowReport>,
    pub jh_rows: Vec<JhRowReport>,
    pub type_rows: Vec<TypeRowReport>,
    pub censuses: Vec<CensusReport>,
    pub weight_rows_ok: bool,
    pub jh_rows_ok: bool,
    pub type_rows_ok: bool,
    pub census_ok: bool,
    pub passed: bool,
}

/// Obvious/shadow weights, Jordan–Hölder constituents, the twelve types with
/// Weyl intersection and the census of intersections, at each (a, b, c).
pub fn verify_serre_tables(p: u64, abcs: &[[i64; 3]]) -> Result<SerreTablesReport, SerreError> {
    use rayon::prelude::*;
    let per: Vec<Result<_, SerreError>> = abcs
        .par_iter()
        .map(|&abc| {
            let w: Vec<WeightRowReport> =
                Family::ALL.iter().map(|&f| verify_weight_row(f, p, abc)).collect::<Result<_, _>>()?;
            let j: Vec<JhRowReport> = DLKind::ALL.iter().map(|&k| verify_jh_row(k, p, abc)).collect::<Result<_, _>>()?;
            let t: Vec<TypeRowReport> = (0..TYPE_TABLE.len()).map(|i| verify_type_row(i, p, abc)).collect::<Result<_, _>>()?;
            let c: Vec<CensusReport> =
                Family::ALL.iter().map(|&f| intersection_census(f, p, abc, 3)).collect::<Result<_, _>>()?;
            Ok((w, j, t, c))
        })
        .collect();
    let mut rep = SerreTablesReport {
        p,
        abcs: abcs.to_vec(),
        weight_rows: Vec::new(),
        jh_rows: Vec::new(),
        type_rows: Vec::new(),
        censuses: Vec::new(),
        weight_rows_ok: true,
        jh_rows_ok: true,
        type_rows_ok: true,
        census_ok: true,
        passed: false,
    };
    for r in per {
        let (w, j, t, c) = r?;
        rep.weight_rows.extend(w);
        rep.jh_rows.extend(j);
        rep.type_rows.extend(t);
        rep.censuses.extend(c);
    }
    rep.weight_rows_ok = rep.weight_rows.iter().all(|r| r.passed);
    rep.jh_rows_ok = rep.jh_rows.iter().all(|r| r.passed);
    rep.type_rows_ok = rep.type_rows.iter().all(|r| r.intersection_ok && r.shape_ok);
    rep.census_ok = rep.censuses.iter().all(|c| {
        c.claim_length4 && c.claim_shadow && c.claim_length3 && c.claim_length2 && c.cardinalities_ok && c.one_type_per_shape
    });
    rep.passed = rep.weight_rows_ok && rep.jh_rows_ok && rep.type_rows_ok && rep.census_ok;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u64 = 101;
    const ABC: [i64; 3] = [71, 40, 13];

    fn wf(s: &str) -> SerreWeight {
        WeightForm::parse(s).unwrap().eval(ABC, P).unwrap()
    }

    #[test]
    fn linear_forms_parse() {
        let f = LinForm::parse("c+p-1").unwrap();
        assert_eq!(f, LinForm { a: 0, b: 0, c: 1, p: 1, k: -1 });
        assert_eq!(LinForm::parse("p-2+c").unwrap(), LinForm::parse("c+p-2").unwrap());
        assert_eq!(LinForm::parse("2a-3").unwrap().eval([5, 0, 0], 7), 7);
        assert!(LinForm::parse("a+x").is_err());
        assert!(LinForm::parse("").is_err());
    }

    #[test]
    fn weights_normalize_by_twist_class() {
        let w = SerreWeight::new(P, [213, 140, 71]).unwrap();
        assert_eq!(w.triple(), [213, 140, 71]);
        assert_eq!(SerreWeight::new(P, [113, 40, -29]).unwrap(), w);
        assert!(SerreWeight::new(P, [10, 20, 0]).is_err());
        assert!(w.is_upper());
        assert_eq!(w.reflect().unwrap().reflect().unwrap(), w);
    }

    #[test]
    fn shadow_of_lower_weight() {
        let lower = SerreWeight::new(P, [ABC[0], ABC[1], ABC[2]]).unwrap();
        assert!(lower.is_lower());
        assert_eq!(lower.reflect().unwrap(), wf("F(p-2+c,b,a-p+2)"));
    }

    #[test]
    fn frobenius_product_principal_series_example() {
        let [a, b, c] = ABC.map(|x| x as i128);
        let pi = P as i128;
        let sigma = TorusData::from_kind(DLKind::PrincipalSeries, P, ABC);
        let w = AffineWeylElt::parse_shape("αβα").unwrap();
        let rho = monomial_rho(&sigma, &w).unwrap().unwrap();
        assert_eq!(rho, TorusData::new(P, &[(1, b + 1), (2, (a + 1) + pi * (c + 1))]));
        assert_eq!(unique_shape(&rho, &sigma).unwrap(), w);
    }

    #[test]
    fn frobenius_product_parabolic_example() {
        let [a, b, c] = ABC;
        let sigma = TorusData::from_kind(DLKind::Parabolic, P, [b + 1, c - 1, a]);
        let t = sigma.tame_type().unwrap();
        let w = AffineWeylElt::parse_shape("βγβ").unwrap();
        let m = frobenius_product(&t, &[LMatrix::from_weyl(P, &w), LMatrix::from_weyl(P, &w)]).unwrap();
        let (perm, exps) = m.monomial_structure().unwrap();
        let pi = P as i64;
        // Follow the 3-cycle e ↦ M e from the basis vector where the printed
        // matrix starts: the exponent sequence agrees with the printed one
        // up to relabeling the basis.
        let start = exps.iter().position(|&e| e == (a + 1) + pi * (b + 1)).unwrap();
        let mut seq = Vec::new();
        let mut k = start;
        for _ in 0..3 {
            seq.push(exps[k]);
            k = perm[k] as usize;
        }
        assert_eq!(k, start);
        assert_eq!(seq, [(a + 1) + pi * (b + 1), (b + 1) + pi * (c + 1), (c + 1) + pi * (a + 1)]);
        let [a, b, c] = ABC.map(|x| x as i128);
        let want = TorusData::new(P, &[(3, (a + 1) + P as i128 * (b + 1) + (P * P) as i128 * (c + 1))]);
        assert_eq!(inertial_of_monomial(P, 2, perm, exps).unwrap(), want);
    }

    #[test]
    fn jh_examples() {
        let ps = jh_factors(&TorusData::from_kind(DLKind::PrincipalSeries, P, ABC)).unwrap();
        assert_eq!(ps.weights.len(), 9);
        assert!(ps.weights.contains(&wf("F(a,b,c)")) && ps.weights.contains(&wf("F(a-1,b,c+1)")));
        let cusp = jh_factors(&TorusData::from_kind(DLKind::Cuspidal, P, ABC)).unwrap();
        assert!(cusp.weights.contains(&wf("F(a-2,b+1,c+1)")));
        assert!(cusp.consistent && !cusp.via_dual);
        let other = jh_factors(&TorusData::from_kind(DLKind::Cuspidal, P, [ABC[0], ABC[2], ABC[1]])).unwrap();
        assert!(other.via_dual && other.weights.len() == 9);
        assert!(jh_factors(&TorusData::from_kind(DLKind::PrincipalSeries, P, [3, 2, 1])).is_err());
    }

    #[test]
    fn w_question_first_family() {
        let ws = w_question(&Family::Split.rho(P, ABC)).unwrap();
        assert_eq!((ws.obvious.len(), ws.shadow.len()), (6, 3));
        assert!(ws.obvious.contains(&wf("F(a-1,b,c+1)")));
        assert!(ws.shadow.contains(&wf("F(c+p-1,b,a-p+1)")));
    }

    #[test]
    fn type_table_first_row() {
        let r = verify_type_row(0, P, ABC).unwrap();
        assert!(r.intersection_ok && r.shape_ok, "{r:?}");
        assert_eq!(r.computed_intersection, vec![wf("F(a-1,b,c+1)").to_string(), wf("F(c+p-1,b,a-p+1)").to_string()]);
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(matches!(verify_weight_row(Family::Split, P, [50, 49, 10]), Err(SerreError::BadParameters(_))));
    }

    #[test]
    fn nss_alpha_construction() {
        let mut rng = crate::rng(1);
        let r = verify_nss_alpha_identity(P, ABC, &mut rng).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.displayed_products_conjugate);
        assert!(!r.type_intersection_matches_printed);
        assert_eq!(r.printed_a_shape, None);
    }

    #[test]
    fn lmatrix_round_trip() {
        let w = AffineWeylElt::parse_shape("αβγ").unwrap();
        let m = LMatrix::from_weyl(P, &w).mul(&LMatrix::diag(P, [-1, 0, 0]));
        let (v, shift) = m.to_vmatrix();
        assert_eq!(LMatrix::from_vmatrix(&v, shift), m);
    }
}
