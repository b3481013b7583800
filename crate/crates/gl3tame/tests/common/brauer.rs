//! Brauer characters of GL3(F_p) evaluated in F_ℓ, with ℓ ≡ 1 modulo the
//! exponent of the three maximal tori, as an independent check of
//! Jordan–Hölder decompositions.
//!
//! Irreducible F(λ) has the Weyl character of λ (lower alcove) or the
//! difference of the Weyl characters of λ and its reflection (upper
//! alcove). Deligne–Lusztig characters are evaluated at regular elements
//! of each torus by the character formula.

#![allow(dead_code)]

use gl3tame::serreweights::{DLKind, SerreWeight, TorusData};
use rand::Rng;

pub struct Oracle {
    pub p: u64,
    pub ell: u64,
    /// Generators of the cyclic groups F_{p^r}^× inside F_ℓ^×, r = 1, 2, 3.
    pub zeta: [u64; 3],
    pub order: [u64; 3],
}

fn mulm(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn powm(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a, m);
        }
        a = mulm(a, a, m);
        e >>= 1;
    }
    r
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'w: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powm(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulm(x, x, n);
            if x == n - 1 {
                continue 'w;
            }
        }
        return false;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            out.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl Oracle {
    pub fn new(p: u64) -> Oracle {
        let m = (p - 1) * (p + 1) * (p * p + p + 1);
        let mut k = 1;
        let ell = loop {
            if is_prime(k * m + 1) {
                break k * m + 1;
            }
            k += 1;
        };
        let factors = prime_factors(m);
        let mut x = 2u64;
        let g = loop {
            let g = powm(x, (ell - 1) / m, ell);
            if factors.iter().all(|&q| powm(g, m / q, ell) != 1) {
                break g;
            }
            x += 1;
        };
        let order = [p - 1, p * p - 1, p * p * p - 1];
        let zeta = order.map(|o| powm(g, m / o, ell));
        Oracle { p, ell, zeta, order }
    }

    fn pw(&self, r: usize, e: i64) -> u64 {
        powm(self.zeta[r], e.rem_euclid(self.order[r] as i64) as u64, self.ell)
    }

    fn det3(&self, m: [[u64; 3]; 3]) -> u64 {
        let l = self.ell;
        let t = |a: u64, b: u64, c: u64| mulm(mulm(a, b, l), c, l);
        let pos = (t(m[0][0], m[1][1], m[2][2]) + t(m[0][1], m[1][2], m[2][0]) + t(m[0][2], m[1][0], m[2][1])) % l;
        let neg = (t(m[0][2], m[1][1], m[2][0]) + t(m[0][0], m[1][2], m[2][1]) + t(m[0][1], m[1][0], m[2][2])) % l;
        (pos + l - neg) % l
    }

    /// Weyl character of λ at eigenvalues ζ_r^{e_j}.
    fn weyl(&self, r: usize, e: [i64; 3], lam: [i64; 3]) -> u64 {
        let rho = [2i64, 1, 0];
        let num = self.det3(std::array::from_fn(|i| std::array::from_fn(|j| self.pw(r, e[j] * (lam[i] + rho[i])))));
        let den = self.det3(std::array::from_fn(|i| std::array::from_fn(|j| self.pw(r, e[j] * rho[i]))));
        mulm(num, powm(den, self.ell - 2, self.ell), self.ell)
    }

    pub fn weight_char(&self, r: usize, e: [i64; 3], w: &SerreWeight) -> u64 {
        let p = self.p as i64;
        let [x, y, z] = w.triple();
        let main = self.weyl(r, e, [x, y, z]);
        if w.is_upper() {
            let sub = self.weyl(r, e, [z + p - 2, y, x - p + 2]);
            (main + self.ell - sub) % self.ell
        } else {
            main
        }
    }

    /// Deligne–Lusztig character at the regular element of torus r with
    /// eigenvalue exponents `e` (in Z/(p^{r+1} - 1) for the non-split
    /// blocks; see `random_regular`).
    pub fn dl_char(&self, sigma: &TorusData, r: usize, e: [i64; 3]) -> u64 {
        let l = self.ell;
        let p = self.p as i64;
        match (sigma.kind().unwrap(), r) {
            (DLKind::PrincipalSeries, 0) => {
                let x: Vec<i64> = sigma.pieces.iter().map(|pc| pc.n as i64).collect();
                let mut acc = 0u64;
                for s in gl3tame::perms::all() {
                    let mut t = 1u64;
                    for i in 0..3 {
                        t = mulm(t, self.pw(0, x[i] * e[s[i] as usize]), l);
                    }
                    acc = (acc + t) % l;
                }
                acc
            }
            (DLKind::Parabolic, 1) => {
                // e = (split exponent in Z/(p-1), f, p·f) with f in Z/(p²-1).
                let x = sigma.pieces[0].n as i64;
                let n = sigma.pieces[1].n as i64;
                let chi = self.pw(0, x * e[0]);
                let psi = (self.pw(1, n * e[1]) + self.pw(1, n * e[2])) % l;
                (l - mulm(chi, psi, l)) % l
            }
            (DLKind::Cuspidal, 2) => {
                let n = sigma.pieces[0].n as i64;
                let mut acc = 0u64;
                for i in 0..3 {
                    acc = (acc + self.pw(2, n * e[i])) % l;
                }
                let _ = p;
                acc
            }
            _ => 0,
        }
    }

    /// A random regular element of torus r: the exponents used by
    /// `dl_char`, and the eigenvalue exponents of ζ_r used by `weight_char`.
    pub fn random_regular<R: Rng>(&self, r: usize, rng: &mut R) -> ([i64; 3], [i64; 3]) {
        let p = self.p as i64;
        loop {
            match r {
                0 => {
                    let e: [i64; 3] = std::array::from_fn(|_| rng.gen_range(0..p - 1));
                    if e[0] != e[1] && e[1] != e[2] && e[0] != e[2] {
                        return (e, e);
                    }
                }
                1 => {
                    let q = p * p - 1;
                    let t = rng.gen_range(0..p - 1);
                    let f = rng.gen_range(0..q);
                    let fp = (f * p) % q;
                    let tl = t * (p + 1);
                    if f != fp && tl != f && tl != fp {
                        return ([t, f, fp], [tl, f, fp]);
                    }
                }
                _ => {
                    let q = p * p * p - 1;
                    let f = rng.gen_range(0..q);
                    let e = [f, (f * p) % q, (f * p % q) * p % q];
                    if e[0] != e[1] && e[1] != e[2] && e[0] != e[2] {
                        return (e, e);
                    }
                }
            }
        }
    }

    /// Whether Σ_{F ∈ weights} ch F agrees with ch σ at `samples` random
    /// regular elements of each torus, and the dimensions agree.
    pub fn decomposes<R: Rng>(&self, sigma: &TorusData, weights: &[SerreWeight], samples: usize, rng: &mut R) -> bool {
        let dim: i64 = weights.iter().map(|w| w.dimension()).sum();
        if dim != sigma.kind().unwrap().dimension(self.p) {
            return false;
        }
        for r in 0..3 {
            for _ in 0..samples {
                let (e_dl, e_w) = self.random_regular(r, rng);
                let lhs = weights.iter().fold(0u64, |acc, w| (acc + self.weight_char(r, e_w, w)) % self.ell);
                if lhs != self.dl_char(sigma, r, e_dl) {
                    return false;
                }
            }
        }
        true
    }
}
