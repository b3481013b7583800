//! Ideals with Buchberger's algorithm (normal selection strategy with the
//! Gebauer–Möller criteria), normal forms, and the derived tests used by
//! the verification layers: membership, equality, intersection, radicality
//! via squarefree initial ideals, dimension and Jacobian rank.

use std::sync::{Arc, OnceLock};

use super::field::Field;
use super::mpoly::{MPoly, Mono, MonoOrder, Ring};

#[derive(Clone, Copy, Debug)]
struct Pair {
    i: usize,
    j: usize,
    lcm: Mono,
}

/// Reduce `f` modulo `basis` (full reduction: every term is reduced).
/// The basis is assumed monic.
pub fn reduce<F: Field>(f: &MPoly<F>, basis: &[MPoly<F>]) -> MPoly<F> {
    let ring = f.ring.clone();
    let mut rem: Vec<(Mono, F)> = Vec::new();
    let mut p = f.clone();
    while let Some((m, c)) = p.terms.first().cloned() {
        let mut reduced = false;
        for g in basis {
            let lg = g.lm().unwrap();
            if lg.divides(&m) {
                let q = lg.quotient_of(&m);
                let coef = c.div(g.lc().unwrap()).unwrap();
                p = p.sub(&g.mul_term(&q, &coef));
                reduced = true;
                break;
            }
        }
        if !reduced {
            rem.push((m, c));
            p.terms.remove(0);
        }
    }
    MPoly { ring, terms: rem }
}

/// Reduce only until the leading term is irreducible.
fn top_reduce<F: Field>(f: &MPoly<F>, basis: &[&MPoly<F>]) -> MPoly<F> {
    let mut p = f.clone();
    'outer: while let Some((m, c)) = p.terms.first().cloned() {
        for g in basis {
            let lg = g.lm().unwrap();
            if lg.divides(&m) {
                let q = lg.quotient_of(&m);
                let coef = c.div(g.lc().unwrap()).unwrap();
                p = p.sub(&g.mul_term(&q, &coef));
                continue 'outer;
            }
        }
        break;
    }
    p
}

fn spoly<F: Field>(f: &MPoly<F>, g: &MPoly<F>) -> MPoly<F> {
    let lf = f.lm().unwrap();
    let lg = g.lm().unwrap();
    let l = lf.lcm(lg);
    let a = f.mul_term(&lf.quotient_of(&l), &f.lc().unwrap().inv().unwrap());
    let b = g.mul_term(&lg.quotient_of(&l), &g.lc().unwrap().inv().unwrap());
    a.sub(&b)
}

/// Reduced Gröbner basis of the ideal generated by `gens`.
pub fn groebner<F: Field>(gens: &[MPoly<F>]) -> Vec<MPoly<F>> {
    let ring = match gens.first() {
        Some(g) => g.ring.clone(),
        None => return Vec::new(),
    };
    let ord = ring.order;
    let mut polys: Vec<MPoly<F>> = Vec::new();
    let mut active: Vec<bool> = Vec::new();
    let mut pairs: Vec<Pair> = Vec::new();

    let mut input: Vec<MPoly<F>> = gens.iter().filter(|g| !g.is_zero()).map(|g| g.make_monic()).collect();
    input.sort_by(|a, b| ord.cmp(a.lm().unwrap(), b.lm().unwrap()));
    for g in input {
        let act: Vec<&MPoly<F>> = polys.iter().zip(active.iter()).filter(|(_, a)| **a).map(|(p, _)| p).collect();
        let h = reduce(&g, &act.iter().map(|p| (*p).clone()).collect::<Vec<_>>());
        if h.is_zero() {
            continue;
        }
        update(&mut polys, &mut active, &mut pairs, h.make_monic());
    }

    while !pairs.is_empty() {
        // Normal strategy: least lcm, by degree and then by the order.
        let mut best = 0;
        for k in 1..pairs.len() {
            let a = &pairs[k].lcm;
            let b = &pairs[best].lcm;
            let c = a.deg.cmp(&b.deg).then_with(|| ord.cmp(a, b));
            if c == std::cmp::Ordering::Less {
                best = k;
            }
        }
        let pr = pairs.swap_remove(best);
        let s = spoly(&polys[pr.i], &polys[pr.j]);
        let act: Vec<&MPoly<F>> = polys.iter().zip(active.iter()).filter(|(_, a)| **a).map(|(p, _)| p).collect();
        let h = top_reduce(&s, &act);
        if h.is_zero() {
            continue;
        }
        let h = h.make_monic();
        if h.is_constant() {
            return vec![MPoly::one(&ring)];
        }
        update(&mut polys, &mut active, &mut pairs, h);
    }

    let basis: Vec<MPoly<F>> = polys.into_iter().zip(active).filter(|(_, a)| *a).map(|(p, _)| p).collect();
    interreduce(basis)
}

/// Gebauer–Möller installation of a new basis element.
fn update<F: Field>(polys: &mut Vec<MPoly<F>>, active: &mut Vec<bool>, pairs: &mut Vec<Pair>, h: MPoly<F>) {
    let hi = polys.len();
    let lh = *h.lm().unwrap();
    polys.push(h);
    active.push(true);

    let cands: Vec<Pair> = (0..hi)
        .filter(|&g| active[g])
        .map(|g| Pair { i: g, j: hi, lcm: lh.lcm(polys[g].lm().unwrap()) })
        .collect();

    // Chain criterion among the new pairs.
    let mut kept: Vec<Pair> = Vec::new();
    for (k, c) in cands.iter().enumerate() {
        let lg = polys[c.i].lm().unwrap();
        if lh.coprime(lg) {
            kept.push(*c);
            continue;
        }
        let dominated = cands.iter().enumerate().any(|(k2, d)| {
            k2 != k && d.lcm.divides(&c.lcm) && (d.lcm != c.lcm || k2 < k)
        });
        if !dominated {
            kept.push(*c);
        }
    }
    // Product criterion.
    kept.retain(|c| !lh.coprime(polys[c.i].lm().unwrap()));

    // Drop old pairs made redundant by h.
    pairs.retain(|pr| {
        !(lh.divides(&pr.lcm)
            && lh.lcm(polys[pr.i].lm().unwrap()) != pr.lcm
            && lh.lcm(polys[pr.j].lm().unwrap()) != pr.lcm)
    });
    pairs.extend(kept);

    for g in 0..hi {
        if active[g] && lh.divides(polys[g].lm().unwrap()) {
            active[g] = false;
        }
    }
}

/// Turn a Gröbner basis into the reduced one, sorted by increasing leading
/// monomial.
pub fn interreduce<F: Field>(basis: Vec<MPoly<F>>) -> Vec<MPoly<F>> {
    if basis.is_empty() {
        return basis;
    }
    let ord = basis[0].ring.order;
    let mut b: Vec<MPoly<F>> = basis.into_iter().map(|p| p.make_monic()).collect();
    b.sort_by(|x, y| ord.cmp(x.lm().unwrap(), y.lm().unwrap()));
    let mut minimal: Vec<MPoly<F>> = Vec::new();
    for (k, p) in b.iter().enumerate() {
        let lp = p.lm().unwrap();
        let redundant = b.iter().enumerate().any(|(k2, q)| {
            let lq = q.lm().unwrap();
            k2 != k && lq.divides(lp) && (lq != lp || k2 < k)
        });
        if !redundant {
            minimal.push(p.clone());
        }
    }
    let mut out = Vec::with_capacity(minimal.len());
    for k in 0..minimal.len() {
        let others: Vec<MPoly<F>> = minimal.iter().enumerate().filter(|(k2, _)| *k2 != k).map(|(_, p)| p.clone()).collect();
        let lead = MPoly { ring: minimal[k].ring.clone(), terms: vec![minimal[k].terms[0].clone()] };
        let tail = MPoly { ring: minimal[k].ring.clone(), terms: minimal[k].terms[1..].to_vec() };
        out.push(lead.add(&reduce(&tail, &others)).make_monic());
    }
    out.sort_by(|x, y| ord.cmp(x.lm().unwrap(), y.lm().unwrap()));
    out
}

/// A finitely generated ideal; the reduced Gröbner basis is computed once
/// and cached.
pub struct PolyIdeal<F: Field> {
    pub ring: Arc<Ring<F>>,
    pub gens: Vec<MPoly<F>>,
    gb: OnceLock<Vec<MPoly<F>>>,
}

impl<F: Field> Clone for PolyIdeal<F> {
    fn clone(&self) -> Self {
        let gb = OnceLock::new();
        if let Some(b) = self.gb.get() {
            let _ = gb.set(b.clone());
        }
        PolyIdeal { ring: self.ring.clone(), gens: self.gens.clone(), gb }
    }
}

impl<F: Field> std::fmt::Debug for PolyIdeal<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PolyIdeal{:?}", self.gens)
    }
}

impl<F: Field> PolyIdeal<F> {
    pub fn new(ring: &Arc<Ring<F>>, gens: Vec<MPoly<F>>) -> Self {
        let gens = gens.into_iter().filter(|g| !g.is_zero()).collect();
        PolyIdeal { ring: ring.clone(), gens, gb: OnceLock::new() }
    }

    pub fn groebner(&self) -> &[MPoly<F>] {
        self.gb.get_or_init(|| groebner(&self.gens))
    }

    pub fn normal_form(&self, f: &MPoly<F>) -> MPoly<F> {
        reduce(f, self.groebner())
    }

    pub fn contains(&self, f: &MPoly<F>) -> bool {
        self.normal_form(f).is_zero()
    }

    pub fn is_unit(&self) -> bool {
        self.groebner().iter().any(|g| g.is_constant() && !g.is_zero())
    }

    pub fn leading_monomials(&self) -> Vec<Mono> {
        self.groebner().iter().map(|g| *g.lm().unwrap()).collect()
    }

    pub fn initial_ideal_squarefree(&self) -> bool {
        self.leading_monomials().iter().all(|m| m.is_squarefree())
    }

    pub fn with_gens(&self, extra: &[MPoly<F>]) -> PolyIdeal<F> {
        let mut g = self.gens.clone();
        g.extend(extra.iter().cloned());
        PolyIdeal::new(&self.ring, g)
    }

    pub fn contains_ideal(&self, o: &PolyIdeal<F>) -> bool {
        o.gens.iter().all(|g| self.contains(g))
    }

    pub fn ideal_equal(&self, o: &PolyIdeal<F>) -> bool {
        self.contains_ideal(o) && o.contains_ideal(self)
    }

    /// Krull dimension of the quotient, read off the initial ideal: the
    /// largest set of variables containing the support of no leading
    /// monomial.
    pub fn dimension(&self) -> usize {
        if self.is_unit() {
            return 0;
        }
        let n = self.ring.nvars();
        let supports: Vec<u64> = self
            .leading_monomials()
            .iter()
            .map(|m| m.support().iter().fold(0u64, |acc, &i| acc | (1 << i)))
            .collect();
        let mut best = 0;
        fn search(i: usize, n: usize, cur: u64, size: usize, supports: &[u64], best: &mut usize) {
            if size + (n - i) <= *best {
                return;
            }
            if i == n {
                *best = size;
                return;
            }
            let with = cur | (1 << i);
            if supports.iter().all(|s| s & with != *s) {
                search(i + 1, n, with, size + 1, supports, best);
            }
            search(i + 1, n, cur, size, supports, best);
        }
        search(0, n, 0, 0, &supports, &mut best);
        best
    }

    /// Rank of the linear parts of the generators at the origin. Meaningful
    /// when the ideal is contained in the maximal ideal of the origin.
    pub fn jacobian_rank_at_origin(&self) -> usize {
        let rows: Vec<Vec<F>> = self.gens.iter().map(|g| g.linear_part()).collect();
        rank(rows, &self.ring.ctx)
    }

    /// Intersection through an auxiliary variable t: eliminate t from
    /// t·I + (1 − t)·J.
    pub fn intersect(&self, o: &PolyIdeal<F>) -> PolyIdeal<F> {
        let mut names = vec!["_t".to_string()];
        names.extend(self.ring.names.iter().cloned());
        let big = Ring::<F>::from_names(names, MonoOrder::Block(1), self.ring.ctx.clone());
        let t = MPoly::var(&big, 0);
        let one_minus_t = MPoly::one(&big).sub(&t);
        let mut gens = Vec::new();
        for g in &self.gens {
            gens.push(t.mul(&g.to_ring(&big)));
        }
        for g in &o.gens {
            gens.push(one_minus_t.mul(&g.to_ring(&big)));
        }
        let gb = groebner(&gens);
        let kept: Vec<MPoly<F>> = gb.into_iter().filter(|g| !g.uses_var(0)).map(|g| g.to_ring(&self.ring)).collect();
        PolyIdeal::new(&self.ring, kept)
    }

    /// Saturation I : f^∞, eliminating t from I + (1 − t·f).
    pub fn saturate(&self, f: &MPoly<F>) -> PolyIdeal<F> {
        let mut names = vec!["_t".to_string()];
        names.extend(self.ring.names.iter().cloned());
        let big = Ring::<F>::from_names(names, MonoOrder::Block(1), self.ring.ctx.clone());
        let t = MPoly::var(&big, 0);
        let mut gens: Vec<MPoly<F>> = self.gens.iter().map(|g| g.to_ring(&big)).collect();
        gens.push(MPoly::one(&big).sub(&t.mul(&f.to_ring(&big))));
        let gb = groebner(&gens);
        let kept: Vec<MPoly<F>> = gb.into_iter().filter(|g| !g.uses_var(0)).map(|g| g.to_ring(&self.ring)).collect();
        PolyIdeal::new(&self.ring, kept)
    }

    /// The same ideal over a ring with a different order (variables by name).
    pub fn to_ring(&self, target: &Arc<Ring<F>>) -> PolyIdeal<F> {
        PolyIdeal::new(target, self.gens.iter().map(|g| g.to_ring(target)).collect())
    }

    /// Saturation-free colon by a single element is not needed here; this
    /// helper adjoins an inverse `w` of `f` in a ring that already has `w`.
    pub fn localize(&self, w: usize, f: &MPoly<F>) -> PolyIdeal<F> {
        let rel = MPoly::var(&self.ring, w).mul(f).sub(&MPoly::one(&self.ring));
        self.with_gens(&[rel])
    }
}

/// Rank of a dense matrix over a field by Gaussian elimination.
pub fn rank<F: Field>(mut rows: Vec<Vec<F>>, _ctx: &F::Ctx) -> usize {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut r = 0;
    for c in 0..ncols {
        let piv = (r..rows.len()).find(|&i| !rows[i][c].is_zero());
        let Some(pi) = piv else { continue };
        rows.swap(r, pi);
        let inv = rows[r][c].inv().unwrap();
        let pivot_row: Vec<F> = rows[r].iter().map(|x| x.mul(&inv)).collect();
        rows[r] = pivot_row.clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for k in 0..ncols {
                    let d = pivot_row[k].mul(&f);
                    rows[i][k] = rows[i][k].sub(&d);
                }
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::field::{Fp, Q};
    use crate::polyring::parse::parse_poly;
    use std::collections::HashMap;

    fn ring() -> Arc<Ring<Q>> {
        Ring::new(&["x", "y", "z"], MonoOrder::Lex, ())
    }

    fn p(s: &str, r: &Arc<Ring<Q>>) -> MPoly<Q> {
        parse_poly(s, r, &HashMap::new()).unwrap()
    }

    #[test]
    fn textbook_basis() {
        // Cox–Little–O'Shea: x^2 + y^2 + z^2 - 1, x^2 + z^2 - y, x - z.
        let r = ring();
        let i = PolyIdeal::new(&r, vec![p("x^2+y^2+z^2-1", &r), p("x^2+z^2-y", &r), p("x-z", &r)]);
        let gb = i.groebner();
        assert_eq!(gb.len(), 3);
        assert_eq!(gb[0], p("z^4 + 1/2*z^2 - 1/4", &r));
        assert_eq!(gb[1], p("y - 2*z^2", &r));
        assert_eq!(gb[2], p("x - z", &r));
    }

    #[test]
    fn intersection_of_coordinate_ideals() {
        let r = Ring::<Fp>::new(&["x", "y"], MonoOrder::GrevLex, 101);
        let x = MPoly::var(&r, 0);
        let y = MPoly::var(&r, 1);
        let i = PolyIdeal::new(&r, vec![x.clone()]).intersect(&PolyIdeal::new(&r, vec![y.clone()]));
        assert!(i.ideal_equal(&PolyIdeal::new(&r, vec![x.mul(&y)])));
        assert_eq!(i.dimension(), 1);
    }

    #[test]
    fn unit_ideal_detected() {
        let r = ring();
        let i = PolyIdeal::new(&r, vec![p("x*y-1", &r), p("x", &r)]);
        assert!(i.is_unit());
        assert!(!PolyIdeal::new(&r, vec![p("x*y", &r)]).contains(&MPoly::one(&r)));
    }
}
