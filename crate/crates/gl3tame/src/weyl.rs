//! The extended affine Weyl group of GL3, realized as monomial matrices over
//! F((v)), with Coxeter length, Bruhat order and the (2,1,0)-admissible set.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeylError {
    #[error("element has determinant valuation {0}, expected {1}")]
    WrongDeterminant(i32, i32),
    #[error("cannot parse word {0:?}")]
    BadWord(String),
}

/// A monomial matrix: column `m` has its unique nonzero entry `v^exps[m]` in
/// row `perm[m]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AffineWeylElt {
    pub perm: [u8; 3],
    pub exps: [i32; 3],
}

/// The three simple reflections of the affine Weyl group of SL3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    Alpha,
    Beta,
    Gamma,
}

pub const GENS: [Gen; 3] = [Gen::Alpha, Gen::Beta, Gen::Gamma];

impl Gen {
    pub fn elt(self) -> AffineWeylElt {
        match self {
            Gen::Alpha => AffineWeylElt { perm: [1, 0, 2], exps: [0, 0, 0] },
            Gen::Beta => AffineWeylElt { perm: [0, 2, 1], exps: [0, 0, 0] },
            Gen::Gamma => AffineWeylElt { perm: [2, 1, 0], exps: [1, 0, -1] },
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Gen::Alpha => 'α',
            Gen::Beta => 'β',
            Gen::Gamma => 'γ',
        }
    }

    pub fn ascii(self) -> char {
        match self {
            Gen::Alpha => 'a',
            Gen::Beta => 'b',
            Gen::Gamma => 'g',
        }
    }
}

impl AffineWeylElt {
    pub const IDENTITY: AffineWeylElt = AffineWeylElt { perm: [0, 1, 2], exps: [0, 0, 0] };

    pub fn delta() -> Self {
        AffineWeylElt { perm: [1, 2, 0], exps: [0, 0, -1] }
    }

    /// The scalar matrix v·Id.
    pub fn v() -> Self {
        AffineWeylElt { perm: [0, 1, 2], exps: [1, 1, 1] }
    }

    /// Translation by the cocharacter `lambda`, i.e. diag(v^λ1, v^λ2, v^λ3).
    pub fn translation(lambda: [i32; 3]) -> Self {
        AffineWeylElt { perm: [0, 1, 2], exps: lambda }
    }

    /// The permutation matrix with `s(k)` in column `k`.
    pub fn from_perm(perm: [u8; 3]) -> Self {
        AffineWeylElt { perm, exps: [0, 0, 0] }
    }

    pub fn multiply(&self, y: &AffineWeylElt) -> AffineWeylElt {
        let mut perm = [0u8; 3];
        let mut exps = [0i32; 3];
        for m in 0..3 {
            let r = y.perm[m] as usize;
            perm[m] = self.perm[r];
            exps[m] = y.exps[m] + self.exps[r];
        }
        AffineWeylElt { perm, exps }
    }

    pub fn inverse(&self) -> AffineWeylElt {
        let mut perm = [0u8; 3];
        let mut exps = [0i32; 3];
        for m in 0..3 {
            let r = self.perm[m] as usize;
            perm[r] = m as u8;
            exps[r] = -self.exps[m];
        }
        AffineWeylElt { perm, exps }
    }

    pub fn det_valuation(&self) -> i32 {
        self.exps.iter().sum()
    }

    /// Sign of the underlying permutation.
    pub fn perm_sign(&self) -> i32 {
        let p = self.perm;
        let mut inv = 0;
        for i in 0..3 {
            for j in i + 1..3 {
                if p[i] > p[j] {
                    inv += 1;
                }
            }
        }
        if inv % 2 == 0 { 1 } else { -1 }
    }

    /// Entry `(row, col)` as `Some(exponent)` when nonzero.
    pub fn entry(&self, row: usize, col: usize) -> Option<i32> {
        (self.perm[col] as usize == row).then(|| self.exps[col])
    }

    /// Dense matrix of v-exponents, `None` marking zero entries.
    pub fn matrix(&self) -> [[Option<i32>; 3]; 3] {
        let mut m = [[None; 3]; 3];
        for col in 0..3 {
            m[self.perm[col] as usize][col] = Some(self.exps[col]);
        }
        m
    }

    pub fn delta_conjugate(&self) -> AffineWeylElt {
        let d = Self::delta();
        d.multiply(self).multiply(&d.inverse())
    }

    /// Strip the scalar factor v from an element of v·W̃⁰.
    pub fn affine_part(&self) -> Result<AffineWeylElt, WeylError> {
        let dv = self.det_valuation();
        if dv != 3 {
            return Err(WeylError::WrongDeterminant(dv, 3));
        }
        Ok(Self::v().inverse().multiply(self))
    }

    /// Multiply out a word over α, β, γ, returning the element of W̃⁰.
    pub fn from_word(word: &[Gen]) -> AffineWeylElt {
        word.iter().fold(Self::IDENTITY, |acc, g| acc.multiply(&g.elt()))
    }

    /// Parse a word such as `αβαγ`, `abag` or `id` into the element v·w of
    /// v·W̃⁰.
    pub fn parse_shape(s: &str) -> Result<AffineWeylElt, WeylError> {
        let w = parse_word(s)?;
        Ok(Self::v().multiply(&Self::from_word(&w)))
    }
}

impl fmt::Display for AffineWeylElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.affine_part() {
            Ok(w) => match reduced_word(&w) {
                Some(word) => write!(f, "v·{}", word_string(&word)),
                None => write!(f, "{:?}", self),
            },
            Err(_) => match reduced_word(self) {
                Some(word) => write!(f, "{}", word_string(&word)),
                None => write!(f, "perm={:?} exps={:?}", self.perm, self.exps),
            },
        }
    }
}

pub fn parse_word(s: &str) -> Result<Vec<Gen>, WeylError> {
    let t = s.trim();
    if t.is_empty() || t == "id" || t == "Id" || t == "1" {
        return Ok(Vec::new());
    }
    t.chars()
        .filter(|c| !c.is_whitespace() && *c != '·' && *c != '*')
        .map(|c| match c {
            'α' | 'a' => Ok(Gen::Alpha),
            'β' | 'b' => Ok(Gen::Beta),
            'γ' | 'g' => Ok(Gen::Gamma),
            _ => Err(WeylError::BadWord(s.to_string())),
        })
        .collect()
}

pub fn word_string(word: &[Gen]) -> String {
    if word.is_empty() {
        "id".to_string()
    } else {
        word.iter().map(|g| g.symbol()).collect()
    }
}

pub fn word_ascii(word: &[Gen]) -> String {
    if word.is_empty() {
        "id".to_string()
    } else {
        word.iter().map(|g| g.ascii()).collect()
    }
}

/// Breadth-first layers of W̃⁰ with lexicographically least reduced words,
/// grown on demand.
struct BfsCache {
    words: HashMap<AffineWeylElt, Vec<Gen>>,
    frontier: Vec<AffineWeylElt>,
    depth: usize,
}

impl BfsCache {
    fn new() -> Self {
        let mut words = HashMap::new();
        words.insert(AffineWeylElt::IDENTITY, Vec::new());
        BfsCache { words, frontier: vec![AffineWeylElt::IDENTITY], depth: 0 }
    }

    fn grow(&mut self) {
        let mut next: HashMap<AffineWeylElt, Vec<Gen>> = HashMap::new();
        for w in &self.frontier {
            let base = &self.words[w];
            for g in GENS {
                let x = w.multiply(&g.elt());
                if self.words.contains_key(&x) {
                    continue;
                }
                let mut cand = base.clone();
                cand.push(g);
                match next.get(&x) {
                    Some(old) if *old <= cand => {}
                    _ => {
                        next.insert(x, cand);
                    }
                }
            }
        }
        let mut frontier: Vec<AffineWeylElt> = next.keys().copied().collect();
        frontier.sort();
        self.words.extend(next);
        self.frontier = frontier;
        self.depth += 1;
    }
}

fn bfs_cache() -> &'static Mutex<BfsCache> {
    static CACHE: OnceLock<Mutex<BfsCache>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BfsCache::new()))
}

/// Lexicographically least reduced word of an element of W̃⁰, or `None`
/// when the element has nonzero determinant valuation.
pub fn reduced_word(w: &AffineWeylElt) -> Option<Vec<Gen>> {
    if w.det_valuation() != 0 {
        return None;
    }
    let mut cache = bfs_cache().lock().unwrap_or_else(|e| e.into_inner());
    loop {
        if let Some(word) = cache.words.get(w) {
            return Some(word.clone());
        }
        cache.grow();
    }
}

/// Coxeter length of an element of v·W̃⁰.
pub fn length(w: &AffineWeylElt) -> Result<usize, WeylError> {
    let a = w.affine_part()?;
    Ok(reduced_word(&a).map(|x| x.len()).unwrap_or(0))
}

fn len0(w: &AffineWeylElt) -> usize {
    reduced_word(w).map(|x| x.len()).expect("element of the affine Weyl group")
}

fn leq0(x: &AffineWeylElt, y: &AffineWeylElt) -> bool {
    let ly = len0(y);
    let lx = len0(x);
    if lx > ly {
        return false;
    }
    if ly == 0 {
        return lx == 0;
    }
    let s = reduced_word(y).unwrap()[0].elt();
    let sy = s.multiply(y);
    let sx = s.multiply(x);
    if len0(&sx) < lx {
        leq0(&sx, &sy)
    } else {
        leq0(x, &sy)
    }
}

/// Bruhat order on v·W̃⁰, computed with the left-descent recursion.
pub fn bruhat_leq(x: &AffineWeylElt, y: &AffineWeylElt) -> Result<bool, WeylError> {
    let x0 = x.affine_part()?;
    let y0 = y.affine_part()?;
    Ok(leq0(&x0, &y0))
}

/// Labels of the admissible elements, grouped by length as they are
/// conventionally listed.
pub const ADM_LABELS: [&str; 25] = [
    "αβαγ", "βγαγ", "βγβα", "γαβα", "αγαβ", "αβγβ",
    "γαβ", "αγβ", "αβγ", "βαγ", "βγα", "γβα",
    "γαγ", "αβα", "βγβ",
    "γα", "αγ", "βα", "αβ", "βγ", "γβ",
    "α", "β", "γ",
    "id",
];

/// Labels of the length-3 elements called shadows.
pub const SHADOW_LABELS: [&str; 3] = ["γαγ", "αβα", "βγβ"];

/// Representatives of the nine δ-orbits, one per shape family carrying an
/// explicit template.
pub const ORBIT_REPS: [&str; 9] = ["αβαγ", "βγαγ", "βαγ", "αβγ", "αβα", "αβ", "βα", "α", "id"];

#[derive(Clone, Debug, Serialize)]
pub struct AdmEntry {
    pub label: String,
    pub element: AffineWeylElt,
    pub word: String,
    pub length: usize,
    pub orbit: usize,
    pub shadow: bool,
}

#[derive(Clone, Debug)]
pub struct AdmissibleSet {
    pub entries: Vec<AdmEntry>,
}

impl AdmissibleSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, w: &AffineWeylElt) -> bool {
        self.entries.iter().any(|e| e.element == *w)
    }

    pub fn get(&self, w: &AffineWeylElt) -> Option<&AdmEntry> {
        self.entries.iter().find(|e| e.element == *w)
    }

    pub fn by_label(&self, label: &str) -> Option<&AdmEntry> {
        let w = AffineWeylElt::parse_shape(label).ok()?;
        self.get(&w)
    }

    pub fn orbit_count(&self) -> usize {
        self.entries.iter().map(|e| e.orbit).max().map(|m| m + 1).unwrap_or(0)
    }

    pub fn length_distribution(&self) -> [usize; 5] {
        let mut d = [0usize; 5];
        for e in &self.entries {
            d[e.length] += 1;
        }
        d
    }
}

/// The six translations t_{s(2,1,0)}.
pub fn top_translations() -> Vec<AffineWeylElt> {
    let mut v: Vec<AffineWeylElt> = crate::perms::all()
        .into_iter()
        .map(|s| {
            let mut lam = [0i32; 3];
            for k in 0..3 {
                lam[s[k] as usize] = [2, 1, 0][k];
            }
            AffineWeylElt::translation(lam)
        })
        .collect();
    v.sort();
    v
}

/// Enumerate Adm(2,1,0) as the Bruhat lower set of the six translations.
pub fn adm_210() -> AdmissibleSet {
    let tops = top_translations();
    let mut found: Vec<AffineWeylElt> = Vec::new();
    {
        let mut cache = bfs_cache().lock().unwrap_or_else(|e| e.into_inner());
        while cache.depth < 4 {
            cache.grow();
        }
        for (w, word) in cache.words.iter() {
            if word.len() <= 4 {
                found.push(AffineWeylElt::v().multiply(w));
            }
        }
    }
    found.retain(|x| tops.iter().any(|t| bruhat_leq(x, t).unwrap()));

    let mut entries: Vec<AdmEntry> = Vec::new();
    for label in ADM_LABELS {
        let w = AffineWeylElt::parse_shape(label).unwrap();
        if let Some(pos) = found.iter().position(|x| *x == w) {
            found.remove(pos);
            let l = length(&w).unwrap();
            entries.push(AdmEntry {
                label: label.to_string(),
                element: w,
                word: word_string(&reduced_word(&w.affine_part().unwrap()).unwrap()),
                length: l,
                orbit: usize::MAX,
                shadow: SHADOW_LABELS.contains(&label),
            });
        }
    }
    // Anything not named by a label is still admissible; append it so a
    // labelling mistake shows up as a count mismatch rather than a loss.
    found.sort();
    for w in found {
        let word = word_string(&reduced_word(&w.affine_part().unwrap()).unwrap());
        entries.push(AdmEntry {
            label: word.clone(),
            element: w,
            word,
            length: length(&w).unwrap(),
            orbit: usize::MAX,
            shadow: false,
        });
    }
    let mut next = 0;
    for i in 0..entries.len() {
        if entries[i].orbit != usize::MAX {
            continue;
        }
        let mut x = entries[i].element;
        loop {
            if let Some(e) = entries.iter_mut().find(|e| e.element == x) {
                if e.orbit != usize::MAX {
                    break;
                }
                e.orbit = next;
            }
            x = x.delta_conjugate();
        }
        next += 1;
    }
    AdmissibleSet { entries }
}

/// Subword oracle: all products of subwords of every reduced word of `y`.
/// Exponential in the length; intended for tests on short elements.
pub fn subword_oracle_leq(x: &AffineWeylElt, y: &AffineWeylElt) -> bool {
    let x0 = match x.affine_part() {
        Ok(a) => a,
        Err(_) => return false,
    };
    let y0 = match y.affine_part() {
        Ok(a) => a,
        Err(_) => return false,
    };
    for word in all_reduced_words(&y0) {
        let n = word.len();
        for mask in 0u32..(1u32 << n) {
            let mut acc = AffineWeylElt::IDENTITY;
            for (i, g) in word.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    acc = acc.multiply(&g.elt());
                }
            }
            if acc == x0 {
                return true;
            }
        }
    }
    false
}

/// Every reduced word of an element of W̃⁰.
pub fn all_reduced_words(w: &AffineWeylElt) -> Vec<Vec<Gen>> {
    let l = len0(w);
    if l == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for g in GENS {
        let prev = w.multiply(&g.elt());
        if len0(&prev) + 1 == l {
            for mut word in all_reduced_words(&prev) {
                word.push(g);
                out.push(word);
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_relations() {
        let d = AffineWeylElt::delta();
        let di = d.inverse();
        assert_eq!(d.multiply(&Gen::Alpha.elt()).multiply(&di), Gen::Beta.elt());
        assert_eq!(d.multiply(&Gen::Beta.elt()).multiply(&di), Gen::Gamma.elt());
        assert_eq!(d.multiply(&Gen::Gamma.elt()).multiply(&di), Gen::Alpha.elt());
        for g in GENS {
            assert_eq!(g.elt().multiply(&g.elt()), AffineWeylElt::IDENTITY);
        }
    }

    #[test]
    fn translations_have_expected_words() {
        let t = AffineWeylElt::translation([2, 1, 0]);
        assert_eq!(t, AffineWeylElt::parse_shape("αβαγ").unwrap());
        assert_eq!(length(&t).unwrap(), 4);
        assert_eq!(AffineWeylElt::translation([0, 1, 2]), AffineWeylElt::parse_shape("γαβα").unwrap());
        assert_eq!(AffineWeylElt::translation([1, 2, 0]), AffineWeylElt::parse_shape("βγαγ").unwrap());
    }

    #[test]
    fn small_bruhat_facts() {
        let a = AffineWeylElt::parse_shape("α").unwrap();
        let ab = AffineWeylElt::parse_shape("αβ").unwrap();
        assert!(bruhat_leq(&a, &ab).unwrap());
        let t210 = AffineWeylElt::translation([2, 1, 0]);
        let t012 = AffineWeylElt::translation([0, 1, 2]);
        assert!(!bruhat_leq(&t210, &t012).unwrap());
        assert!(bruhat_leq(&AffineWeylElt::v(), &t012).unwrap());
    }

    #[test]
    fn admissible_set_shape() {
        let adm = adm_210();
        assert_eq!(adm.len(), 25);
        assert_eq!(adm.length_distribution(), [1, 3, 6, 9, 6]);
        assert_eq!(adm.orbit_count(), 9);
        for e in &adm.entries {
            assert!(ADM_LABELS.contains(&e.label.as_str()), "{}", e.label);
        }
        let aba = AffineWeylElt::parse_shape("αβα").unwrap();
        assert_eq!(aba.delta_conjugate(), AffineWeylElt::parse_shape("βγβ").unwrap());
    }

    #[test]
    fn rejects_wrong_determinant() {
        assert!(length(&AffineWeylElt::IDENTITY).is_err());
    }
}
