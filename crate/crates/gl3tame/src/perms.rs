//! Permutations of {0, 1, 2}, stored as image arrays: `s[k]` is the image of
//! `k`, and the associated permutation matrix sends `e_k` to `e_{s[k]}`.

pub type Perm = [u8; 3];

pub const ID: Perm = [0, 1, 2];

pub fn all() -> Vec<Perm> {
    vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
}

/// `compose(s, t)` is `s ∘ t`.
pub fn compose(s: Perm, t: Perm) -> Perm {
    [s[t[0] as usize], s[t[1] as usize], s[t[2] as usize]]
}

pub fn inverse(s: Perm) -> Perm {
    let mut r = [0u8; 3];
    for k in 0..3 {
        r[s[k] as usize] = k as u8;
    }
    r
}

/// Parse one-line cycle notation over {1,2,3}: `id`, `(12)`, `(123)`, ...
pub fn parse_cycle(s: &str) -> Option<Perm> {
    let t = s.trim();
    if t == "id" || t == "()" {
        return Some(ID);
    }
    let inner = t.strip_prefix('(')?.strip_suffix(')')?;
    let pts: Vec<u8> = inner
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as u8))
        .collect::<Option<Vec<u8>>>()?;
    if pts.iter().any(|&d| !(1..=3).contains(&d)) {
        return None;
    }
    let mut r = ID;
    for i in 0..pts.len() {
        let from = pts[i] - 1;
        let to = pts[(i + 1) % pts.len()] - 1;
        r[from as usize] = to;
    }
    Some(r)
}

pub fn cycle_string(s: Perm) -> String {
    if s == ID {
        return "id".into();
    }
    let mut seen = [false; 3];
    let mut out = String::new();
    for start in 0..3 {
        if seen[start] || s[start] as usize == start {
            continue;
        }
        out.push('(');
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            out.push(char::from(b'1' + k as u8));
            k = s[k] as usize;
        }
        out.push(')');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_round_trip() {
        for s in all() {
            assert_eq!(parse_cycle(&cycle_string(s)), Some(s));
            assert_eq!(compose(s, inverse(s)), ID);
        }
        assert_eq!(parse_cycle("(123)"), Some([1, 2, 0]));
    }
}
