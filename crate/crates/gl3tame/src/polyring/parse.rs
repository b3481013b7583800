//! A small recursive-descent reader for polynomial expressions such as
//! `p*c31s*((e-(a-c))*c33*c22s - p*(a-b)*c23*c32)`.
//!
//! Identifiers resolve to ring variables first and then to numeric
//! parameters. Division is allowed only by constant subexpressions.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use super::field::Field;
use super::mpoly::{MPoly, Ring};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected character {0:?} at offset {1}")]
    Unexpected(char, usize),
    #[error("unexpected end of input")]
    Eof,
    #[error("unknown identifier {0:?}")]
    Unknown(String),
    #[error("division by a non-constant or zero expression")]
    BadDivision,
    #[error("trailing input at offset {0}")]
    Trailing(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn normalize(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '−' | '–' => '-',
            '′' | '’' => '\'',
            '·' | '×' => '*',
            _ => c,
        })
        .collect()
}

fn lex(s: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let t: String = chars[start..i].iter().collect();
            out.push((Tok::Num(t.parse().unwrap()), start));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(ParseError::Unexpected(c, i));
        }
    }
    Ok(out)
}

struct Parser<'a, F: Field> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ring: &'a Arc<Ring<F>>,
    params: &'a HashMap<String, F>,
}

impl<'a, F: Field> Parser<'a, F> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<MPoly<F>, ParseError> {
        let mut acc = self.term()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let c = *c;
            if c == '+' || c == '-' {
                self.pos += 1;
                let t = self.term()?;
                acc = if c == '+' { acc.add(&t) } else { acc.sub(&t) };
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<MPoly<F>, ParseError> {
        let mut acc = self.unary()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let c = *c;
            if c == '*' {
                self.pos += 1;
                let t = self.unary()?;
                acc = acc.mul(&t);
            } else if c == '/' {
                self.pos += 1;
                let t = self.unary()?;
                if !t.is_constant() || t.is_zero() {
                    return Err(ParseError::BadDivision);
                }
                let inv = t.constant_term().inv().ok_or(ParseError::BadDivision)?;
                acc = acc.scale(&inv);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<MPoly<F>, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        if let Some(Tok::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<MPoly<F>, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            match self.next() {
                Some(Tok::Num(n)) => {
                    let e: u32 = n.to_string().parse().map_err(|_| ParseError::Eof)?;
                    return Ok(base.pow(e));
                }
                Some(_) => return Err(ParseError::Unexpected('^', self.offset())),
                None => return Err(ParseError::Eof),
            }
        }
        Ok(base)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos.saturating_sub(1)).map(|t| t.1).unwrap_or(0)
    }

    fn atom(&mut self) -> Result<MPoly<F>, ParseError> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(MPoly::constant(self.ring, F::from_bigint(&self.ring.ctx, &n))),
            Some(Tok::Ident(name)) => {
                if let Some(i) = self.ring.index(&name) {
                    Ok(MPoly::var(self.ring, i))
                } else if let Some(v) = self.params.get(&name) {
                    Ok(MPoly::constant(self.ring, v.clone()))
                } else {
                    Err(ParseError::Unknown(name))
                }
            }
            Some(Tok::Op('(')) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::Op(')')) => Ok(e),
                    Some(_) => Err(ParseError::Unexpected(')', self.offset())),
                    None => Err(ParseError::Eof),
                }
            }
            Some(Tok::Op(c)) => Err(ParseError::Unexpected(c, self.offset())),
            None => Err(ParseError::Eof),
        }
    }
}

/// Parse `src` into a polynomial of `ring`, resolving non-variable
/// identifiers through `params`.
pub fn parse_poly<F: Field>(src: &str, ring: &Arc<Ring<F>>, params: &HashMap<String, F>) -> Result<MPoly<F>, ParseError> {
    let toks = lex(&normalize(src))?;
    let mut p = Parser { toks, pos: 0, ring, params };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(ParseError::Trailing(p.toks[p.pos].1));
    }
    Ok(e)
}

/// Offsets of every `+` or `-` sign in an expression that can be flipped
/// without changing its parse structure: binary operators and leading unary
/// minus signs.
pub fn sign_positions(src: &str) -> Vec<usize> {
    let s = normalize(src);
    s.char_indices().filter(|(_, c)| *c == '+' || *c == '-').map(|(i, _)| i).collect()
}

/// Flip the sign at byte offset `pos` of the normalized expression.
pub fn flip_sign(src: &str, pos: usize) -> String {
    let mut s: Vec<char> = normalize(src).chars().collect();
    let idx = normalize(src)[..pos].chars().count();
    s[idx] = if s[idx] == '+' { '-' } else { '+' };
    s.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::field::Q;
    use crate::polyring::mpoly::MonoOrder;

    #[test]
    fn parses_nested_expression() {
        let r = Ring::<Q>::new(&["x", "y", "c13s", "c33'"], MonoOrder::GrevLex, ());
        let mut params = HashMap::new();
        params.insert("p".to_string(), Q::int(7));
        let f = parse_poly("p*(x - y)^2 − c13s*c33′/2", &r, &params).unwrap();
        let g = parse_poly("7*x^2 - 14*x*y + 7*y^2 - c13s*c33'/2", &r, &params).unwrap();
        assert_eq!(f, g);
        assert!(parse_poly("x/(y)", &r, &params).is_err());
        assert!(parse_poly("q", &r, &params).is_err());
    }

    #[test]
    fn flips_signs() {
        let s = "a - b + c";
        let pos = sign_positions(s);
        assert_eq!(pos.len(), 2);
        assert_eq!(flip_sign(s, pos[0]), "a + b + c");
    }
}
