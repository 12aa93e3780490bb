//! Recursive-descent parser for the ASCII formula grammar:
//!
//! ```text
//! or      := and ('|' and)*
//! and     := unary ('&' unary)*
//! unary   := '!' unary | ('F' | 'G') '[' int ',' int ']' unary | atom
//! atom    := '(' or ')' | pred
//! pred    := term ('>=' | '<=' | '>' | '<') number
//! term    := var | '(' number '*' var (('+' | '-') number '*' var)* ')'
//! var     := 'x' | 'y' | 'x' int
//! ```
//!
//! Strict comparisons are accepted as aliases of the non-strict ones, since
//! robustness does not distinguish them.

use super::{Cmp, Formula, Interval, Predicate};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("malformed interval at offset {pos}: start {start} exceeds end {end}")]
    Interval { pos: usize, start: usize, end: usize },
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let f = p.or()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut cs = vec![self.and()?];
        while self.eat(b'|') {
            cs.push(self.and()?);
        }
        Ok(Formula::or(cs))
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut cs = vec![self.unary()?];
        while self.eat(b'&') {
            cs.push(self.unary()?);
        }
        Ok(Formula::and(cs))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(op @ (b'F' | b'G')) => {
                self.pos += 1;
                let iv = self.interval()?;
                let body = Box::new(self.unary()?);
                Ok(if op == b'F' {
                    Formula::Eventually(iv, body)
                } else {
                    Formula::Always(iv, body)
                })
            }
            Some(b'(') => {
                let save = self.pos;
                if let Ok(p) = self.affine_predicate() {
                    return Ok(Formula::Pred(p));
                }
                self.pos = save + 1;
                let f = self.or()?;
                self.expect(b')')?;
                Ok(f)
            }
            Some(_) => Ok(Formula::Pred(self.axis_predicate()?)),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let at = self.pos;
        self.expect(b'[')?;
        let start = self.uint()?;
        self.expect(b',')?;
        let end = self.uint()?;
        self.expect(b']')?;
        Interval::new(start, end).ok_or(ParseError::Interval { pos: at, start, end })
    }

    fn uint(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let begin = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if begin == self.pos {
            return Err(self.err("expected non-negative integer"));
        }
        std::str::from_utf8(&self.src[begin..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("integer out of range"))
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let begin = self.pos;
        let mut prev = 0u8;
        while let Some(&c) = self.src.get(self.pos) {
            let sign_ok = (c == b'-' || c == b'+') && (self.pos == begin || prev == b'e' || prev == b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || sign_ok {
                prev = c;
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[begin..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = begin;
                Err(self.err("expected number"))
            }
        }
    }

    fn var(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(b'y') => {
                self.pos += 1;
                Ok(1)
            }
            Some(b'x') => {
                self.pos += 1;
                if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    let k = self.uint()?;
                    if k == 0 {
                        return Err(self.err("variables are numbered from x1"));
                    }
                    Ok(k - 1)
                } else {
                    Ok(0)
                }
            }
            _ => Err(self.err("expected variable")),
        }
    }

    fn cmp(&mut self) -> Result<Cmp, ParseError> {
        let c = match self.peek() {
            Some(b'>') => Cmp::Ge,
            Some(b'<') => Cmp::Le,
            _ => return Err(self.err("expected comparison")),
        };
        self.pos += 1;
        if self.src.get(self.pos) == Some(&b'=') {
            self.pos += 1;
        }
        Ok(c)
    }

    fn axis_predicate(&mut self) -> Result<Predicate, ParseError> {
        let var = self.var()?;
        let cmp = self.cmp()?;
        let threshold = self.number()?;
        Ok(Predicate::Axis { var, cmp, threshold })
    }

    fn affine_predicate(&mut self) -> Result<Predicate, ParseError> {
        self.expect(b'(')?;
        let mut terms: Vec<(usize, f64)> = Vec::new();
        let mut negate = false;
        loop {
            let mut c = self.number()?;
            if negate {
                c = -c;
            }
            self.expect(b'*')?;
            terms.push((self.var()?, c));
            match self.peek() {
                Some(b'+') => negate = false,
                Some(b'-') => negate = true,
                _ => break,
            }
            self.pos += 1;
        }
        self.expect(b')')?;
        let cmp = self.cmp()?;
        let threshold = self.number()?;
        let dim = terms.iter().map(|(v, _)| v + 1).max().unwrap_or(0);
        let mut weights = vec![0.0; dim];
        for (v, c) in terms {
            weights[v] += c;
        }
        Ok(Predicate::Affine { weights, cmp, threshold })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eventually_conjunction() {
        let f = parse_formula("F[0,10]((x >= 3) & (x <= 5))").unwrap();
        let want = Formula::eventually(0, 10, Formula::And(vec![Formula::ge(0, 3.0), Formula::le(0, 5.0)]));
        assert_eq!(f, want);
    }

    #[test]
    fn open_sea() {
        let f = parse_formula("G[0,59](x >= 34.6)").unwrap();
        assert_eq!(f, Formula::always(0, 59, Formula::ge(0, 34.6)));
        // Strict comparisons as in the printed tables.
        assert_eq!(parse_formula("G[0,59](x>34.6)").unwrap(), f);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_formula("F[0,10"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_formula("F[5,2](x >= 1)"), Err(ParseError::Interval { start: 5, end: 2, .. })));
        assert!(parse_formula("x >= ").is_err());
        assert!(parse_formula("(x >= 1").is_err());
        assert!(parse_formula("x >= 1 )").is_err());
        assert!(parse_formula("z >= 1").is_err());
        assert!(parse_formula("").is_err());
    }

    #[test]
    fn affine_and_aliases() {
        let f = parse_formula("(2*x1 - 0.5*x3) <= -1e-2").unwrap();
        assert_eq!(f, Formula::pred(Predicate::affine(vec![2.0, 0.0, -0.5], Cmp::Le, -0.01)));
        assert_eq!(parse_formula("x2 >= 1").unwrap(), parse_formula("y >= 1").unwrap());
        assert_eq!(parse_formula("x1 >= 1").unwrap(), parse_formula("x >= 1").unwrap());
    }

    #[test]
    fn precedence() {
        let f = parse_formula("!x >= 1 & y <= 2 | F[0,1] x >= 0").unwrap();
        let want = Formula::Or(vec![
            Formula::And(vec![Formula::not(Formula::ge(0, 1.0)), Formula::le(1, 2.0)]),
            Formula::eventually(0, 1, Formula::ge(0, 0.0)),
        ]);
        assert_eq!(f, want);
    }
}
