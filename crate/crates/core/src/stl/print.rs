use super::{Formula, Predicate};
use std::fmt::Write;

/// How thresholds and coefficients are rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Fixed number of decimal places.
    Fixed(usize),
    /// Shortest representation that parses back to the same `f64`.
    Exact,
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Fixed(1)
    }
}

/// Prints with one decimal place, e.g. `G[5,28](y >= 23.6)`.
pub fn print_formula(phi: &Formula) -> String {
    print_formula_with(phi, Precision::default())
}

pub fn print_formula_with(phi: &Formula, precision: Precision) -> String {
    let mut out = String::new();
    Printer { precision, out: &mut out }.top(phi);
    out
}

struct Printer<'a> {
    precision: Precision,
    out: &'a mut String,
}

impl Printer<'_> {
    fn top(&mut self, phi: &Formula) {
        match phi {
            Formula::Pred(p) => self.predicate(p),
            Formula::Or(cs) => self.join(cs, " | "),
            _ => self.operand(phi),
        }
    }

    /// Inside a temporal operator's parentheses.
    fn body(&mut self, phi: &Formula) {
        match phi {
            Formula::Pred(p) => self.predicate(p),
            Formula::And(cs) => self.join(cs, " & "),
            Formula::Or(cs) => self.join(cs, " | "),
            _ => self.operand(phi),
        }
    }

    /// Self-delimiting form usable as an operand of `!`, `&` or `|`.
    fn operand(&mut self, phi: &Formula) {
        match phi {
            Formula::Pred(p) => {
                self.out.push('(');
                self.predicate(p);
                self.out.push(')');
            }
            Formula::Not(c) => {
                self.out.push('!');
                self.operand(c);
            }
            Formula::And(cs) => {
                self.out.push('(');
                self.join(cs, " & ");
                self.out.push(')');
            }
            Formula::Or(cs) => {
                self.out.push('(');
                self.join(cs, " | ");
                self.out.push(')');
            }
            Formula::Eventually(iv, c) | Formula::Always(iv, c) => {
                let op = if matches!(phi, Formula::Eventually(..)) { 'F' } else { 'G' };
                let _ = write!(self.out, "{op}[{},{}](", iv.start, iv.end);
                self.body(c);
                self.out.push(')');
            }
        }
    }

    fn join(&mut self, cs: &[Formula], sep: &str) {
        for (i, c) in cs.iter().enumerate() {
            if i > 0 {
                self.out.push_str(sep);
            }
            self.operand(c);
        }
    }

    fn predicate(&mut self, p: &Predicate) {
        match p {
            Predicate::Axis { var, cmp, threshold } => {
                let _ = write!(self.out, "{} {} {}", var_name(*var), cmp.symbol(), self.num(*threshold));
            }
            Predicate::Affine { weights, cmp, threshold } => {
                self.out.push('(');
                for (i, w) in weights.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(" + ");
                    }
                    let _ = write!(self.out, "{}*x{}", self.num(*w), i + 1);
                }
                let _ = write!(self.out, ") {} {}", cmp.symbol(), self.num(*threshold));
            }
        }
    }

    fn num(&self, v: f64) -> String {
        match self.precision {
            Precision::Fixed(p) => format!("{v:.p$}"),
            Precision::Exact => format!("{v:?}"),
        }
    }
}

fn var_name(var: usize) -> String {
    match var {
        0 => "x".to_string(),
        1 => "y".to_string(),
        k => format!("x{}", k + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_style() {
        let f = Formula::always(5, 28, Formula::ge(1, 23.6));
        assert_eq!(print_formula(&f), "G[5,28](y >= 23.6)");
        let g = Formula::eventually(4, 60, Formula::le(0, 25.0));
        assert_eq!(print_formula(&g), "F[4,60](x <= 25.0)");
    }

    #[test]
    fn conjunction_is_parenthesized() {
        let f = Formula::And(vec![Formula::ge(0, 1.0), Formula::le(1, 2.0)]);
        assert_eq!(print_formula(&f), "((x >= 1.0) & (y <= 2.0))");
    }

    #[test]
    fn dnf_shape() {
        let p1 = Formula::eventually(0, 3, Formula::ge(0, 1.0));
        let p2 = Formula::always(1, 2, Formula::le(1, 2.0));
        let p3 = Formula::eventually(0, 9, Formula::ge(2, 0.5));
        let f = Formula::Or(vec![p1, Formula::And(vec![p2, p3])]);
        assert_eq!(
            print_formula(&f),
            "F[0,3](x >= 1.0) | (G[1,2](y <= 2.0) & F[0,9](x3 >= 0.5))"
        );
    }

    #[test]
    fn temporal_body_and_affine() {
        let f = Formula::eventually(0, 10, Formula::And(vec![Formula::ge(0, 3.0), Formula::le(0, 5.0)]));
        assert_eq!(print_formula(&f), "F[0,10]((x >= 3.0) & (x <= 5.0))");
        let a = Formula::pred(Predicate::affine(vec![1.5, -2.0], crate::stl::Cmp::Le, 0.25));
        assert_eq!(print_formula_with(&a, Precision::Exact), "(1.5*x1 + -2.0*x2) <= 0.25");
        assert_eq!(print_formula(&Formula::not(Formula::ge(0, 1.0))), "!(x >= 1.0)");
    }
}
