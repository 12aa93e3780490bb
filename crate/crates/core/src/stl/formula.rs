use serde::{Deserialize, Serialize};
use std::fmt;

/// Comparison direction of a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Le => "<=",
        }
    }
}

/// Affine predicate `w . s(t) ~ mu`.
///
/// `Axis` is the special case `w = e_var`; it carries no dimension, so it
/// evaluates against any signal with more than `var` components. `Affine`
/// weights must match the signal dimension exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Axis { var: usize, cmp: Cmp, threshold: f64 },
    Affine { weights: Vec<f64>, cmp: Cmp, threshold: f64 },
}

impl Predicate {
    pub fn axis(var: usize, cmp: Cmp, threshold: f64) -> Self {
        Predicate::Axis { var, cmp, threshold }
    }

    pub fn affine(weights: Vec<f64>, cmp: Cmp, threshold: f64) -> Self {
        Predicate::Affine { weights, cmp, threshold }
    }

    pub fn cmp(&self) -> Cmp {
        match self {
            Predicate::Axis { cmp, .. } | Predicate::Affine { cmp, .. } => *cmp,
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Predicate::Axis { threshold, .. } | Predicate::Affine { threshold, .. } => *threshold,
        }
    }

    /// Smallest signal dimension this predicate can be evaluated against,
    /// and whether the dimension must match exactly.
    pub(crate) fn required_dim(&self) -> (usize, bool) {
        match self {
            Predicate::Axis { var, .. } => (var + 1, false),
            Predicate::Affine { weights, .. } => (weights.len(), true),
        }
    }

    /// Quantitative satisfaction on a single sample. The caller has already
    /// checked the dimension.
    #[inline]
    pub fn eval(&self, sample: &[f64]) -> f64 {
        match self {
            Predicate::Axis { var, cmp, threshold } => match cmp {
                Cmp::Ge => sample[*var] - threshold,
                Cmp::Le => threshold - sample[*var],
            },
            Predicate::Affine { weights, cmp, threshold } => {
                let f: f64 = weights.iter().zip(sample).map(|(w, x)| w * x).sum();
                match cmp {
                    Cmp::Ge => f - threshold,
                    Cmp::Le => threshold - f,
                }
            }
        }
    }
}

/// Bounded time interval `[start, end]` of offsets, in steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    /// Returns `None` when `start > end`.
    pub fn new(start: usize, end: usize) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    Pred(Predicate),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Eventually(Interval, Box<Formula>),
    Always(Interval, Box<Formula>),
}

impl Formula {
    pub fn pred(p: Predicate) -> Self {
        Formula::Pred(p)
    }

    pub fn ge(var: usize, threshold: f64) -> Self {
        Formula::Pred(Predicate::axis(var, Cmp::Ge, threshold))
    }

    pub fn le(var: usize, threshold: f64) -> Self {
        Formula::Pred(Predicate::axis(var, Cmp::Le, threshold))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: Formula) -> Self {
        Formula::Not(Box::new(phi))
    }

    /// Conjunction; a single operand is returned unwrapped.
    pub fn and(mut children: Vec<Formula>) -> Self {
        assert!(!children.is_empty(), "conjunction needs at least one operand");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::And(children)
        }
    }

    /// Disjunction; a single operand is returned unwrapped.
    pub fn or(mut children: Vec<Formula>) -> Self {
        assert!(!children.is_empty(), "disjunction needs at least one operand");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::Or(children)
        }
    }

    pub fn eventually(start: usize, end: usize, phi: Formula) -> Self {
        let iv = Interval::new(start, end).expect("interval start must not exceed end");
        Formula::Eventually(iv, Box::new(phi))
    }

    pub fn always(start: usize, end: usize, phi: Formula) -> Self {
        let iv = Interval::new(start, end).expect("interval start must not exceed end");
        Formula::Always(iv, Box::new(phi))
    }

    /// Axis-aligned box `lo_k <= x_k <= hi_k` as a conjunction of half-planes.
    pub fn boxed(bounds: &[(usize, f64, f64)]) -> Self {
        let mut parts = Vec::with_capacity(bounds.len() * 2);
        for &(var, lo, hi) in bounds {
            parts.push(Formula::ge(var, lo));
            parts.push(Formula::le(var, hi));
        }
        Formula::and(parts)
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Pred(_) => 1,
            Formula::Not(c) | Formula::Eventually(_, c) | Formula::Always(_, c) => 1 + c.depth(),
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    pub fn predicates(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            Formula::Pred(p) => out.push(p),
            Formula::Not(c) | Formula::Eventually(_, c) | Formula::Always(_, c) => c.collect_predicates(out),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_predicates(out)),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print_formula(self))
    }
}
