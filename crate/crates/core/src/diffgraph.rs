//! Scalar reverse-mode automatic differentiation on an append-only tape.
//!
//! Nodes are appended in evaluation order, so the tape order is a
//! topological order and one reverse sweep visits each node exactly once.
//! Besides the elementary operations the tape has n-ary smooth min/max
//! nodes (normalized weighted log-sum-exp) and a routed hard minimum used
//! for margins.

use thiserror::Error;

/// Weights below this are treated as absent when checking that a smooth
/// min/max has at least one live operand.
pub const WEIGHT_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("all {count} weights are below {eps:e}; nothing to aggregate")]
    DegenerateWeights { count: usize, eps: f64 },
    #[error("weights and values differ in length ({weights} vs {values})")]
    LengthMismatch { values: usize, weights: usize },
    #[error("aggregation over an empty operand list")]
    Empty,
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("node {node} references later node {parent}; graph is not acyclic")]
    Cycle { node: usize, parent: usize },
}

/// Smoothing sharpness of the soft min/max; larger is closer to exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(beta: f64) -> Result<Self, GraphError> {
        if beta > 0.0 && beta.is_finite() {
            Ok(Self(beta))
        } else {
            Err(GraphError::BadTemperature(beta))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Leaf,
    Const,
    Add,
    Mul,
    Linear,
    Relu,
    Sigmoid,
    SoftMin,
    SoftMax,
    Min,
}

#[derive(Debug, Clone)]
struct Node {
    value: f64,
    op: Op,
    edges: std::ops::Range<u32>,
}

/// Operand weights for the smooth aggregations.
#[derive(Debug, Clone, Copy)]
pub enum Weights<'a> {
    Unit,
    Fixed(&'a [f64]),
    Vars(&'a [Var]),
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    edges: Vec<(u32, f64)>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.edges.clear();
    }

    pub fn value(&self, v: Var) -> f64 {
        self.nodes[v.0].value
    }

    pub fn op(&self, v: Var) -> Op {
        self.nodes[v.0].op
    }

    fn push(&mut self, value: f64, op: Op, parents: impl IntoIterator<Item = (Var, f64)>) -> Var {
        let start = self.edges.len() as u32;
        self.edges.extend(parents.into_iter().map(|(p, d)| (p.0 as u32, d)));
        let end = self.edges.len() as u32;
        self.nodes.push(Node { value, op, edges: start..end });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(value, Op::Leaf, [])
    }

    pub fn constant(&mut self, value: f64) -> Var {
        self.push(value, Op::Const, [])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add, [(a, 1.0), (b, 1.0)])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.linear(&[(a, 1.0), (b, -1.0)], 0.0)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(va * vb, Op::Mul, [(a, vb), (b, va)])
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.linear(&[(a, c)], 0.0)
    }

    /// `sum_i c_i * x_i + offset`.
    pub fn linear(&mut self, terms: &[(Var, f64)], offset: f64) -> Var {
        let v = terms.iter().fold(offset, |acc, &(x, c)| acc + c * self.value(x));
        self.push(v, Op::Linear, terms.iter().copied())
    }

    pub fn sum(&mut self, xs: &[Var]) -> Var {
        let v = xs.iter().map(|&x| self.value(x)).sum();
        self.push(v, Op::Linear, xs.iter().map(|&x| (x, 1.0)))
    }

    /// Subgradient at 0 is 0.
    pub fn relu(&mut self, a: Var) -> Var {
        let x = self.value(a);
        if x > 0.0 {
            self.push(x, Op::Relu, [(a, 1.0)])
        } else {
            self.push(0.0, Op::Relu, [(a, 0.0)])
        }
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let s = sigmoid(self.value(a));
        self.push(s, Op::Sigmoid, [(a, s * (1.0 - s))])
    }

    /// Hard minimum whose gradient flows only to the first argmin.
    pub fn min_routed(&mut self, xs: &[Var]) -> Result<Var, GraphError> {
        let (idx, &best) = xs
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| self.value(**a).total_cmp(&self.value(**b)))
            .ok_or(GraphError::Empty)?;
        // min_by returns the last of equal elements; route to the first.
        let best_val = self.value(best);
        let first = xs[..=idx]
            .iter()
            .copied()
            .find(|&x| self.value(x) == best_val)
            .unwrap_or(best);
        Ok(self.push(best_val, Op::Min, [(first, 1.0)]))
    }

    /// Normalized weighted log-sum-exp soft minimum,
    /// `-(1/beta) ln( sum_i w_i exp(-beta v_i) / sum_i w_i )`.
    pub fn softmin(&mut self, values: &[Var], weights: Weights<'_>, beta: Temperature) -> Result<Var, GraphError> {
        self.soft_aggregate(values, weights, beta, -1.0)
    }

    /// Dual of [`Tape::softmin`]: `softmax(v) = -softmin(-v)`.
    pub fn softmax(&mut self, values: &[Var], weights: Weights<'_>, beta: Temperature) -> Result<Var, GraphError> {
        self.soft_aggregate(values, weights, beta, 1.0)
    }

    // sign = -1 for softmin, +1 for softmax. With z_i = ln w_i + sign*beta*v_i
    // the result is sign/beta * (lse(z) - ln W).
    fn soft_aggregate(
        &mut self,
        values: &[Var],
        weights: Weights<'_>,
        beta: Temperature,
        sign: f64,
    ) -> Result<Var, GraphError> {
        let n = values.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let w: Vec<f64> = match weights {
            Weights::Unit => vec![1.0; n],
            Weights::Fixed(w) => {
                if w.len() != n {
                    return Err(GraphError::LengthMismatch { values: n, weights: w.len() });
                }
                w.to_vec()
            }
            Weights::Vars(w) => {
                if w.len() != n {
                    return Err(GraphError::LengthMismatch { values: n, weights: w.len() });
                }
                w.iter().map(|&x| self.value(x)).collect()
            }
        };
        if !w.iter().any(|&x| x > WEIGHT_EPS) {
            return Err(GraphError::DegenerateWeights { count: n, eps: WEIGHT_EPS });
        }
        let b = beta.get();
        let total_w: f64 = w.iter().sum();
        let z: Vec<f64> = values
            .iter()
            .zip(&w)
            .map(|(&v, &wi)| if wi > 0.0 { wi.ln() + sign * b * self.value(v) } else { f64::NEG_INFINITY })
            .collect();
        let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let a: f64 = z.iter().map(|&zi| (zi - zmax).exp()).sum();
        let lse = zmax + a.ln();
        let out = sign / b * (lse - total_w.ln());

        // d out / d v_i = p_i, the normalized soft weights.
        // d out / d w_i = sign/beta * (exp(sign*beta*v_i - lse) - 1/W).
        let mut parents: Vec<(Var, f64)> = Vec::with_capacity(if matches!(weights, Weights::Vars(_)) { 2 * n } else { n });
        for (i, &v) in values.iter().enumerate() {
            parents.push((v, (z[i] - lse).exp()));
        }
        if let Weights::Vars(wv) = weights {
            for (i, &wvar) in wv.iter().enumerate() {
                let e = (sign * b * self.value(values[i]) - lse).exp();
                parents.push((wvar, sign / b * (e - 1.0 / total_w)));
            }
        }
        let op = if sign < 0.0 { Op::SoftMin } else { Op::SoftMax };
        Ok(self.push(out, op, parents))
    }

    /// Gradients of `output` with respect to every node on the tape.
    pub fn backward(&self, output: Var) -> Result<Gradients, GraphError> {
        let mut grad = vec![0.0; output.0 + 1];
        grad[output.0] = 1.0;
        for i in (0..=output.0).rev() {
            let g = grad[i];
            if g == 0.0 {
                continue;
            }
            let node = &self.nodes[i];
            for &(p, d) in &self.edges[node.edges.start as usize..node.edges.end as usize] {
                let p = p as usize;
                if p >= i {
                    return Err(GraphError::Cycle { node: i, parent: p });
                }
                grad[p] += g * d;
            }
        }
        Ok(Gradients(grad))
    }
}

/// Result of a backward sweep, indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients(Vec<f64>);

impl Gradients {
    pub fn wrt(&self, v: Var) -> f64 {
        self.0.get(v.0).copied().unwrap_or(0.0)
    }
}

impl std::ops::Index<Var> for Gradients {
    type Output = f64;
    fn index(&self, v: Var) -> &f64 {
        &self.0[v.0]
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Largest relative error between reverse-mode gradients and central
/// differences of `f` at `point`.
///
/// `f` builds the function on a fresh tape from leaves holding the point's
/// coordinates. The error per coordinate is `|g - fd| / max(1, |g|, |fd|)`.
pub fn finite_diff_check<F>(f: F, point: &[f64], eps: f64) -> Result<f64, GraphError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, GraphError>,
{
    let eval = |x: &[f64]| -> Result<f64, GraphError> {
        let mut tape = Tape::new();
        let leaves: Vec<Var> = x.iter().map(|&v| tape.leaf(v)).collect();
        let out = f(&mut tape, &leaves)?;
        Ok(tape.value(out))
    };
    let mut tape = Tape::new();
    let leaves: Vec<Var> = point.iter().map(|&v| tape.leaf(v)).collect();
    let out = f(&mut tape, &leaves)?;
    let grads = tape.backward(out)?;
    let mut worst = 0.0f64;
    let mut x = point.to_vec();
    for (i, &leaf) in leaves.iter().enumerate() {
        let orig = x[i];
        x[i] = orig + eps;
        let hi = eval(&x)?;
        x[i] = orig - eps;
        let lo = eval(&x)?;
        x[i] = orig;
        let fd = (hi - lo) / (2.0 * eps);
        let g = grads.wrt(leaf);
        let err = (g - fd).abs() / 1f64.max(g.abs()).max(fd.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(b: f64) -> Temperature {
        Temperature::new(b).unwrap()
    }

    fn leaves(tape: &mut Tape, xs: &[f64]) -> Vec<Var> {
        xs.iter().map(|&x| tape.leaf(x)).collect()
    }

    #[test]
    fn softmin_closed_forms() {
        let mut t = Tape::new();
        let z = leaves(&mut t, &[0.0, 0.0, 0.0]);
        let s = t.softmin(&z, Weights::Fixed(&[0.3, 2.0, 1.0]), beta(7.0)).unwrap();
        assert!(t.value(s).abs() < 1e-15);

        let v = leaves(&mut t, &[1.0, 2.0]);
        let s = t.softmin(&v, Weights::Unit, beta(1.0)).unwrap();
        let want = -(((-1f64).exp() + (-2f64).exp()) / 2.0).ln();
        assert!((t.value(s) - want).abs() < 1e-14);
        assert!((t.value(s) - 1.3799).abs() < 1e-4);

        let m = t.softmax(&v, Weights::Unit, beta(1.0)).unwrap();
        let want = ((1f64.exp() + 2f64.exp()) / 2.0).ln();
        assert!((t.value(m) - want).abs() < 1e-14);
        assert!((t.value(m) - 1.6201).abs() < 1e-4);

        let s = t.softmin(&v, Weights::Fixed(&[1.0, 0.0]), beta(3.0)).unwrap();
        assert!((t.value(s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softmin_gradient_is_softmax_weights() {
        let mut t = Tape::new();
        let v = leaves(&mut t, &[1.0, 2.0]);
        let s = t.softmin(&v, Weights::Unit, beta(1.0)).unwrap();
        let g = t.backward(s).unwrap();
        let e1 = (-1f64).exp();
        let e2 = (-2f64).exp();
        assert!((g[v[0]] - e1 / (e1 + e2)).abs() < 1e-12);
        assert!((g[v[1]] - e2 / (e1 + e2)).abs() < 1e-12);
        assert!((g[v[0]] - 0.731).abs() < 1e-3);
        assert!((g[v[1]] - 0.269).abs() < 1e-3);
    }

    #[test]
    fn degenerate_weights() {
        let mut t = Tape::new();
        let v = leaves(&mut t, &[1.0, 2.0]);
        let err = t.softmin(&v, Weights::Fixed(&[1e-7, 0.0]), beta(1.0)).unwrap_err();
        assert!(matches!(err, GraphError::DegenerateWeights { .. }));
        assert!(t.softmin(&[], Weights::Unit, beta(1.0)).is_err());
        assert!(Temperature::new(0.0).is_err());
        assert!(Temperature::new(f64::INFINITY).is_err());
    }

    #[test]
    fn product_and_relu() {
        let mut t = Tape::new();
        let a = t.leaf(2.0);
        let b = t.leaf(3.0);
        let p = t.mul(a, b);
        let g = t.backward(p).unwrap();
        assert_eq!((g[a], g[b]), (3.0, 2.0));

        let x = t.leaf(-1.0);
        let r = t.relu(x);
        assert_eq!(t.backward(r).unwrap()[x], 0.0);
        let z = t.leaf(0.0);
        let r0 = t.relu(z);
        assert_eq!(t.backward(r0).unwrap()[z], 0.0);
    }

    #[test]
    fn min_routes_to_first_argmin() {
        let mut t = Tape::new();
        let v = leaves(&mut t, &[0.5, 0.2, 0.2, 0.9]);
        let m = t.min_routed(&v).unwrap();
        assert_eq!(t.value(m), 0.2);
        let g = t.backward(m).unwrap();
        assert_eq!(v.iter().map(|&x| g[x]).collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn cycle_is_detected() {
        let mut t = Tape::new();
        let a = t.leaf(1.0);
        let b = t.scale(a, 2.0);
        // Corrupt the tape so the leaf points forward.
        t.nodes[a.0].edges = t.edges.len() as u32..t.edges.len() as u32 + 1;
        t.edges.push((b.0 as u32, 1.0));
        let c = t.scale(b, 1.0);
        assert!(matches!(t.backward(c), Err(GraphError::Cycle { .. })));
    }

    #[test]
    fn polynomial_finite_differences() {
        let f = |t: &mut Tape, x: &[Var]| {
            let xy = t.mul(x[0], x[1]);
            let xyz = t.mul(xy, x[2]);
            let x2 = t.mul(x[0], x[0]);
            Ok(t.linear(&[(xyz, 3.0), (x2, -1.5), (x[2], 0.25)], 1.0))
        };
        let err = finite_diff_check(f, &[0.7, -1.3, 2.1], 1e-5).unwrap();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn weighted_soft_aggregates_finite_differences() {
        let f = |t: &mut Tape, x: &[Var]| {
            let w: Vec<Var> = x[3..].iter().map(|&l| t.sigmoid(l)).collect();
            let a = t.softmin(&x[..3], Weights::Vars(&w), Temperature::new(2.5).unwrap())?;
            let b = t.softmax(&x[..3], Weights::Vars(&w), Temperature::new(4.0).unwrap())?;
            Ok(t.mul(a, b))
        };
        let err = finite_diff_check(f, &[0.3, -1.1, 0.8, 0.2, -0.7, 1.4], 1e-5).unwrap();
        assert!(err <= 1e-6, "{err}");
    }
}
