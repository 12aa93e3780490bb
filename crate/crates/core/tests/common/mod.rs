#![allow(dead_code)]

use mstl_core::stl::{Cmp, Formula, Interval, Predicate, Signal};
use rand::Rng;

/// Robustness by direct recursion on the semantics, one-based `t`. `None`
/// marks an empty window anywhere the evaluation needs a value.
pub fn oracle(phi: &Formula, s: &Signal, t: usize) -> Option<f64> {
    let len = s.len();
    match phi {
        Formula::Pred(p) => {
            let x = s.at(t - 1);
            let v = match p {
                Predicate::Axis { var, threshold, .. } => x[*var] - threshold,
                Predicate::Affine { weights, threshold, .. } => {
                    weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() - threshold
                }
            };
            Some(if p.cmp() == Cmp::Ge { v } else { -v })
        }
        Formula::Not(c) => oracle(c, s, t).map(|v| -v),
        Formula::And(cs) => cs.iter().map(|c| oracle(c, s, t)).try_fold(f64::INFINITY, |a, v| v.map(|v| a.min(v))),
        Formula::Or(cs) => cs.iter().map(|c| oracle(c, s, t)).try_fold(f64::NEG_INFINITY, |a, v| v.map(|v| a.max(v))),
        Formula::Eventually(iv, c) | Formula::Always(iv, c) => {
            let lo = t + iv.start;
            if lo > len {
                return None;
            }
            let hi = (t + iv.end).min(len);
            let vals = (lo..=hi).map(|u| oracle(c, s, u)).collect::<Option<Vec<f64>>>()?;
            Some(if matches!(phi, Formula::Eventually(..)) {
                vals.into_iter().fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.into_iter().fold(f64::INFINITY, f64::min)
            })
        }
    }
}

pub fn random_predicate<R: Rng>(rng: &mut R) -> Formula {
    let cmp = if rng.gen_bool(0.5) { Cmp::Ge } else { Cmp::Le };
    let th = rng.gen_range(-5.0..5.0);
    if rng.gen_bool(0.75) {
        Formula::Pred(Predicate::axis(rng.gen_range(0..2), cmp, th))
    } else {
        Formula::Pred(Predicate::affine(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)], cmp, th))
    }
}

/// Random formula of depth at most `depth`, counting the predicate level.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth <= 1 || rng.gen_bool(0.25) {
        return random_predicate(rng);
    }
    let iv = |rng: &mut R| {
        let (a, b) = (rng.gen_range(0..=12), rng.gen_range(0..=12));
        Interval::new(a.min(b), a.max(b)).unwrap()
    };
    match rng.gen_range(0..5) {
        0 => Formula::not(random_formula(rng, depth - 1)),
        1 => Formula::And((0..rng.gen_range(2..=3)).map(|_| random_formula(rng, depth - 1)).collect()),
        2 => Formula::Or((0..rng.gen_range(2..=3)).map(|_| random_formula(rng, depth - 1)).collect()),
        3 => Formula::Eventually(iv(rng), Box::new(random_formula(rng, depth - 1))),
        _ => Formula::Always(iv(rng), Box::new(random_formula(rng, depth - 1))),
    }
}

pub fn random_signal<R: Rng>(rng: &mut R, max_len: usize) -> Signal {
    let t = rng.gen_range(1..=max_len);
    Signal::new(2, (0..2 * t).map(|_| rng.gen_range(-6.0..6.0)).collect()).unwrap()
}
