use super::{Formula, Interval, Signal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobustnessError {
    #[error("time index {tau} outside signal of length {len}")]
    TimeOutOfRange { tau: usize, len: usize },
    #[error("temporal window {interval} at time {tau} is empty after clipping to signal length {len}")]
    EmptyWindow { tau: usize, interval: Interval, len: usize },
    #[error("predicate needs dimension {expected}, signal has {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Robustness `r(s, phi, tau)` with one-based `tau`.
///
/// Temporal windows `tau + [t1, t2]` are clipped to `[1, T]`; a window that
/// is empty after clipping is an error.
pub fn robustness(phi: &Formula, signal: &Signal, tau: usize) -> Result<f64, RobustnessError> {
    let len = signal.len();
    if tau == 0 || tau > len {
        return Err(RobustnessError::TimeOutOfRange { tau, len });
    }
    check_dims(phi, signal.dim())?;
    let trace = trace(phi, signal)?;
    trace[tau - 1].ok_or_else(|| first_empty_window(phi, len, tau))
}

/// Robustness at every time step; `None` where a window is empty.
pub fn robustness_trace(phi: &Formula, signal: &Signal) -> Result<Vec<Option<f64>>, RobustnessError> {
    check_dims(phi, signal.dim())?;
    trace(phi, signal)
}

/// `true` iff robustness at the first time step is strictly positive.
pub fn satisfies(phi: &Formula, signal: &Signal) -> Result<bool, RobustnessError> {
    Ok(robustness(phi, signal, 1)? > 0.0)
}

fn check_dims(phi: &Formula, dim: usize) -> Result<(), RobustnessError> {
    for p in phi.predicates() {
        let (need, exact) = p.required_dim();
        if (exact && need != dim) || need > dim {
            return Err(RobustnessError::DimensionMismatch { expected: need, found: dim });
        }
    }
    Ok(())
}

// Child traces are computed over the full signal; `None` propagates to every
// step whose window reads it and becomes an error only at the queried step.
fn trace(phi: &Formula, s: &Signal) -> Result<Vec<Option<f64>>, RobustnessError> {
    let len = s.len();
    Ok(match phi {
        Formula::Pred(p) => s.rows().map(|x| Some(p.eval(x))).collect(),
        Formula::Not(c) => trace(c, s)?.into_iter().map(|v| v.map(|v| -v)).collect(),
        Formula::And(cs) => combine(cs, s, f64::min)?,
        Formula::Or(cs) => combine(cs, s, f64::max)?,
        Formula::Eventually(iv, c) => temporal(&trace(c, s)?, *iv, len, f64::max),
        Formula::Always(iv, c) => temporal(&trace(c, s)?, *iv, len, f64::min),
    })
}

fn combine(
    cs: &[Formula],
    s: &Signal,
    op: fn(f64, f64) -> f64,
) -> Result<Vec<Option<f64>>, RobustnessError> {
    let mut acc: Option<Vec<Option<f64>>> = None;
    for c in cs {
        let t = trace(c, s)?;
        acc = Some(match acc {
            None => t,
            Some(a) => a
                .into_iter()
                .zip(t)
                .map(|(x, y)| match (x, y) {
                    (Some(x), Some(y)) => Some(op(x, y)),
                    _ => None,
                })
                .collect(),
        });
    }
    Ok(acc.unwrap_or_else(|| vec![None; s.len()]))
}

fn temporal(
    child: &[Option<f64>],
    iv: Interval,
    len: usize,
    op: fn(f64, f64) -> f64,
) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let lo = t + iv.start;
        if lo >= len {
            out.push(None);
            continue;
        }
        let hi = (t + iv.end).min(len - 1);
        let acc = child[lo..=hi].iter().try_fold(None, |acc: Option<f64>, v| v.map(|v| Some(acc.map_or(v, |a| op(a, v)))));
        out.push(acc.flatten());
    }
    out
}

// Locates the innermost temporal node responsible for a missing value, for
// the error message.
fn first_empty_window(phi: &Formula, len: usize, tau: usize) -> RobustnessError {
    match phi {
        Formula::Eventually(iv, c) | Formula::Always(iv, c) => {
            let lo = tau - 1 + iv.start;
            if lo >= len {
                RobustnessError::EmptyWindow { tau, interval: *iv, len }
            } else {
                let hi = (tau - 1 + iv.end).min(len - 1);
                for t in lo..=hi {
                    let e = first_empty_window(c, len, t + 1);
                    if matches!(e, RobustnessError::EmptyWindow { .. }) {
                        return e;
                    }
                }
                RobustnessError::EmptyWindow { tau, interval: *iv, len }
            }
        }
        Formula::Not(c) => first_empty_window(c, len, tau),
        Formula::And(cs) | Formula::Or(cs) => cs
            .iter()
            .map(|c| first_empty_window(c, len, tau))
            .find(|e| matches!(e, RobustnessError::EmptyWindow { .. }))
            .unwrap_or(RobustnessError::TimeOutOfRange { tau, len }),
        Formula::Pred(_) => RobustnessError::TimeOutOfRange { tau, len },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::Predicate;

    fn xy(rows: &[[f64; 2]]) -> Signal {
        Signal::from_rows(rows).unwrap()
    }

    #[test]
    fn predicate_and_negation() {
        let s = Signal::constant(&[4.0, 0.0], 3).unwrap();
        let p = Formula::ge(0, 3.0);
        assert_eq!(robustness(&p, &s, 1).unwrap(), 1.0);
        assert_eq!(robustness(&Formula::not(p), &s, 1).unwrap(), -1.0);
    }

    #[test]
    fn box_in_window() {
        // Sits at (4, 5) for tau in [1, 11].
        let s = Signal::constant(&[4.0, 5.0], 11).unwrap();
        let phi1 = Formula::eventually(0, 10, Formula::boxed(&[(0, 3.0, 5.0), (1, 4.0, 6.0)]));
        assert_eq!(robustness(&phi1, &s, 1).unwrap(), 1.0);
    }

    #[test]
    fn zero_robustness_is_violation() {
        let s = Signal::constant(&[3.0], 2).unwrap();
        assert_eq!(robustness(&Formula::ge(0, 3.0), &s, 1).unwrap(), 0.0);
        assert!(!satisfies(&Formula::ge(0, 3.0), &s).unwrap());
        assert!(satisfies(&Formula::ge(0, 2.0), &s).unwrap());
        assert!(!satisfies(&Formula::ge(0, 3.3), &s).unwrap());
    }

    #[test]
    fn windows_are_clipped() {
        let s = xy(&[[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]]);
        let f = Formula::eventually(1, 10, Formula::ge(0, 0.0));
        assert_eq!(robustness(&f, &s, 1).unwrap(), 5.0);
        let g = Formula::always(1, 10, Formula::ge(0, 0.0));
        assert_eq!(robustness(&g, &s, 1).unwrap(), 1.0);
    }

    #[test]
    fn empty_window_errors() {
        let s = Signal::constant(&[1.0], 5).unwrap();
        let f = Formula::eventually(5, 8, Formula::ge(0, 0.0));
        assert!(matches!(robustness(&f, &s, 1), Err(RobustnessError::EmptyWindow { .. })));
        // Nested: the outer window reaches times where the inner one is empty.
        let g = Formula::always(0, 4, Formula::eventually(3, 3, Formula::ge(0, 0.0)));
        assert!(matches!(robustness(&g, &s, 1), Err(RobustnessError::EmptyWindow { .. })));
        assert!(robustness(&Formula::eventually(3, 3, Formula::ge(0, 0.0)), &s, 2).is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let s = Signal::constant(&[1.0, 2.0], 2).unwrap();
        let f = Formula::pred(Predicate::affine(vec![1.0, 1.0, 1.0], crate::stl::Cmp::Ge, 0.0));
        assert!(matches!(
            robustness(&f, &s, 1),
            Err(RobustnessError::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(robustness(&Formula::ge(2, 0.0), &s, 1).is_err());
        assert!(robustness(&Formula::ge(1, 0.0), &s, 1).is_ok());
    }

    #[test]
    fn time_out_of_range() {
        let s = Signal::constant(&[1.0], 2).unwrap();
        assert!(robustness(&Formula::ge(0, 0.0), &s, 0).is_err());
        assert!(robustness(&Formula::ge(0, 0.0), &s, 3).is_err());
    }
}
