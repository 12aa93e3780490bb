use mstl_core::diffgraph::{finite_diff_check, Tape, Temperature, Weights};
use proptest::prelude::*;

fn soft(values: &[f64], weights: &[f64], beta: f64, max: bool) -> (f64, Vec<f64>) {
    let mut tape = Tape::new();
    let vs: Vec<_> = values.iter().map(|&v| tape.leaf(v)).collect();
    let b = Temperature::new(beta).unwrap();
    let out = if max {
        tape.softmax(&vs, Weights::Fixed(weights), b).unwrap()
    } else {
        tape.softmin(&vs, Weights::Fixed(weights), b).unwrap()
    };
    let g = tape.backward(out).unwrap();
    (tape.value(out), vs.iter().map(|&v| g.wrt(v)).collect())
}

fn case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|n| (prop::collection::vec(-20.0f64..20.0, n), prop::collection::vec(0.01f64..1.0, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    // min <= softmin <= weighted mean, and the gap to min is at most ln(W/w_min)/beta.
    #[test]
    fn softmin_bounds((v, w) in case(), beta in 0.1f64..50.0) {
        let (s, _) = soft(&v, &w, beta, false);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let total: f64 = w.iter().sum();
        let mean = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / total;
        let tol = 1e-9 * (1.0 + min.abs());
        prop_assert!(s >= min - tol, "{} < {}", s, min);
        prop_assert!(s <= mean + tol, "{} > {}", s, mean);
        let wmin = v.iter().zip(&w).filter(|(a, _)| **a == min).map(|(_, b)| *b).fold(0.0, f64::max);
        prop_assert!(s - min <= (total / wmin).ln() / beta + tol);
    }

    #[test]
    fn softmax_is_dual((v, w) in case(), beta in 0.1f64..50.0) {
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let (a, _) = soft(&v, &w, beta, true);
        let (b, _) = soft(&neg, &w, beta, false);
        prop_assert!((a + b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    // Gradients with respect to the values are a convex combination.
    #[test]
    fn value_gradients_are_convex((v, w) in case(), beta in 0.1f64..50.0, max in any::<bool>()) {
        let (_, g) = soft(&v, &w, beta, max);
        prop_assert!(g.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weight_gradients_match_finite_differences(
        (v, w) in case(),
        beta in 0.2f64..5.0,
        max in any::<bool>(),
    ) {
        let n = v.len();
        let point: Vec<f64> = v.iter().map(|x| x / 10.0).chain(w.iter().map(|x| x + 0.1)).collect();
        let err = finite_diff_check(
            |tape, xs| {
                let b = Temperature::new(beta)?;
                if max {
                    tape.softmax(&xs[..n], Weights::Vars(&xs[n..]), b)
                } else {
                    tape.softmin(&xs[..n], Weights::Vars(&xs[n..]), b)
                }
            },
            &point,
            1e-6,
        )
        .unwrap();
        prop_assert!(err < 1e-5, "relative error {}", err);
    }
}

#[test]
fn softmin_converges_to_min() {
    let v = [3.0, -1.5, 2.0, -1.4];
    let w = [1.0; 4];
    let mut last = f64::INFINITY;
    for beta in [1.0, 10.0, 100.0, 1000.0, 10000.0] {
        let (s, _) = soft(&v, &w, beta, false);
        let gap = s + 1.5;
        assert!(gap >= 0.0 && gap < last);
        last = gap;
    }
    assert!(last < 1e-3);
}

#[test]
fn equal_values_are_returned_exactly() {
    let (s, _) = soft(&[2.5, 2.5, 2.5], &[0.2, 0.5, 1.0], 7.0, false);
    assert!((s - 2.5).abs() < 1e-12);
}
