use mstl_core::stl::{
    parse_formula, print_formula_with, robustness, Cmp, Formula, Interval, Precision, Predicate, Signal,
};
use proptest::prelude::*;

mod common;
use common::oracle;

fn predicate() -> impl Strategy<Value = Formula> {
    let axis = (0usize..2, any::<bool>(), -5.0f64..5.0)
        .prop_map(|(v, ge, th)| Formula::Pred(Predicate::axis(v, if ge { Cmp::Ge } else { Cmp::Le }, th)));
    let affine = (prop::collection::vec(-2.0f64..2.0, 2), any::<bool>(), -5.0f64..5.0)
        .prop_map(|(w, ge, th)| Formula::Pred(Predicate::affine(w, if ge { Cmp::Ge } else { Cmp::Le }, th)));
    prop_oneof![3 => axis, 1 => affine]
}

fn interval(max: usize) -> impl Strategy<Value = Interval> {
    (0..=max, 0..=max).prop_map(|(a, b)| Interval::new(a.min(b), a.max(b)).unwrap())
}

// Depth at most 3 counting the predicate level.
fn formula() -> impl Strategy<Value = Formula> {
    predicate().prop_recursive(2, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::Or),
            (interval(12), inner.clone()).prop_map(|(iv, c)| Formula::Eventually(iv, Box::new(c))),
            (interval(12), inner).prop_map(|(iv, c)| Formula::Always(iv, Box::new(c))),
        ]
    })
}

fn signal(max_len: usize) -> impl Strategy<Value = Signal> {
    (1..=max_len)
        .prop_flat_map(|t| prop::collection::vec(-6.0f64..6.0, 2 * t))
        .prop_map(|v| Signal::new(2, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_brute_force(phi in formula(), s in signal(10)) {
        prop_assert!(phi.depth() <= 3);
        match (robustness(&phi, &s, 1), oracle(&phi, &s, 1)) {
            (Ok(a), Some(b)) => prop_assert_eq!(a, b),
            (Err(_), None) => {}
            (a, b) => prop_assert!(false, "library {:?} vs oracle {:?} for {}", a, b, phi),
        }
    }

    #[test]
    fn exact_print_parses_back(phi in formula()) {
        let text = print_formula_with(&phi, Precision::Exact);
        let back = parse_formula(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(back, phi, "{}", text);
    }

    #[test]
    fn negation_duality(phi in formula(), s in signal(10)) {
        if let Ok(r) = robustness(&phi, &s, 1) {
            prop_assert_eq!(robustness(&Formula::not(phi), &s, 1).unwrap(), -r);
        }
    }

    #[test]
    fn de_morgan(a in formula(), b in formula(), s in signal(10)) {
        let lhs = robustness(&Formula::not(Formula::And(vec![a.clone(), b.clone()])), &s, 1);
        let rhs = robustness(&Formula::Or(vec![Formula::not(a), Formula::not(b)]), &s, 1);
        match (lhs, rhs) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn widening_a_window_is_monotone(
        phi in predicate(),
        s in signal(10),
        a in 0usize..5,
        w in 0usize..5,
        extra in 0usize..5,
    ) {
        let narrow = Interval::new(a, a + w).unwrap();
        let wide = Interval::new(a, a + w + extra).unwrap();
        let f = |iv, ev: bool| {
            let c = Box::new(phi.clone());
            robustness(&if ev { Formula::Eventually(iv, c) } else { Formula::Always(iv, c) }, &s, 1)
        };
        if let (Ok(n), Ok(w)) = (f(narrow, true), f(wide, true)) {
            prop_assert!(w >= n);
        }
        if let (Ok(n), Ok(w)) = (f(narrow, false), f(wide, false)) {
            prop_assert!(w <= n);
        }
    }
}

#[test]
fn clipped_window_uses_available_steps() {
    let s = Signal::from_rows(&[[1.0], [3.0], [2.0]]).unwrap();
    let f = Formula::eventually(1, 10, Formula::ge(0, 0.0));
    assert_eq!(robustness(&f, &s, 1).unwrap(), 3.0);
    assert_eq!(robustness(&f, &s, 3), Err(mstl_core::stl::RobustnessError::EmptyWindow {
        tau: 3,
        interval: Interval::new(1, 10).unwrap(),
        len: 3,
    }));
}
