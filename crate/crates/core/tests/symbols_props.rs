use infpdo::symbols::seminorm::{gamma_seminorm, ClassParams, ScanBudget};
use infpdo::symbols::{Cq, Expr, SymbolFn, Var};
use num_complex::Complex64;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Expr::constant(Cq::frac(n, d))),
        (-2i64..=2).prop_map(|n| Expr::constant(&Cq::i() * &Cq::int(n))),
        Just(Expr::var(Var::x())),
        Just(Expr::var(Var::xi())),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 32, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul),
            (inner.clone(), -2i64..=3)
                .prop_map(|(b, n)| Expr::pow(b, n).unwrap_or_else(|_| Expr::one())),
            inner
                .clone()
                .prop_map(|e| Expr::exp(e.scale(&Cq::frac(1, 4)))),
            prop::collection::vec(inner, 1..3).prop_map(Expr::angle),
        ]
    })
}

/// Fourth-order central difference in `v`.
fn fd(e: &Expr, v: Var, x: f64, xi: f64) -> Complex64 {
    let h = 1e-3;
    let f = |t: f64| match v {
        Var::X(_) => e.eval3(x + t, xi, 0.0),
        _ => e.eval3(x, xi + t, 0.0),
    };
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn derivative_matches_differences(e in tree(), x in -1.5f64..1.5, xi in -1.5f64..1.5) {
        let f0 = e.eval3(x, xi, 0.0);
        // skip singular or explosive points
        prop_assume!(f0.norm().is_finite() && f0.norm() < 1e4);
        for v in [Var::x(), Var::xi()] {
            let exact = e.diff(v).eval3(x, xi, 0.0);
            let approx = fd(&e, v, x, xi);
            prop_assume!(exact.norm().is_finite() && exact.norm() < 1e4);
            let near: f64 = [-2e-3, -1e-3, 1e-3, 2e-3]
                .iter()
                .map(|t| e.eval3(x + t, xi + t, 0.0).norm())
                .fold(0.0, f64::max);
            prop_assume!(near < 1e4);
            let scale = 1.0 + exact.norm() + f0.norm();
            prop_assert!((exact - approx).norm() <= 1e-6 * scale,
                "{e}: d/d{v:?} exact {exact} fd {approx}");
        }
    }

    #[test]
    fn print_parse_round_trip(e in tree()) {
        let text = e.to_string();
        let back = Expr::parse(&text).unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn differentiation_is_linear(a in tree(), b in tree()) {
        let lhs = Expr::add(vec![a.clone(), b.clone()]).diff(Var::x());
        let rhs = Expr::add(vec![a.diff(Var::x()), b.diff(Var::x())]);
        for (x, xi) in [(0.3, -0.4), (1.1, 0.7)] {
            let (l, r) = (lhs.eval3(x, xi, 0.0), rhs.eval3(x, xi, 0.0));
            prop_assume!(l.norm().is_finite() && r.norm().is_finite());
            prop_assert!((l - r).norm() <= 1e-9 * (1.0 + l.norm()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn seminorm_monotone_in_budget(c in 0.2f64..2.0, k in 1usize..4, extra in 1usize..3) {
        let a = SymbolFn::new(Expr::parse(&format!("exp(-{c}*x^2 - xi^2/2)")).unwrap());
        let p = ClassParams::gevrey(1.0, 1.0, 1.0, 1.0).unwrap();
        let small = ScanBudget { order: k, extent: 4.0, points: 17 };
        let higher = ScanBudget { order: k + extra, ..small };
        // 33 points contain the 17-point grid
        let wider = ScanBudget { extent: 8.0, points: 33, ..small };
        let base = gamma_seminorm(&a, &p, small).value;
        prop_assert!(gamma_seminorm(&a, &p, higher).value >= base);
        prop_assert!(gamma_seminorm(&a, &p, wider).value >= base);
    }
}
