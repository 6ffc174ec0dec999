use infpdo::calculus::{
    change_quantization_series, change_quantization_terms, composition_terms,
    leibniz_rearrangement_residual, transpose_series, transpose_terms, verify_quantization_change,
};
use infpdo::quantize::{hermite_testfn, Grid};
use infpdo::symbols::{Cq, Expr, FormalSeries, Var};
use proptest::prelude::*;

fn monomial(c: (i64, i64, i64), i: i64, j: i64) -> Expr {
    let coef = &Cq::frac(c.0, c.1) + &(&Cq::i() * &Cq::int(c.2));
    Expr::mul(vec![
        Expr::constant(coef),
        Expr::pow(Expr::var(Var::x()), i).unwrap(),
        Expr::pow(Expr::var(Var::xi()), j).unwrap(),
    ])
}

fn poly(max_deg: i64, complex: bool) -> impl Strategy<Value = Expr> {
    let im = if complex { -2i64..=2 } else { 0i64..=0 };
    prop::collection::vec(((-5i64..=5, 1i64..=3, im), 0..=max_deg, 0..=max_deg), 1..5)
        .prop_map(|ts| Expr::add(ts.into_iter().map(|(c, i, j)| monomial(c, i, j)).collect()))
}

fn rational_tau() -> impl Strategy<Value = f64> {
    (-4i32..=8).prop_map(|k| k as f64 / 4.0)
}

fn is_singleton(s: &FormalSeries, a: &Expr) -> bool {
    s.term(0) == *a && (1..s.len()).all(|j| s.term(j).is_zero())
}

proptest! {
    #[test]
    fn quantization_round_trip(a in poly(3, true), t1 in rational_tau(), t in rational_tau()) {
        let there = change_quantization_terms(&a, t1, t, 4).unwrap();
        let back = change_quantization_series(&there, t, t1, 4).unwrap();
        prop_assert!(is_singleton(&back, &a), "{:?}", back);
    }

    #[test]
    fn transpose_involution(a in poly(3, true), tau in rational_tau()) {
        let once = transpose_terms(&a, tau, 3).unwrap();
        let twice = transpose_series(&once, tau, 3).unwrap();
        prop_assert!(is_singleton(&twice, &a), "{:?}", twice);
    }

    #[test]
    fn weyl_transpose_of_even_symbol(a in poly(2, false)) {
        let even = a.subs(Var::xi(), &Expr::pow(Expr::var(Var::xi()), 2).unwrap());
        let t = transpose_terms(&even, 0.5, 6).unwrap();
        prop_assert!(is_singleton(&t, &even));
    }

    #[test]
    fn polynomial_series_terminate(a in poly(3, true), b in poly(3, true)) {
        let deg = a.to_poly().unwrap().terms.keys()
            .map(|k| k.iter().filter(|(v, _)| *v == Var::xi()).map(|(_, e)| *e).sum::<u32>())
            .max()
            .unwrap_or(0) as usize;
        let c = composition_terms(&a, &b, 8).unwrap();
        prop_assert!((deg + 1..8).all(|j| c.term(j).is_zero()));
    }

    #[test]
    fn rearrangement_identity(a in poly(3, true), b in poly(3, true), n in 1usize..=4) {
        prop_assert!(leibniz_rearrangement_residual(&a, &b, n).is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn polynomial_change_is_exact_on_grid(a in poly(1, true), t in prop::sample::select(vec![0.5, 1.0])) {
        let g = Grid::default();
        let u: Vec<_> = (0..4).map(|k| hermite_testfn(k, g).unwrap()).collect();
        let r = verify_quantization_change(&a, 0.0, t, 3, &u, None).unwrap();
        prop_assert!(r[2].1 <= 1e-7, "{}: {:?}", a, r);
    }
}
