use infpdo::quantize::{
    hermite_testfn, kernel_from_symbol, op0_spectral, op_tau_apply, symbol_from_kernel, Grid,
    GridFunction, GridSymbol,
};
use infpdo::symbols::{Expr, SymbolFn, Var};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(128, 10.0).unwrap()
}

fn hermites(n: usize) -> Vec<GridFunction> {
    (0..n).map(|k| hermite_testfn(k, grid()).unwrap()).collect()
}

fn fixture() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "xi",
        "x*xi",
        "exp(-xi^2/2)",
        "exp(-x^2 - xi^2)",
        "x*xi^2 + 2*xi",
    ])
}

fn tau() -> impl Strategy<Value = f64> {
    (0u32..=8).prop_map(|k| k as f64 / 8.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transpose_pairing(text in fixture(), tau in tau()) {
        let e = Expr::parse(text).unwrap();
        let a = SymbolFn::new(e.clone());
        let ar = SymbolFn::new(e.subs(Var::xi(), &Expr::var(Var::xi()).neg()));
        let u = hermites(4);
        for ui in &u {
            let left = op_tau_apply(&a, tau, ui).unwrap();
            for vj in &u {
                let right = op_tau_apply(&ar, 1.0 - tau, vj).unwrap();
                let err = (left.pairing(vj) - ui.pairing(&right)).norm();
                prop_assert!(err <= 1e-7, "{} tau {}: {}", text, tau, err);
            }
        }
    }

    #[test]
    fn kernel_round_trip(c in 0.3f64..1.5, d in 0.5f64..1.5, tau in prop::sample::select(vec![0.0, 0.25, 0.5, 1.0])) {
        let g = Grid::new(256, 12.0).unwrap();
        let a = SymbolFn::new(Expr::parse(&format!("exp(-{c}*x^2 - {d}*xi^2)")).unwrap());
        let back = symbol_from_kernel(&kernel_from_symbol(&a, tau, g).unwrap(), tau).unwrap();
        prop_assert!(back.sup_distance(&GridSymbol::sample(&a, g)) <= 1e-6);
    }

    #[test]
    fn x_independent_symbols_are_tau_invariant(text in prop::sample::select(vec!["xi", "xi^2 - 3*xi", "exp(-xi^2/2)", "angle(xi)^(-2)"]), tau in 0.0f64..1.0, k in 0usize..4) {
        let a = SymbolFn::new(Expr::parse(text).unwrap());
        let u = &hermites(4)[k];
        let base = op_tau_apply(&a, 0.0, u).unwrap();
        prop_assert!(op_tau_apply(&a, tau, u).unwrap().sup_distance(&base) <= 1e-10);
    }

    #[test]
    fn spectral_and_kernel_routes_agree(text in fixture(), k in 0usize..4) {
        let a = SymbolFn::new(Expr::parse(text).unwrap());
        let u = &hermites(4)[k];
        let d = op0_spectral(&a, u).unwrap().sup_distance(&op_tau_apply(&a, 0.0, u).unwrap());
        prop_assert!(d <= 1e-8, "{}: {}", text, d);
    }
}
