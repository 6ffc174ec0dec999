use infpdo::mollify::{
    cutoff_check, gevrey_bound_fit, offdiag_cutoff, partition_check, BumpProfile, DyadicPartition,
    Excision,
};
use infpdo::ultrapoly::{
    lower_bound_check, reciprocal_derivative_check, LowerTarget, Mode, Ultrapolynomial,
};
use infpdo::weights::WeightSequence;
use proptest::prelude::*;

const EPS: f64 = 1e-12;

fn p1(radius: f64) -> Ultrapolynomial {
    let s = WeightSequence::gevrey(1.0, 64).unwrap();
    Ultrapolynomial::build(&s, Mode::Beurling { l: 1.0 }, 1, radius).unwrap()
}

proptest! {
    #[test]
    fn telescoping_on_any_grid(
        r in 2.1f64..8.0,
        n in 0usize..12,
        xs in prop::collection::vec(-5000.0f64..5000.0, 1..64),
    ) {
        let seq = WeightSequence::gevrey(2.0, 64).unwrap();
        let part = DyadicPartition::new(&seq, 2.0, r).unwrap();
        let rep = partition_check(&part, n, &xs).unwrap();
        prop_assert!(rep.telescoping_residual <= 1e-13);
        prop_assert_eq!(rep.support_violations, 0);
        for &x in &xs {
            for k in 0..=n {
                let v = part.psi(k, x).unwrap();
                prop_assert!((-EPS..=1.0 + EPS).contains(&v));
            }
        }
    }

    #[test]
    fn excision_range_and_local_finiteness(
        r in 0.5f64..4.0,
        x in -2000.0f64..2000.0,
        xi in -2000.0f64..2000.0,
    ) {
        let seq = WeightSequence::gevrey(2.0, 64).unwrap();
        let e = Excision::new(&seq, 2.0, r).unwrap();
        let br = (1.0 + x * x).sqrt().max((1.0 + xi * xi).sqrt());
        for n in 0..40 {
            let v = e.value(n, x, xi);
            prop_assert!((-EPS..=1.0 + EPS).contains(&v));
            let changes = e.value(n + 1, x, xi) != v;
            // chi_n and chi_{n+1} can only differ where 2 t_n < <.> < 3 t_{n+1}
            let (tn, tn1) = (e.inner_radius(n) / 2.0, e.inner_radius(n + 1) / 2.0);
            let possible = n == 0 || (2.0 * tn < br && br < 3.0 * tn1);
            prop_assert!(!changes || possible, "n = {}", n);
        }
    }

    #[test]
    fn gevrey_fit_up_to_order_six(s in 1.2f64..3.0, a in 0.2f64..1.0, w in 0.5f64..2.0) {
        let p = BumpProfile::new(s, a, a + w).unwrap();
        let fit = gevrey_bound_fit(&p, 6, 801);
        prop_assert!(fit.c.is_finite() && fit.h.is_finite() && fit.h > 0.0);
        prop_assert!(fit.fd_discrepancy < 1e-3, "{}", fit.fd_discrepancy);
        for t in [a - 0.1, a, a + w / 3.0, a + w, a + w + 0.1] {
            let v = p.value(t);
            prop_assert!((-EPS..=1.0 + EPS).contains(&v));
        }
    }

    #[test]
    fn ultrapolynomial_even_and_monotone(xi in 0.0f64..39.0, d in 0.0f64..1.0) {
        let p = p1(40.0);
        prop_assert_eq!(p.ln_eval_real(xi).unwrap(), p.ln_eval_real(-xi).unwrap());
        prop_assert!(p.ln_eval_real(xi + d).unwrap() >= p.ln_eval_real(xi).unwrap());
    }

    #[test]
    fn sinh_deviation_within_tail_bound(xi in 0.0f64..20.0) {
        let p = p1(20.0);
        let pi = std::f64::consts::PI;
        let exact = if xi == 0.0 { 0.0 } else { ((pi * xi).sinh() / (pi * xi)).ln() };
        let rel = (p.ln_eval_real(xi).unwrap() - exact).exp() - 1.0;
        prop_assert!(rel.abs() <= p.tail_bound().exp_m1() + 1e-12, "{} vs {}", rel, p.tail_bound());
    }
}

#[test]
fn reciprocal_and_lower_bound_agree() {
    let p = p1(50.0);
    let grid: Vec<f64> = (0..=500).map(|k| k as f64 * 0.1).collect();
    let d = reciprocal_derivative_check(&p, 2.0, 0, &grid).unwrap();
    let l = lower_bound_check(&p, &LowerTarget::Beurling { k: 2.0 }, &grid).unwrap();
    assert!(
        (d.c.ln() + l.ln_c_tilde).abs() < 1e-12,
        "{} {}",
        d.c,
        l.ln_c_tilde
    );
}

#[test]
fn offdiag_cutoff_range() {
    let theta = offdiag_cutoff(2.0, 256, 4.0).unwrap();
    assert!(theta.values.iter().all(|v| (-EPS..=1.0 + EPS).contains(v)));
    let rep = cutoff_check(&theta);
    assert_eq!((rep.inner_violations, rep.outer_violations), (0, 0));
}
