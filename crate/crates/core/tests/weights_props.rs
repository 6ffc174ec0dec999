use infpdo::weights::{
    product_inequality_holds, regularize_rsequence, scaled_quotient_check, RSequence,
    WeightSequence,
};
use proptest::prelude::*;

/// Increasing log-quotients give a log-convex sequence.
fn convex_sequence() -> impl Strategy<Value = WeightSequence> {
    prop::collection::vec(0.0f64..0.5, 40).prop_map(|incs| {
        let mut ln_m = vec![0.0];
        let mut q = 0.0;
        for d in incs {
            q += d;
            let last = *ln_m.last().unwrap();
            ln_m.push(last + q);
        }
        WeightSequence::from_log_values(ln_m).unwrap()
    })
}

fn rsequence() -> impl Strategy<Value = RSequence> {
    prop_oneof![
        (0.5f64..3.0, 0.2f64..2.5).prop_map(|(c, e)| RSequence::power(c, e, 64).unwrap()),
        prop::collection::vec(0.0f64..1.0, 64).prop_map(|incs| {
            let mut v = Vec::with_capacity(64);
            let mut cur: f64 = 1.0;
            for (j, d) in incs.iter().enumerate() {
                cur += d * (1.0 + j as f64 / 8.0);
                v.push(cur);
            }
            RSequence::from_values(&v).unwrap()
        }),
        Just(RSequence::counterexample(64)),
    ]
}

proptest! {
    #[test]
    fn associated_is_monotone_and_convex_in_log(seq in convex_sequence(), t0 in -3.0f64..4.0) {
        let h = 0.25;
        let m = |t: f64| seq.associated(t.exp()).value;
        let (a, b, c) = (m(t0 - h), m(t0), m(t0 + h));
        prop_assert!(a <= b + 1e-12 && b <= c + 1e-12);
        prop_assert!(2.0 * b <= a + c + 1e-9);
    }

    #[test]
    fn factorial_bound(rho in 0.0f64..30.0) {
        let s = WeightSequence::gevrey(1.0, 200).unwrap();
        prop_assert!(s.associated(rho).value <= rho + 1e-12);
    }

    #[test]
    fn m1_iff_quotients_nondecreasing(incs in prop::collection::vec(-0.2f64..0.6, 30)) {
        let mut ln_m = vec![0.0];
        let mut q = 0.0;
        for d in &incs {
            q += d;
            let last = *ln_m.last().unwrap();
            ln_m.push(last + q);
        }
        let seq = WeightSequence::from_log_values(ln_m).unwrap();
        let monotone = (2..=seq.horizon()).all(|p| seq.ln_quotient(p) >= seq.ln_quotient(p - 1) - 1e-12);
        prop_assert_eq!(seq.validate().m1.holds, monotone);
    }

    #[test]
    fn regularization_contract(k in rsequence(), rho in 0.5f64..500.0) {
        let r = regularize_rsequence(&k).unwrap();
        prop_assert!(r.verified);
        prop_assert!(product_inequality_holds(&r.seq, 64));
        for j in 1..=64 {
            prop_assert!(r.seq.ln_r(j) <= k.ln_r(j) + 1e-12, "j = {}", j);
        }
        let seq = WeightSequence::gevrey(1.0, 64).unwrap();
        prop_assert!(seq.nrp_associated(&r.seq, rho).value >= seq.nrp_associated(&k, rho).value - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaled_quotient_bound_for_validated_gevrey(s in 1.0f64..3.0) {
        let seq = WeightSequence::gevrey(s, 64).unwrap();
        let v = seq.validate();
        prop_assume!(v.all_hold());
        let t = RSequence::power(1.0, 1.0, 64).unwrap();
        let r = scaled_quotient_check(&seq, &v.witnesses(), 1.0, 32, &t).unwrap();
        prop_assert!(r.holds, "{:?}", r.warnings);
    }
}
