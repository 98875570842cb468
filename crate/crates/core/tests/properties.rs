use causal_lab::game::{rac_value, rac_value_closed_form, CorrelationParams};
use causal_lab::info::{
    efficiency, hgr_binary, hgr_causal_classify, mi_binary, mi_joint, strong_dpi_check, BinaryJoint, CausalClass,
    MarkovChainSpec,
};
use causal_lab::linalg::{hermitian_eigenvalues, kron, partial_trace, ComplexMatrix};
use causal_lab::process::{ocb_process, outcome_distribution, random_cptp_instrument, InstrumentKind};
use num_complex::Complex64;
use proptest::prelude::*;

fn bias() -> impl Strategy<Value = f64> {
    -1.0f64..=1.0
}

fn joint() -> impl Strategy<Value = BinaryJoint> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_filter_map("nonzero mass", |(a, b, c, d)| {
        let s = a + b + c + d;
        (s > 1e-6)
            .then(|| BinaryJoint::new([[a / s, b / s], [c / s, d / s]]).ok())
            .flatten()
    })
}

fn hermitian(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
        let m = ComplexMatrix::from_fn(dim, |r, c| {
            Complex64::new(v[2 * (r * dim + c)], v[2 * (r * dim + c) + 1])
        });
        (&m + &m.adjoint()).scale(0.5)
    })
}

proptest! {
    #[test]
    fn binary_mi_is_even_and_bounded(e in bias()) {
        let v = mi_binary(e);
        prop_assert_eq!(v, mi_binary(-e));
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn binary_mi_grows_with_bias(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(mi_binary(lo) <= mi_binary(hi));
    }

    #[test]
    fn hgr_bounds_and_symmetries(j in joint()) {
        let r = hgr_binary(&j);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!((r - hgr_binary(&j.swapped())).abs() < 1e-12);
        prop_assert!((r - hgr_binary(&j.both_flipped())).abs() < 1e-12);
        prop_assert!(mi_joint(&j) >= 0.0);
    }

    #[test]
    fn symmetric_joint_hgr_is_bias(e in bias()) {
        prop_assert!((hgr_binary(&BinaryJoint::from_bias(e).unwrap()) - e.abs()).abs() < 1e-12);
    }

    #[test]
    fn product_joints_carry_no_information(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let j = BinaryJoint::product(p, q).unwrap();
        prop_assert!(mi_joint(&j) < 1e-12);
        prop_assert!(hgr_binary(&j) < 1e-7);
    }

    #[test]
    fn strong_dpi_holds(a in bias(), b in bias()) {
        let c = strong_dpi_check(MarkovChainSpec::new(a, b).unwrap());
        prop_assert!(c.holds, "{:?}", c);
    }

    #[test]
    fn efficiency_sandwich(e1 in bias(), e2 in bias(), n in 1u32..=12) {
        let r = efficiency(CorrelationParams::new(e1, e2).unwrap(), n).unwrap();
        prop_assert!(r.lower - 1e-9 <= r.i_n && r.i_n <= r.upper + 1e-9, "{:?}", r);
    }

    #[test]
    fn causal_implies_quantum(e1 in bias(), e2 in bias()) {
        let p = CorrelationParams::new(e1, e2).unwrap();
        let class = hgr_causal_classify(p);
        if class == CausalClass::Causal {
            prop_assert!(p.sq_sum() <= 1.0 + 1e-12);
        }
        if class == CausalClass::Supraquantum {
            prop_assert!(p.sq_sum() > 1.0);
        }
    }

    #[test]
    fn rac_sum_matches_closed_form(e1 in bias(), e2 in bias(), n in 1u32..=10) {
        let p = CorrelationParams::new(e1, e2).unwrap();
        prop_assert!((rac_value(p, n).unwrap() - rac_value_closed_form(p, n)).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_sum_to_trace(m in hermitian(4)) {
        let ev = hermitian_eigenvalues(&m).unwrap();
        prop_assert!((ev.iter().sum::<f64>() - m.trace().re).abs() < 1e-10);
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn partial_trace_of_product(a in hermitian(2), b in hermitian(3)) {
        let pa = partial_trace(&kron(&a, &b), &[2, 3], &[0]).unwrap();
        prop_assert!(pa.max_abs_diff(&a.scale_complex(b.trace())) < 1e-12);
    }

    #[test]
    fn ocb_probabilities_normalized(seed_a in any::<u64>(), seed_b in any::<u64>(), ua in any::<bool>(), ub in any::<bool>()) {
        let kind = |u: bool| if u { InstrumentKind::Unitary } else { InstrumentKind::MeasurePrepare };
        let ia = random_cptp_instrument(2, 2, kind(ua), seed_a).unwrap();
        let ib = random_cptp_instrument(2, 2, kind(ub), seed_b).unwrap();
        let d = outcome_distribution(&ocb_process(), &ia, &ib).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-10);
        prop_assert!(d.probs.iter().flatten().all(|&p| p >= 0.0));
    }
}
