use std::sync::Arc;

use lienuc::catalog::{heat_symbol, random_multiplier, sublaplacian_symbol};
use lienuc::fourier::{forward_ft, inverse_ft_on_rule, parseval_defect, GridFunction};
use lienuc::group::{duals_up_to_level, GroupId, Level, QuadratureRule};
use lienuc::norms::schatten_norm;
use lienuc::nuclearity::{CriterionQuery, LambdaSchedule};
use lienuc::quantize::{apply_op, assemble_matrix, Symbol};
use lienuc::spectral::{eigenvalues, heat_trace, sort_spectrum, trace_symbol};
use lienuc::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn group() -> impl Strategy<Value = GroupId> {
    prop_oneof![Just(GroupId::Torus(1)), Just(GroupId::Torus(2)), Just(GroupId::SU2), Just(GroupId::SO3)]
}

fn complex_matrix(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
        .prop_map(move |v| DMatrix::from_iterator(n, n, v.into_iter().map(|(a, b)| C64::new(a, b))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fourier_round_trip(g in group(), seed in any::<u64>()) {
        let level = Level::integer(2);
        let rule = Arc::new(QuadratureRule::new(g, level));
        let f = GridFunction::random_band_limited(rule.clone(), level, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let c = forward_ft(&f, &duals_up_to_level(g, level)).unwrap();
        let back = inverse_ft_on_rule(&c, &rule).unwrap();
        let err = back.iter().zip(f.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-11);
        prop_assert!(parseval_defect(&f, &c) < 1e-10);
    }

    #[test]
    fn quantization_is_linear(seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let level = Level::integer(2);
        let rule = Arc::new(QuadratureRule::new(GroupId::SU2, level));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = GridFunction::random_band_limited(rule.clone(), level, &mut rng).unwrap();
        let h = GridFunction::random_band_limited(rule.clone(), level, &mut rng).unwrap();
        let sigma = sublaplacian_symbol(GroupId::SU2, 1.5, f64::INFINITY).unwrap();
        let (ca, cb) = (C64::new(a, 0.0), C64::new(b, 0.0));
        let lhs = apply_op(&sigma, &f.combine(ca, &h, cb).unwrap()).unwrap();
        let rhs = apply_op(&sigma, &f).unwrap().combine(ca, &apply_op(&sigma, &h).unwrap(), cb).unwrap();
        let err = lhs.values().iter().zip(rhs.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn symbol_json_round_trip(g in group(), seed in any::<u64>()) {
        let sigma = random_multiplier(g, seed, 5.0).unwrap();
        let text = serde_json::to_string(&sigma.to_json().unwrap()).unwrap();
        let back = Symbol::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for ir in sigma.duals().unwrap() {
            prop_assert_eq!(sigma.block(&ir).unwrap().to_dense(), back.block(&ir).unwrap().to_dense());
        }
    }

    #[test]
    fn schatten_norms_decrease_in_r(m in complex_matrix(5), r in 0.3..1.0f64, dr in 0.05..1.0f64) {
        let small = schatten_norm(&m, r).unwrap();
        let big = schatten_norm(&m, r + dr).unwrap();
        prop_assert!(big <= small * (1.0 + 1e-12));
    }

    #[test]
    fn eigenvalues_sum_to_trace(m in complex_matrix(7)) {
        let mut e = eigenvalues(&m).unwrap();
        let sum: C64 = e.iter().sum();
        prop_assert!((sum - m.trace()).norm() < 1e-10);
        sort_spectrum(&mut e);
        for w in e.windows(2) {
            prop_assert!(w[0].norm() >= w[1].norm());
        }
        let again = e.clone();
        sort_spectrum(&mut e);
        prop_assert_eq!(&e, &again);
    }

    #[test]
    fn eigenvalues_of_hermitian_are_real(m in complex_matrix(6)) {
        let h = &m + m.adjoint();
        for z in eigenvalues(&h).unwrap() {
            prop_assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn heat_trace_monotone(g in group(), t in 0.2..2.0f64, lmax in 1.0..6.0f64) {
        let lo = heat_trace(g, t, lienuc::spectral::cutoff_for_level(g, lmax).unwrap()).unwrap();
        let hi = heat_trace(g, t, lienuc::spectral::cutoff_for_level(g, lmax + 1.0).unwrap()).unwrap();
        prop_assert!(hi.value >= lo.value);
        // The tail bound covers the increment.
        prop_assert!(hi.value - lo.value <= lo.tail_bound * (1.0 + 1e-9) + 1e-15);
        let later = heat_trace(g, t * 1.5, lienuc::spectral::cutoff_for_level(g, lmax).unwrap()).unwrap();
        prop_assert!(later.value <= lo.value);
    }

    #[test]
    fn invariant_trace_matches_matrix(g in group(), t in 0.3..2.0f64) {
        let cutoff = lienuc::spectral::cutoff_for_level(g, 3.0).unwrap();
        let sigma = heat_symbol(g, t, cutoff).unwrap();
        let ts = trace_symbol(&sigma, cutoff).unwrap();
        let tm = assemble_matrix(&sigma, cutoff).unwrap().matrix_trace();
        prop_assert!((ts - tm).norm() < 1e-10 * (1.0 + ts.norm()));
    }

    #[test]
    fn summability_exponent_range(r in 0.01..=1.0f64, p1 in 1.0..10.0f64, p2 in 1.0..10.0f64) {
        let q = CriterionQuery::new(r, p1, p2).unwrap();
        let s = q.summability_exponent();
        prop_assert!(s > 0.0 && s <= 2.0 + 1e-12);
        prop_assert!((s - 2.0 * r / (2.0 - r)).abs() < 1e-12);
        prop_assert!(q.p1_tilde() >= 1.0 && q.p2_tilde() >= 1.0);
    }

    #[test]
    fn schedules_must_increase(mut v in proptest::collection::vec(1.0..1e6f64, 2..8)) {
        v.sort_by(f64::total_cmp);
        v.dedup();
        prop_assume!(v.len() >= 2);
        prop_assert!(LambdaSchedule::new(v.clone()).is_ok());
        v.reverse();
        prop_assert!(LambdaSchedule::new(v).is_err());
    }
}
