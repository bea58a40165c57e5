//! Property tests for the exact predicates and the data-set layer.

mod common;

use proptest::prelude::*;

use common::{cos_oracle, theta_oracle};
use reebcyl::algebra::{
    alpha_eval, alpha_sign_at_orbit, bracket, compare_angles, defines_angle, sign_a_plus_b_sqrt6,
    AngleClass, IntegerPair,
};
use reebcyl::dataset::{angle_spectrum, validate_data_set};
use reebcyl::geometry::{form_eval, frame_at, mat_vec, GeoPoint};

fn any_pair(limit: i64) -> impl Strategy<Value = IntegerPair> {
    (-limit..=limit, -limit..=limit).prop_map(|(p, pp)| IntegerPair::new(p, pp))
}

fn angle_pair(limit: i64) -> impl Strategy<Value = IntegerPair> {
    any_pair(limit).prop_filter("defines an angle", defines_angle)
}

proptest! {
    #[test]
    fn bracket_antisymmetry(p in any_pair(1000), q in any_pair(1000)) {
        prop_assert_eq!(bracket(&p, &q), -bracket(&q, &p));
        prop_assert_eq!(bracket(&p, &p), 0);
    }

    #[test]
    fn angle_order_matches_float(p in angle_pair(50), q in angle_pair(50)) {
        let (cp, cq) = (cos_oracle(&p), cos_oracle(&q));
        if (cp - cq).abs() > 1e-9 {
            let want = if cp > cq { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater };
            prop_assert_eq!(compare_angles(&p, &q), want);
        }
        // Total order sanity: comparisons are antisymmetric.
        prop_assert_eq!(compare_angles(&p, &q), compare_angles(&q, &p).reverse());
    }

    #[test]
    fn alpha_sign_matches_float(p in angle_pair(50), q in any_pair(50)) {
        prop_assume!(!q.is_zero());
        let class = AngleClass::from_pair(p).unwrap();
        let val = alpha_eval(&q, theta_oracle(&p));
        if val.abs() > 1e-9 {
            prop_assert_eq!(alpha_sign_at_orbit(&q, &class) as f64, val.signum());
        }
    }

    #[test]
    fn alpha_is_odd_in_q(q in any_pair(100), theta in 0.0..std::f64::consts::PI) {
        let plus = alpha_eval(&q, theta);
        let minus = alpha_eval(&q.neg(), theta);
        prop_assert!((plus + minus).abs() < 1e-9 * (1.0 + plus.abs()));
    }

    #[test]
    fn surd_sign_matches_float(a in -10_000i64..10_000, b in -10_000i64..10_000) {
        let float = a as f64 + (b as f64) * 6f64.sqrt();
        if float.abs() > 1e-6 {
            prop_assert_eq!(sign_a_plus_b_sqrt6(a, b) as f64, float.signum());
        }
    }

    #[test]
    fn primitive_reduction_is_stable(p in angle_pair(60), k in 1i64..=5) {
        let class = AngleClass::from_pair(p).unwrap();
        let scaled = AngleClass::from_pair(p.scale(k)).unwrap();
        prop_assert_eq!(class.pair(), scaled.pair());
        prop_assert_eq!(compare_angles(&p, &p.scale(k)), std::cmp::Ordering::Equal);
    }

    #[test]
    fn cos_descriptor_is_root(p in angle_pair(50)) {
        // The cached float satisfies the defining quadratic to 1e-12.
        let c = reebcyl::algebra::angle_cos(&p).unwrap();
        let x = c.value;
        let residual = (c.a2 as f64) * x * x + (c.a1_sqrt6 as f64) * 6f64.sqrt() * x + c.a0 as f64;
        prop_assert!(residual.abs() < 1e-10 * (1.0 + (c.a2 as f64).abs()));
        // And the sign convention p' cos >= 0 holds.
        prop_assert!((p.pp as f64) * x >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validation_is_order_independent(seed in 0u64..5000) {
        let mut r = common::rng(seed);
        let data = common::random_data_set(&mut r);
        let report = validate_data_set(&data);
        let mut reversed = data.clone();
        reversed.ends.reverse();
        let report2 = validate_data_set(&reversed);
        prop_assert_eq!(report.pass(), report2.pass());
        // The same set of rules fails under any ordering.
        let mut ids: Vec<String> = report.failures.iter().map(|f| f.rule.as_str()).collect();
        let mut ids2: Vec<String> = report2.failures.iter().map(|f| f.rule.as_str()).collect();
        ids.sort();
        ids.dedup();
        ids2.sort();
        ids2.dedup();
        prop_assert_eq!(ids, ids2);
    }

    #[test]
    fn spectrum_is_strictly_sorted(seed in 0u64..5000) {
        let mut r = common::rng(seed);
        let data = common::random_balanced_data_set(&mut r);
        if let Ok(spec) = angle_spectrum(&data) {
            for w in spec.entries.windows(2) {
                prop_assert!(w[0].angle < w[1].angle);
                let gap = w[1].angle.theta_approx() - w[0].angle.theta_approx();
                prop_assert!(gap > -1e-9, "float ordering disagrees with the exact one");
            }
        }
    }

    #[test]
    fn omega_tames_j(seed in 0u64..2000) {
        let mut r = common::rng(seed);
        use rand::Rng;
        let p = GeoPoint::new(
            r.gen_range(-1.0..1.0),
            r.gen_range(0.0..std::f64::consts::TAU),
            r.gen_range(0.05..std::f64::consts::PI - 0.05),
            r.gen_range(0.0..std::f64::consts::TAU),
        );
        let f = frame_at(&p).unwrap();
        for _ in 0..10 {
            let v = [
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            ];
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            if norm2 < 1e-6 {
                continue;
            }
            let jv = mat_vec(&f.j, &v);
            prop_assert!(form_eval(&f.omega, &v, &jv) > 0.0);
        }
    }
}
