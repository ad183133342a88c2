use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tentcocycle::cone_metric::{cone_contains, theta, ConeParams};
use tentcocycle::interval_maps::{make_paired_tent, PairedTentParams, SecondIterate};
use tentcocycle::markov_analysis::solve_kappa;
use tentcocycle::poly::{charpoly, from_i64, mul, real_roots};
use tentcocycle::rds_cocycle::contraction_schedule;
use tentcocycle::sampling::{cone_element, signed_step_function};
use tentcocycle::step_functions::{ly_check, pf_apply, StepFunction};

type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn params() -> impl Strategy<Value = PairedTentParams<Q>> {
    (0i64..=12, 0i64..=12).prop_map(|(a, b)| PairedTentParams::new(q(a, 12), q(b, 12)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transfer_operator_preserves_integral(p in params(), seed in any::<u64>()) {
        let map = make_paired_tent(&p).unwrap();
        let f: StepFunction<Q> = signed_step_function(&mut rng(seed), 10, 12);
        prop_assert_eq!(pf_apply(&map, &f).integral(), f.integral());
    }

    #[test]
    fn transfer_operator_is_positive(p in params(), seed in any::<u64>()) {
        let map = make_paired_tent(&p).unwrap();
        let f: StepFunction<Q> = signed_step_function(&mut rng(seed), 10, 12);
        let g = f.shift(&(-f.essinf()));
        prop_assert!(pf_apply(&map, &g).essinf() >= Q::zero());
    }

    #[test]
    fn variation_triangle(s1 in any::<u64>(), s2 in any::<u64>()) {
        let f: StepFunction<Q> = signed_step_function(&mut rng(s1), 10, 20);
        let g: StepFunction<Q> = signed_step_function(&mut rng(s2), 10, 20);
        prop_assert!((f.variation() - g.variation()).abs() <= f.sub(&g).variation());
        prop_assert!(f.add(&g).variation() <= f.variation() + g.variation());
    }

    #[test]
    fn lasota_yorke(p in params(), r in params(), seed in any::<u64>()) {
        let si = SecondIterate::new(p, r).unwrap();
        let f: StepFunction<Q> = signed_step_function(&mut rng(seed), 12, 24);
        let c = ly_check(&si, &f);
        prop_assert!(c.general_holds);
        prop_assert!(c.sharp_holds.unwrap_or(true));
    }

    #[test]
    fn cone_is_invariant(p in params(), r in params(), seed in any::<u64>()) {
        let cone = ConeParams::default();
        let si = SecondIterate::new(p, r).unwrap();
        let f: StepFunction<Q> = cone_element(&mut rng(seed), cone.a, 12, 120);
        prop_assert!(cone_contains(&pf_apply(&si.map, &f), &cone, cone.nu));
    }

    #[test]
    fn theta_is_a_projective_pseudometric(s1 in any::<u64>(), s2 in any::<u64>(), c in 1u32..50) {
        let cone = ConeParams::default();
        let v: StepFunction<f64> = cone_element(&mut rng(s1), cone.a, 8, 60);
        let w: StepFunction<f64> = cone_element(&mut rng(s2), cone.a, 8, 60);
        let v = v.shift(&(0.1 * v.l1()));
        let w = w.shift(&(0.1 * w.l1()));
        let d = theta(&v, &w, &cone).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(theta(&v, &v, &cone).unwrap().abs() < 1e-8);
        let back = theta(&w, &v, &cone).unwrap();
        prop_assert!((d - back).abs() <= 1e-7 * (1.0 + d));
        let scaled = theta(&v, &w.scale(&f64::from(c)), &cone).unwrap();
        prop_assert!((d - scaled).abs() <= 1e-7 * (1.0 + d));
    }

    #[test]
    fn kappa_solves_its_equation(n in 1u32..=30) {
        let k = solve_kappa(n).unwrap();
        prop_assert!(k > 0.0 && k < 0.5);
        let lhs = (2.0 + 2.0 * k).powi(n as i32) * k;
        prop_assert!((lhs - 1.0).abs() < 1e-14 * 3f64.powi(n as i32));
    }

    #[test]
    fn sturm_finds_integer_roots(roots in proptest::collection::btree_set(-8i64..=8, 1..6)) {
        let p = roots.iter().fold(from_i64(&[1]), |acc, r| mul(&acc, &from_i64(&[-r, 1])));
        let found = real_roots(&p, -9.5, 9.5, 1e-10);
        prop_assert_eq!(found.len(), roots.len());
        for (x, r) in found.iter().zip(&roots) {
            prop_assert!((x - *r as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn charpoly_trace_and_determinant(entries in proptest::collection::vec(-3i64..=3, 16)) {
        let a: Vec<Vec<i64>> = entries.chunks(4).map(|c| c.to_vec()).collect();
        let p = charpoly(&a).unwrap();
        let trace: i64 = (0..4).map(|i| a[i][i]).sum();
        prop_assert_eq!(p[3].clone(), (-trace).into());
        prop_assert_eq!(p[4].clone(), 1.into());
        // det(xI − A) at x = 0 is det(−A) = det(A) for even size.
        let det = nalgebra::Matrix4::from_fn(|i, j| a[i][j] as f64).determinant();
        prop_assert!((num_traits::ToPrimitive::to_f64(&p[0]).unwrap() - det).abs() < 1e-6);
    }

    #[test]
    fn schedule_inequalities(mask in proptest::collection::vec(any::<bool>(), 801), k_p in 1usize..=20) {
        let s = contraction_schedule(400, |i| mask[(i + 400) as usize], k_p, 30.0).unwrap();
        prop_assert!(s.forward_ok && s.backward_ok);
        for n in 0..400 {
            prop_assert!(s.l_plus[n] <= k_p * (s.j_plus[n] + 1));
            prop_assert!(s.l_minus[n] + 1 <= k_p * (s.j_minus[n] + 1));
        }
    }
}
